//! Fixtures shared by the benchmarks.

use maxcon_core::{generate_dataset, hwe_group_sizes, GroupedDataset, Pattern};

/// A simulated n = 300 dataset for one of the timing settings.
pub fn scenario_dataset(pattern: Option<Pattern>, delta: f64, maf: f64, seed: u64) -> GroupedDataset {
    let sizes = hwe_group_sizes(maf, 300).expect("tabulated maf");
    generate_dataset(pattern, delta, &sizes, seed).expect("valid settings")
}

/// Reciprocal group sizes at n = 100 for the tabulated MAFs.
pub fn inv_sizes(maf: f64) -> Vec<f64> {
    hwe_group_sizes(maf, 100)
        .expect("tabulated maf")
        .iter()
        .map(|&n| 1.0 / n as f64)
        .collect()
}
