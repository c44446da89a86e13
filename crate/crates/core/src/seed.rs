//! Deterministic seed derivation for per-replicate and per-item streams.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed number `index` of `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Child seed keyed by a string, e.g. a SNP identifier (FNV-1a hash).
pub fn derive_str(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive(seed, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn children_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| derive(42, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(derive(1, 0), derive(2, 0));
        assert_eq!(derive_str(5, "rs1"), derive_str(5, "rs1"));
        assert_ne!(derive_str(5, "rs1"), derive_str(5, "rs2"));
    }
}
