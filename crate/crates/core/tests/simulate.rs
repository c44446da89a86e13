use maxcon_core::data::{default_pg_contrasts, Pattern};
use maxcon_core::hypothesis::Method;
use maxcon_core::power::{default_qmc, PowerAnalysis};
use maxcon_core::simulate::{run_scenario, DecisionRule, ScenarioConfig};

fn binomial_band(p: f64, reps: usize) -> f64 {
    3.5 * (p * (1.0 - p) / reps as f64).sqrt()
}

#[test]
fn counts_do_not_depend_on_thread_count() {
    let cfg = ScenarioConfig::new(0.25, 100, Some(Pattern::Dominant), 0.5).with_reps(300);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_scenario(&cfg).unwrap())
    };
    let a = run(1);
    let b = run(4);
    for (x, y) in a.methods.iter().zip(&b.methods) {
        assert_eq!((x.n_p, x.n_tp, &x.selections), (y.n_p, y.n_tp, &y.selections));
    }
    let c = run_scenario(&cfg.clone().with_seed(cfg.seed + 1)).unwrap();
    assert_ne!(a.methods[0].selections, c.methods[0].selections);
}

#[test]
fn null_rejection_rate_is_nominal() {
    let reps = 4000;
    let cfg = ScenarioConfig::new(0.33, 100, None, 0.0).with_reps(reps);
    let m = run_scenario(&cfg).unwrap();
    for mm in &m.methods {
        assert!(mm.n_tp.is_none());
        let r = mm.r_p();
        assert!((r - 0.05).abs() < binomial_band(0.05, reps) + 0.005, "{}: {r}", mm.method);
    }
}

#[test]
fn mcm_rejection_rate_matches_two_sided_power() {
    let reps = 4000;
    let sizes = [56, 37, 7];
    let cfg = ScenarioConfig::new(0.25, 100, Some(Pattern::Dominant), 0.5)
        .with_reps(reps)
        .with_methods(vec![Method::Mcm, Method::Mmcm]);
    let m = run_scenario(&cfg).unwrap();
    let pa = PowerAnalysis::new(&default_pg_contrasts().augmented(), &sizes, 0.05, &default_qmc())
        .unwrap();
    let mu: Vec<f64> = Pattern::Dominant.coefficients().iter().map(|c| 0.5 * c).collect();
    for (mm, beta) in m.methods.iter().zip([
        pa.power_t(&mu, 1.0).unwrap().beta,
        pa.power_s(&mu, 1.0).unwrap().beta,
    ]) {
        let r = mm.r_p();
        assert!((r - beta).abs() < binomial_band(beta, reps) + 0.005, "{}: {r} vs {beta}", mm.method);
        let tp = mm.r_tp().unwrap();
        assert!(tp <= r);
        assert_eq!(mm.selections.iter().sum::<usize>(), mm.n_p);
    }
}

#[test]
fn critical_value_and_p_value_decisions_agree() {
    let base = ScenarioConfig::new(0.33, 100, Some(Pattern::Additive), 0.4)
        .with_reps(150)
        .with_methods(vec![Method::Mcm, Method::Mmcm]);
    let mut by_p = base.clone();
    by_p.decision = DecisionRule::PValue;
    let a = run_scenario(&base).unwrap();
    let b = run_scenario(&by_p).unwrap();
    for (x, y) in a.methods.iter().zip(&b.methods) {
        assert!(x.n_p.abs_diff(y.n_p) <= 2, "{}: {} vs {}", x.method, x.n_p, y.n_p);
        assert_eq!(x.n_tp.is_some(), y.n_tp.is_some());
    }
}

#[test]
fn valley_has_no_true_pattern() {
    let cfg = ScenarioConfig::new(0.5, 100, Some(Pattern::Valley), 1.0).with_reps(200);
    let m = run_scenario(&cfg).unwrap();
    let mcm = m.method(Method::Mcm).unwrap();
    assert!(mcm.n_tp.is_none());
    assert!(mcm.r_p() > 0.5);
    assert_eq!(mcm.selections.len(), 6);
    assert_eq!(
        (0..3).map(|k| mcm.selected_either_sign(k)).sum::<usize>(),
        mcm.n_p
    );
}
