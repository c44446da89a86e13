//! Randomized Kronecker (Richtmyer) lattice with tent periodization and
//! antithetic pairs. Each independent random shift gives one unbiased
//! estimate; their spread gives the error estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points per shift in the first round; later rounds double it.
const INITIAL_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QmcConfig {
    /// Target absolute error of the probability.
    pub abs_error_tol: f64,
    /// Budget of integrand evaluations, counting both members of an antithetic pair.
    pub max_points: usize,
    pub seed: u64,
    /// Multiplier on the standard error; 3.5 is roughly a 99.95% interval.
    pub confidence_mult: f64,
    /// Number of independent random shifts.
    pub shifts: usize,
}

impl Default for QmcConfig {
    fn default() -> Self {
        Self {
            abs_error_tol: 1e-3,
            max_points: 1 << 24,
            seed: 0x6d6d_636d,
            confidence_mult: 3.5,
            shifts: 12,
        }
    }
}

impl QmcConfig {
    pub fn with_tol(abs_error_tol: f64) -> Self {
        Self {
            abs_error_tol,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_error_tol > 0.0) {
            return Err(Error::InvalidParameter("abs_error_tol must be > 0".into()));
        }
        if self.max_points < 1000 {
            return Err(Error::InvalidParameter("max_points must be >= 1000".into()));
        }
        if self.shifts < 2 {
            return Err(Error::InvalidParameter("at least two random shifts are needed".into()));
        }
        if !(self.confidence_mult > 0.0) {
            return Err(Error::InvalidParameter("confidence_mult must be > 0".into()));
        }
        Ok(())
    }
}

/// A probability with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbEstimate {
    pub value: f64,
    pub est_error: f64,
    pub points_used: usize,
    /// False when the budget ran out before `est_error <= abs_error_tol`.
    pub converged: bool,
}

impl ProbEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            est_error: 0.0,
            points_used: 1,
            converged: true,
        }
    }

    /// `1 - value` with the same error.
    pub fn complement(self) -> Self {
        Self {
            value: (1.0 - self.value).clamp(0.0, 1.0),
            ..self
        }
    }
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut n = 2u64;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= n).all(|&p| n % p != 0) {
            out.push(n);
        }
        n += 1;
    }
    out
}

/// Integrates `f` over the unit cube of dimension `dim`.
///
/// `f` receives the point and may use `scratch` freely. Shift `k` draws its
/// offset from a ChaCha stream keyed by `(cfg.seed, k)`, so the result is a
/// pure function of the inputs.
pub fn integrate<S, F>(dim: usize, cfg: &QmcConfig, scratch: &mut S, mut f: F) -> ProbEstimate
where
    F: FnMut(&[f64], &mut S) -> f64,
{
    if dim == 0 {
        return ProbEstimate::exact(f(&[], scratch));
    }

    let gens: Vec<f64> = primes(dim)
        .into_iter()
        .map(|p| (p as f64).sqrt().fract())
        .collect();
    let shifts: Vec<Vec<f64>> = (0..cfg.shifts)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            (0..dim).map(|_| rng.gen::<f64>()).collect()
        })
        .collect();

    let per_shift_cap = (cfg.max_points / (2 * cfg.shifts)).max(1);
    let mut sums = vec![0.0; cfg.shifts];
    let mut done = 0usize;
    let mut target = INITIAL_POINTS.min(per_shift_cap);
    let mut x = vec![0.0; dim];
    let mut xa = vec![0.0; dim];

    loop {
        for (shift, sum) in shifts.iter().zip(sums.iter_mut()) {
            let mut acc = 0.0;
            for j in done + 1..=target {
                let jf = j as f64;
                for i in 0..dim {
                    let u = (jf * gens[i] + shift[i]).fract();
                    let t = (2.0 * u - 1.0).abs();
                    x[i] = t;
                    xa[i] = 1.0 - t;
                }
                acc += f(&x, scratch) + f(&xa, scratch);
            }
            *sum += 0.5 * acc;
        }
        done = target;

        let n = done as f64;
        let k = cfg.shifts as f64;
        let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
        let mean = means.iter().sum::<f64>() / k;
        let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (k * (k - 1.0));
        let est_error = cfg.confidence_mult * var.sqrt();
        let points_used = 2 * cfg.shifts * done;
        let converged = est_error <= cfg.abs_error_tol;

        if converged || done >= per_shift_cap {
            return ProbEstimate {
                value: mean.clamp(0.0, 1.0),
                est_error,
                points_used,
                converged,
            };
        }
        target = (2 * done).min(per_shift_cap);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_primes() {
        assert_eq!(primes(6), vec![2, 3, 5, 7, 11, 13]);
    }

    #[test]
    fn smooth_integral_converges() {
        // integral of prod(x_i) over [0,1]^3 = 1/8
        let cfg = QmcConfig::with_tol(1e-6);
        let r = integrate(3, &cfg, &mut (), |x, _| x.iter().product());
        assert!(r.converged);
        assert!((r.value - 0.125).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = QmcConfig::default();
        let f = |x: &[f64], _: &mut ()| (x[0] * x[1]).sin().abs().min(1.0);
        let a = integrate(2, &cfg, &mut (), f);
        let b = integrate(2, &cfg, &mut (), f);
        assert_eq!(a, b);
        let c = integrate(2, &cfg.with_seed(99), &mut (), f);
        assert!((a.value - c.value).abs() < 3.0 * (a.est_error + c.est_error) + 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let cfg = QmcConfig {
            abs_error_tol: 1e-15,
            max_points: 2000,
            ..QmcConfig::default()
        };
        let r = integrate(2, &cfg, &mut (), |x, _| if x[0] > 0.37 { 1.0 } else { 0.0 });
        assert!(!r.converged);
        assert!(r.points_used <= 2000);
    }

    #[test]
    fn zero_dimensions_is_exact() {
        let r = integrate(0, &QmcConfig::default(), &mut (), |_, _| 0.25);
        assert_eq!(r.value, 0.25);
        assert_eq!(r.est_error, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(QmcConfig::default().validate().is_ok());
        assert!(QmcConfig::with_tol(0.0).validate().is_err());
        let small = QmcConfig {
            max_points: 10,
            ..QmcConfig::default()
        };
        assert!(small.validate().is_err());
    }
}
