//! One-step incremental fuzzy within-cluster dispersion.
//!
//! For cluster `i` the tracked quantity is
//!
//! ```text
//! C_i(n) = Σ_j λ^(n-j) · u_ij² · ‖x_j − v_i(n)‖²
//! ```
//!
//! with `λ = 1` for the plain variant. It is maintained exactly, without
//! revisiting past samples, through two auxiliary accumulators:
//!
//! ```text
//! G_i(n) = Σ_j λ^(n-j) · u_ij² · (x_j − v_i(n))
//! M_i(n) = Σ_j λ^(n-j) · u_ij²
//! ```
//!
//! When the center moves from `v_old` to `v_new` and sample `x` arrives
//! with membership `u`, with `d = v_old − v_new`:
//!
//! ```text
//! C' = λ·(C + M·‖d‖² + 2·dᵀG) + u²·‖x − v_new‖²
//! G' = λ·(G + M·d)            + u²·(x − v_new)
//! M' = λ·M                    + u²
//! ```

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::types::{check_dim, check_finite, dist_sq};

/// Per-cluster accumulators. `lambda == 1` is the non-forgetting variant.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionState {
    c: f64,
    g: Vec<f64>,
    m: f64,
    lambda: f64,
}

impl DispersionState {
    /// Fresh state for a cluster that has seen no data.
    pub fn new(p: usize, lambda: f64) -> Result<Self> {
        Self::with_mass(p, lambda, 0.0)
    }

    /// `C = 0`, `G = 0`, `M = mass`.
    pub fn with_mass(p: usize, lambda: f64, mass: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if p == 0 {
            return Err(Error::Structural("zero-dimensional dispersion state".into()));
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::Config(format!("initial mass {mass} must be finite and ≥ 0")));
        }
        Ok(Self {
            c: 0.0,
            g: vec![0.0; p],
            m: mass,
            lambda,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Advances the state in place by one sample.
    pub fn advance(&mut self, v_old: &[f64], v_new: &[f64], u: f64, x: &[f64]) -> Result<()> {
        let p = self.g.len();
        check_dim("previous center", v_old, p)?;
        check_dim("updated center", v_new, p)?;
        check_dim("observation", x, p)?;
        check_finite("previous center", v_old)?;
        check_finite("updated center", v_new)?;
        check_finite("observation", x)?;
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Numeric(format!("membership {u} outside [0, 1]")));
        }

        let lambda = self.lambda;
        let u2 = u * u;
        let mut q = 0.0;
        let mut b = 0.0;
        for t in 0..p {
            let d = v_old[t] - v_new[t];
            q += d * self.g[t];
            b += d * d;
        }
        let a = u2 * dist_sq(x, v_new);

        let raw = lambda * (self.c + self.m * b + 2.0 * q) + a;
        for t in 0..p {
            let d = v_old[t] - v_new[t];
            self.g[t] = lambda * (self.g[t] + self.m * d) + u2 * (x[t] - v_new[t]);
        }
        self.m = lambda * self.m + u2;
        self.c = clamp_dispersion(raw);
        Ok(())
    }
}

fn clamp_dispersion(raw: f64) -> f64 {
    if raw >= 0.0 {
        return raw;
    }
    // C is a weighted sum of squares; a negative value is cancellation in 2Q.
    if raw >= -1e-9 {
        debug!("dispersion clamped to 0 from {raw:e}");
    } else {
        warn!("dispersion clamped to 0 from {raw:e}");
    }
    0.0
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("forgetting factor {lambda} outside (0, 1]")))
    }
}

/// Non-forgetting update. The state must carry `λ = 1`.
pub fn update_dispersion(
    state: &DispersionState,
    v_old: &[f64],
    v_new: &[f64],
    u: f64,
    x: &[f64],
) -> Result<DispersionState> {
    if state.lambda != 1.0 {
        return Err(Error::Config(format!(
            "non-forgetting update called on a state with λ = {}",
            state.lambda
        )));
    }
    let mut next = state.clone();
    next.advance(v_old, v_new, u, x)?;
    Ok(next)
}

/// Forgetting update. `λ = 1` is accepted and reduces to [`update_dispersion`].
pub fn update_dispersion_forgetting(
    state: &DispersionState,
    v_old: &[f64],
    v_new: &[f64],
    u: f64,
    x: &[f64],
) -> Result<DispersionState> {
    check_lambda(state.lambda)?;
    let mut next = state.clone();
    next.advance(v_old, v_new, u, x)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::batch_dispersion;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_sample_at_origin() {
        let s = DispersionState::new(2, 1.0).unwrap();
        let s = update_dispersion(&s, &[0.0, 0.0], &[0.0, 0.0], 1.0, &[3.0, 4.0]).unwrap();
        assert_eq!(s.c(), 25.0);
        assert_eq!(s.g(), &[3.0, 4.0]);
        assert_eq!(s.m(), 1.0);
    }

    #[test]
    fn zero_membership_stationary_center_is_identity() {
        let mut s = DispersionState::new(2, 1.0).unwrap();
        s.advance(&[0.0, 0.0], &[1.0, -1.0], 0.7, &[2.0, 5.0]).unwrap();
        let before = s.clone();
        let after = update_dispersion(&s, &[1.0, -1.0], &[1.0, -1.0], 0.0, &[40.0, 9.0]).unwrap();
        assert_eq!(after, before);
    }

    #[test]
    fn forgetting_examples() {
        let s = DispersionState::new(2, 0.9).unwrap();
        let s = update_dispersion_forgetting(&s, &[0.0, 0.0], &[0.0, 0.0], 1.0, &[3.0, 4.0]).unwrap();
        assert_eq!(s.c(), 25.0);
        assert_eq!(s.m(), 1.0);
        let s = update_dispersion_forgetting(&s, &[0.0, 0.0], &[0.0, 0.0], 1.0, &[3.0, 4.0]).unwrap();
        assert!((s.c() - 47.5).abs() < 1e-12);
        assert!((s.m() - 1.9).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let s = DispersionState::new(2, 1.0).unwrap();
        assert!(matches!(
            update_dispersion(&s, &[0.0], &[0.0, 0.0], 1.0, &[1.0, 1.0]),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            update_dispersion(&s, &[0.0, 0.0], &[0.0, 0.0], 1.0, &[f64::INFINITY, 1.0]),
            Err(Error::Numeric(_))
        ));
        assert!(matches!(DispersionState::new(2, 0.0), Err(Error::Config(_))));
        assert!(matches!(DispersionState::new(2, 1.5), Err(Error::Config(_))));
        let f = DispersionState::new(2, 0.5).unwrap();
        assert!(matches!(
            update_dispersion(&f, &[0.0, 0.0], &[0.0, 0.0], 1.0, &[1.0, 1.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn clamp_never_reports_negative() {
        assert_eq!(clamp_dispersion(-1e-13), 0.0);
        assert_eq!(clamp_dispersion(-3.0), 0.0);
        assert_eq!(clamp_dispersion(2.0), 2.0);
    }

    type Walk = (Vec<(Vec<f64>, f64)>, Vec<Vec<f64>>);

    /// Random stream with drifting center; returns (history, centers after each step).
    fn random_walk(seed: u64, steps: usize, p: usize) -> Walk {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..p).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut hist = Vec::new();
        let mut centers = vec![v.clone()];
        for _ in 0..steps {
            let x: Vec<f64> = (0..p).map(|_| rng.random_range(-10.0..10.0)).collect();
            let u: f64 = rng.random();
            for c in v.iter_mut() {
                *c += rng.random_range(-0.5..0.5);
            }
            hist.push((x, u));
            centers.push(v.clone());
        }
        (hist, centers)
    }

    fn check_exact(lambda: f64, seed: u64) {
        let (hist, centers) = random_walk(seed, 200, 3);
        let mut s = DispersionState::new(3, lambda).unwrap();
        for (j, (x, u)) in hist.iter().enumerate() {
            s.advance(&centers[j], &centers[j + 1], *u, x).unwrap();
        }
        let want = batch_dispersion(&hist, centers.last().unwrap(), lambda).unwrap();
        let rel = (s.c() - want).abs() / want;
        assert!(rel <= 1e-9, "λ={lambda}: incremental {} vs batch {want} (rel {rel:e})", s.c());
    }

    #[test]
    fn exact_against_batch_no_forgetting() {
        for seed in 0..5 {
            check_exact(1.0, seed);
        }
    }

    #[test]
    fn exact_against_batch_forgetting() {
        for seed in 0..5 {
            check_exact(0.9, seed);
            check_exact(0.5, 100 + seed);
        }
    }

    proptest! {
        #[test]
        fn lambda_one_forgetting_is_bit_identical(
            seed in 0u64..1000,
        ) {
            let (hist, centers) = random_walk(seed, 40, 2);
            let mut a = DispersionState::new(2, 1.0).unwrap();
            let mut b = DispersionState::new(2, 1.0).unwrap();
            for (j, (x, u)) in hist.iter().enumerate() {
                a = update_dispersion(&a, &centers[j], &centers[j + 1], *u, x).unwrap();
                b = update_dispersion_forgetting(&b, &centers[j], &centers[j + 1], *u, x).unwrap();
                prop_assert_eq!(&a, &b);
            }
        }

        #[test]
        fn stationary_center_is_additive(
            xs in prop::collection::vec((prop::collection::vec(-20.0f64..20.0, 2), 0.0f64..=1.0), 1..60),
            lambda in prop::sample::select(vec![1.0, 0.9, 0.5]),
        ) {
            let v = [1.5, -2.0];
            let mut s = DispersionState::new(2, lambda).unwrap();
            let mut direct = 0.0;
            for (x, u) in &xs {
                s.advance(&v, &v, *u, x).unwrap();
                direct = lambda * direct + u * u * dist_sq(x, &v);
            }
            prop_assert!((s.c() - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }
}
