//! Randomized incremental-versus-batch comparisons.
//!
//! Each trial drives the streaming index states and the batch formulas in
//! [`crate::oracle`] with the same synthetic history (drifting centers, random
//! memberships) and records the worst relative disagreement per index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cvi::{IcviInit, IndexKind, IndexState};
use crate::dispersion::{update_dispersion, update_dispersion_forgetting, DispersionState};
use crate::error::Result;
use crate::oracle::{
    batch_db, batch_db_lambda, batch_xb, batch_xb_lambda, batch_xb_single_cluster, Sample,
};
use crate::par::{map_seeds, Execution};
use crate::types::{MembershipVector, PrototypeSet};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
const LAMBDAS: [f64; 3] = [1.0, 0.9, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub lambda: f64,
    pub fuzzy: bool,
    /// The last cluster never receives membership.
    pub empty_cluster: bool,
}

impl TrialSpec {
    /// Spec derived from the trial seed alone. `k` and `λ` cycle with the
    /// seed so that any 33 consecutive seeds cover every combination.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
        let k = 1 + (seed % 11) as usize;
        Self {
            n: rng.random_range(50..=400),
            k,
            p: if rng.random_bool(0.5) { 2 } else { 8 },
            lambda: LAMBDAS[((seed / 11) % 3) as usize],
            fuzzy: rng.random_bool(0.8),
            empty_cluster: k >= 2 && rng.random_bool(0.2),
        }
    }

    fn kinds(&self) -> Vec<IndexKind> {
        let mut kinds = vec![IndexKind::Xb];
        if self.k >= 2 {
            kinds.push(IndexKind::Db);
        }
        if self.lambda < 1.0 {
            kinds.push(IndexKind::XbLambda);
            if self.k >= 2 {
                kinds.push(IndexKind::DbLambda);
            }
        }
        kinds
    }
}

/// Worst disagreement of one index over a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Worst {
    pub rel: f64,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub seed: u64,
    pub spec: TrialSpec,
    /// Indexed by [`IndexKind::slot`]; `None` when the index was not exercised.
    pub worst: [Option<Worst>; 4],
    /// For `λ = 1` trials: first step at which the forgetting and plain
    /// dispersion recursions differed in any bit.
    pub lambda_one_mismatch: Option<u64>,
    pub lambda_one_checked: bool,
}

/// `|a − b| / |b|`, or `|a − b|` when `b = 0`. Disagreement on definedness is infinite.
pub fn relative_error(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => (a - b).abs() / b.abs(),
        (Some(a), Some(b)) => (a - b).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

fn oracle(kind: IndexKind, hist: &[Sample], v: &PrototypeSet, traj: &[Vec<f64>], lambda: f64) -> Result<Option<f64>> {
    match (kind, v.k()) {
        (IndexKind::Xb, 1) => batch_xb_single_cluster(hist, traj, 1.0),
        (IndexKind::XbLambda, 1) => batch_xb_single_cluster(hist, traj, lambda),
        (IndexKind::Xb, _) => batch_xb(hist, v),
        (IndexKind::XbLambda, _) => batch_xb_lambda(hist, v, lambda),
        (IndexKind::Db, _) => batch_db(hist, v),
        (IndexKind::DbLambda, _) => batch_db_lambda(hist, v, lambda),
    }
}

pub fn run_trial(seed: u64) -> Result<TrialReport> {
    run_trial_with(seed, &TrialSpec::from_seed(seed))
}

pub fn run_trial_with(seed: u64, spec: &TrialSpec) -> Result<TrialReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let TrialSpec { n, k, p, lambda, .. } = *spec;
    let noise = Normal::new(0.0, 1.0).expect("valid");
    let drift = Normal::new(0.0, 0.05).expect("valid");

    let mut centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..p).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    let kinds = spec.kinds();
    let mut states = kinds
        .iter()
        .map(|&kind| IndexState::with_init(kind, k, p, lambda, IcviInit::Zeros, 0))
        .collect::<Result<Vec<_>>>()?;
    let mut plain = vec![DispersionState::new(p, 1.0)?; k];
    let mut forgetting = plain.clone();

    let mut hist: Vec<Sample> = Vec::with_capacity(n);
    let mut traj: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut worst: [Option<Worst>; 4] = [None; 4];
    let mut lambda_one_mismatch = None;
    let active = if spec.empty_cluster { k - 1 } else { k };

    for step in 1..=n as u64 {
        let source = rng.random_range(0..active);
        let x: Vec<f64> = centers[source].iter().map(|c| c + 2.0 * noise.sample(&mut rng)).collect();
        let v_old = PrototypeSet::new(centers.clone())?;
        for c in centers.iter_mut().take(active) {
            for v in c.iter_mut() {
                *v += drift.sample(&mut rng);
            }
        }
        let v_new = PrototypeSet::new(centers.clone())?;

        let u = if spec.fuzzy {
            let mut w: Vec<f64> = (0..k).map(|i| if i < active { rng.random::<f64>() + 1e-3 } else { 0.0 }).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            MembershipVector::fuzzy(w)
        } else {
            MembershipVector::crisp(k, source)
        };

        if lambda == 1.0 {
            for i in 0..k {
                let (vo, vn, ui) = (v_old.center(i), v_new.center(i), u.u[i]);
                plain[i] = update_dispersion(&plain[i], vo, vn, ui, &x)?;
                forgetting[i] = update_dispersion_forgetting(&forgetting[i], vo, vn, ui, &x)?;
                if plain[i] != forgetting[i] && lambda_one_mismatch.is_none() {
                    lambda_one_mismatch = Some(step);
                }
            }
        }

        let values = states
            .iter_mut()
            .map(|s| s.update(&v_old, &v_new, &u, &x).map(|v| v.get()))
            .collect::<Result<Vec<_>>>()?;
        hist.push(Sample { x, u: u.u });
        traj.push(v_new.center(0).to_vec());

        for (kind, got) in kinds.iter().zip(values) {
            let want = oracle(*kind, &hist, &v_new, &traj, lambda)?;
            let rel = relative_error(got, want);
            let slot = &mut worst[kind.slot()];
            if slot.is_none_or(|w| rel > w.rel) {
                *slot = Some(Worst { rel, step });
            }
        }
    }
    Ok(TrialReport {
        seed,
        spec: spec.clone(),
        worst,
        lambda_one_mismatch,
        lambda_one_checked: lambda == 1.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub seed: u64,
    pub what: String,
    pub step: u64,
    pub rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub trials: usize,
    pub tolerance: f64,
    /// Worst relative error per index over all trials, by [`IndexKind::slot`].
    pub max_rel: [Option<f64>; 4],
    pub single_cluster_trials: usize,
    pub lambda_one_trials: usize,
    pub empty_cluster_trials: usize,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs trials with seeds `seed, seed + 1, …`.
pub fn verify(trials: usize, seed: u64, tolerance: f64, exec: Execution) -> VerifyReport {
    let seeds: Vec<u64> = (0..trials as u64).map(|i| seed.wrapping_add(i)).collect();
    let results = map_seeds(&seeds, exec, run_trial);
    let mut report = VerifyReport {
        trials,
        tolerance,
        max_rel: [None; 4],
        single_cluster_trials: 0,
        lambda_one_trials: 0,
        empty_cluster_trials: 0,
        failures: Vec::new(),
    };
    for (seed, result) in seeds.into_iter().zip(results) {
        let t = match result {
            Ok(t) => t,
            Err(e) => {
                report.failures.push(Failure {
                    seed,
                    what: format!("error: {e}"),
                    step: 0,
                    rel: f64::INFINITY,
                });
                continue;
            }
        };
        report.single_cluster_trials += usize::from(t.spec.k == 1);
        report.lambda_one_trials += usize::from(t.lambda_one_checked);
        report.empty_cluster_trials += usize::from(t.spec.empty_cluster);
        for kind in IndexKind::ALL {
            if let Some(w) = t.worst[kind.slot()] {
                let m = &mut report.max_rel[kind.slot()];
                *m = Some(m.map_or(w.rel, |m: f64| m.max(w.rel)));
                if w.rel.is_nan() || w.rel > tolerance {
                    report.failures.push(Failure {
                        seed,
                        what: kind.to_string(),
                        step: w.step,
                        rel: w.rel,
                    });
                }
            }
        }
        if let Some(step) = t.lambda_one_mismatch {
            report.failures.push(Failure {
                seed,
                what: "forgetting dispersion at λ = 1".into(),
                step,
                rel: f64::NAN,
            });
        }
    }
    report
}
