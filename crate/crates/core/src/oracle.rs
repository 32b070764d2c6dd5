//! Batch reference formulas that re-read the full history.
//!
//! Nothing in the streaming path calls into this module. It exists so that
//! the incremental updates can be checked against direct summation, both
//! from tests and from the `verify` command.

use crate::error::{Error, Result};
use crate::types::{check_dim, dist_sq, PrototypeSet};

/// One stored observation with its membership over all clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// `Σ_j λ^(n-j) u_j² ‖x_j − v‖²` over a single-cluster history of `(x, u)` pairs.
pub fn batch_dispersion(history: &[(Vec<f64>, f64)], v: &[f64], lambda: f64) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::Structural("empty history".into()));
    }
    let n = history.len();
    let mut total = 0.0;
    for (j, (x, u)) in history.iter().enumerate() {
        check_dim("history point", x, v.len())?;
        let w = lambda.powi((n - 1 - j) as i32);
        total += w * u * u * dist_sq(x, v);
    }
    Ok(total)
}

fn check_history(history: &[Sample], v: &PrototypeSet) -> Result<()> {
    if history.is_empty() {
        return Err(Error::Structural("empty history".into()));
    }
    for s in history {
        check_dim("history point", &s.x, v.dim())?;
        if s.u.len() != v.k() {
            return Err(Error::Structural(format!(
                "membership of length {} for k = {}",
                s.u.len(),
                v.k()
            )));
        }
    }
    Ok(())
}

/// Per-cluster `(C_i, M_i)` with forgetting weights `λ^(n-j)`.
pub fn batch_cluster_sums(history: &[Sample], v: &PrototypeSet, lambda: f64) -> Result<Vec<(f64, f64)>> {
    check_history(history, v)?;
    let n = history.len();
    let mut sums = vec![(0.0, 0.0); v.k()];
    for (j, s) in history.iter().enumerate() {
        let w = lambda.powi((n - 1 - j) as i32);
        for (i, acc) in sums.iter_mut().enumerate() {
            let u2 = s.u[i] * s.u[i];
            acc.0 += w * u2 * dist_sq(&s.x, v.center(i));
            acc.1 += w * u2;
        }
    }
    Ok(sums)
}

fn min_separation(v: &PrototypeSet) -> Result<f64> {
    if v.k() < 2 {
        return Err(Error::Precondition("batch index needs k ≥ 2".into()));
    }
    let mut h = f64::INFINITY;
    for i in 0..v.k() {
        for j in 0..v.k() {
            if i != j {
                h = h.min(dist_sq(v.center(i), v.center(j)));
            }
        }
    }
    Ok(h)
}

/// Xie-Beni with fuzzifier 2 and the Euclidean norm:
/// `Σ_j Σ_i u_ij² ‖x_j − v_i‖² / (n · min_{i≠l} ‖v_i − v_l‖²)`.
/// `None` when two centers coincide.
pub fn batch_xb(history: &[Sample], v: &PrototypeSet) -> Result<Option<f64>> {
    let j: f64 = batch_cluster_sums(history, v, 1.0)?.iter().map(|s| s.0).sum();
    let h = min_separation(v)?;
    Ok((h > 0.0).then(|| j / (history.len() as f64 * h)))
}

/// `(1 − λ) · Σ_i C_λi / h`.
pub fn batch_xb_lambda(history: &[Sample], v: &PrototypeSet, lambda: f64) -> Result<Option<f64>> {
    let j: f64 = batch_cluster_sums(history, v, lambda)?.iter().map(|s| s.0).sum();
    let h = min_separation(v)?;
    Ok((h > 0.0).then(|| (1.0 - lambda) * j / h))
}

/// Single-cluster Xie-Beni, with the separation replaced by the running
/// maximum of `‖v_1(j) − x_j‖²` over the stored center trajectory.
/// `centers[j]` is the center after sample `j` was absorbed.
pub fn batch_xb_single_cluster(history: &[Sample], centers: &[Vec<f64>], lambda: f64) -> Result<Option<f64>> {
    if centers.len() != history.len() {
        return Err(Error::Structural("one center per history sample required".into()));
    }
    let last = PrototypeSet::new(vec![centers.last().cloned().unwrap_or_default()])?;
    let c = batch_cluster_sums(history, &last, lambda)?[0].0;
    let h = history
        .iter()
        .zip(centers)
        .map(|(s, v)| dist_sq(&s.x, v))
        .fold(0.0, f64::max);
    if h <= 0.0 {
        return Ok(None);
    }
    Ok(Some(if lambda == 1.0 {
        c / (history.len() as f64 * h)
    } else {
        (1.0 - lambda) * c / h
    }))
}

fn db_from_spreads(spreads: &[f64], v: &PrototypeSet) -> Result<Option<f64>> {
    let k = v.k();
    if k < 2 {
        return Err(Error::Precondition("Davies-Bouldin needs k ≥ 2".into()));
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for l in 0..k {
            if l == i {
                continue;
            }
            let d = dist_sq(v.center(i), v.center(l));
            if d == 0.0 {
                return Ok(None);
            }
            worst = worst.max((spreads[i] + spreads[l]) / d);
        }
        total += worst;
    }
    Ok(Some(total / k as f64))
}

/// Squared-distance Davies-Bouldin relative:
/// `(1/k) Σ_i max_{l≠i} (L_i + L_l) / ‖v_i − v_l‖²` with `L_i = C_i / M_i`
/// (taken as 0 for a cluster without membership mass).
pub fn batch_db(history: &[Sample], v: &PrototypeSet) -> Result<Option<f64>> {
    let spreads: Vec<f64> = batch_cluster_sums(history, v, 1.0)?
        .into_iter()
        .map(|(c, m)| if m > 0.0 { c / m } else { 0.0 })
        .collect();
    db_from_spreads(&spreads, v)
}

/// As [`batch_db`] with forgetting sums and `L_i = C_λi / max(1, M_λi)`.
pub fn batch_db_lambda(history: &[Sample], v: &PrototypeSet, lambda: f64) -> Result<Option<f64>> {
    let spreads: Vec<f64> = batch_cluster_sums(history, v, lambda)?
        .into_iter()
        .map(|(c, m)| c / m.max(1.0))
        .collect();
    db_from_spreads(&spreads, v)
}
