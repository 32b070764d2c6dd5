//! Simplified online ellipsoidal clustering.
//!
//! Each cluster is an ellipsoid `(m, S⁻¹)` with two Mahalanobis radii taken
//! from chi-squared quantiles: the effective boundary `χ²_p(γ_eff)` and the
//! outlier boundary `χ²_p(γ_out)`. Samples get fuzzy memberships from the
//! fuzzy k-means rule with `m = 2` on Mahalanobis distances.
//!
//! Prototype updates are membership weighted. Inside the effective boundary
//! the full membership is used; between the two boundaries (the guard zone)
//! the weight falls linearly to zero; beyond the outlier boundary the sample
//! is ignored. A cluster still in its stabilization window (fewer than `n_s`
//! samples) has no guard zone and absorbs every sample at its membership.
//!
//! A separate forgetful prototype tracks the recent stream with exponential
//! decay `λ_OEC`. Once every cluster is stabilized, if its mean stays outside
//! the outlier boundary of all clusters for `n_s` consecutive steps, a new
//! cluster is created from it.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::types::{check_dim, check_finite, MembershipVector, PrototypeSet, StreamPoint};

/// Quantile of the chi-squared distribution with `dof` degrees of freedom.
pub fn chi2_inverse(dof: u32, gamma: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::Config("chi-squared needs at least one degree of freedom".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Config(format!("probability {gamma} outside (0, 1)")));
    }
    let k = dof as f64;
    let cdf = |x: f64| gamma_lr(k / 2.0, x / 2.0);
    let ln_norm = (k / 2.0) * std::f64::consts::LN_2 + ln_gamma(k / 2.0);
    let pdf = |x: f64| ((k / 2.0 - 1.0) * x.ln() - x / 2.0 - ln_norm).exp();

    let mut lo = 0.0;
    let mut hi = k + 10.0 * (2.0 * k).sqrt();
    while cdf(hi) < gamma {
        lo = hi;
        hi *= 2.0;
    }
    // Safeguarded Newton: fall back to bisection whenever a step leaves the bracket.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = cdf(x) - gamma;
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x);
        let newton = x - f / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-14 * x.max(1.0) || hi - lo <= 1e-14 * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OecConfig {
    pub gamma_eff: f64,
    pub gamma_out: f64,
    /// Stabilization period in samples.
    pub n_s: usize,
    pub lambda_oec: f64,
    /// Fuzzifier of the membership rule; only 2 is supported.
    pub m_fuzz: f64,
    /// Report one-hot memberships to the indices instead of fuzzy ones.
    pub harden: bool,
}

impl Default for OecConfig {
    fn default() -> Self {
        Self {
            gamma_eff: 0.99,
            gamma_out: 0.999,
            n_s: 20,
            lambda_oec: 0.9,
            m_fuzz: 2.0,
            harden: false,
        }
    }
}

impl OecConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if !(0.0 < self.gamma_eff && self.gamma_eff < self.gamma_out && self.gamma_out < 1.0) {
            return Err(Error::Config(format!(
                "boundary probabilities must satisfy 0 < γ_eff < γ_out < 1, got {} and {}",
                self.gamma_eff, self.gamma_out
            )));
        }
        if self.n_s < p + 1 {
            return Err(Error::Config(format!(
                "stabilization period {} shorter than p + 1 = {}",
                self.n_s,
                p + 1
            )));
        }
        if !(self.lambda_oec > 0.0 && self.lambda_oec < 1.0) {
            return Err(Error::Config(format!("λ_OEC = {} outside (0, 1)", self.lambda_oec)));
        }
        if self.m_fuzz != 2.0 {
            return Err(Error::Config(format!("fuzzifier {} unsupported (only 2)", self.m_fuzz)));
        }
        Ok(())
    }
}

/// Mean and inverse covariance of one ellipsoidal cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidalPrototype {
    mean: DVector<f64>,
    /// Weighted scatter `Σ w (x − m)(x − m)ᵀ`; covariance is `scatter / mass`.
    scatter: DMatrix<f64>,
    s_inv: DMatrix<f64>,
    mass: f64,
    count: usize,
    stabilized: bool,
}

/// Outcome of refreshing a prototype's inverse covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularized {
    pub delta: f64,
}

impl EllipsoidalPrototype {
    /// Builds a prototype from a mean and covariance, regularizing if needed.
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>, mass: f64, count: usize, n_s: usize) -> Result<(Self, Option<Regularized>)> {
        let p = mean.len();
        if cov.nrows() != p || cov.ncols() != p {
            return Err(Error::Structural(format!(
                "covariance is {}×{}, mean has dimension {p}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::Config(format!("prototype mass {mass} must be positive")));
        }
        let mut proto = Self {
            mean: DVector::from_vec(mean),
            scatter: cov * mass,
            s_inv: DMatrix::identity(p, p),
            mass,
            count,
            stabilized: count >= n_s,
        };
        let reg = proto.refresh_inverse()?;
        Ok((proto, reg))
    }

    /// Sample mean and covariance (normalized by the sample count) of a set of points.
    pub fn from_points(points: &[&[f64]], n_s: usize) -> Result<(Self, Option<Regularized>)> {
        let Some(first) = points.first() else {
            return Err(Error::Structural("prototype needs at least one point".into()));
        };
        let p = first.len();
        let n = points.len() as f64;
        let mut mean = DVector::zeros(p);
        for x in points {
            check_dim("initial point", x, p)?;
            mean += DVector::from_column_slice(x);
        }
        mean /= n;
        let mut cov = DMatrix::zeros(p, p);
        for x in points {
            let d = DVector::from_column_slice(x) - &mean;
            cov += &d * d.transpose();
        }
        cov /= n;
        Self::new(mean.as_slice().to_vec(), cov, n, points.len(), n_s)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn s_inv(&self) -> &DMatrix<f64> {
        &self.s_inv
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.scatter / self.mass
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn stabilized(&self) -> bool {
        self.stabilized
    }

    /// Membership-weighted running update with weight `w ∈ (0, 1]`.
    fn absorb(&mut self, x: &[f64], w: f64) -> Result<Option<Regularized>> {
        let d = DVector::from_column_slice(x) - &self.mean;
        self.mass += w;
        let r = w / self.mass;
        self.mean += &d * r;
        self.scatter += (&d * d.transpose()) * (w * (1.0 - r));
        self.refresh_inverse()
    }

    /// Exponentially forgetting update with unit weight per sample.
    fn absorb_forgetting(&mut self, x: &[f64], lambda: f64) -> Result<Option<Regularized>> {
        let d = DVector::from_column_slice(x) - &self.mean;
        self.mass = lambda * self.mass + 1.0;
        let r = 1.0 / self.mass;
        self.mean += &d * r;
        self.scatter *= lambda;
        self.scatter += (&d * d.transpose()) * (1.0 - r);
        self.refresh_inverse()
    }

    /// Recomputes `S⁻¹`, adding `δ·I` to the covariance while its smallest
    /// factorization pivot is below `1e-10` of the mean variance.
    fn refresh_inverse(&mut self) -> Result<Option<Regularized>> {
        let p = self.dim();
        let mut cov = self.covariance();
        let scale = cov.trace() / p as f64;
        let floor = if scale > 0.0 { 1e-10 * scale } else { 1e-10 };
        let mut added = 0.0;
        let mut delta = if scale > 0.0 { 1e-6 * scale } else { 1e-6 };
        while min_pivot(&cov) < floor {
            for i in 0..p {
                cov[(i, i)] += delta;
            }
            added += delta;
            delta *= 10.0;
            if !delta.is_finite() {
                return Err(Error::Invariant("covariance could not be regularized".into()));
            }
        }
        if added > 0.0 {
            self.scatter = &cov * self.mass;
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Invariant("covariance is not positive definite after regularization".into()))?;
        let inv = chol.inverse();
        self.s_inv = (&inv + inv.transpose()) * 0.5;
        Ok((added > 0.0).then_some(Regularized { delta: added }))
    }

    /// `true` when `S⁻¹` is symmetric within `1e-10` (relative) and has positive pivots.
    pub fn inverse_is_spd(&self) -> bool {
        let scale = self.s_inv.amax().max(1.0);
        let sym = (&self.s_inv - self.s_inv.transpose()).amax() <= 1e-10 * scale;
        sym && min_pivot(&self.s_inv) > 0.0
    }
}

/// Smallest pivot of an LDLᵀ factorization; negative or zero if not positive definite.
fn min_pivot(a: &DMatrix<f64>) -> f64 {
    let p = a.nrows();
    let mut l = DMatrix::<f64>::zeros(p, p);
    let mut dvals = vec![0.0; p];
    let mut smallest = f64::INFINITY;
    for j in 0..p {
        let mut dj = a[(j, j)];
        for t in 0..j {
            dj -= l[(j, t)] * l[(j, t)] * dvals[t];
        }
        dvals[j] = dj;
        smallest = smallest.min(dj);
        if dj <= 0.0 {
            return dj;
        }
        for i in j + 1..p {
            let mut v = a[(i, j)];
            for t in 0..j {
                v -= l[(i, t)] * l[(j, t)] * dvals[t];
            }
            l[(i, j)] = v / dj;
        }
    }
    smallest
}

/// `(x − m)ᵀ S⁻¹ (x − m)`.
pub fn mahalanobis_sq(x: &[f64], proto: &EllipsoidalPrototype) -> Result<f64> {
    check_dim("observation", x, proto.dim())?;
    let d = DVector::from_column_slice(x) - &proto.mean;
    let q = d.dot(&(&proto.s_inv * &d));
    if q < 0.0 {
        let scale = d.norm_squared() * proto.s_inv.amax();
        if q < -1e-9 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Invariant(format!(
                "negative Mahalanobis form {q:e}: inverse covariance is not positive definite"
            )));
        }
        return Ok(0.0);
    }
    Ok(q)
}

/// Fuzzy k-means memberships with fuzzifier 2: `u_i = [Σ_j (F_i / F_j)²]⁻¹`.
/// A zero distance takes the whole membership (lowest such index).
pub fn oec_membership(distances: &[f64]) -> MembershipVector {
    let k = distances.len();
    if let Some(i) = distances.iter().position(|&f| f == 0.0) {
        return MembershipVector::crisp(k, i);
    }
    if k == 1 {
        return MembershipVector::fuzzy(vec![1.0]);
    }
    let f_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    // (F_min / F_j)² is the same rule rescaled to avoid overflow.
    let w: Vec<f64> = distances.iter().map(|&f| (f_min / f).powi(2)).collect();
    let total: f64 = w.iter().sum();
    MembershipVector::fuzzy(w.into_iter().map(|wi| wi / total).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum OecEvent {
    ClusterCreated { index: usize, mean: Vec<f64> },
    /// `cluster` is `None` for the forgetful prototype.
    CovarianceRegularized { cluster: Option<usize>, delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OecStep {
    pub u: MembershipVector,
    pub v_old: PrototypeSet,
    pub v_new: PrototypeSet,
    pub events: Vec<OecEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OecState {
    config: OecConfig,
    chi_eff: f64,
    chi_out: f64,
    clusters: Vec<EllipsoidalPrototype>,
    forgetful: EllipsoidalPrototype,
    /// Consecutive steps the forgetful mean has been outside every outlier boundary.
    streak: usize,
}

/// Builds a single cluster (and the forgetful prototype) from the first `p + 1` points.
pub fn oec_init(first: &[StreamPoint], config: &OecConfig) -> Result<(OecState, Vec<OecEvent>)> {
    let Some(p) = first.first().map(StreamPoint::dim) else {
        return Err(Error::Initialization("empty stream".into()));
    };
    if first.len() != p + 1 {
        return Err(Error::Initialization(format!(
            "ellipsoidal clustering needs p + 1 = {} points to initialize, got {}",
            p + 1,
            first.len()
        )));
    }
    config.validate(p)?;
    let rows: Vec<&[f64]> = first.iter().map(StreamPoint::x).collect();
    let (proto, reg) = EllipsoidalPrototype::from_points(&rows, config.n_s)?;
    let mut events = Vec::new();
    if let Some(r) = reg {
        events.push(OecEvent::CovarianceRegularized {
            cluster: Some(0),
            delta: r.delta,
        });
    }
    let state = OecState {
        chi_eff: chi2_inverse(p as u32, config.gamma_eff)?,
        chi_out: chi2_inverse(p as u32, config.gamma_out)?,
        config: config.clone(),
        forgetful: proto.clone(),
        clusters: vec![proto],
        streak: 0,
    };
    Ok((state, events))
}

impl OecState {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn dim(&self) -> usize {
        self.forgetful.dim()
    }

    pub fn config(&self) -> &OecConfig {
        &self.config
    }

    pub fn clusters(&self) -> &[EllipsoidalPrototype] {
        &self.clusters
    }

    pub fn forgetful(&self) -> &EllipsoidalPrototype {
        &self.forgetful
    }

    pub fn boundaries(&self) -> (f64, f64) {
        (self.chi_eff, self.chi_out)
    }

    pub fn prototypes(&self) -> PrototypeSet {
        PrototypeSet::new(self.clusters.iter().map(|c| c.mean().to_vec()).collect())
            .expect("k ≥ 1 with uniform dimension")
    }

    /// Scalars held by the clusterer: `O(k·p²)`.
    pub fn footprint(&self) -> usize {
        let per = |c: &EllipsoidalPrototype| c.dim() + 2 * c.dim() * c.dim() + 3;
        self.clusters.iter().map(per).sum::<usize>() + per(&self.forgetful) + 3
    }

    fn guard_weight(&self, u: f64, distance: f64, stabilized: bool) -> f64 {
        if !stabilized || distance <= self.chi_eff {
            u
        } else if distance <= self.chi_out {
            u * (self.chi_out - distance) / (self.chi_out - self.chi_eff)
        } else {
            0.0
        }
    }

    pub fn step(&mut self, x: &[f64]) -> Result<OecStep> {
        check_dim("observation", x, self.dim())?;
        check_finite("observation", x)?;
        let v_old = self.prototypes();
        let distances = self
            .clusters
            .iter()
            .map(|c| mahalanobis_sq(x, c))
            .collect::<Result<Vec<_>>>()?;
        let mut u = oec_membership(&distances);
        let winner = u.winner();
        let mut events = Vec::new();

        let (chi_eff, n_s) = (self.chi_eff, self.config.n_s);
        for (i, (&f, &ui)) in distances.iter().zip(&u.u).enumerate() {
            let w = self.guard_weight(ui, f, self.clusters[i].stabilized);
            if w <= 0.0 {
                continue;
            }
            let c = &mut self.clusters[i];
            if let Some(r) = c.absorb(x, w)? {
                events.push(OecEvent::CovarianceRegularized {
                    cluster: Some(i),
                    delta: r.delta,
                });
            }
            if i == winner || f <= chi_eff {
                c.count += 1;
                if c.count >= n_s {
                    c.stabilized = true;
                }
            }
        }
        if let Some(r) = self.forgetful.absorb_forgetting(x, self.config.lambda_oec)? {
            events.push(OecEvent::CovarianceRegularized {
                cluster: None,
                delta: r.delta,
            });
        }

        if self.clusters.iter().all(EllipsoidalPrototype::stabilized) {
            let mut outside_all = true;
            for c in &self.clusters {
                if mahalanobis_sq(self.forgetful.mean(), c)? <= self.chi_out {
                    outside_all = false;
                    break;
                }
            }
            self.streak = if outside_all { self.streak + 1 } else { 0 };
        } else {
            self.streak = 0;
        }

        if self.streak >= self.config.n_s {
            let p = self.dim();
            let (born, reg) = EllipsoidalPrototype::new(
                self.forgetful.mean().to_vec(),
                self.forgetful.covariance(),
                (p + 1) as f64,
                p + 1,
                self.config.n_s,
            )?;
            let index = self.clusters.len();
            debug!("cluster {index} created at {:?}", born.mean());
            if let Some(r) = reg {
                events.push(OecEvent::CovarianceRegularized {
                    cluster: Some(index),
                    delta: r.delta,
                });
            }
            events.push(OecEvent::ClusterCreated {
                index,
                mean: born.mean().to_vec(),
            });
            self.clusters.push(born);
            self.streak = 0;
            u.pad_to(self.clusters.len());
        }

        debug_assert!(self.clusters.iter().all(EllipsoidalPrototype::inverse_is_spd));
        let mut v_old = v_old.centers().to_vec();
        // A newborn cluster had no previous center; treat it as stationary.
        v_old.extend(self.clusters[v_old.len()..].iter().map(|c| c.mean().to_vec()));
        Ok(OecStep {
            u,
            v_old: PrototypeSet::new(v_old)?,
            v_new: self.prototypes(),
            events,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{points_from_rows, validate_membership};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn chi2_two_dof_closed_form() {
        for gamma in [0.99, 0.999, 0.5, 0.01] {
            let want = -2.0 * (1.0f64 - gamma).ln();
            let got = chi2_inverse(2, gamma).unwrap();
            assert!((got - want).abs() <= 1e-8, "γ={gamma}: {got} vs {want}");
        }
        assert!((chi2_inverse(2, 0.99).unwrap() - 9.21034).abs() < 1e-5);
        assert!((chi2_inverse(2, 0.999).unwrap() - 13.8155).abs() < 1e-4);
    }

    fn chi2_pdf(k: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let ln_norm = (k / 2.0) * 2f64.ln() + ln_gamma(k / 2.0);
        ((k / 2.0 - 1.0) * x.ln() - x / 2.0 - ln_norm).exp()
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn chi2_eight_dof_against_quadrature() {
        for gamma in [0.99, 0.999] {
            let q = chi2_inverse(8, gamma).unwrap();
            let mass = simpson(|x| chi2_pdf(8.0, x), 0.0, q, 200_000);
            // First-order bound on the quantile error from the CDF mismatch.
            let err = (mass - gamma).abs() / chi2_pdf(8.0, q);
            assert!(err <= 1e-8, "γ={gamma}: q={q}, quantile error ≈ {err:e}");
        }
        assert!((chi2_inverse(8, 0.99).unwrap() - 20.090235).abs() < 1e-5);
    }

    #[test]
    fn chi2_rejects_bad_probability() {
        assert!(matches!(chi2_inverse(2, 1.0), Err(Error::Config(_))));
        assert!(matches!(chi2_inverse(2, 0.0), Err(Error::Config(_))));
        assert!(chi2_inverse(0, 0.5).is_err());
    }

    fn proto_with(mean: &[f64], cov: DMatrix<f64>) -> EllipsoidalPrototype {
        EllipsoidalPrototype::new(mean.to_vec(), cov, 10.0, 10, 20).unwrap().0
    }

    #[test]
    fn mahalanobis_examples() {
        let id = proto_with(&[1.0, 1.0], DMatrix::identity(2, 2));
        assert!((mahalanobis_sq(&[4.0, 5.0], &id).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(mahalanobis_sq(&[1.0, 1.0], &id).unwrap(), 0.0);
    }

    #[test]
    fn mahalanobis_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2usize, 3, 8] {
            let a = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
            let cov = &a * a.transpose() + DMatrix::identity(p, p) * 0.1;
            let mean: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let proto = proto_with(&mean, cov);
            let x: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let s = proto.s_inv();
            let mut naive = 0.0;
            for i in 0..p {
                for j in 0..p {
                    naive += (x[i] - mean[i]) * s[(i, j)] * (x[j] - mean[j]);
                }
            }
            let got = mahalanobis_sq(&x, &proto).unwrap();
            assert!((got - naive).abs() <= 1e-10 * naive.max(1.0));
        }
    }

    #[test]
    fn membership_examples() {
        assert_eq!(oec_membership(&[3.7]).u, vec![1.0]);
        assert_eq!(oec_membership(&[2.0, 2.0]).u, vec![0.5, 0.5]);
        let u = oec_membership(&[1.0, 2.0]);
        assert!((u.u[0] - 0.8).abs() < 1e-15);
        assert!((u.u[1] - 0.2).abs() < 1e-15);
        let z = oec_membership(&[4.0, 0.0, 0.0]);
        assert_eq!(z.u, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn config_validation() {
        assert!(OecConfig::default().validate(2).is_ok());
        let bad = OecConfig {
            gamma_eff: 0.999,
            gamma_out: 0.99,
            ..OecConfig::default()
        };
        assert!(bad.validate(2).is_err());
        let short = OecConfig {
            n_s: 2,
            ..OecConfig::default()
        };
        assert!(short.validate(2).is_err());
        assert!(OecConfig { m_fuzz: 3.0, ..OecConfig::default() }.validate(2).is_err());
        assert!(OecConfig { lambda_oec: 1.0, ..OecConfig::default() }.validate(2).is_err());
    }

    fn gaussian_stream(seed: u64, n: usize, center: [f64; 2]) -> Vec<StreamPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n).map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            vec![center[0] + 2.0 * a, center[1] + b]
        });
        points_from_rows(rows).unwrap()
    }

    fn run_oec(points: &[StreamPoint]) -> (OecState, usize) {
        let cfg = OecConfig::default();
        let p = points[0].dim();
        let (mut s, _) = oec_init(&points[..p + 1], &cfg).unwrap();
        let mut created = 0;
        for pt in &points[p + 1..] {
            let step = s.step(pt.x()).unwrap();
            validate_membership(&step.u).unwrap();
            assert_eq!(step.u.len(), step.v_new.k());
            assert_eq!(step.v_old.k(), step.v_new.k());
            assert!(s.clusters().iter().all(EllipsoidalPrototype::inverse_is_spd));
            created += step
                .events
                .iter()
                .filter(|e| matches!(e, OecEvent::ClusterCreated { .. }))
                .count();
        }
        (s, created)
    }

    #[test]
    fn single_gaussian_keeps_one_cluster() {
        let stays = (0..20)
            .filter(|&seed| run_oec(&gaussian_stream(seed, 1500, [10.0, -4.0])).0.k() == 1)
            .count();
        assert!(stays >= 18, "k stayed 1 in only {stays}/20 seeds");
    }

    #[test]
    fn jump_creates_cluster() {
        let mut pts: Vec<Vec<f64>> = gaussian_stream(5, 300, [0.0, 0.0])
            .iter()
            .map(|p| p.x().to_vec())
            .collect();
        pts.extend(gaussian_stream(6, 300, [40.0, 0.0]).iter().map(|p| p.x().to_vec()));
        let (s, created) = run_oec(&points_from_rows(pts).unwrap());
        assert_eq!(created, 1);
        assert_eq!(s.k(), 2);
        assert!((s.clusters()[1].mean()[0] - 40.0).abs() < 2.0);
    }

    #[test]
    fn point_at_stabilized_mean_creates_nothing() {
        let pts = gaussian_stream(2, 200, [1.0, 1.0]);
        let (mut s, _) = run_oec(&pts);
        assert!(s.clusters()[0].stabilized());
        let m = s.clusters()[0].mean().to_vec();
        for _ in 0..50 {
            let step = s.step(&m).unwrap();
            assert!(!step.events.iter().any(|e| matches!(e, OecEvent::ClusterCreated { .. })));
        }
        assert_eq!(s.k(), 1);
    }

    #[test]
    fn no_creation_during_stabilization() {
        // Every sample jumps far away while the first cluster is still stabilizing.
        let cfg = OecConfig::default();
        let init = points_from_rows(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (mut s, _) = oec_init(&init, &cfg).unwrap();
        for i in 0..(cfg.n_s - 3) {
            assert!(!s.clusters()[0].stabilized());
            let step = s.step(&[100.0 + i as f64, 100.0]).unwrap();
            assert!(step.events.iter().all(|e| !matches!(e, OecEvent::ClusterCreated { .. })));
        }
    }

    #[test]
    fn forgetful_mean_tracks_running_mean_near_one() {
        let pts = gaussian_stream(4, 400, [3.0, 3.0]);
        let rows: Vec<&[f64]> = pts[..3].iter().map(|p| p.x()).collect();
        let (mut f, _) = EllipsoidalPrototype::from_points(&rows, 20).unwrap();
        let mut sum = [0.0; 2];
        for p in &pts[..3] {
            sum[0] += p.x()[0];
            sum[1] += p.x()[1];
        }
        for (i, p) in pts[3..].iter().enumerate() {
            f.absorb_forgetting(p.x(), 1.0 - 1e-12).unwrap();
            sum[0] += p.x()[0];
            sum[1] += p.x()[1];
            let n = (i + 4) as f64;
            assert!((f.mean()[0] - sum[0] / n).abs() <= 1e-6);
            assert!((f.mean()[1] - sum[1] / n).abs() <= 1e-6);
        }
    }

    #[test]
    fn degenerate_initial_points_are_regularized() {
        let init = points_from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let (s, events) = oec_init(&init, &OecConfig::default()).unwrap();
        assert!(matches!(events[0], OecEvent::CovarianceRegularized { cluster: Some(0), .. }));
        assert!(s.clusters()[0].inverse_is_spd());
        let collinear = points_from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let (s, events) = oec_init(&collinear, &OecConfig::default()).unwrap();
        assert_eq!(events.len(), 1);
        assert!(s.clusters()[0].inverse_is_spd());
    }

    #[test]
    fn init_needs_p_plus_one_points() {
        let two = points_from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(oec_init(&two, &OecConfig::default()), Err(Error::Initialization(_))));
    }
}
