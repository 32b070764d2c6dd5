//! Incremental Xie-Beni and Davies-Bouldin indices, with and without forgetting.
//!
//! All four variants share the per-cluster [`DispersionState`] recursion and
//! differ only in how the cluster dispersions are combined:
//!
//! | variant     | value                                              |
//! |-------------|----------------------------------------------------|
//! | `xb`        | `J / (n · h)`                                      |
//! | `xb_lambda` | `(1 − λ) · J_λ / h`                                |
//! | `db`        | `(1/k) Σ_i max_{j≠i} (L_i + L_j) / ‖v_i − v_j‖²`, `L_i = C_i / M_i` |
//! | `db_lambda` | same, with `L_i = C_λi / max(1, M_λi)`             |
//!
//! where `J = Σ_i C_i` and `h` is the minimum squared center separation.
//! With a single cluster `h` instead tracks the running maximum of
//! `‖v_1 − x‖²`.

use std::fmt;
use std::str::FromStr;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionState;
use crate::error::{Error, Result};
use crate::types::{check_dim, dist_sq, min_pairwise_center_distance_sq, MembershipVector, PrototypeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Xb,
    XbLambda,
    Db,
    DbLambda,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [IndexKind::Xb, IndexKind::XbLambda, IndexKind::Db, IndexKind::DbLambda];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Xb => "xb",
            IndexKind::XbLambda => "xb_lambda",
            IndexKind::Db => "db",
            IndexKind::DbLambda => "db_lambda",
        }
    }

    pub fn forgets(self) -> bool {
        matches!(self, IndexKind::XbLambda | IndexKind::DbLambda)
    }

    /// Position of this variant's column in a trace record.
    pub fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown index '{s}' (expected xb, xb_lambda, db or db_lambda)")))
    }
}

/// How per-cluster accumulators are seeded when evaluation starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcviInit {
    /// `C = 0`, `M = 0`, `G = 0`; the sample counter starts at 0.
    Zeros,
    /// `C = 0`, `M = n_warmup`, `G = 0` for every cluster; the sample counter
    /// starts at `n_warmup`.
    #[default]
    Paper,
}

impl FromStr for IcviInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(IcviInit::Zeros),
            "paper" => Ok(IcviInit::Paper),
            other => Err(Error::Config(format!("unknown icvi init '{other}' (expected zeros or paper)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Undefined {
    /// Two centers coincide, or the single-cluster separation is still 0.
    ZeroSeparation,
    /// Davies-Bouldin has no pairs to compare.
    SingleCluster,
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Undefined::ZeroSeparation => f.write_str("zero center separation"),
            Undefined::SingleCluster => f.write_str("single cluster"),
        }
    }
}

/// Index value produced at step `n` with `k` clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexValue {
    pub value: std::result::Result<f64, Undefined>,
    pub n: u64,
    pub k: usize,
}

impl IndexValue {
    pub fn get(&self) -> Option<f64> {
        self.value.ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexState {
    kind: IndexKind,
    lambda: f64,
    p: usize,
    clusters: Vec<DispersionState>,
    h: f64,
    n: u64,
}

impl IndexState {
    /// Zero-initialized state for `k` clusters in `p` dimensions.
    /// `lambda` is ignored by the non-forgetting variants.
    pub fn new(kind: IndexKind, k: usize, p: usize, lambda: f64) -> Result<Self> {
        Self::with_init(kind, k, p, lambda, IcviInit::Zeros, 0)
    }

    pub fn xb(k: usize, p: usize) -> Result<Self> {
        Self::new(IndexKind::Xb, k, p, 1.0)
    }

    pub fn xb_lambda(k: usize, p: usize, lambda: f64) -> Result<Self> {
        Self::new(IndexKind::XbLambda, k, p, lambda)
    }

    pub fn db(k: usize, p: usize) -> Result<Self> {
        Self::new(IndexKind::Db, k, p, 1.0)
    }

    pub fn db_lambda(k: usize, p: usize, lambda: f64) -> Result<Self> {
        Self::new(IndexKind::DbLambda, k, p, lambda)
    }

    pub fn with_init(
        kind: IndexKind,
        k: usize,
        p: usize,
        lambda: f64,
        init: IcviInit,
        n_warmup: u64,
    ) -> Result<Self> {
        let lambda = if kind.forgets() {
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(Error::Config(format!(
                    "{kind} needs a forgetting factor in (0, 1), got {lambda}"
                )));
            }
            lambda
        } else {
            1.0
        };
        if k == 0 {
            return Err(Error::Structural("index state needs k ≥ 1".into()));
        }
        let (mass, n) = match init {
            IcviInit::Zeros => (0.0, 0),
            IcviInit::Paper => (n_warmup as f64, n_warmup),
        };
        let clusters = (0..k)
            .map(|_| DispersionState::with_mass(p, lambda, mass))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind,
            lambda,
            p,
            clusters,
            h: 0.0,
            n,
        })
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn clusters(&self) -> &[DispersionState] {
        &self.clusters
    }

    /// `J = Σ_i C_i`.
    pub fn j(&self) -> f64 {
        self.clusters.iter().map(DispersionState::c).sum()
    }

    /// Appends an empty cluster (created mid-stream).
    pub fn add_cluster(&mut self) -> Result<()> {
        self.clusters.push(DispersionState::new(self.p, self.lambda)?);
        Ok(())
    }

    /// Number of scalars held, for memory instrumentation.
    pub fn footprint(&self) -> usize {
        3 + self.clusters.len() * (self.p + 3)
    }

    /// Advances every cluster by one sample and returns the index value.
    /// The state advances even when the value is undefined.
    pub fn update(
        &mut self,
        v_old: &PrototypeSet,
        v_new: &PrototypeSet,
        u: &MembershipVector,
        x: &[f64],
    ) -> Result<IndexValue> {
        let k = self.k();
        if v_old.k() != k || v_new.k() != k || u.len() != k {
            return Err(Error::Structural(format!(
                "index state has k = {k}, got {} old centers, {} new centers, {} memberships",
                v_old.k(),
                v_new.k(),
                u.len()
            )));
        }
        check_dim("observation", x, self.p)?;
        check_dim("centers", v_new.center(0), self.p)?;
        check_dim("centers", v_old.center(0), self.p)?;

        for (i, cluster) in self.clusters.iter_mut().enumerate() {
            cluster.advance(v_old.center(i), v_new.center(i), u.u[i], x)?;
        }
        self.n += 1;
        self.h = if k >= 2 {
            min_pairwise_center_distance_sq(v_new)?
        } else {
            self.h.max(dist_sq(v_new.center(0), x))
        };

        let value = match self.kind {
            IndexKind::Xb => self.xie_beni(self.j() / self.n as f64),
            IndexKind::XbLambda => self.xie_beni((1.0 - self.lambda) * self.j()),
            IndexKind::Db | IndexKind::DbLambda => {
                if k < 2 {
                    Err(Undefined::SingleCluster)
                } else {
                    let spreads = self.spreads();
                    davies_bouldin(&spreads, v_new).ok_or(Undefined::ZeroSeparation)
                }
            }
        };
        Ok(IndexValue {
            value,
            n: self.n,
            k,
        })
    }

    fn xie_beni(&self, numerator: f64) -> std::result::Result<f64, Undefined> {
        if self.h > 0.0 {
            Ok(numerator / self.h)
        } else {
            Err(Undefined::ZeroSeparation)
        }
    }

    /// Per-cluster normalized dispersions `L_i`.
    pub fn spreads(&self) -> Vec<f64> {
        self.clusters
            .iter()
            .enumerate()
            .map(|(i, s)| match self.kind {
                IndexKind::DbLambda => clamped_spread(s.c(), s.m()),
                _ => {
                    if s.m() > 0.0 {
                        s.c() / s.m()
                    } else {
                        debug!("cluster {i} has no membership mass; L = 0");
                        0.0
                    }
                }
            })
            .collect()
    }
}

/// `C_λ / max(1, M_λ)`: forgetting mass is clamped so that `L` never exceeds `C`.
pub fn clamped_spread(c: f64, m: f64) -> f64 {
    c / m.max(1.0)
}

/// `(1/k) Σ_i max_{j≠i} (L_i + L_j) / ‖v_i − v_j‖²`; `None` if any two centers coincide.
pub fn davies_bouldin(spreads: &[f64], v: &PrototypeSet) -> Option<f64> {
    let k = v.k();
    debug_assert_eq!(spreads.len(), k);
    if k < 2 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in (0..k).filter(|&j| j != i) {
            let d = dist_sq(v.center(i), v.center(j));
            if d == 0.0 {
                return None;
            }
            worst = worst.max((spreads[i] + spreads[j]) / d);
        }
        total += worst;
    }
    Some(total / k as f64)
}
