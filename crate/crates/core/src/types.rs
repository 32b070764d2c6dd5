//! Domain types shared by the clusterers, the index updates and the engine.
//!
//! Distances are squared Euclidean throughout; nothing on the index path
//! takes a square root.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on the column-sum constraint of a fuzzy membership vector.
pub const MEMBERSHIP_SUM_TOL: f64 = 1e-12;

/// One observation of a stream. `n` is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamPoint {
    n: u64,
    x: Vec<f64>,
}

impl StreamPoint {
    pub fn new(n: u64, x: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Structural("sequence index is 1-based".into()));
        }
        if x.is_empty() {
            return Err(Error::Structural("empty observation".into()));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "point {n}: coordinate {i} is not finite ({})",
                x[i]
            )));
        }
        Ok(Self { n, x })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Builds 1-based stream points from raw rows.
pub fn points_from_rows<I>(rows: I) -> Result<Vec<StreamPoint>>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = Vec::new();
    let mut dim = None;
    for (i, row) in rows.into_iter().enumerate() {
        let p = StreamPoint::new(i as u64 + 1, row)?;
        match dim {
            None => dim = Some(p.dim()),
            Some(d) if d != p.dim() => {
                return Err(Error::Structural(format!(
                    "point {} has dimension {}, stream dimension is {d}",
                    p.n(),
                    p.dim()
                )))
            }
            _ => {}
        }
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipKind {
    Crisp,
    Fuzzy,
}

/// Assignment of one sample over the current `k` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipVector {
    pub u: Vec<f64>,
    pub kind: MembershipKind,
}

impl MembershipVector {
    /// One-hot vector of length `k` with the 1 at `winner`.
    pub fn crisp(k: usize, winner: usize) -> Self {
        let mut u = vec![0.0; k];
        u[winner] = 1.0;
        Self {
            u,
            kind: MembershipKind::Crisp,
        }
    }

    pub fn fuzzy(u: Vec<f64>) -> Self {
        Self {
            u,
            kind: MembershipKind::Fuzzy,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn winner(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.u.iter().enumerate() {
            if v > self.u[best] {
                best = i;
            }
        }
        best
    }

    /// Crisp version of this vector, one-hot at [`winner`](Self::winner).
    pub fn hardened(&self) -> Self {
        Self::crisp(self.u.len(), self.winner())
    }

    /// Appends zero memberships for clusters created after the vector was computed.
    pub fn pad_to(&mut self, k: usize) {
        if self.u.len() < k {
            self.u.resize(k, 0.0);
        }
    }
}

/// Which constraint of a crisp or fuzzy partition column was broken.
#[derive(Debug, Clone, PartialEq)]
pub enum MembershipViolation {
    OutOfRange { index: usize, value: f64 },
    SumNotOne { sum: f64 },
    NotOneHot,
}

impl fmt::Display for MembershipViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MembershipViolation::OutOfRange { index, value } => {
                write!(f, "entry {index} = {value} outside [0, 1]")
            }
            MembershipViolation::SumNotOne { sum } => write!(f, "sum ≠ 1 (sum = {sum})"),
            MembershipViolation::NotOneHot => write!(f, "crisp vector is not one-hot"),
        }
    }
}

pub fn validate_membership(u: &MembershipVector) -> Result<()> {
    if u.is_empty() {
        return Err(Error::Structural("empty membership vector".into()));
    }
    for (index, &value) in u.u.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Membership(MembershipViolation::OutOfRange { index, value }));
        }
    }
    match u.kind {
        MembershipKind::Fuzzy => {
            let sum: f64 = u.u.iter().sum();
            if (sum - 1.0).abs() > MEMBERSHIP_SUM_TOL {
                return Err(Error::Membership(MembershipViolation::SumNotOne { sum }));
            }
        }
        MembershipKind::Crisp => {
            let ones = u.u.iter().filter(|&&v| v == 1.0).count();
            let zeros = u.u.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != u.len() {
                return Err(Error::Membership(MembershipViolation::NotOneHot));
            }
        }
    }
    Ok(())
}

/// Ordered cluster centers, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    centers: Vec<Vec<f64>>,
}

impl PrototypeSet {
    pub fn new(centers: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = centers.first() else {
            return Err(Error::Structural("prototype set needs k ≥ 1".into()));
        };
        let p = first.len();
        if p == 0 {
            return Err(Error::Structural("zero-dimensional prototype".into()));
        }
        if let Some(i) = centers.iter().position(|c| c.len() != p) {
            return Err(Error::Structural(format!(
                "center {i} has dimension {}, expected {p}",
                centers[i].len()
            )));
        }
        Ok(Self { centers })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i]
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Scales every coordinate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            centers: self
                .centers
                .iter()
                .map(|c| c.iter().map(|v| v * s).collect())
                .collect(),
        }
    }
}

/// Minimum over unordered pairs of the squared distance between centers.
pub fn min_pairwise_center_distance_sq(v: &PrototypeSet) -> Result<f64> {
    let k = v.k();
    if k < 2 {
        return Err(Error::Precondition(format!(
            "minimum center separation needs k ≥ 2, got k = {k}"
        )));
    }
    let mut best = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            best = best.min(dist_sq(v.center(i), v.center(j)));
        }
    }
    Ok(best)
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_dim(what: &str, v: &[f64], p: usize) -> Result<()> {
    if v.len() != p {
        return Err(Error::Structural(format!(
            "{what} has dimension {}, expected {p}",
            v.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what} has a non-finite coordinate")))
    }
}
