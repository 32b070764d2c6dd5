//! MacQueen's sequential k-means.

use crate::error::{Error, Result};
use crate::types::{check_dim, check_finite, dist_sq, MembershipVector, PrototypeSet, StreamPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct SkMeansState {
    centers: Vec<Vec<f64>>,
    counts: Vec<u64>,
}

/// Output of one sequential k-means step.
#[derive(Debug, Clone, PartialEq)]
pub struct SkMeansStep {
    pub winner: usize,
    pub u: MembershipVector,
    pub v_old: PrototypeSet,
    pub v_new: PrototypeSet,
}

/// Seeds the prototypes with the first `k` points, each with count 1.
pub fn skmeans_init(first_k: &[StreamPoint], k: usize) -> Result<SkMeansState> {
    if k == 0 {
        return Err(Error::Config("sequential k-means needs k ≥ 1".into()));
    }
    if first_k.len() < k {
        return Err(Error::Initialization(format!(
            "sequential k-means needs {k} points to initialize, stream ended after {}",
            first_k.len()
        )));
    }
    if first_k.len() > k {
        return Err(Error::Structural(format!(
            "initialization takes exactly {k} points, got {}",
            first_k.len()
        )));
    }
    let p = first_k[0].dim();
    for pt in first_k {
        check_dim("initial point", pt.x(), p)?;
    }
    Ok(SkMeansState {
        centers: first_k.iter().map(|pt| pt.x().to_vec()).collect(),
        counts: vec![1; k],
    })
}

impl SkMeansState {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn prototypes(&self) -> PrototypeSet {
        PrototypeSet::new(self.centers.clone()).expect("k ≥ 1 with uniform dimension")
    }

    /// Nearest prototype by squared distance; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            let d = dist_sq(x, c);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn step(&mut self, x: &[f64]) -> Result<SkMeansStep> {
        check_dim("observation", x, self.dim())?;
        check_finite("observation", x)?;
        let v_old = self.prototypes();
        let m = self.nearest(x);
        self.counts[m] += 1;
        let n_m = self.counts[m] as f64;
        for (v, xi) in self.centers[m].iter_mut().zip(x) {
            *v += (xi - *v) / n_m;
        }
        Ok(SkMeansStep {
            winner: m,
            u: MembershipVector::crisp(self.k(), m),
            v_old,
            v_new: self.prototypes(),
        })
    }

    pub fn footprint(&self) -> usize {
        self.k() * (self.dim() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{points_from_rows, validate_membership};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(rows: &[&[f64]]) -> Vec<StreamPoint> {
        points_from_rows(rows.iter().map(|r| r.to_vec())).unwrap()
    }

    #[test]
    fn init_takes_first_points() {
        let s = skmeans_init(&pts(&[&[0.0, 0.0], &[5.0, 5.0]]), 2).unwrap();
        assert_eq!(s.centers(), &[vec![0.0, 0.0], vec![5.0, 5.0]]);
        assert_eq!(s.counts(), &[1, 1]);
        let dup = skmeans_init(&pts(&[&[1.0], &[1.0], &[1.0]]), 3).unwrap();
        assert_eq!(dup.k(), 3);
    }

    #[test]
    fn init_fails_on_short_stream() {
        assert!(matches!(
            skmeans_init(&pts(&[&[1.0]]), 2),
            Err(Error::Initialization(_))
        ));
    }

    #[test]
    fn running_mean_step() {
        let mut s = skmeans_init(&pts(&[&[0.0, 0.0], &[10.0, 0.0]]), 2).unwrap();
        let step = s.step(&[1.0, 0.0]).unwrap();
        assert_eq!(step.winner, 0);
        assert_eq!(s.counts(), &[2, 1]);
        assert_eq!(s.centers()[0], vec![0.5, 0.0]);
        assert_eq!(step.v_old.center(0), &[0.0, 0.0]);
        assert_eq!(step.v_new.center(0), &[0.5, 0.0]);
        assert_eq!(step.u.u, vec![1.0, 0.0]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut s = skmeans_init(&pts(&[&[-1.0, 0.0], &[1.0, 0.0]]), 2).unwrap();
        assert_eq!(s.step(&[0.0, 3.0]).unwrap().winner, 0);
    }

    #[test]
    fn ten_points_match_arithmetic_mean() {
        let mut s = skmeans_init(&pts(&[&[0.0, 0.0], &[100.0, 100.0]]), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut all = vec![vec![0.0, 0.0]];
        for _ in 0..10 {
            let x = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            assert_eq!(s.step(&x).unwrap().winner, 0);
            all.push(x);
        }
        for d in 0..2 {
            let mean = all.iter().map(|x| x[d]).sum::<f64>() / all.len() as f64;
            assert!((s.centers()[0][d] - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut s = skmeans_init(&pts(&[&[0.0]]), 1).unwrap();
        assert!(matches!(s.step(&[f64::NAN]), Err(Error::Numeric(_))));
        assert!(matches!(s.step(&[1.0, 2.0]), Err(Error::Structural(_))));
    }

    #[test]
    fn memberships_are_valid_crisp() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let init: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.random(), rng.random()]).collect();
        let mut s = skmeans_init(&points_from_rows(init).unwrap(), 4).unwrap();
        for _ in 0..10_000 {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let step = s.step(&x).unwrap();
            validate_membership(&step.u).unwrap();
            assert_eq!(step.u.u.iter().filter(|&&v| v != 0.0).count(), 1);
        }
        assert_eq!(s.counts().iter().sum::<u64>(), 4 + 10_000);
    }
}
