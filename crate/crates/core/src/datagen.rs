//! Seeded synthetic streams with ground truth.
//!
//! * S1: two switching autoregressive processes driven by Gaussian input.
//! * S2: a Gaussian that drifts from one mode to another in ten jumps, with
//!   1% of the samples perturbed by uniform noise.
//! * S3: a Gaussian rotating around a circle, leaking samples into a central
//!   noise cluster.
//!
//! Change events are the 1-based stream index of the first sample drawn from
//! a new mode.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{points_from_rows, StreamPoint};

/// Identifier of the random generator behind every stream.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64)";

/// Default S1 seed: the first seed whose segment lengths give 1955 samples.
pub const S1_DEFAULT_SEED: u64 = 963;

pub const S1_TABLE_LENGTH: usize = 1955;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub points: Vec<StreamPoint>,
    pub labels: Vec<u32>,
    pub change_events: Vec<u64>,
}

impl LabeledStream {
    fn from_parts(rows: Vec<Vec<f64>>, labels: Vec<u32>, change_events: Vec<u64>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Structural(format!(
                "{} points but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if change_events.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Structural("change events not strictly increasing".into()));
        }
        Ok(Self {
            points: points_from_rows(rows)?,
            labels,
            change_events,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    S1,
    S2,
    S3,
}

impl Dataset {
    pub fn default_seed(self) -> u64 {
        match self {
            Dataset::S1 => S1_DEFAULT_SEED,
            Dataset::S2 | Dataset::S3 => 0,
        }
    }

    pub fn generate(self, seed: u64) -> LabeledStream {
        match self {
            Dataset::S1 => gen_s1(seed),
            Dataset::S2 => gen_s2(seed),
            Dataset::S3 => gen_s3(seed),
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dataset::S1 => "s1",
            Dataset::S2 => "s2",
            Dataset::S3 => "s3",
        })
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Dataset::S1),
            "s2" => Ok(Dataset::S2),
            "s3" => Ok(Dataset::S3),
            other => Err(Error::Config(format!("unknown dataset {other:?} (expected s1, s2 or s3)"))),
        }
    }
}

// ---------------------------------------------------------------- S1

/// `y_n = a1·x_{n−1} + a2·x_{n−2} + c1·y_{n−1} + c2·y_{n−2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArMode {
    pub a1: f64,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
}

pub const S1_M1: ArMode = ArMode {
    a1: 1.018,
    a2: 0.0,
    c1: 1.801,
    c2: -0.8187,
};

pub const S1_M2: ArMode = ArMode {
    a1: 1.0,
    a2: 0.5,
    c1: 1.5,
    c2: -0.7,
};

impl ArMode {
    pub fn lerp(self, to: ArMode, t: f64) -> ArMode {
        let l = |a: f64, b: f64| a + t * (b - a);
        ArMode {
            a1: l(self.a1, to.a1),
            a2: l(self.a2, to.a2),
            c1: l(self.c1, to.c1),
            c2: l(self.c2, to.c2),
        }
    }

    /// Next output from `[x_{n−1}, x_{n−2}]` and `[y_{n−1}, y_{n−2}]`.
    pub fn next(self, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.a1 * x[0] + self.a2 * x[1] + self.c1 * y[0] + self.c2 * y[1]
    }
}

const S1_SWITCHES: usize = 4;
const S1_TRANSITION_STEPS: usize = 5;
const S1_SAMPLES_PER_STEP: usize = 10;

/// Lengths of the four stable segments; these are the first draws of the stream's RNG.
pub fn s1_segment_lengths(seed: u64) -> [usize; S1_SWITCHES] {
    let mut r = rng(seed);
    std::array::from_fn(|_| r.random_range(200..=500))
}

pub fn gen_s1(seed: u64) -> LabeledStream {
    let mut r = rng(seed);
    let segments: [usize; S1_SWITCHES] = std::array::from_fn(|_| r.random_range(200..=500));

    // Each stable segment is followed by a gradual switch to the other mode.
    let mut schedule: Vec<(ArMode, u32)> = Vec::new();
    let mut change_events = Vec::new();
    let (mut from, mut from_label) = (S1_M1, 0u32);
    for len in segments {
        schedule.extend(std::iter::repeat_n((from, from_label), len));
        let (to, to_label) = if from_label == 0 { (S1_M2, 1) } else { (S1_M1, 0) };
        change_events.push(schedule.len() as u64 + 1);
        for step in 1..=S1_TRANSITION_STEPS {
            let t = step as f64 / S1_TRANSITION_STEPS as f64;
            schedule.extend(std::iter::repeat_n((from.lerp(to, t), to_label), S1_SAMPLES_PER_STEP));
        }
        (from, from_label) = (to, to_label);
    }

    let mut rows = Vec::with_capacity(schedule.len());
    let mut labels = Vec::with_capacity(schedule.len());
    let (mut xs, mut ys) = ([0.0f64; 2], [0.0f64; 2]);
    for (n, (mode, label)) in schedule.into_iter().enumerate() {
        let z: f64 = StandardNormal.sample(&mut r);
        let x = 1.0 + z;
        // y_1 = y_2 = 0; the recursion starts at the third sample.
        let y = if n < 2 { 0.0 } else { mode.next(xs, ys) };
        xs = [x, xs[0]];
        ys = [y, ys[0]];
        rows.push(vec![x, y]);
        labels.push(label);
    }
    LabeledStream::from_parts(rows, labels, change_events).expect("generator invariants")
}

// ---------------------------------------------------------------- S2

pub const S2_MU1: [f64; 2] = [95.0, 75.0];
pub const S2_MU2: [f64; 2] = [5.0, 5.0];
pub const S2_SIGMA1: [[f64; 2]; 2] = [[3.8418, -2.6474], [-2.6474, 4.8478]];
pub const S2_SIGMA2: [[f64; 2]; 2] = [[1.5239, -0.5390], [-0.5390, 1.6467]];
const S2_FIRST: usize = 500;
const S2_STEPS: usize = 10;
const S2_PER_STEP: usize = 200;
const S2_NOISE_FRACTION: f64 = 0.01;
const S2_NOISE_AMPLITUDE: f64 = 10.0;

/// Mean and covariance at step `s` of `0..=10`, interpolated elementwise.
pub fn s2_mode(step: usize) -> (Vector2<f64>, Matrix2<f64>) {
    let t = step as f64 / S2_STEPS as f64;
    let mu1 = Vector2::from(S2_MU1);
    let mu2 = Vector2::from(S2_MU2);
    let s1 = Matrix2::from_fn(|i, j| S2_SIGMA1[i][j]);
    let s2 = Matrix2::from_fn(|i, j| S2_SIGMA2[i][j]);
    (mu1 + (mu2 - mu1) * t, s1 + (s2 - s1) * t)
}

fn gaussian2(r: &mut ChaCha8Rng, mu: &Vector2<f64>, chol: &Matrix2<f64>) -> Vec<f64> {
    let z = Vector2::new(StandardNormal.sample(r), StandardNormal.sample(r));
    let x = mu + chol * z;
    vec![x[0], x[1]]
}

fn cholesky(cov: Matrix2<f64>) -> Matrix2<f64> {
    cov.cholesky().expect("generator covariance is positive definite").l()
}

pub fn gen_s2(seed: u64) -> LabeledStream {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut change_events = Vec::new();
    for step in 0..=S2_STEPS {
        let count = if step == 0 { S2_FIRST } else { S2_PER_STEP };
        if step > 0 {
            change_events.push(rows.len() as u64 + 1);
        }
        let (mu, cov) = s2_mode(step);
        let l = cholesky(cov);
        let mut block: Vec<Vec<f64>> = (0..count).map(|_| gaussian2(&mut r, &mu, &l)).collect();
        let noisy = (count as f64 * S2_NOISE_FRACTION).round() as usize;
        for i in sample(&mut r, count, noisy) {
            for v in block[i].iter_mut() {
                *v += r.random_range(-S2_NOISE_AMPLITUDE..=S2_NOISE_AMPLITUDE);
            }
        }
        rows.extend(block);
        labels.extend(std::iter::repeat_n(step as u32, count));
    }
    LabeledStream::from_parts(rows, labels, change_events).expect("generator invariants")
}

// ---------------------------------------------------------------- S3

/// Geometry of S3. The defaults are a choice; any positive values work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct S3Config {
    pub radius: f64,
    /// Per-coordinate variance of the rotating component.
    pub component_var: f64,
    /// Per-coordinate variance of the central noise.
    pub noise_var: f64,
}

impl Default for S3Config {
    fn default() -> Self {
        Self {
            radius: 50.0,
            component_var: 4.0,
            noise_var: 9.0,
        }
    }
}

const S3_POSITIONS: usize = 10;
const S3_PER_POSITION: usize = 200;

/// Center of the rotating component at position `s`.
pub fn s3_center(cfg: &S3Config, s: usize) -> [f64; 2] {
    let angle = std::f64::consts::TAU * s as f64 / S3_POSITIONS as f64;
    [cfg.radius * angle.cos(), cfg.radius * angle.sin()]
}

pub fn gen_s3(seed: u64) -> LabeledStream {
    gen_s3_with(seed, &S3Config::default())
}

pub fn gen_s3_with(seed: u64, cfg: &S3Config) -> LabeledStream {
    let mut r = rng(seed);
    let comp_l = Matrix2::identity() * cfg.component_var.sqrt();
    let noise_l = Matrix2::identity() * cfg.noise_var.sqrt();
    let origin = Vector2::zeros();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut change_events = Vec::new();
    for s in 0..S3_POSITIONS {
        if s > 0 {
            change_events.push(rows.len() as u64 + 1);
        }
        let moved = r.random_range(1..=20usize);
        let mut to_noise = vec![false; S3_PER_POSITION];
        for i in sample(&mut r, S3_PER_POSITION, moved) {
            to_noise[i] = true;
        }
        let mu = Vector2::from(s3_center(cfg, s));
        for noise in to_noise {
            rows.push(if noise {
                gaussian2(&mut r, &origin, &noise_l)
            } else {
                gaussian2(&mut r, &mu, &comp_l)
            });
            labels.push(s as u32);
        }
    }
    LabeledStream::from_parts(rows, labels, change_events).expect("generator invariants")
}

/// Number of central-noise samples in each block of S3 (replays the draws).
pub fn s3_noise_counts(seed: u64, cfg: &S3Config) -> Vec<usize> {
    let mut r = rng(seed);
    let comp_l = Matrix2::identity() * cfg.component_var.sqrt();
    let mut counts = Vec::new();
    for _ in 0..S3_POSITIONS {
        let moved = r.random_range(1..=20usize);
        counts.push(moved);
        let _ = sample(&mut r, S3_PER_POSITION, moved);
        for _ in 0..S3_PER_POSITION {
            let _ = gaussian2(&mut r, &Vector2::zeros(), &comp_l);
        }
    }
    counts
}
