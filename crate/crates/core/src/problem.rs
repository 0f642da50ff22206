//! Problem instances and seeded instance generation.
//!
//! Generation uses ChaCha8 seeded from the 64-bit seed. Each component draws
//! from its own stream: stream 0 for `a`, 1 for `b`, 2 for the cost matrix.
//! The streams are platform independent, so a seed reproduces the same bytes
//! everywhere.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{OtError, Result};
use crate::measure::{CostMatrix, DiscreteMeasure};

/// A balanced OT instance `(a, b, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub a: DiscreteMeasure,
    pub b: DiscreteMeasure,
    pub cost: CostMatrix,
}

impl Problem {
    pub fn new(a: DiscreteMeasure, b: DiscreteMeasure, cost: CostMatrix) -> Result<Self> {
        if cost.shape() != (a.len(), b.len()) {
            return Err(OtError::ShapeMismatch {
                expected: format!("{}x{}", a.len(), b.len()),
                found: format!("{}x{}", cost.rows(), cost.cols()),
            });
        }
        Ok(Self { a, b, cost })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Uniform random weights and `C_ij ~ U[0, 1)`.
    UniformRandom,
    /// Support on `0..n` and `0..m`, cost `|i − j|`.
    Grid1dL1,
    /// Support on a square-ish 2D integer grid, squared Euclidean cost.
    Grid2dL2Sq,
    /// Two discretized Gaussians on `[0, 1]` with squared distance cost.
    TwoGaussians,
}

impl Family {
    pub const ALL: [Family; 4] =
        [Family::UniformRandom, Family::Grid1dL1, Family::Grid2dL2Sq, Family::TwoGaussians];

    pub fn name(self) -> &'static str {
        match self {
            Family::UniformRandom => "uniform-random",
            Family::Grid1dL1 => "grid-1d-l1",
            Family::Grid2dL2Sq => "grid-2d-l2sq",
            Family::TwoGaussians => "two-gaussians-discretized",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = OtError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| OtError::InvalidInput(format!("unknown problem family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemSpec {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub family: Family,
}

/// A generator for one numbered stream of a seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_probability(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    // shifted away from zero so every index carries mass
    let raw: Vec<f64> = (0..len).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn grid_2d_point(index: usize, count: usize) -> (f64, f64) {
    let width = (count as f64).sqrt().ceil().max(1.0) as usize;
    ((index % width) as f64, (index / width) as f64)
}

fn gaussian_weights(len: usize, mean: f64, sd: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..len)
        .map(|i| {
            let x = grid_position(i, len);
            (-0.5 * ((x - mean) / sd).powi(2)).exp() + 1e-6
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn grid_position(i: usize, len: usize) -> f64 {
    if len == 1 {
        0.5
    } else {
        i as f64 / (len - 1) as f64
    }
}

/// Builds a deterministic instance from `spec`.
pub fn generate(spec: &ProblemSpec) -> Result<Problem> {
    let ProblemSpec { seed, n, m, family } = *spec;
    if n == 0 || m == 0 {
        return Err(OtError::InvalidInput("n and m must be at least 1".into()));
    }
    let (a, b) = match family {
        Family::TwoGaussians => (gaussian_weights(n, 0.3, 0.1), gaussian_weights(m, 0.7, 0.15)),
        _ => (
            random_probability(&mut stream_rng(seed, 0), n),
            random_probability(&mut stream_rng(seed, 1), m),
        ),
    };
    let cost = match family {
        Family::UniformRandom => {
            let mut rng = stream_rng(seed, 2);
            CostMatrix::from_fn(n, m, |_, _| rng.gen::<f64>())?
        }
        Family::Grid1dL1 => CostMatrix::from_fn(n, m, |i, j| (i as f64 - j as f64).abs())?,
        Family::Grid2dL2Sq => CostMatrix::from_fn(n, m, |i, j| {
            let (x0, y0) = grid_2d_point(i, n);
            let (x1, y1) = grid_2d_point(j, m);
            (x0 - x1).powi(2) + (y0 - y1).powi(2)
        })?,
        Family::TwoGaussians => CostMatrix::from_fn(n, m, |i, j| {
            (grid_position(i, n) - grid_position(j, m)).powi(2)
        })?,
    };
    Problem::new(DiscreteMeasure::new(a)?, DiscreteMeasure::new(b)?, cost)
}
