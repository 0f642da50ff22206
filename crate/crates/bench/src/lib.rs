//! Benchmark helpers: seeded workloads, point-cloud costs and a naive
//! dynamic time warping baseline for comparison with OT warping.

use otkit_core::otw::TimeSeries;
use otkit_core::problem::stream_rng;
use otkit_core::{generate, CostMatrix, Family, OtError, Problem, ProblemSpec, Result};
use rand::Rng;

/// Seeded `n × n` uniform-random instance.
pub fn uniform_instance(seed: u64, n: usize) -> Problem {
    generate(&ProblemSpec { seed, n, m: n, family: Family::UniformRandom }).expect("n is positive")
}

/// Seeded Gaussian random walk of `len` steps.
pub fn random_walk(seed: u64, len: usize) -> TimeSeries {
    let mut rng = stream_rng(seed, 0);
    let mut level = 0.0;
    let values = (0..len)
        .map(|_| {
            // Irwin-Hall approximation of a standard normal step
            level += (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
            level
        })
        .collect();
    TimeSeries::new(format!("walk-{seed}"), values).expect("len is positive")
}

/// `C_ij = ‖x_i − y_j‖₂^p` between two point clouds of equal dimension.
pub fn point_cloud_cost(xs: &[Vec<f64>], ys: &[Vec<f64>], power: i32) -> Result<CostMatrix> {
    let dim = xs.first().or(ys.first()).map_or(0, Vec::len);
    if let Some(bad) = xs.iter().chain(ys).find(|p| p.len() != dim) {
        return Err(OtError::ShapeMismatch { expected: format!("dimension {dim}"), found: format!("dimension {}", bad.len()) });
    }
    CostMatrix::from_fn(xs.len(), ys.len(), |i, j| {
        let sq: f64 = xs[i].iter().zip(&ys[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        if power == 2 {
            sq
        } else {
            sq.sqrt().powi(power)
        }
    })
}

/// Naive `O(T_x T_y)` dynamic time warping with local cost `|x_i − y_j|^p`.
pub fn dtw_distance(x: &[f64], y: &[f64], power: i32) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(OtError::InvalidInput("series must be nonempty".into()));
    }
    let cols = y.len();
    let mut prev = vec![f64::INFINITY; cols + 1];
    let mut row = vec![f64::INFINITY; cols + 1];
    prev[0] = 0.0;
    for &xi in x {
        row[0] = f64::INFINITY;
        for (j, &yj) in y.iter().enumerate() {
            let local = (xi - yj).abs().powi(power);
            row[j + 1] = local + prev[j].min(prev[j + 1]).min(row[j]);
        }
        std::mem::swap(&mut prev, &mut row);
    }
    Ok(prev[cols])
}
