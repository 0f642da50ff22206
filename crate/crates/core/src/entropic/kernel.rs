use crate::error::{OtError, Result};
use crate::measure::CostMatrix;

/// Entries below this are treated as underflow in scaling mode.
pub const KERNEL_UNDERFLOW: f64 = 1e-300;

/// `K_ij = exp(−C_ij / η)` with its total `s` and smallest entry `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsKernel {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    eta: f64,
    sum: f64,
    min: f64,
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(OtError::EtaNonPositive(eta))
    }
}

pub fn gibbs_kernel(cost: &CostMatrix, eta: f64) -> Result<GibbsKernel> {
    check_eta(eta)?;
    let entries: Vec<f64> = cost.entries().iter().map(|&c| (-c / eta).exp()).collect();
    let min = entries.iter().copied().fold(f64::INFINITY, f64::min);
    if min < KERNEL_UNDERFLOW {
        return Err(OtError::KernelUnderflow { min });
    }
    let sum = entries.iter().sum();
    Ok(GibbsKernel { rows: cost.rows(), cols: cost.cols(), entries, eta, sum, min })
}

impl GibbsKernel {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `s = Σ K_ij`.
    pub fn sum(&self) -> f64 {
        self.sum
    }

    /// `l = min K_ij`.
    pub fn min(&self) -> f64 {
        self.min
    }

    /// `K v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.entries.chunks(self.cols).map(|row| row.iter().zip(v).map(|(k, x)| k * x).sum()).collect()
    }

    /// `Kᵀ u`.
    pub fn apply_transpose(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &ui) in self.entries.chunks(self.cols).zip(u) {
            out.iter_mut().zip(row).for_each(|(o, k)| *o += ui * k);
        }
        out
    }
}
