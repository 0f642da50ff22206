//! Multimarginal OT over a K-way cost tensor, at toy scale.

use super::lp::solve_lp;
use crate::entropic::{check_eta, logsumexp, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{OtError, Result};
use crate::measure::{check_len, DiscreteMeasure};

/// Largest supported `Π n_k`.
pub const MULTIMARGINAL_CAP: usize = 10_000;

/// Dense tensor over `n₁×…×n_K`, flattened row-major (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor {
    dims: Vec<usize>,
    entries: Vec<f64>,
}

impl CostTensor {
    pub fn new(dims: Vec<usize>, entries: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(OtError::InvalidInput(format!("tensor dims must be nonempty and positive, got {dims:?}")));
        }
        let size = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let size = size.ok_or_else(|| OtError::InvalidInput("tensor size overflows".into()))?;
        check_len("cost tensor", size, entries.len())?;
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
            return Err(if value.is_finite() {
                OtError::NegativeEntry { index, value }
            } else {
                OtError::InvalidInput(format!("cost entry {index} is not finite"))
            });
        }
        Ok(Self { dims, entries })
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let size = dims.iter().product();
        let entries = (0..size).map(|flat| f(&unflatten(&dims, flat))).collect();
        Self::new(dims, entries)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Number of marginals `K`.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.entries[flatten(&self.dims, index)]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Coupling tensor with the same layout as [`CostTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct TensorPlan {
    dims: Vec<usize>,
    entries: Vec<f64>,
}

impl TensorPlan {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.entries[flatten(&self.dims, index)]
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// Sum over every axis except `axis`.
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims[axis]];
        let stride: usize = self.dims[axis + 1..].iter().product();
        for (flat, &p) in self.entries.iter().enumerate() {
            out[(flat / stride) % self.dims[axis]] += p;
        }
        out
    }

    /// `Σ_k ‖P_k − a_k‖₁` over the axis marginals.
    pub fn marginal_violation(&self, marginals: &[DiscreteMeasure]) -> f64 {
        marginals
            .iter()
            .enumerate()
            .map(|(k, a)| self.marginal(k).iter().zip(a.weights()).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .sum()
    }

    pub fn cost(&self, cost: &CostTensor) -> f64 {
        self.entries.iter().zip(&cost.entries).map(|(p, c)| p * c).sum()
    }
}

fn flatten(dims: &[usize], index: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), index.len());
    index.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

fn unflatten(dims: &[usize], mut flat: usize) -> Vec<usize> {
    let mut index = vec![0; dims.len()];
    for (slot, &d) in index.iter_mut().zip(dims).rev() {
        *slot = flat % d;
        flat /= d;
    }
    index
}

fn check_instance(cost: &CostTensor, marginals: &[DiscreteMeasure]) -> Result<()> {
    check_len("marginals", cost.order(), marginals.len())?;
    for (k, (a, &d)) in marginals.iter().zip(&cost.dims).enumerate() {
        if a.len() != d {
            return Err(OtError::ShapeMismatch { expected: format!("marginal {k} of length {d}"), found: a.len().to_string() });
        }
        if (a.total_mass() - 1.0).abs() > 1e-9 {
            return Err(OtError::InvalidInput(format!("marginal {k} is not a probability measure")));
        }
    }
    if cost.len() > MULTIMARGINAL_CAP {
        return Err(OtError::SizeCapExceeded { cells: cost.len(), cap: MULTIMARGINAL_CAP });
    }
    Ok(())
}

/// Solves the flattened LP `min ⟨C, P⟩` over tensors with the given axis
/// marginals. Returns the plan and its cost.
pub fn multimarginal_exact(cost: &CostTensor, marginals: &[DiscreteMeasure]) -> Result<(TensorPlan, f64)> {
    check_instance(cost, marginals)?;
    let size = cost.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (axis, a) in marginals.iter().enumerate() {
        let stride: usize = cost.dims[axis + 1..].iter().product();
        let d = cost.dims[axis];
        for (i, &ai) in a.weights().iter().enumerate() {
            let row = (0..size).map(|flat| if (flat / stride) % d == i { 1.0 } else { 0.0 }).collect();
            rows.push(row);
            rhs.push(ai);
        }
    }
    let lp = solve_lp(&cost.entries, &rows, &rhs)?;
    let plan = TensorPlan { dims: cost.dims.clone(), entries: lp.x };
    Ok((plan, lp.objective))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultimarginalOptions {
    pub eta: f64,
    /// Bound on `Σ_k ‖P_k − a_k‖₁`.
    pub tol: f64,
    pub max_iter: usize,
}

impl MultimarginalOptions {
    pub fn new(eta: f64) -> Self {
        Self { eta, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Cyclic log-domain scaling with one potential per axis:
/// `P = exp(Σ_k f_k(i_k) − C/η)`. A sweep projects onto each axis marginal
/// in order.
pub fn multimarginal_entropic(cost: &CostTensor, marginals: &[DiscreteMeasure], opts: &MultimarginalOptions) -> Result<TensorPlan> {
    check_eta(opts.eta)?;
    check_instance(cost, marginals)?;
    let dims = &cost.dims;
    let log_kernel: Vec<f64> = cost.entries.iter().map(|c| -c / opts.eta).collect();
    let log_a: Vec<Vec<f64>> = marginals.iter().map(|a| a.weights().iter().map(|x| x.ln()).collect()).collect();
    let strides: Vec<usize> = (0..dims.len()).map(|k| dims[k + 1..].iter().product()).collect();
    let mut potentials: Vec<Vec<f64>> = dims.iter().map(|&d| vec![0.0; d]).collect();

    let log_entry = |potentials: &[Vec<f64>], flat: usize| -> f64 {
        potentials.iter().enumerate().map(|(k, f)| f[(flat / strides[k]) % dims[k]]).sum::<f64>() + log_kernel[flat]
    };
    let log_marginal = |potentials: &[Vec<f64>], axis: usize| -> Vec<f64> {
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); dims[axis]];
        for flat in 0..log_kernel.len() {
            buckets[(flat / strides[axis]) % dims[axis]].push(log_entry(potentials, flat));
        }
        buckets.iter().map(|b| logsumexp(b.iter().copied())).collect()
    };

    let mut violation = f64::INFINITY;
    for _ in 0..opts.max_iter {
        for axis in 0..dims.len() {
            let lm = log_marginal(&potentials, axis);
            for (i, f) in potentials[axis].iter_mut().enumerate() {
                *f = if log_a[axis][i] == f64::NEG_INFINITY { f64::NEG_INFINITY } else { *f + log_a[axis][i] - lm[i] };
            }
        }
        let plan = TensorPlan {
            dims: dims.clone(),
            entries: (0..log_kernel.len()).map(|flat| log_entry(&potentials, flat).exp()).collect(),
        };
        violation = plan.marginal_violation(marginals);
        if violation <= opts.tol {
            return Ok(plan);
        }
    }
    Err(OtError::MaxIterExceeded { iterations: opts.max_iter, violation })
}
