//! Entropy-regularized OT: `min ⟨C, P⟩ − η H(P)` over `U(a, b)`.

mod accelerated;
mod greenkhorn;
mod kernel;
mod sinkhorn;

pub use accelerated::{accelerated_sinkhorn, accelerated_sinkhorn_warm, reg_dual_value};
pub use greenkhorn::{greenkhorn, rho};
pub use kernel::{gibbs_kernel, GibbsKernel, KERNEL_UNDERFLOW};
pub use sinkhorn::sinkhorn;

pub(crate) use kernel::check_eta;

use crate::error::{OtError, Result};
use crate::exact::check_weights;
use crate::measure::{check_len, require_balanced, CostMatrix, TransportPlan};
use crate::trace::ConvergenceTrace;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Auto mode switches to log-domain below `η = 0.05·‖C‖∞`.
pub const LOG_DOMAIN_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogDomain {
    #[default]
    Auto,
    Always,
    Never,
}

impl LogDomain {
    pub fn resolve(self, eta: f64, cost: &CostMatrix) -> bool {
        match self {
            LogDomain::Always => true,
            LogDomain::Never => false,
            LogDomain::Auto => eta < LOG_DOMAIN_THRESHOLD * cost.max_abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicOptions {
    pub eta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub log_domain: LogDomain,
}

impl EntropicOptions {
    pub fn new(eta: f64) -> Self {
        Self { eta, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, log_domain: LogDomain::Auto }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn log_domain(mut self, mode: LogDomain) -> Self {
        self.log_domain = mode;
        self
    }

    fn validate(&self) -> Result<()> {
        check_eta(self.eta)?;
        if !(self.tol > 0.0) {
            return Err(OtError::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Diagonal scalings `u`, `v`, stored as logarithms so log-domain runs do
/// not overflow. Rows or columns with zero mass carry `log u = −∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingState {
    pub log_u: Vec<f64>,
    pub log_v: Vec<f64>,
    pub iteration: usize,
}

impl ScalingState {
    pub fn u(&self) -> Vec<f64> {
        self.log_u.iter().map(|x| x.exp()).collect()
    }

    pub fn v(&self) -> Vec<f64> {
        self.log_v.iter().map(|x| x.exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropicSolution {
    pub plan: TransportPlan,
    pub scaling: ScalingState,
    pub eta: f64,
    pub trace: ConvergenceTrace,
    /// False when `max_iter` ran out before the tolerance was met; the plan
    /// is then the last iterate.
    pub converged: bool,
}

impl EntropicSolution {
    /// Turns an unconverged run into `MaxIterExceeded`.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            return Ok(self);
        }
        let violation = self.trace.last().map_or(f64::NAN, |r| r.row_violation_l1 + r.col_violation_l1);
        Err(OtError::MaxIterExceeded { iterations: self.scaling.iteration, violation })
    }

    /// Marginal violation `‖P1 − a‖₁ + ‖Pᵀ1 − b‖₁` at the last recorded iterate.
    pub fn final_violation(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.row_violation_l1 + r.col_violation_l1)
    }
}

/// An instance with zero-mass rows and columns removed.
pub(crate) struct Reduced {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub cost: CostMatrix,
    full: (usize, usize),
}

impl Reduced {
    pub fn new(a: &[f64], b: &[f64], cost: &CostMatrix, balanced: bool) -> Result<Self> {
        let (n, m) = cost.shape();
        check_len("a", n, a.len())?;
        check_len("b", m, b.len())?;
        check_weights("a", a)?;
        check_weights("b", b)?;
        if balanced {
            require_balanced(a, b)?;
        }
        let rows: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
        let cols: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
        Ok(Self {
            a: rows.iter().map(|&i| a[i]).collect(),
            b: cols.iter().map(|&j| b[j]).collect(),
            cost: cost.select(&rows, &cols),
            rows,
            cols,
            full: (n, m),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.cols.is_empty()
    }

    pub fn expand_plan(&self, entries: Vec<f64>) -> TransportPlan {
        let sub = TransportPlan::from_entries_unchecked(self.rows.len(), self.cols.len(), entries);
        sub.embed(self.full.0, self.full.1, &self.rows, &self.cols)
    }

    pub fn expand_scaling(&self, log_u: &[f64], log_v: &[f64], iteration: usize) -> ScalingState {
        let mut full_u = vec![f64::NEG_INFINITY; self.full.0];
        let mut full_v = vec![f64::NEG_INFINITY; self.full.1];
        for (k, &i) in self.rows.iter().enumerate() {
            full_u[i] = log_u[k];
        }
        for (k, &j) in self.cols.iter().enumerate() {
            full_v[j] = log_v[k];
        }
        ScalingState { log_u: full_u, log_v: full_v, iteration }
    }

    /// Solution for an instance with no mass at all.
    pub fn empty_solution(&self, eta: f64) -> EntropicSolution {
        let mut trace = ConvergenceTrace::new();
        trace.record(0, 0.0, 0.0, 0.0, 0.0);
        EntropicSolution {
            plan: TransportPlan::zeros(self.full.0, self.full.1),
            scaling: self.expand_scaling(&[], &[], 0),
            eta,
            trace,
            converged: true,
        }
    }
}

/// `log Σ exp(x_k)`, stable for large magnitudes; `−∞` for an empty input.
pub(crate) fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_infinite() {
        return max;
    }
    max + values.map(|x| (x - max).exp()).sum::<f64>().ln()
}
