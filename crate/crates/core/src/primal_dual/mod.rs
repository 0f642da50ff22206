//! Accelerated first-order primal-dual methods that return a rounded,
//! exactly feasible plan.

mod apd;
mod extragradient;

pub use apd::{apd_dual_gradient, apd_dual_phi, apdgcd, apdrcd, greedy_coordinate, ApdOptions, ApdState};
pub use extragradient::{
    adjust_mu, extragradient_ot, mirror_step, ExtragradOptions, ExtragradState, DEFAULT_STEP,
};

use crate::measure::TransportPlan;
use crate::trace::ConvergenceTrace;

/// Output of the primal-dual solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualSolution {
    /// Rounded plan, feasible for `(a, b)`.
    pub plan: TransportPlan,
    /// Iterate before rounding.
    pub raw_plan: TransportPlan,
    pub trace: ConvergenceTrace,
    pub iterations: usize,
    /// False when the iteration limit was reached first.
    pub converged: bool,
}

impl PrimalDualSolution {
    pub fn require_converged(self) -> crate::error::Result<Self> {
        if self.converged {
            return Ok(self);
        }
        let violation = self.trace.last().map_or(f64::NAN, |r| r.row_violation_l1 + r.col_violation_l1);
        Err(crate::error::OtError::MaxIterExceeded { iterations: self.iterations, violation })
    }
}
