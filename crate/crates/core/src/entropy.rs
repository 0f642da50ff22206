use crate::error::{OtError, Result};
use crate::measure::TransportPlan;

/// `H(P) = −Σ P_ij (log P_ij − 1)`, with zero entries contributing 0.
///
/// Returns `-inf` if any entry is negative.
pub fn plan_entropy(plan: &TransportPlan) -> f64 {
    entropy_of(plan.entries())
}

pub(crate) fn entropy_of(values: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in values {
        if p < 0.0 {
            return f64::NEG_INFINITY;
        }
        if p > 0.0 {
            h -= p * (p.ln() - 1.0);
        }
    }
    h
}

/// `KL(P‖K) = Σ P_ij log(P_ij / K_ij) − P_ij + K_ij`, with `0 log 0 = 0`.
pub fn kl_coupling(plan: &TransportPlan, kernel: &[f64]) -> Result<f64> {
    if kernel.len() != plan.entries().len() {
        return Err(OtError::ShapeMismatch {
            expected: format!("{} kernel entries", plan.entries().len()),
            found: format!("{}", kernel.len()),
        });
    }
    let mut kl = 0.0;
    for (index, (&p, &k)) in plan.entries().iter().zip(kernel).enumerate() {
        if !(k > 0.0) {
            return Err(OtError::NonPositiveKernelEntry { index });
        }
        if p > 0.0 {
            kl += p * (p / k).ln();
        }
        kl += k - p;
    }
    Ok(kl)
}
