use crate::error::Result;
use crate::measure::check_len;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    /// `φ(x) = x log x − x + 1`.
    Kl,
    /// `φ(x) = |x − 1|`.
    TotalVariation,
    /// `φ(x) = (x − 1)²`.
    ChiSquared,
}

/// An entropy function `φ` (convex, `φ(1) = 0`) and its recession slope
/// `φ'∞ = lim φ(x)/x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiDivergenceSpec {
    pub kind: PhiKind,
    pub phi_prime_inf: f64,
}

impl PhiDivergenceSpec {
    pub fn new(kind: PhiKind) -> Self {
        let phi_prime_inf = match kind {
            PhiKind::Kl | PhiKind::ChiSquared => f64::INFINITY,
            PhiKind::TotalVariation => 1.0,
        };
        Self { kind, phi_prime_inf }
    }

    pub fn kl() -> Self {
        Self::new(PhiKind::Kl)
    }

    pub fn phi(&self, x: f64) -> f64 {
        match self.kind {
            PhiKind::Kl if x == 0.0 => 1.0,
            PhiKind::Kl => x * x.ln() - x + 1.0,
            PhiKind::TotalVariation => (x - 1.0).abs(),
            PhiKind::ChiSquared => (x - 1.0) * (x - 1.0),
        }
    }
}

/// `D_φ(a‖b) = Σ_{b_i > 0} φ(a_i/b_i) b_i + φ'∞ Σ_{b_i = 0} a_i`.
///
/// Returns `+∞` when `φ'∞` is infinite and `a` puts mass outside the support of `b`.
pub fn phi_divergence(spec: &PhiDivergenceSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("b", a.len(), b.len())?;
    let mut inside = 0.0;
    let mut outside = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        if y > 0.0 {
            inside += spec.phi(x / y) * y;
        } else {
            outside += x;
        }
    }
    if outside == 0.0 {
        return Ok(inside);
    }
    Ok(inside + spec.phi_prime_inf * outside)
}
