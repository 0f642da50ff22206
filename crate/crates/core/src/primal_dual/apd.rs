//! Accelerated primal-dual coordinate descent on the entropic dual
//! `φ(α, β) = η Σ exp(−(C_ij − α_i − β_j)/η − 1) − ⟨β, b⟩ − ⟨α, a⟩`.
//!
//! The primal estimate is the average of `x(y_k)` weighted by `1/θ_k`,
//! rounded onto `U(a, b)` at the end.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PrimalDualSolution;
use crate::duality::dot;
use crate::entropic::check_eta;
use crate::error::{OtError, Result};
use crate::exact::{check_weights, round_to_feasible};
use crate::measure::{check_len, require_balanced, CostMatrix, TransportPlan};
use crate::trace::ConvergenceTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApdOptions {
    /// Target accuracy in cost units.
    pub epsilon: f64,
    /// Regularization; `None` uses `ε / (4 log n)`.
    pub eta: Option<f64>,
    pub max_iter: usize,
    pub seed: u64,
}

impl ApdOptions {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, eta: None, max_iter: 1_000_000, seed: 0 }
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Iterates of the accelerated scheme. Dual vectors stack `α` then `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApdState {
    pub lambda: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub theta: f64,
    /// `Σ 1/θ_k`.
    pub c_accum: f64,
    /// `Σ x(y_k)/θ_k`, row-major.
    pub x_avg_accum: Vec<f64>,
}

fn exponent(cost: f64, alpha: f64, beta: f64, eta: f64) -> f64 {
    -(cost - alpha - beta) / eta - 1.0
}

fn check_dual_shapes(alpha: &[f64], beta: &[f64], a: &[f64], b: &[f64], cost: &CostMatrix) -> Result<()> {
    check_len("alpha", cost.rows(), alpha.len())?;
    check_len("beta", cost.cols(), beta.len())?;
    check_len("a", cost.rows(), a.len())?;
    check_len("b", cost.cols(), b.len())
}

/// Dual objective, with the exponential sum taken through log-sum-exp.
pub fn apd_dual_phi(alpha: &[f64], beta: &[f64], a: &[f64], b: &[f64], cost: &CostMatrix, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    check_dual_shapes(alpha, beta, a, b, cost)?;
    let m = cost.cols();
    let lse = crate::entropic::logsumexp(
        cost.entries().iter().enumerate().map(|(k, &c)| exponent(c, alpha[k / m], beta[k % m], eta)),
    );
    Ok(eta * lse.exp() - dot(beta, b) - dot(alpha, a))
}

/// `∇φ = (x1 − a, xᵀ1 − b)` with `x_ij = exp(−(C_ij − α_i − β_j)/η − 1)`.
pub fn apd_dual_gradient(
    alpha: &[f64],
    beta: &[f64],
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eta: f64,
) -> Result<Vec<f64>> {
    check_eta(eta)?;
    check_dual_shapes(alpha, beta, a, b, cost)?;
    let (n, m) = cost.shape();
    let mut grad: Vec<f64> = a.iter().chain(b).map(|x| -x).collect();
    for i in 0..n {
        for j in 0..m {
            let x = exponent(cost.get(i, j), alpha[i], beta[j], eta).exp();
            grad[i] += x;
            grad[n + j] += x;
        }
    }
    Ok(grad)
}

/// Index of the largest `|g_i|`, lowest index on ties.
pub fn greedy_coordinate(grad: &[f64]) -> usize {
    grad.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, g)| if g.abs() > best.1 { (k, g.abs()) } else { best })
        .0
}

/// Randomized variant: the updated coordinate is uniform over all `2n`.
pub fn apdrcd(a: &[f64], b: &[f64], cost: &CostMatrix, opts: &ApdOptions) -> Result<PrimalDualSolution> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    run(a, b, cost, opts, |grad| rng.gen_range(0..grad.len()))
}

/// Greedy variant: the updated coordinate maximizes `|∇φ|`.
pub fn apdgcd(a: &[f64], b: &[f64], cost: &CostMatrix, opts: &ApdOptions) -> Result<PrimalDualSolution> {
    run(a, b, cost, opts, greedy_coordinate)
}

fn run(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    opts: &ApdOptions,
    mut select: impl FnMut(&[f64]) -> usize,
) -> Result<PrimalDualSolution> {
    let (n, m) = cost.shape();
    if n != m {
        return Err(OtError::NonSquare { rows: n, cols: m });
    }
    check_len("a", n, a.len())?;
    check_len("b", n, b.len())?;
    check_weights("a", a)?;
    check_weights("b", b)?;
    require_balanced(a, b)?;
    if !(opts.epsilon > 0.0) {
        return Err(OtError::InvalidInput(format!("epsilon must be positive, got {}", opts.epsilon)));
    }
    let mass: f64 = a.iter().sum();
    if n == 1 || mass == 0.0 {
        // the only feasible plan
        let plan = TransportPlan::outer(a, &b.iter().map(|x| if mass > 0.0 { x / mass } else { 0.0 }).collect::<Vec<_>>());
        let mut trace = ConvergenceTrace::new();
        let primal = crate::measure::transport_cost(cost, &plan)?;
        trace.record(0, primal, primal, 0.0, 0.0);
        return Ok(PrimalDualSolution { raw_plan: plan.clone(), plan, trace, iterations: 0, converged: true });
    }

    let pa: Vec<f64> = a.iter().map(|x| x / mass).collect();
    let pb: Vec<f64> = b.iter().map(|x| x / mass).collect();
    let scale = cost.max_abs();
    let eta = opts.eta.unwrap_or(opts.epsilon / (4.0 * (n as f64).ln()));
    check_eta(eta)?;
    let lipschitz = 4.0 / eta;
    let target = if scale > 0.0 { opts.epsilon / (8.0 * scale) } else { f64::INFINITY };
    let dims = 2 * n;

    let mut state = ApdState {
        lambda: vec![0.0; dims],
        z: vec![0.0; dims],
        y: vec![0.0; dims],
        theta: 1.0 / dims as f64,
        c_accum: 0.0,
        x_avg_accum: vec![0.0; n * n],
    };
    let mut acc_rows = vec![0.0; n];
    let mut acc_cols = vec![0.0; n];
    let mut acc_cost = 0.0;
    let mut grad = vec![0.0; dims];
    let mut trace = ConvergenceTrace::new();
    let mut converged = false;
    let mut iter = 0;
    loop {
        let theta = state.theta;
        for k in 0..dims {
            state.y[k] = (1.0 - theta) * state.lambda[k] + theta * state.z[k];
        }
        // x(y), its marginals, and the weighted primal average
        grad[..n].copy_from_slice(&pa);
        grad[n..].copy_from_slice(&pb);
        grad.iter_mut().for_each(|g| *g = -*g);
        let weight = 1.0 / theta;
        for i in 0..n {
            for j in 0..n {
                let c = cost.get(i, j);
                let x = exponent(c, state.y[i], state.y[n + j], eta).exp();
                grad[i] += x;
                grad[n + j] += x;
                state.x_avg_accum[i * n + j] += weight * x;
                acc_rows[i] += weight * x;
                acc_cols[j] += weight * x;
                acc_cost += weight * x * c;
            }
        }
        state.c_accum += weight;

        let rv: f64 = acc_rows.iter().zip(&pa).map(|(r, t)| (r / state.c_accum - t).abs()).sum();
        let cv: f64 = acc_cols.iter().zip(&pb).map(|(r, t)| (r / state.c_accum - t).abs()).sum();
        let dual = -phi_at(&state.lambda, &pa, &pb, cost, eta);
        trace.record(iter, mass * acc_cost / state.c_accum, mass * dual, mass * rv, mass * cv);
        if rv + cv <= target {
            converged = true;
            break;
        }
        if iter >= opts.max_iter {
            break;
        }

        let k = select(&grad);
        state.lambda.copy_from_slice(&state.y);
        state.lambda[k] = state.y[k] - grad[k] / lipschitz;
        state.z[k] -= grad[k] / (dims as f64 * lipschitz * theta);
        state.theta = theta * ((theta * theta + 4.0).sqrt() - theta) / 2.0;
        iter += 1;
    }

    let raw: Vec<f64> = state.x_avg_accum.iter().map(|x| mass * x / state.c_accum).collect();
    let raw_plan = TransportPlan::new(n, n, raw)?;
    let plan = round_to_feasible(&raw_plan, a, b)?;
    Ok(PrimalDualSolution { plan, raw_plan, trace, iterations: iter, converged })
}

fn phi_at(lambda: &[f64], a: &[f64], b: &[f64], cost: &CostMatrix, eta: f64) -> f64 {
    let n = a.len();
    apd_dual_phi(&lambda[..n], &lambda[n..], a, b, cost, eta).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::solve_exact;

    fn c3() -> CostMatrix {
        CostMatrix::from_rows(&[vec![0.2, 0.9, 0.4], vec![0.7, 0.1, 0.6], vec![0.3, 0.8, 1.0]]).unwrap()
    }

    #[test]
    fn phi_single_term() {
        let c = CostMatrix::new(1, 1, vec![0.3]).unwrap();
        let v = apd_dual_phi(&[0.0], &[0.0], &[1.0], &[1.0], &c, 0.3).unwrap();
        assert!((v - 0.3 * (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = c3();
        let (a, b) = ([0.2, 0.3, 0.5], [0.4, 0.4, 0.2]);
        let (alpha, beta) = ([0.1, -0.2, 0.05], [-0.1, 0.0, 0.15]);
        let eta = 0.5;
        let g = apd_dual_gradient(&alpha, &beta, &a, &b, &c, eta).unwrap();
        let h = 1e-6;
        for k in 0..6 {
            let (mut ap, mut bp, mut am, mut bm) = (alpha, beta, alpha, beta);
            if k < 3 {
                ap[k] += h;
                am[k] -= h;
            } else {
                bp[k - 3] += h;
                bm[k - 3] -= h;
            }
            let fd = (apd_dual_phi(&ap, &bp, &a, &b, &c, eta).unwrap()
                - apd_dual_phi(&am, &bm, &a, &b, &c, eta).unwrap())
                / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-3), "coordinate {k}");
        }
    }

    #[test]
    fn greedy_picks_largest_magnitude() {
        assert_eq!(greedy_coordinate(&[0.1, -0.5, 0.2, -0.2]), 1);
        assert_eq!(greedy_coordinate(&[0.3, -0.3]), 0);
    }

    #[test]
    fn forced_single_cell() {
        let c = CostMatrix::new(1, 1, vec![2.0]).unwrap();
        for seed in [0, 9] {
            let s = apdrcd(&[1.0], &[1.0], &c, &ApdOptions::new(0.1).seed(seed)).unwrap();
            assert_eq!(s.plan.entries(), &[1.0]);
        }
    }

    #[test]
    fn satisfied_marginals_stop_at_once() {
        // x(0) = 1/4 everywhere, which already has the target marginals
        let eta = 0.1;
        let c = CostMatrix::from_fn(2, 2, |_, _| -eta * (1.0 + 0.25f64.ln())).unwrap();
        let s = apdgcd(&[0.5, 0.5], &[0.5, 0.5], &c, &ApdOptions::new(0.01).eta(eta)).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(s.converged);
    }

    #[test]
    fn both_variants_reach_accuracy() {
        let c = c3();
        let (a, b) = ([0.2, 0.3, 0.5], [0.4, 0.4, 0.2]);
        let opt = solve_exact(&a, &b, &c).unwrap().cost;
        let eps = 0.05 * c.max_abs();
        let opts = ApdOptions::new(eps).seed(42);
        for s in [apdrcd(&a, &b, &c, &opts).unwrap(), apdgcd(&a, &b, &c, &opts).unwrap()] {
            assert!(s.converged);
            assert!(s.plan.is_feasible(&a, &b, 1e-12));
            let cost = crate::measure::transport_cost(&c, &s.plan).unwrap();
            assert!(cost - opt <= eps, "{cost} vs {opt}");
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let c = c3();
        let (a, b) = ([0.2, 0.3, 0.5], [0.4, 0.4, 0.2]);
        let opts = ApdOptions::new(0.05).seed(7);
        let s1 = apdrcd(&a, &b, &c, &opts).unwrap();
        let s2 = apdrcd(&a, &b, &c, &opts).unwrap();
        assert_eq!(s1.trace.without_timing(), s2.trace.without_timing());
        assert_eq!(s1.plan, s2.plan);
    }

    #[test]
    fn rejects_rectangular() {
        let c = CostMatrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            apdrcd(&[1.0], &[0.5, 0.5], &c, &ApdOptions::new(0.1)),
            Err(OtError::NonSquare { .. })
        ));
    }
}
