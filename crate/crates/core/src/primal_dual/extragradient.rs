//! Entropy-regularized extragradient on the bilinear saddle form of OT.
//!
//! The plan is written as `P_ij = a_i p_ij` with every row `p_i` on the
//! simplex. Column constraints are priced by `μ_j = (μ_j+, μ_j−) ∈ Δ₂` through
//!
//! ```text
//! f(p, μ) = ½ Σ_i a_i ⟨c_i, p_i⟩ + Σ_j (μ_j+ − μ_j−)(Σ_i a_i p_ij − b_j)
//! F(p, μ) = f + τ_μ Σ_j H(μ_j) − τ_p Σ_i H(p_i)
//! ```
//!
//! `F` is strongly convex in `p` and strongly concave in `μ`. Costs are
//! scaled to `‖C‖∞ = 1` and marginals to probability internally.

use super::PrimalDualSolution;
use crate::error::{OtError, Result};
use crate::exact::{check_weights, round_to_feasible};
use crate::measure::{check_len, require_balanced, CostMatrix, TransportPlan};
use crate::trace::ConvergenceTrace;

/// Base learning rate, divided by the marginal mass of each block.
pub const DEFAULT_STEP: f64 = 0.5;
const STEP_MIN: f64 = 1e-3;
const STEP_MAX: f64 = 1e3;
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtragradOptions {
    /// Target accuracy in cost units.
    pub epsilon: f64,
    /// Adjustment parameter `B`; `None` uses `10 log(n/ε)` with `ε` normalized.
    pub b_param: Option<f64>,
    pub max_iter: usize,
    pub step: f64,
}

impl ExtragradOptions {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, b_param: None, max_iter: 1_000_000, step: DEFAULT_STEP }
    }

    pub fn b_param(mut self, b: f64) -> Self {
        self.b_param = Some(b);
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Main, midpoint, and adjusted sequences of the method.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtragradState {
    /// Rows `p_i`, row-major `n × m`.
    pub p_rows: Vec<f64>,
    pub p_rows_mid: Vec<f64>,
    pub mu: Vec<[f64; 2]>,
    pub mu_mid: Vec<[f64; 2]>,
    pub mu_adjusted: Vec<[f64; 2]>,
    pub b_param: f64,
    pub step_p: Vec<f64>,
    pub step_mu: Vec<f64>,
}

/// One KL mirror step on the simplex: `next ∝ current · exp(±step · grad)`,
/// `+` for ascent. A zero gradient returns `current` unchanged.
pub fn mirror_step(current: &[f64], grad: &[f64], step: f64, ascent: bool) -> Vec<f64> {
    if grad.iter().all(|&g| g == 0.0) {
        return current.to_vec();
    }
    let sign = if ascent { step } else { -step };
    let logits: Vec<f64> = current.iter().zip(grad).map(|(x, g)| x.max(LOG_FLOOR).ln() + sign * g).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// `μ_s ∝ max(μ_s, e^{−B} max(μ+, μ−))`.
pub fn adjust_mu(mu: [f64; 2], b_param: f64) -> [f64; 2] {
    let floor = (-b_param).exp() * mu[0].max(mu[1]);
    let raised = [mu[0].max(floor), mu[1].max(floor)];
    let total = raised[0] + raised[1];
    [raised[0] / total, raised[1] / total]
}

struct Problem<'a> {
    n: usize,
    m: usize,
    a: &'a [f64],
    b: &'a [f64],
    c: Vec<f64>,
    tau: f64,
}

impl Problem<'_> {
    /// `Σ_i a_i p_ij − b_j`.
    fn column_gap(&self, p: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.b.iter().map(|x| -x).collect();
        for i in 0..self.n {
            for j in 0..self.m {
                g[j] += self.a[i] * p[i * self.m + j];
            }
        }
        g
    }

    fn grad_mu(&self, p: &[f64], mu: &[[f64; 2]]) -> Vec<[f64; 2]> {
        self.column_gap(p)
            .into_iter()
            .zip(mu)
            .map(|(g, u)| [g - self.tau * u[0].max(LOG_FLOOR).ln(), -g - self.tau * u[1].max(LOG_FLOOR).ln()])
            .collect()
    }

    fn grad_p_row(&self, i: usize, p: &[f64], mu: &[[f64; 2]]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|j| {
                let delta = mu[j][0] - mu[j][1];
                self.a[i] * (0.5 * self.c[i * m + j] + delta) + self.tau * p[i * m + j].max(LOG_FLOOR).ln()
            })
            .collect()
    }

    fn step_mu(&self, center: &[[f64; 2]], grad: &[[f64; 2]], steps: &[f64]) -> Vec<[f64; 2]> {
        center
            .iter()
            .zip(grad)
            .zip(steps)
            .map(|((c, g), &s)| {
                let next = mirror_step(c, g, s, true);
                [next[0], next[1]]
            })
            .collect()
    }

    fn step_p(&self, center: &[f64], grad_at: &[f64], mu: &[[f64; 2]], steps: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = Vec::with_capacity(center.len());
        for i in 0..self.n {
            let grad = self.grad_p_row(i, grad_at, mu);
            out.extend(mirror_step(&center[i * m..(i + 1) * m], &grad, steps[i], false));
        }
        out
    }

    /// `½ Σ a_i ⟨c_i, p_i⟩` and the column violation `‖Σ a_i p_i − b‖₁`.
    fn primal_parts(&self, p: &[f64]) -> (f64, f64) {
        let half_cost: f64 =
            (0..self.n * self.m).map(|k| 0.5 * self.a[k / self.m] * self.c[k] * p[k]).sum();
        let viol = self.column_gap(p).iter().map(|g| g.abs()).sum();
        (half_cost, viol)
    }

    /// `min_p f(p, μ)`, a lower bound on half the optimal cost.
    fn dual_bound(&self, mu: &[[f64; 2]]) -> f64 {
        let delta: Vec<f64> = mu.iter().map(|u| u[0] - u[1]).collect();
        let mut value: f64 = -self.b.iter().zip(&delta).map(|(b, d)| b * d).sum::<f64>();
        for i in 0..self.n {
            let best = (0..self.m).map(|j| 0.5 * self.c[i * self.m + j] + delta[j]).fold(f64::INFINITY, f64::min);
            value += self.a[i] * best;
        }
        value
    }
}

/// Runs the five-step extragradient iteration until the primal-dual gap of
/// the ℓ₁-penalized problem is at most `ε/2` (normalized units), which
/// bounds the suboptimality of the rounded plan by `ε`.
pub fn extragradient_ot(a: &[f64], b: &[f64], cost: &CostMatrix, opts: &ExtragradOptions) -> Result<PrimalDualSolution> {
    let (n, m) = cost.shape();
    check_len("a", n, a.len())?;
    check_len("b", m, b.len())?;
    check_weights("a", a)?;
    check_weights("b", b)?;
    require_balanced(a, b)?;
    if !(opts.epsilon > 0.0) {
        return Err(OtError::InvalidInput(format!("epsilon must be positive, got {}", opts.epsilon)));
    }
    let mass: f64 = a.iter().sum();
    if mass == 0.0 {
        let plan = TransportPlan::zeros(n, m);
        let mut trace = ConvergenceTrace::new();
        trace.record(0, 0.0, 0.0, 0.0, 0.0);
        return Ok(PrimalDualSolution { raw_plan: plan.clone(), plan, trace, iterations: 0, converged: true });
    }
    let scale = if cost.max_abs() > 0.0 { cost.max_abs() } else { 1.0 };
    let pa: Vec<f64> = a.iter().map(|x| x / mass).collect();
    let pb: Vec<f64> = b.iter().map(|x| x / mass).collect();
    let eps = opts.epsilon / scale;
    let size = n.max(m).max(2) as f64;
    let prob = Problem {
        n,
        m,
        a: &pa,
        b: &pb,
        c: cost.entries().iter().map(|x| x / scale).collect(),
        tau: eps / (8.0 * size.ln()),
    };
    let b_param = opts.b_param.unwrap_or(10.0 * (size / eps).ln().max(1.0));
    let clip = |s: f64| s.clamp(STEP_MIN, STEP_MAX);
    let mut st = ExtragradState {
        p_rows: vec![1.0 / m as f64; n * m],
        p_rows_mid: vec![1.0 / m as f64; n * m],
        mu: vec![[0.5, 0.5]; m],
        mu_mid: vec![[0.5, 0.5]; m],
        mu_adjusted: vec![[0.5, 0.5]; m],
        b_param,
        step_p: pa.iter().map(|x| clip(opts.step / x)).collect(),
        step_mu: pb.iter().map(|x| clip(opts.step / x)).collect(),
    };

    let mut trace = ConvergenceTrace::new();
    let mut best_bound = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iter = 0;
    loop {
        let (half_cost, viol) = prob.primal_parts(&st.p_rows);
        best_bound = best_bound.max(prob.dual_bound(&st.mu_adjusted));
        let gap = half_cost + viol - best_bound;
        let to_cost = 2.0 * scale * mass;
        trace.record(iter, to_cost * half_cost, to_cost * best_bound, 0.0, mass * viol);
        if gap <= eps / 2.0 {
            converged = true;
            break;
        }
        if iter >= opts.max_iter {
            break;
        }

        let g = prob.grad_mu(&st.p_rows, &st.mu_adjusted);
        st.mu_mid = prob.step_mu(&st.mu_adjusted, &g, &st.step_mu);
        st.p_rows_mid = prob.step_p(&st.p_rows, &st.p_rows, &st.mu_adjusted, &st.step_p);
        let g = prob.grad_mu(&st.p_rows_mid, &st.mu_mid);
        st.mu = prob.step_mu(&st.mu_adjusted, &g, &st.step_mu);
        st.p_rows = prob.step_p(&st.p_rows, &st.p_rows_mid, &st.mu, &st.step_p);
        st.mu_adjusted = st.mu.iter().map(|&u| adjust_mu(u, b_param)).collect();
        iter += 1;
    }

    let raw: Vec<f64> = (0..n * m).map(|k| a[k / m] * st.p_rows[k]).collect();
    let raw_plan = TransportPlan::new(n, m, raw)?;
    let plan = round_to_feasible(&raw_plan, a, b)?;
    Ok(PrimalDualSolution { plan, raw_plan, trace, iterations: iter, converged })
}
