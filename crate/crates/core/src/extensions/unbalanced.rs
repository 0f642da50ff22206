//! Entropic unbalanced OT with KL marginal penalties:
//! `min ⟨C, P⟩ + τ₁ KL(P1‖a) + τ₂ KL(Pᵀ1‖b) − η H(P)`.

use crate::entropic::{check_eta, logsumexp, EntropicSolution, Reduced, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{OtError, Result};
use crate::measure::CostMatrix;
use crate::trace::ConvergenceTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbalancedOptions {
    pub eta: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// Bound on the largest change of `log u`, `log v` in one sweep.
    pub tol: f64,
    pub max_iter: usize,
}

impl UnbalancedOptions {
    pub fn new(eta: f64, tau1: f64, tau2: f64) -> Self {
        Self { eta, tau1, tau2, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
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

/// Damped scaling `u ← (a/Kv)^{τ₁/(τ₁+η)}`, `v ← (b/Kᵀu)^{τ₂/(τ₂+η)}`, run
/// on log scalings. The masses of `a` and `b` may differ.
pub fn unbalanced_sinkhorn(a: &[f64], b: &[f64], cost: &CostMatrix, opts: &UnbalancedOptions) -> Result<EntropicSolution> {
    check_eta(opts.eta)?;
    for (name, tau) in [("tau1", opts.tau1), ("tau2", opts.tau2)] {
        if !(tau > 0.0) {
            return Err(OtError::InvalidInput(format!("{name} must be positive, got {tau}")));
        }
    }
    if !(opts.tol > 0.0) {
        return Err(OtError::InvalidInput(format!("tol must be positive, got {}", opts.tol)));
    }
    let red = Reduced::new(a, b, cost, false)?;
    if red.is_empty() {
        return Ok(red.empty_solution(opts.eta));
    }
    let (n, m) = red.cost.shape();
    let eta = opts.eta;
    let (f1, f2) = (opts.tau1 / (opts.tau1 + eta), opts.tau2 / (opts.tau2 + eta));
    let c = red.cost.entries();
    let lk: Vec<f64> = c.iter().map(|x| -x / eta).collect();
    let log_a: Vec<f64> = red.a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = red.b.iter().map(|x| x.ln()).collect();
    let mut lu = vec![0.0; n];
    let mut lv = vec![0.0; m];
    let mut trace = ConvergenceTrace::new();
    let mut converged = false;
    let mut iter = 0;
    loop {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let lse = logsumexp((0..m).map(|j| lk[i * m + j] + lv[j]));
            let next = f1 * (log_a[i] - lse);
            change = change.max((next - lu[i]).abs());
            lu[i] = next;
        }
        for j in 0..m {
            let lse = logsumexp((0..n).map(|i| lk[i * m + j] + lu[i]));
            let next = f2 * (log_b[j] - lse);
            change = change.max((next - lv[j]).abs());
            lv[j] = next;
        }
        iter += 1;
        record(&mut trace, iter, &red, &lk, &lu, &lv, opts);
        if change <= opts.tol {
            converged = true;
            break;
        }
        if iter >= opts.max_iter {
            break;
        }
    }
    let plan = (0..n * m).map(|k| (lu[k / m] + lk[k] + lv[k % m]).exp()).collect();
    Ok(EntropicSolution {
        plan: red.expand_plan(plan),
        scaling: red.expand_scaling(&lu, &lv, iter),
        eta,
        trace,
        converged,
    })
}

/// Records `⟨C, P⟩`, the dual objective, and the marginal deviations.
fn record(
    trace: &mut ConvergenceTrace,
    iter: usize,
    red: &Reduced,
    lk: &[f64],
    lu: &[f64],
    lv: &[f64],
    opts: &UnbalancedOptions,
) {
    let (n, m) = red.cost.shape();
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; m];
    let mut primal = 0.0;
    for k in 0..n * m {
        let p = (lu[k / m] + lk[k] + lv[k % m]).exp();
        rows[k / m] += p;
        cols[k % m] += p;
        primal += p * red.cost.entries()[k];
    }
    let eta = opts.eta;
    // dual in terms of f = η log u, g = η log v
    let dual = -opts.tau1 * red.a.iter().zip(lu).map(|(a, u)| a * ((-eta * u / opts.tau1).exp() - 1.0)).sum::<f64>()
        - opts.tau2 * red.b.iter().zip(lv).map(|(b, v)| b * ((-eta * v / opts.tau2).exp() - 1.0)).sum::<f64>()
        - eta * rows.iter().sum::<f64>();
    let rv = rows.iter().zip(&red.a).map(|(x, t)| (x - t).abs()).sum();
    let cv = cols.iter().zip(&red.b).map(|(x, t)| (x - t).abs()).sum();
    trace.record(iter, primal, dual, rv, cv);
}
