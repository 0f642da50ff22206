//! Accelerated Sinkhorn on the dual `φ(u, v) = log ‖B(u, v)‖₁ − ⟨v, b⟩ − ⟨u, a⟩`
//! with `B_ij = exp(u_i + v_j − C_ij/η)`.
//!
//! Each iteration takes a Nesterov gradient step from the extrapolated point,
//! keeps whichever of the previous point and the momentum point has the
//! smaller `φ`, then finishes with an exact Sinkhorn half-step, alternating
//! rows and columns. Marginals are normalized to probability internally.

use super::{logsumexp, EntropicOptions, EntropicSolution, Reduced, ScalingState};
use crate::duality::dot;
use crate::error::Result;
use crate::measure::{check_len, CostMatrix};
use crate::trace::ConvergenceTrace;

/// `φ(u, v) = log Σ_ij exp(u_i + v_j − C_ij/η) − ⟨v, b⟩ − ⟨u, a⟩`, evaluated
/// by log-sum-exp so large potentials do not overflow.
pub fn reg_dual_value(u: &[f64], v: &[f64], a: &[f64], b: &[f64], cost: &CostMatrix, eta: f64) -> Result<f64> {
    super::check_eta(eta)?;
    let (n, m) = cost.shape();
    check_len("u", n, u.len())?;
    check_len("v", m, v.len())?;
    check_len("a", n, a.len())?;
    check_len("b", m, b.len())?;
    let lse = logsumexp((0..n * m).map(|k| u[k / m] + v[k % m] - cost.entries()[k] / eta));
    Ok(lse - dot(v, b) - dot(u, a))
}

pub fn accelerated_sinkhorn(a: &[f64], b: &[f64], cost: &CostMatrix, opts: &EntropicOptions) -> Result<EntropicSolution> {
    run(a, b, cost, opts, None)
}

/// Starts from given scalings (the plan they describe is `u_i K_ij v_j`).
pub fn accelerated_sinkhorn_warm(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    opts: &EntropicOptions,
    start: &ScalingState,
) -> Result<EntropicSolution> {
    check_len("log_u", cost.rows(), start.log_u.len())?;
    check_len("log_v", cost.cols(), start.log_v.len())?;
    run(a, b, cost, opts, Some(start))
}

fn run(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    opts: &EntropicOptions,
    start: Option<&ScalingState>,
) -> Result<EntropicSolution> {
    opts.validate()?;
    let red = Reduced::new(a, b, cost, true)?;
    if red.is_empty() {
        return Ok(red.empty_solution(opts.eta));
    }
    let mass: f64 = red.a.iter().sum();
    let pa: Vec<f64> = red.a.iter().map(|x| x / mass).collect();
    let pb: Vec<f64> = red.b.iter().map(|x| x / mass).collect();
    let dual = Dual::new(&red.cost, opts.eta);

    let (mut u_check, mut v_check) = match start {
        Some(s) => (
            red.rows.iter().map(|&i| s.log_u[i]).collect(),
            red.cols.iter().map(|&j| s.log_v[j] - mass.ln()).collect(),
        ),
        None => (vec![0.0; dual.n], vec![0.0; dual.m]),
    };
    let (mut u_tilde, mut v_tilde) = (u_check.clone(), v_check.clone());
    let log_a: Vec<f64> = pa.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = pb.iter().map(|x| x.ln()).collect();

    let mut theta: f64 = 1.0;
    let mut trace = ConvergenceTrace::new();
    let mut converged = false;
    let mut iter = 0;
    loop {
        let at = dual.eval(&u_check, &v_check);
        let rv: f64 = at.log_rows.iter().zip(&pa).map(|(l, t)| (l.exp() - t).abs()).sum::<f64>() * mass;
        let cv: f64 = at.log_cols.iter().zip(&pb).map(|(l, t)| (l.exp() - t).abs()).sum::<f64>() * mass;
        let phi_check = at.log_total - dot(&v_check, &pb) - dot(&u_check, &pa);
        trace.record(iter, at.primal * mass, phi_check, rv, cv);
        if rv + cv <= opts.tol {
            converged = true;
            break;
        }
        if iter >= opts.max_iter {
            break;
        }

        let u_bar: Vec<f64> = u_check.iter().zip(&u_tilde).map(|(c, t)| (1.0 - theta) * c + theta * t).collect();
        let v_bar: Vec<f64> = v_check.iter().zip(&v_tilde).map(|(c, t)| (1.0 - theta) * c + theta * t).collect();
        let bar = dual.eval(&u_bar, &v_bar);
        let grad_u: Vec<f64> = bar.log_rows.iter().zip(&pa).map(|(l, t)| (l - bar.log_total).exp() - t).collect();
        let grad_v: Vec<f64> = bar.log_cols.iter().zip(&pb).map(|(l, t)| (l - bar.log_total).exp() - t).collect();
        let step = 1.0 / (2.0 * theta);
        u_tilde.iter_mut().zip(&grad_u).for_each(|(x, g)| *x -= step * g);
        v_tilde.iter_mut().zip(&grad_v).for_each(|(x, g)| *x -= step * g);
        // momentum point ū + θ(ũ⁺ − ũ) = ū − ∇/2
        let u_hat: Vec<f64> = u_bar.iter().zip(&grad_u).map(|(x, g)| x - 0.5 * g).collect();
        let v_hat: Vec<f64> = v_bar.iter().zip(&grad_v).map(|(x, g)| x - 0.5 * g).collect();
        let phi_hat = dual.log_total(&u_hat, &v_hat) - dot(&v_hat, &pb) - dot(&u_hat, &pa);
        let (u_ring, v_ring, ring) = if phi_hat < phi_check {
            let ring = dual.eval(&u_hat, &v_hat);
            (u_hat, v_hat, ring)
        } else {
            (u_check, v_check, at)
        };

        if iter % 2 == 0 {
            u_check = (0..dual.n).map(|i| u_ring[i] + log_a[i] - ring.log_rows[i]).collect();
            v_check = v_ring;
        } else {
            v_check = (0..dual.m).map(|j| v_ring[j] + log_b[j] - ring.log_cols[j]).collect();
            u_check = u_ring;
        }
        theta = theta * ((theta * theta + 4.0).sqrt() - theta) / 2.0;
        iter += 1;
    }

    let log_v: Vec<f64> = v_check.iter().map(|x| x + mass.ln()).collect();
    let (n, m) = (dual.n, dual.m);
    let plan = (0..n * m).map(|k| (u_check[k / m] + dual.lk[k] + log_v[k % m]).exp()).collect();
    Ok(EntropicSolution {
        plan: red.expand_plan(plan),
        scaling: red.expand_scaling(&u_check, &log_v, iter),
        eta: opts.eta,
        trace,
        converged,
    })
}

struct Dual<'a> {
    cost: &'a CostMatrix,
    n: usize,
    m: usize,
    lk: Vec<f64>,
    lkt: Vec<f64>,
}

struct Eval {
    log_rows: Vec<f64>,
    log_cols: Vec<f64>,
    log_total: f64,
    /// `Σ B_ij C_ij`.
    primal: f64,
}

impl<'a> Dual<'a> {
    fn new(cost: &'a CostMatrix, eta: f64) -> Self {
        let (n, m) = cost.shape();
        let lk: Vec<f64> = cost.entries().iter().map(|c| -c / eta).collect();
        let lkt = (0..m * n).map(|k| lk[(k % n) * m + k / n]).collect();
        Self { cost, n, m, lk, lkt }
    }

    fn log_total(&self, u: &[f64], v: &[f64]) -> f64 {
        let rows: Vec<f64> = (0..self.n).map(|i| self.row(i, u, v).0).collect();
        logsumexp(rows.into_iter())
    }

    /// Log row sum of `B` and the `B`-weighted row cost.
    fn row(&self, i: usize, u: &[f64], v: &[f64]) -> (f64, f64) {
        let m = self.m;
        let lk = &self.lk[i * m..(i + 1) * m];
        let max = lk.iter().zip(v).map(|(k, x)| k + x).fold(f64::NEG_INFINITY, f64::max);
        let (mut s, mut sc) = (0.0, 0.0);
        for (j, (k, x)) in lk.iter().zip(v).enumerate() {
            let e = (k + x - max).exp();
            s += e;
            sc += e * self.cost.get(i, j);
        }
        let log_row = u[i] + max + s.ln();
        (log_row, log_row.exp() * sc / s)
    }

    fn eval(&self, u: &[f64], v: &[f64]) -> Eval {
        let mut log_rows = Vec::with_capacity(self.n);
        let mut primal = 0.0;
        for i in 0..self.n {
            let (lr, pc) = self.row(i, u, v);
            log_rows.push(lr);
            primal += pc;
        }
        let n = self.n;
        let log_cols = (0..self.m)
            .map(|j| v[j] + logsumexp(self.lkt[j * n..(j + 1) * n].iter().zip(u).map(|(k, x)| k + x)))
            .collect();
        let log_total = logsumexp(log_rows.iter().copied());
        Eval { log_rows, log_cols, log_total, primal }
    }
}
