use super::{gibbs_kernel, EntropicOptions, EntropicSolution, Reduced};
use crate::error::{OtError, Result};
use crate::measure::CostMatrix;
use crate::trace::ConvergenceTrace;

/// Alternating row/column scaling `u ← a / Kv`, `v ← b / Kᵀu`.
///
/// Each recorded iteration reports the state after a full row+column
/// sweep, so the column violation of every row but the first is at rounding
/// level. Stops once `‖P1 − a‖₁ + ‖Pᵀ1 − b‖₁ ≤ tol`.
pub fn sinkhorn(a: &[f64], b: &[f64], cost: &CostMatrix, opts: &EntropicOptions) -> Result<EntropicSolution> {
    opts.validate()?;
    let red = Reduced::new(a, b, cost, true)?;
    if red.is_empty() {
        return Ok(red.empty_solution(opts.eta));
    }
    let run = if opts.log_domain.resolve(opts.eta, cost) { run_log(&red, opts) } else { run_scaling(&red, opts)? };
    Ok(EntropicSolution {
        plan: red.expand_plan(run.plan),
        scaling: red.expand_scaling(&run.log_u, &run.log_v, run.iterations),
        eta: opts.eta,
        trace: run.trace,
        converged: run.converged,
    })
}

pub(super) struct Run {
    pub log_u: Vec<f64>,
    pub log_v: Vec<f64>,
    pub plan: Vec<f64>,
    pub trace: ConvergenceTrace,
    pub iterations: usize,
    pub converged: bool,
}

fn l1_gap(x: &[f64], target: &[f64]) -> f64 {
    x.iter().zip(target).map(|(p, q)| (p - q).abs()).sum()
}

fn dual_value(eta: f64, a: &[f64], b: &[f64], log_u: &[f64], log_v: &[f64], mass: f64) -> f64 {
    let lin: f64 = a.iter().zip(log_u).map(|(x, l)| x * l).sum::<f64>()
        + b.iter().zip(log_v).map(|(x, l)| x * l).sum::<f64>();
    eta * (lin - mass)
}

fn run_scaling(red: &Reduced, opts: &EntropicOptions) -> Result<Run> {
    let kernel = gibbs_kernel(&red.cost, opts.eta)?;
    let (n, m) = red.cost.shape();
    let (a, b) = (&red.a[..], &red.b[..]);
    let k = kernel.entries();
    let c = red.cost.entries();
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; m];
    let mut trace = ConvergenceTrace::new();
    let mut kv = vec![0.0; n];
    let mut ktu = vec![0.0; m];
    let mut converged = false;
    let mut iter = 0;
    loop {
        // one pass: Kv, Kᵀu, and ⟨C, P⟩ at the current scalings
        ktu.iter_mut().for_each(|x| *x = 0.0);
        let mut primal = 0.0;
        for i in 0..n {
            let (krow, crow) = (&k[i * m..(i + 1) * m], &c[i * m..(i + 1) * m]);
            let (mut s, mut cs) = (0.0, 0.0);
            for j in 0..m {
                let kvj = krow[j] * v[j];
                s += kvj;
                cs += kvj * crow[j];
                ktu[j] += u[i] * krow[j];
            }
            kv[i] = s;
            primal += u[i] * cs;
        }
        let rows: Vec<f64> = (0..n).map(|i| u[i] * kv[i]).collect();
        let cols: Vec<f64> = (0..m).map(|j| v[j] * ktu[j]).collect();
        let (rv, cv) = (l1_gap(&rows, a), l1_gap(&cols, b));
        let log_u: Vec<f64> = u.iter().map(|x| x.ln()).collect();
        let log_v: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        let mass: f64 = rows.iter().sum();
        trace.record(iter, primal, dual_value(opts.eta, a, b, &log_u, &log_v, mass), rv, cv);
        if rv + cv <= opts.tol {
            converged = true;
            break;
        }
        if iter >= opts.max_iter {
            break;
        }
        for i in 0..n {
            u[i] = a[i] / kv[i];
        }
        let ktu = kernel.apply_transpose(&u);
        for j in 0..m {
            v[j] = b[j] / ktu[j];
        }
        if u.iter().chain(&v).any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(OtError::KernelUnderflow { min: kernel.min() });
        }
        iter += 1;
    }
    let plan = (0..n * m).map(|idx| u[idx / m] * k[idx] * v[idx % m]).collect();
    Ok(Run {
        log_u: u.iter().map(|x| x.ln()).collect(),
        log_v: v.iter().map(|x| x.ln()).collect(),
        plan,
        trace,
        iterations: iter,
        converged,
    })
}

fn run_log(red: &Reduced, opts: &EntropicOptions) -> Run {
    let (n, m) = red.cost.shape();
    let (a, b) = (&red.a[..], &red.b[..]);
    let eta = opts.eta;
    let c = red.cost.entries();
    let lk: Vec<f64> = c.iter().map(|x| -x / eta).collect();
    let lkt: Vec<f64> = (0..m * n).map(|idx| lk[(idx % n) * m + idx / n]).collect();
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut lu = vec![0.0; n];
    let mut lv = vec![0.0; m];
    let mut lse_rows = vec![0.0; n];
    let mut cols = vec![0.0; m];
    let mut scratch = vec![0.0; m.max(n)];
    let mut trace = ConvergenceTrace::new();
    let mut converged = false;
    let mut iter = 0;
    loop {
        cols.iter_mut().for_each(|x| *x = 0.0);
        let (mut primal, mut rv, mut mass) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let row = &lk[i * m..(i + 1) * m];
            let mut max = f64::NEG_INFINITY;
            for j in 0..m {
                scratch[j] = row[j] + lv[j];
                max = max.max(scratch[j]);
            }
            let mut s = 0.0;
            for e in scratch[..m].iter_mut() {
                *e = (*e - max).exp();
                s += *e;
            }
            lse_rows[i] = max + s.ln();
            let scale = (lu[i] + max).exp();
            for j in 0..m {
                let p = scale * scratch[j];
                cols[j] += p;
                primal += p * c[i * m + j];
            }
            let r = (lu[i] + lse_rows[i]).exp();
            mass += r;
            rv += (r - a[i]).abs();
        }
        let cv = l1_gap(&cols, b);
        trace.record(iter, primal, dual_value(eta, a, b, &lu, &lv, mass), rv, cv);
        if rv + cv <= opts.tol {
            converged = true;
            break;
        }
        if iter >= opts.max_iter {
            break;
        }
        for i in 0..n {
            lu[i] = log_a[i] - lse_rows[i];
        }
        for j in 0..m {
            let col = &lkt[j * n..(j + 1) * n];
            let mut max = f64::NEG_INFINITY;
            for i in 0..n {
                scratch[i] = col[i] + lu[i];
                max = max.max(scratch[i]);
            }
            let s: f64 = scratch[..n].iter().map(|x| (x - max).exp()).sum();
            lv[j] = log_b[j] - (max + s.ln());
        }
        iter += 1;
    }
    let plan = (0..n * m).map(|idx| (lu[idx / m] + lk[idx] + lv[idx % m]).exp()).collect();
    Run { log_u: lu, log_v: lv, plan, trace, iterations: iter, converged }
}
