use super::{gibbs_kernel, logsumexp, EntropicOptions, EntropicSolution, Reduced};
use crate::error::{OtError, Result};
use crate::measure::CostMatrix;
use crate::trace::ConvergenceTrace;

/// Greedy selection score `ρ(a, b) = b − a + a log(a / b)`, a Bregman
/// divergence that is zero exactly when `a = b`.
///
/// `ρ(0, b) = b`; `ρ(a, 0) = +∞` for `a > 0`, which marks a coordinate that
/// cannot be repaired by scaling.
pub fn rho(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        b
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        b - a + a * (a / b).ln()
    }
}

/// Greenkhorn: each iteration rescales the single row or column whose
/// current marginal is furthest from its target under `ρ`.
///
/// One iteration is one coordinate update, so iteration counts run roughly
/// `n + m` times those of [`sinkhorn`](super::sinkhorn).
pub fn greenkhorn(a: &[f64], b: &[f64], cost: &CostMatrix, opts: &EntropicOptions) -> Result<EntropicSolution> {
    opts.validate()?;
    let red = Reduced::new(a, b, cost, true)?;
    if red.is_empty() {
        return Ok(red.empty_solution(opts.eta));
    }
    let log_mode = opts.log_domain.resolve(opts.eta, cost);
    let mut state = State::new(&red, opts.eta, log_mode)?;
    let (n, m) = red.cost.shape();
    let (ta, tb) = (&red.a[..], &red.b[..]);
    let refresh_every = 4 * (n + m);
    let mut trace = ConvergenceTrace::new();
    let mut converged = false;
    let mut iter = 0;
    loop {
        let (mut rv, mut cv) = state.violations(ta, tb);
        if rv + cv <= opts.tol || iter % refresh_every == 0 {
            // incremental sums drift; decide on fresh ones
            state.refresh();
            (rv, cv) = state.violations(ta, tb);
        }
        trace.record(iter, state.primal, opts.eta * (state.lin - state.mass), rv, cv);
        if rv + cv <= opts.tol {
            converged = true;
            break;
        }
        if iter >= opts.max_iter {
            break;
        }
        let (i, ri) = argmax((0..n).map(|i| rho(ta[i], state.rows[i])));
        let (j, cj) = argmax((0..m).map(|j| rho(tb[j], state.cols[j])));
        if ri >= cj {
            state.update_row(i, ta[i])?;
        } else {
            state.update_col(j, tb[j])?;
        }
        iter += 1;
    }
    state.refresh();
    let (log_u, log_v) = state.logs();
    let plan = (0..n * m).map(|idx| state.entry(idx / m, idx % m)).collect();
    Ok(EntropicSolution {
        plan: red.expand_plan(plan),
        scaling: red.expand_scaling(&log_u, &log_v, iter),
        eta: opts.eta,
        trace,
        converged,
    })
}

/// First index of the maximum.
fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values.enumerate().fold((0, f64::NEG_INFINITY), |best, (k, x)| if x > best.1 { (k, x) } else { best })
}

struct State<'a> {
    cost: &'a CostMatrix,
    log_mode: bool,
    /// `K` in scaling mode, `−C/η` in log mode.
    kernel: Vec<f64>,
    /// `u`, `v` in scaling mode; their logarithms in log mode.
    u: Vec<f64>,
    v: Vec<f64>,
    min_kernel: f64,
    rows: Vec<f64>,
    cols: Vec<f64>,
    primal: f64,
    mass: f64,
    /// `⟨a, log u⟩ + ⟨b, log v⟩`.
    lin: f64,
}

impl<'a> State<'a> {
    fn new(red: &'a Reduced, eta: f64, log_mode: bool) -> Result<Self> {
        let (n, m) = red.cost.shape();
        let (kernel, min_kernel, init) = if log_mode {
            (red.cost.entries().iter().map(|c| -c / eta).collect(), 0.0, 0.0)
        } else {
            let k = gibbs_kernel(&red.cost, eta)?;
            let min = k.min();
            (k.entries().to_vec(), min, 1.0)
        };
        let mut state = Self {
            cost: &red.cost,
            log_mode,
            kernel,
            u: vec![init; n],
            v: vec![init; m],
            min_kernel,
            rows: vec![0.0; n],
            cols: vec![0.0; m],
            primal: 0.0,
            mass: 0.0,
            lin: 0.0,
        };
        state.refresh();
        Ok(state)
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let k = self.kernel[i * self.v.len() + j];
        if self.log_mode {
            (self.u[i] + k + self.v[j]).exp()
        } else {
            self.u[i] * k * self.v[j]
        }
    }

    fn refresh(&mut self) {
        let (n, m) = (self.u.len(), self.v.len());
        self.rows.iter_mut().chain(self.cols.iter_mut()).for_each(|x| *x = 0.0);
        self.primal = 0.0;
        for i in 0..n {
            for j in 0..m {
                let p = self.entry(i, j);
                self.rows[i] += p;
                self.cols[j] += p;
                self.primal += p * self.cost.get(i, j);
            }
        }
        self.mass = self.rows.iter().sum();
    }

    fn violations(&self, a: &[f64], b: &[f64]) -> (f64, f64) {
        let rv = self.rows.iter().zip(a).map(|(x, t)| (x - t).abs()).sum();
        let cv = self.cols.iter().zip(b).map(|(x, t)| (x - t).abs()).sum();
        (rv, cv)
    }

    fn logs(&self) -> (Vec<f64>, Vec<f64>) {
        if self.log_mode {
            (self.u.clone(), self.v.clone())
        } else {
            (self.u.iter().map(|x| x.ln()).collect(), self.v.iter().map(|x| x.ln()).collect())
        }
    }

    /// Log of the rescaling factor that makes the row (or column) sum hit `target`.
    fn log_factor(&self, target: f64, entries: impl Iterator<Item = (f64, f64)> + Clone, own: f64) -> Result<f64> {
        if self.log_mode {
            let lse = logsumexp(entries.map(|(k, other)| k + other));
            Ok(target.ln() - (own + lse))
        } else {
            let sum: f64 = own * entries.map(|(k, other)| k * other).sum::<f64>();
            if !(sum > 0.0 && sum.is_finite()) {
                return Err(OtError::KernelUnderflow { min: self.min_kernel });
            }
            Ok((target / sum).ln())
        }
    }

    fn update_row(&mut self, i: usize, target: f64) -> Result<()> {
        let m = self.v.len();
        let row = &self.kernel[i * m..(i + 1) * m];
        let delta = self.log_factor(target, row.iter().copied().zip(self.v.iter().copied()), self.u[i])?;
        let before: Vec<f64> = (0..m).map(|j| self.entry(i, j)).collect();
        if self.log_mode {
            self.u[i] += delta;
        } else {
            self.u[i] *= delta.exp();
        }
        for (j, old) in before.into_iter().enumerate() {
            let new = self.entry(i, j);
            self.cols[j] += new - old;
            self.primal += (new - old) * self.cost.get(i, j);
        }
        self.mass += target - self.rows[i];
        self.rows[i] = target;
        self.lin += target * delta;
        Ok(())
    }

    fn update_col(&mut self, j: usize, target: f64) -> Result<()> {
        let (n, m) = (self.u.len(), self.v.len());
        let column = (0..n).map(|i| (self.kernel[i * m + j], self.u[i]));
        let delta = self.log_factor(target, column, self.v[j])?;
        let before: Vec<f64> = (0..n).map(|i| self.entry(i, j)).collect();
        if self.log_mode {
            self.v[j] += delta;
        } else {
            self.v[j] *= delta.exp();
        }
        for (i, old) in before.into_iter().enumerate() {
            let new = self.entry(i, j);
            self.rows[i] += new - old;
            self.primal += (new - old) * self.cost.get(i, j);
        }
        self.mass += target - self.cols[j];
        self.cols[j] = target;
        self.lin += target * delta;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{sinkhorn, LogDomain};
    use super::*;

    #[test]
    fn rho_values() {
        assert_eq!(rho(0.7, 0.7), 0.0);
        assert!((rho(1.0, 2.0) - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert_eq!(rho(0.0, 0.3), 0.3);
        assert_eq!(rho(0.3, 0.0), f64::INFINITY);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax([0.1, 0.5, 0.5].into_iter()), (1, 0.5));
    }

    #[test]
    fn agrees_with_sinkhorn() {
        let c = CostMatrix::from_rows(&[vec![0.2, 0.9, 0.4], vec![0.7, 0.1, 0.6], vec![0.3, 0.8, 0.05]]).unwrap();
        let (a, b) = ([0.2, 0.3, 0.5], [0.4, 0.4, 0.2]);
        for mode in [LogDomain::Never, LogDomain::Always] {
            let opts = EntropicOptions::new(0.1).tol(1e-8).log_domain(mode);
            let g = greenkhorn(&a, &b, &c, &opts).unwrap();
            let s = sinkhorn(&a, &b, &c, &opts).unwrap();
            assert!(g.converged);
            for (p, q) in g.plan.entries().iter().zip(s.plan.entries()) {
                assert!((p - q).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn converged_plan_meets_tolerance() {
        let c = CostMatrix::from_fn(4, 3, |i, j| ((i * 3 + j * 7) % 5) as f64 / 5.0).unwrap();
        let (a, b) = ([0.1, 0.2, 0.3, 0.4], [0.5, 0.25, 0.25]);
        let g = greenkhorn(&a, &b, &c, &EntropicOptions::new(0.05).tol(1e-7)).unwrap();
        let (rv, cv) = g.plan.marginal_violation(&a, &b);
        assert!(rv + cv <= 1e-7 + 1e-12);
    }
}
