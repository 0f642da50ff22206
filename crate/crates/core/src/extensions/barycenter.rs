//! Fixed-support Wasserstein barycenters:
//! `min_{b ∈ Δ_m} Σ_k w_k OT_{C_k}(a_k, b)`.

use rayon::prelude::*;

use super::lp::solve_lp;
use crate::entropic::{check_eta, logsumexp, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{OtError, Result};
use crate::exact::{solve_exact, DEFAULT_CAP_CELLS};
use crate::measure::{CostMatrix, DiscreteMeasure, TransportPlan};

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterProblem {
    inputs: Vec<DiscreteMeasure>,
    weights: Vec<f64>,
    costs: Vec<CostMatrix>,
    support_size: usize,
}

impl BarycenterProblem {
    pub fn new(inputs: Vec<DiscreteMeasure>, weights: Vec<f64>, costs: Vec<CostMatrix>) -> Result<Self> {
        let k = inputs.len();
        if k == 0 {
            return Err(OtError::InvalidInput("barycenter needs at least one input".into()));
        }
        if weights.len() != k || costs.len() != k {
            return Err(OtError::ShapeMismatch {
                expected: format!("{k} weights and {k} costs"),
                found: format!("{} weights and {} costs", weights.len(), costs.len()),
            });
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(OtError::NegativeEntry { index, value });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(OtError::InvalidInput(format!("barycenter weights sum to {total}, expected 1")));
        }
        let support_size = costs[0].cols();
        for (idx, (a, c)) in inputs.iter().zip(&costs).enumerate() {
            if c.shape() != (a.len(), support_size) {
                return Err(OtError::ShapeMismatch {
                    expected: format!("cost {idx} of shape {}x{support_size}", a.len()),
                    found: format!("{}x{}", c.rows(), c.cols()),
                });
            }
        }
        Ok(Self { inputs, weights, costs, support_size })
    }

    pub fn inputs(&self) -> &[DiscreteMeasure] {
        &self.inputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn costs(&self) -> &[CostMatrix] {
        &self.costs
    }

    pub fn support_size(&self) -> usize {
        self.support_size
    }

    fn max_cost(&self) -> f64 {
        self.costs.iter().map(CostMatrix::max_abs).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactBarycenter {
    pub barycenter: DiscreteMeasure,
    pub plans: Vec<TransportPlan>,
    pub objective: f64,
}

/// `Σ_k w_k OT_{C_k}(a_k, b)` with every term solved exactly. `b` is
/// rescaled to each input's mass.
pub fn barycenter_objective(problem: &BarycenterProblem, b: &[f64]) -> Result<f64> {
    let total: f64 = b.iter().sum();
    let mut value = 0.0;
    for ((a, c), w) in problem.inputs.iter().zip(&problem.costs).zip(&problem.weights) {
        let target: Vec<f64> = b.iter().map(|x| x * a.total_mass() / total).collect();
        value += w * solve_exact(a.weights(), &target, c)?.cost;
    }
    Ok(value)
}

/// Solves the joint LP in `(P_1, …, P_K, b)` exactly.
pub fn barycenter_exact(problem: &BarycenterProblem) -> Result<ExactBarycenter> {
    let m = problem.support_size;
    let k_count = problem.inputs.len();
    let max_rows = problem.inputs.iter().map(DiscreteMeasure::len).max().unwrap_or(0);
    let cells = k_count * max_rows * m;
    if cells > DEFAULT_CAP_CELLS {
        return Err(OtError::SizeCapExceeded { cells, cap: DEFAULT_CAP_CELLS });
    }
    for (idx, a) in problem.inputs.iter().enumerate() {
        if (a.total_mass() - 1.0).abs() > 1e-9 {
            return Err(OtError::InvalidInput(format!("input {idx} is not a probability measure")));
        }
    }

    let offsets: Vec<usize> = problem
        .inputs
        .iter()
        .scan(0, |acc, a| {
            let start = *acc;
            *acc += a.len() * m;
            Some(start)
        })
        .collect();
    let b_offset = offsets.last().unwrap() + problem.inputs.last().unwrap().len() * m;
    let nvars = b_offset + m;

    let mut objective = vec![0.0; nvars];
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (k, ((a, c), w)) in problem.inputs.iter().zip(&problem.costs).zip(&problem.weights).enumerate() {
        let n = a.len();
        for (idx, &cij) in c.entries().iter().enumerate() {
            objective[offsets[k] + idx] = w * cij;
        }
        for i in 0..n {
            let mut row = vec![0.0; nvars];
            (0..m).for_each(|j| row[offsets[k] + i * m + j] = 1.0);
            rows.push(row);
            rhs.push(a.weights()[i]);
        }
        for j in 0..m {
            let mut row = vec![0.0; nvars];
            (0..n).for_each(|i| row[offsets[k] + i * m + j] = 1.0);
            row[b_offset + j] = -1.0;
            rows.push(row);
            rhs.push(0.0);
        }
    }
    let lp = solve_lp(&objective, &rows, &rhs)?;

    let b: Vec<f64> = lp.x[b_offset..].to_vec();
    let total: f64 = b.iter().sum();
    let barycenter = DiscreteMeasure::new(b.iter().map(|x| x / total).collect())?;
    let plans = problem
        .inputs
        .iter()
        .enumerate()
        .map(|(k, a)| TransportPlan::new(a.len(), m, lp.x[offsets[k]..offsets[k] + a.len() * m].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExactBarycenter { barycenter, plans, objective: lp.objective })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycenterOptions {
    pub eta: f64,
    /// Bound on `Σ_k ‖P_k 1 − a_k‖₁`.
    pub tol: f64,
    pub max_iter: usize,
}

impl BarycenterOptions {
    pub fn new(eta: f64) -> Self {
        Self { eta, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Log-domain scalings of one coupling `P_k = diag(u_k) K_k diag(v_k)`.
struct Coupling {
    log_kernel: Vec<f64>,
    log_a: Vec<f64>,
    lu: Vec<f64>,
    lv: Vec<f64>,
}

impl Coupling {
    /// Scales rows onto `a_k` and returns `log Kᵀu`.
    fn project_rows(&mut self) -> Vec<f64> {
        let (n, m) = (self.lu.len(), self.lv.len());
        for i in 0..n {
            let lse = logsumexp((0..m).map(|j| self.log_kernel[i * m + j] + self.lv[j]));
            self.lu[i] = self.log_a[i] - lse;
        }
        (0..m).map(|j| logsumexp((0..n).map(|i| self.log_kernel[i * m + j] + self.lu[i]))).collect()
    }

    /// Scales columns onto `b` and returns the resulting `‖P 1 − a_k‖₁`.
    fn project_cols(&mut self, log_b: &[f64], log_cols: &[f64]) -> f64 {
        let (n, m) = (self.lu.len(), self.lv.len());
        for j in 0..m {
            self.lv[j] = log_b[j] - log_cols[j];
        }
        (0..n)
            .filter(|&i| self.log_a[i] > f64::NEG_INFINITY)
            .map(|i| {
                let lse = logsumexp((0..m).map(|j| self.log_kernel[i * m + j] + self.lv[j]));
                ((self.lu[i] + lse).exp() - self.log_a[i].exp()).abs()
            })
            .sum()
    }
}

/// Iterative Bregman projections in log space. Each sweep scales every
/// coupling onto its input marginal, sets the shared marginal to the
/// weighted geometric mean of the column marginals, then scales every
/// coupling onto it. Per-input projections run in parallel; the shared
/// marginal update is the synchronization point.
pub fn barycenter_entropic(problem: &BarycenterProblem, opts: &BarycenterOptions) -> Result<DiscreteMeasure> {
    check_eta(opts.eta)?;
    let m = problem.support_size;
    let eta = opts.eta;
    let mut couplings: Vec<Coupling> = problem
        .inputs
        .iter()
        .zip(&problem.costs)
        .map(|(a, c)| Coupling {
            log_kernel: c.entries().iter().map(|x| -x / eta).collect(),
            log_a: a.weights().iter().map(|x| x.ln()).collect(),
            lu: vec![0.0; a.len()],
            lv: vec![0.0; m],
        })
        .collect();
    let mut last_violation = f64::INFINITY;

    for _ in 0..opts.max_iter {
        let log_cols: Vec<Vec<f64>> = couplings.par_iter_mut().map(Coupling::project_rows).collect();
        let log_b: Vec<f64> = (0..m)
            .map(|j| {
                couplings
                    .iter()
                    .zip(&log_cols)
                    .zip(&problem.weights)
                    .map(|((c, cols), w)| w * (c.lv[j] + cols[j]))
                    .sum()
            })
            .collect();
        let violation: f64 = couplings
            .par_iter_mut()
            .zip(&log_cols)
            .map(|(c, cols)| c.project_cols(&log_b, cols))
            .collect::<Vec<_>>()
            .iter()
            .sum();
        last_violation = violation;
        if violation <= opts.tol {
            return normalized(&log_b);
        }
    }
    Err(OtError::MaxIterExceeded { iterations: opts.max_iter, violation: last_violation })
}

fn normalized(log_b: &[f64]) -> Result<DiscreteMeasure> {
    let lse = logsumexp(log_b.iter().copied());
    DiscreteMeasure::new(log_b.iter().map(|x| (x - lse).exp()).collect())
}

/// Objective of the entropic barycenter evaluated with exact OT.
pub fn barycenter_entropic_objective(problem: &BarycenterProblem, opts: &BarycenterOptions) -> Result<(DiscreteMeasure, f64)> {
    let b = barycenter_entropic(problem, opts)?;
    let value = barycenter_objective(problem, b.weights())?;
    Ok((b, value))
}

impl BarycenterProblem {
    /// Default regularization `0.01·max_k ‖C_k‖∞`.
    pub fn default_eta(&self) -> f64 {
        let scale = self.max_cost();
        if scale > 0.0 {
            0.01 * scale
        } else {
            0.01
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_cost(n: usize) -> CostMatrix {
        CostMatrix::from_fn(n, n, |i, j| (i as f64 - j as f64).powi(2)).unwrap()
    }

    fn diracs(n: usize) -> BarycenterProblem {
        let mut a1 = vec![0.0; n];
        a1[0] = 1.0;
        let mut a2 = vec![0.0; n];
        a2[n - 1] = 1.0;
        BarycenterProblem::new(
            vec![DiscreteMeasure::new(a1).unwrap(), DiscreteMeasure::new(a2).unwrap()],
            vec![0.5, 0.5],
            vec![line_cost(n), line_cost(n)],
        )
        .unwrap()
    }

    #[test]
    fn midpoint_of_two_diracs() {
        let p = diracs(5);
        let exact = barycenter_exact(&p).unwrap();
        // any b on the middle point costs 0.5·4 + 0.5·4
        assert!((exact.objective - 4.0).abs() < 1e-9, "{}", exact.objective);
        assert!((exact.barycenter.weights()[2] - 1.0).abs() < 1e-9);
        assert!((barycenter_objective(&p, exact.barycenter.weights()).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn single_input_is_its_own_barycenter() {
        let a = DiscreteMeasure::new(vec![0.2, 0.5, 0.3]).unwrap();
        let p = BarycenterProblem::new(vec![a.clone()], vec![1.0], vec![line_cost(3)]).unwrap();
        let exact = barycenter_exact(&p).unwrap();
        assert!(exact.objective.abs() < 1e-12);
        for (x, y) in exact.barycenter.weights().iter().zip(a.weights()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn entropic_approaches_exact() {
        let p = diracs(5);
        let b = barycenter_entropic(&p, &BarycenterOptions::new(0.2).tol(1e-10)).unwrap();
        assert!((b.total_mass() - 1.0).abs() < 1e-12);
        assert!(b.weights()[2] > 0.9, "{:?}", b.weights());
    }

    #[test]
    fn rejects_bad_weights() {
        let a = DiscreteMeasure::uniform(2).unwrap();
        assert!(BarycenterProblem::new(vec![a.clone()], vec![0.5], vec![line_cost(2)]).is_err());
        assert!(BarycenterProblem::new(vec![a], vec![1.0], vec![line_cost(3)]).is_err());
    }
}
