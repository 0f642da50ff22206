//! Dual toolkit: C-transforms, objective values, gaps and certificates.

use crate::error::{OtError, Result};
use crate::measure::{
    check_len, check_shapes, transport_cost, CostMatrix, DualPotentials, TransportPlan,
    DUAL_FEASIBILITY_TOL, FEASIBILITY_TOL,
};

/// `(w^C)_j = min_i C_ij − w_i`. The maximal `z` keeping `(w, z)` feasible.
pub fn c_transform(w: &[f64], cost: &CostMatrix) -> Result<Vec<f64>> {
    check_len("w", cost.rows(), w.len())?;
    let mut out = vec![f64::INFINITY; cost.cols()];
    for (i, &wi) in w.iter().enumerate() {
        for (o, &c) in out.iter_mut().zip(cost.row(i)) {
            let v = c - wi;
            // strict comparison keeps the lowest index on ties
            if v < *o {
                *o = v;
            }
        }
    }
    Ok(out)
}

/// `(z^C̄)_i = min_j C_ij − z_j`.
pub fn cbar_transform(z: &[f64], cost: &CostMatrix) -> Result<Vec<f64>> {
    check_len("z", cost.cols(), z.len())?;
    Ok((0..cost.rows())
        .map(|i| {
            cost.row(i)
                .iter()
                .zip(z)
                .map(|(c, zj)| c - zj)
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// `⟨w, a⟩ + ⟨z, b⟩`. Only a lower bound on the optimum when `d` is feasible.
pub fn dual_objective(d: &DualPotentials, a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("a", d.w.len(), a.len())?;
    check_len("b", d.z.len(), b.len())?;
    Ok(dot(&d.w, a) + dot(&d.z, b))
}

/// Primal cost minus dual objective for a feasible pair.
pub fn duality_gap(
    cost: &CostMatrix,
    plan: &TransportPlan,
    d: &DualPotentials,
    a: &[f64],
    b: &[f64],
) -> Result<f64> {
    check_shapes(cost, plan)?;
    check_len("a", plan.rows(), a.len())?;
    check_len("b", plan.cols(), b.len())?;
    let (rv, cv) = plan.marginal_violation(a, b);
    if rv + cv > FEASIBILITY_TOL {
        return Err(OtError::InfeasiblePrimal { violation: rv + cv, tolerance: FEASIBILITY_TOL });
    }
    if d.w.len() != cost.rows() || d.z.len() != cost.cols() {
        return Err(OtError::ShapeMismatch {
            expected: format!("potentials of lengths {}/{}", cost.rows(), cost.cols()),
            found: format!("{}/{}", d.w.len(), d.z.len()),
        });
    }
    let excess = d.max_excess(cost);
    if excess > DUAL_FEASIBILITY_TOL {
        return Err(OtError::InfeasibleDual { violation: excess });
    }
    Ok(transport_cost(cost, plan)? - dual_objective(d, a, b)?)
}

/// `max_ij |P_ij (C_ij − w_i − z_j)|`.
pub fn slackness_residual(cost: &CostMatrix, plan: &TransportPlan, d: &DualPotentials) -> Result<f64> {
    check_shapes(cost, plan)?;
    check_len("w", cost.rows(), d.w.len())?;
    check_len("z", cost.cols(), d.z.len())?;
    let mut worst = 0.0f64;
    for i in 0..cost.rows() {
        for j in 0..cost.cols() {
            let r = (plan.get(i, j) * (cost.get(i, j) - d.w[i] - d.z[j])).abs();
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// `⟨C, P̂⟩ − OPT` for a feasible approximate plan, given the exact optimum.
pub fn epsilon_suboptimality(
    cost: &CostMatrix,
    plan: &TransportPlan,
    a: &[f64],
    b: &[f64],
    oracle_cost: f64,
) -> Result<f64> {
    check_shapes(cost, plan)?;
    check_len("a", plan.rows(), a.len())?;
    check_len("b", plan.cols(), b.len())?;
    let (rv, cv) = plan.marginal_violation(a, b);
    if rv + cv > FEASIBILITY_TOL {
        return Err(OtError::InfeasiblePrimal { violation: rv + cv, tolerance: FEASIBILITY_TOL });
    }
    Ok(transport_cost(cost, plan)? - oracle_cost)
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| p * q).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> CostMatrix {
        CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn c_transform_examples() {
        let c = CostMatrix::from_rows(&[vec![2.0, 5.0]]).unwrap();
        assert_eq!(c_transform(&[1.0], &c).unwrap(), vec![1.0, 4.0]);
        let c = CostMatrix::from_rows(&[vec![3.0, 1.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(c_transform(&[0.0, 0.0], &c).unwrap(), vec![2.0, 1.0]);
        assert_eq!(cbar_transform(&[0.0, 0.0], &c).unwrap(), vec![1.0, 2.0]);
        assert!(c_transform(&[0.0], &c).is_err());
    }

    #[test]
    fn dual_objective_examples() {
        let d = DualPotentials::zeros(2, 2);
        assert_eq!(dual_objective(&d, &[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        let d = DualPotentials::new(vec![1.0], vec![2.0]);
        assert_eq!(dual_objective(&d, &[1.0], &[1.0]).unwrap(), 3.0);
    }

    #[test]
    fn duality_gap_with_zero_duals_is_primal_cost() {
        let c = CostMatrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.5]]).unwrap();
        let p = TransportPlan::outer(&[0.5, 0.5], &[0.5, 0.5]);
        let gap = duality_gap(&c, &p, &DualPotentials::zeros(2, 2), &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!((gap - transport_cost(&c, &p).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn duality_gap_rejects_infeasible_inputs() {
        let c = c2();
        let p = TransportPlan::new(2, 2, vec![0.5, 0.0, 0.0, 0.4]).unwrap();
        let d = DualPotentials::zeros(2, 2);
        assert!(matches!(duality_gap(&c, &p, &d, &[0.5, 0.5], &[0.5, 0.5]), Err(OtError::InfeasiblePrimal { .. })));
        let p = TransportPlan::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let d = DualPotentials::new(vec![1.0, 0.0], vec![0.0, 0.0]);
        assert!(matches!(duality_gap(&c, &p, &d, &[0.5, 0.5], &[0.5, 0.5]), Err(OtError::InfeasibleDual { .. })));
    }

    #[test]
    fn slackness_examples() {
        let c = c2();
        assert_eq!(slackness_residual(&c, &TransportPlan::zeros(2, 2), &DualPotentials::new(vec![5.0, 5.0], vec![0.0, 0.0])).unwrap(), 0.0);
        let c = CostMatrix::new(1, 1, vec![1.0]).unwrap();
        let p = TransportPlan::new(1, 1, vec![1.0]).unwrap();
        assert_eq!(slackness_residual(&c, &p, &DualPotentials::new(vec![1.0], vec![0.0])).unwrap(), 0.0);
    }

    #[test]
    fn product_coupling_suboptimality() {
        let c = c2();
        let p = TransportPlan::outer(&[0.5, 0.5], &[0.5, 0.5]);
        let gap = epsilon_suboptimality(&c, &p, &[0.5, 0.5], &[0.5, 0.5], 0.0).unwrap();
        assert!((gap - 0.5).abs() < 1e-15);
    }
}
