//! JSON file formats. Every emitted float carries 17 significant digits, so
//! files round-trip bit-exactly through the parser.

use std::path::Path;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{OtError, Result};
use crate::extensions::barycenter::BarycenterProblem;
use crate::extensions::multimarginal::CostTensor;
use crate::measure::{CostMatrix, DiscreteMeasure, DualPotentials, TransportPlan};
use crate::problem::Problem;

/// Formats a float with 17 significant digits (`d.dddddddddddddddde±x`).
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn raw_number(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() { fmt_f64(x) } else { "null".to_string() };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

/// Serializes a float with 17 significant digits; non-finite values become `null`.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        raw_number(self.0).serialize(s)
    }
}

/// Serializes a float slice with 17 significant digits per element.
#[derive(Debug, Clone, Copy)]
pub struct Nums<'a>(pub &'a [f64]);

impl Serialize for Nums<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for &x in self.0 {
            seq.serialize_element(&raw_number(x))?;
        }
        seq.end()
    }
}

#[derive(Deserialize)]
struct ProblemIn {
    n: usize,
    m: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    #[serde(rename = "C")]
    c: Vec<f64>,
}

#[derive(Serialize)]
struct ProblemOut<'a> {
    n: usize,
    m: usize,
    a: Nums<'a>,
    b: Nums<'a>,
    #[serde(rename = "C")]
    c: Nums<'a>,
}

#[derive(Deserialize)]
struct PlanIn {
    n: usize,
    m: usize,
    #[serde(rename = "P")]
    p: Vec<f64>,
}

#[derive(Serialize)]
struct PlanOut<'a> {
    n: usize,
    m: usize,
    #[serde(rename = "P")]
    p: Nums<'a>,
}

#[derive(Deserialize)]
struct DualsIn {
    w: Vec<f64>,
    z: Vec<f64>,
}

#[derive(Serialize)]
struct DualsOut<'a> {
    w: Nums<'a>,
    z: Nums<'a>,
}

fn shape_check(field: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(OtError::Parse(format!("field `{field}` has {found} entries, expected {expected}")));
    }
    Ok(())
}

pub fn problem_to_json(problem: &Problem) -> String {
    serde_json::to_string(&ProblemOut {
        n: problem.cost.rows(),
        m: problem.cost.cols(),
        a: Nums(problem.a.weights()),
        b: Nums(problem.b.weights()),
        c: Nums(problem.cost.entries()),
    })
    .expect("problem serializes")
}

pub fn problem_from_json(text: &str) -> Result<Problem> {
    let raw: ProblemIn = serde_json::from_str(text)?;
    shape_check("a", raw.n, raw.a.len())?;
    shape_check("b", raw.m, raw.b.len())?;
    shape_check("C", raw.n * raw.m, raw.c.len())?;
    let parse = |e: OtError| OtError::Parse(e.to_string());
    Ok(Problem {
        a: DiscreteMeasure::new(raw.a).map_err(parse)?,
        b: DiscreteMeasure::new(raw.b).map_err(parse)?,
        cost: CostMatrix::new(raw.n, raw.m, raw.c).map_err(parse)?,
    })
}

pub fn plan_to_json(plan: &TransportPlan) -> String {
    serde_json::to_string(&PlanOut { n: plan.rows(), m: plan.cols(), p: Nums(plan.entries()) })
        .expect("plan serializes")
}

pub fn plan_from_json(text: &str) -> Result<TransportPlan> {
    let raw: PlanIn = serde_json::from_str(text)?;
    shape_check("P", raw.n * raw.m, raw.p.len())?;
    TransportPlan::new(raw.n, raw.m, raw.p).map_err(|e| OtError::Parse(e.to_string()))
}

pub fn duals_to_json(d: &DualPotentials) -> String {
    serde_json::to_string(&DualsOut { w: Nums(&d.w), z: Nums(&d.z) }).expect("duals serialize")
}

pub fn duals_from_json(text: &str) -> Result<DualPotentials> {
    let raw: DualsIn = serde_json::from_str(text)?;
    Ok(DualPotentials::new(raw.w, raw.z))
}

#[derive(Deserialize)]
struct BarycenterInputIn {
    a: Vec<f64>,
    #[serde(rename = "C")]
    c: Vec<f64>,
}

#[derive(Deserialize)]
struct BarycenterIn {
    #[serde(rename = "K")]
    k: usize,
    m: usize,
    weights: Vec<f64>,
    inputs: Vec<BarycenterInputIn>,
}

#[derive(Serialize)]
struct BarycenterInputOut<'a> {
    a: Nums<'a>,
    #[serde(rename = "C")]
    c: Nums<'a>,
}

#[derive(Serialize)]
struct BarycenterOut<'a> {
    #[serde(rename = "K")]
    k: usize,
    m: usize,
    weights: Nums<'a>,
    inputs: Vec<BarycenterInputOut<'a>>,
}

pub fn barycenter_from_json(text: &str) -> Result<BarycenterProblem> {
    let raw: BarycenterIn = serde_json::from_str(text)?;
    shape_check("weights", raw.k, raw.weights.len())?;
    shape_check("inputs", raw.k, raw.inputs.len())?;
    let parse = |e: OtError| OtError::Parse(e.to_string());
    let mut inputs = Vec::with_capacity(raw.k);
    let mut costs = Vec::with_capacity(raw.k);
    for (k, input) in raw.inputs.into_iter().enumerate() {
        let n = input.a.len();
        if input.c.len() != n * raw.m {
            return Err(OtError::Parse(format!(
                "input {k}: C has {} entries, expected {}x{}",
                input.c.len(),
                n,
                raw.m
            )));
        }
        inputs.push(DiscreteMeasure::new(input.a).map_err(parse)?);
        costs.push(CostMatrix::new(n, raw.m, input.c).map_err(parse)?);
    }
    BarycenterProblem::new(inputs, raw.weights, costs).map_err(parse)
}

pub fn barycenter_to_json(problem: &BarycenterProblem) -> String {
    let inputs = problem
        .inputs()
        .iter()
        .zip(problem.costs())
        .map(|(a, c)| BarycenterInputOut { a: Nums(a.weights()), c: Nums(c.entries()) })
        .collect();
    serde_json::to_string(&BarycenterOut {
        k: problem.inputs().len(),
        m: problem.support_size(),
        weights: Nums(problem.weights()),
        inputs,
    })
    .expect("barycenter problem serializes")
}

#[derive(Deserialize)]
struct MultimarginalIn {
    #[serde(rename = "K")]
    k: usize,
    dims: Vec<usize>,
    cost: Vec<f64>,
    marginals: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct MultimarginalOut<'a> {
    #[serde(rename = "K")]
    k: usize,
    dims: &'a [usize],
    cost: Nums<'a>,
    marginals: Vec<Nums<'a>>,
}

pub fn multimarginal_from_json(text: &str) -> Result<(CostTensor, Vec<DiscreteMeasure>)> {
    let raw: MultimarginalIn = serde_json::from_str(text)?;
    shape_check("dims", raw.k, raw.dims.len())?;
    shape_check("marginals", raw.k, raw.marginals.len())?;
    let parse = |e: OtError| OtError::Parse(e.to_string());
    let tensor = CostTensor::new(raw.dims, raw.cost).map_err(parse)?;
    let marginals = raw
        .marginals
        .into_iter()
        .map(|w| DiscreteMeasure::new(w).map_err(parse))
        .collect::<Result<Vec<_>>>()?;
    Ok((tensor, marginals))
}

pub fn multimarginal_to_json(tensor: &CostTensor, marginals: &[DiscreteMeasure]) -> String {
    serde_json::to_string(&MultimarginalOut {
        k: tensor.dims().len(),
        dims: tensor.dims(),
        cost: Nums(tensor.entries()),
        marginals: marginals.iter().map(|m| Nums(m.weights())).collect(),
    })
    .expect("multimarginal problem serializes")
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| OtError::Io(format!("{}: {e}", path.display())))
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| OtError::Io(format!("{}: {e}", path.display())))
}
