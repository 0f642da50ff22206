//! Solver configuration files and a single dispatch point over every
//! registered algorithm.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::entropic::{accelerated_sinkhorn, greenkhorn, sinkhorn, EntropicOptions, LogDomain};
use crate::error::{OtError, Result};
use crate::exact::{auction_solve, default_auction_epsilon, round_to_feasible, solve_exact_capped, DEFAULT_CAP_CELLS};
use crate::measure::{DualPotentials, TransportPlan};
use crate::primal_dual::{apdgcd, apdrcd, extragradient_ot, ApdOptions, ExtragradOptions};
use crate::problem::Problem;
use crate::trace::ConvergenceTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Exact,
    Auction,
    Sinkhorn,
    Greenkhorn,
    AccelSinkhorn,
    Apdrcd,
    Apdgcd,
    Extragradient,
}

impl Algo {
    pub const ALL: [Algo; 8] = [
        Algo::Exact,
        Algo::Auction,
        Algo::Sinkhorn,
        Algo::Greenkhorn,
        Algo::AccelSinkhorn,
        Algo::Apdrcd,
        Algo::Apdgcd,
        Algo::Extragradient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Exact => "exact",
            Algo::Auction => "auction",
            Algo::Sinkhorn => "sinkhorn",
            Algo::Greenkhorn => "greenkhorn",
            Algo::AccelSinkhorn => "accel-sinkhorn",
            Algo::Apdrcd => "apdrcd",
            Algo::Apdgcd => "apdgcd",
            Algo::Extragradient => "extragradient",
        }
    }

    /// Algorithms driven by an entropic strength `η`.
    pub fn is_entropic(self) -> bool {
        matches!(self, Algo::Sinkhorn | Algo::Greenkhorn | Algo::AccelSinkhorn)
    }

    /// Algorithms driven by an accuracy target `ε`.
    pub fn is_primal_dual(self) -> bool {
        matches!(self, Algo::Apdrcd | Algo::Apdgcd | Algo::Extragradient)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = OtError;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| OtError::Parse(format!("unknown algorithm {s:?}")))
    }
}

impl<'de> Deserialize<'de> for Algo {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LogDomainField {
    Flag(bool),
    Name(String),
}

fn parse_log_domain<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<LogDomain, D::Error> {
    match LogDomainField::deserialize(d)? {
        LogDomainField::Flag(true) => Ok(LogDomain::Always),
        LogDomainField::Flag(false) => Ok(LogDomain::Never),
        LogDomainField::Name(s) if s == "auto" => Ok(LogDomain::Auto),
        LogDomainField::Name(s) => Err(serde::de::Error::custom(format!("log_domain must be \"auto\", true or false, got {s:?}"))),
    }
}

/// Solver config file. Unset fields fall back to per-algorithm defaults.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub algo: Algo,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default = "auto_log_domain", deserialize_with = "parse_log_domain")]
    pub log_domain: LogDomain,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Dual box radius of the extragradient method.
    #[serde(default, rename = "B")]
    pub b_param: Option<f64>,
    /// Accuracy target in cost units for the primal-dual methods, and the
    /// bidding increment for the auction.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub cap_cells: Option<usize>,
}

fn auto_log_domain() -> LogDomain {
    LogDomain::Auto
}

impl SolverConfig {
    pub fn new(algo: Algo) -> Self {
        Self {
            algo,
            eta: None,
            tol: None,
            max_iter: None,
            log_domain: LogDomain::Auto,
            seed: None,
            b_param: None,
            eps: None,
            cap_cells: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `η` used for `problem`: the configured value, else `ε/(4 ln n)` when
    /// `eps` is set, else `0.01‖C‖∞`.
    pub fn resolved_eta(&self, problem: &Problem) -> f64 {
        if let Some(eta) = self.eta {
            return eta;
        }
        if let Some(eps) = self.eps {
            return eps / (4.0 * (problem.n().max(problem.m()).max(2) as f64).ln());
        }
        0.01 * cost_scale(problem)
    }

    /// `ε` used for `problem`: the configured value, else `0.01‖C‖∞`.
    pub fn resolved_eps(&self, problem: &Problem) -> f64 {
        self.eps.unwrap_or_else(|| 0.01 * cost_scale(problem))
    }
}

fn cost_scale(problem: &Problem) -> f64 {
    let scale = problem.cost.max_abs();
    if scale > 0.0 {
        scale
    } else {
        1.0
    }
}

/// Output of [`run_solver`]. `plan` is always feasible; `raw_plan` is the
/// solver iterate before rounding.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub algo: Algo,
    pub plan: TransportPlan,
    pub raw_plan: TransportPlan,
    pub duals: Option<DualPotentials>,
    pub trace: ConvergenceTrace,
    pub iterations: usize,
    pub converged: bool,
    /// Entropic strength, for the algorithms that use one.
    pub eta: Option<f64>,
}

pub fn run_solver(problem: &Problem, config: &SolverConfig) -> Result<SolverRun> {
    let (a, b, cost) = (problem.a.weights(), problem.b.weights(), &problem.cost);
    let algo = config.algo;
    match algo {
        Algo::Exact => {
            let s = solve_exact_capped(a, b, cost, config.cap_cells.unwrap_or(DEFAULT_CAP_CELLS))?;
            Ok(SolverRun {
                algo,
                raw_plan: s.plan.clone(),
                plan: s.plan,
                duals: Some(s.duals),
                trace: ConvergenceTrace::new(),
                iterations: s.iterations,
                converged: true,
                eta: None,
            })
        }
        Algo::Auction => {
            let n = a.len();
            let uniform = |w: &[f64]| w.iter().all(|x| (x - 1.0 / n as f64).abs() <= 1e-12);
            if cost.rows() != cost.cols() {
                return Err(OtError::NonSquare { rows: cost.rows(), cols: cost.cols() });
            }
            if !uniform(a) || !uniform(b) {
                return Err(OtError::InvalidInput("auction needs uniform marginals".into()));
            }
            let eps = config.eps.unwrap_or_else(|| default_auction_epsilon(cost));
            let r = auction_solve(cost, eps)?;
            let plan = r.assignment.to_plan(a);
            Ok(SolverRun {
                algo,
                raw_plan: plan.clone(),
                plan,
                duals: None,
                trace: ConvergenceTrace::new(),
                iterations: r.rounds,
                converged: true,
                eta: None,
            })
        }
        Algo::Sinkhorn | Algo::Greenkhorn | Algo::AccelSinkhorn => {
            let eta = config.resolved_eta(problem);
            let mut opts = EntropicOptions::new(eta).log_domain(config.log_domain);
            if let Some(tol) = config.tol {
                opts = opts.tol(tol);
            }
            if let Some(max_iter) = config.max_iter {
                opts = opts.max_iter(max_iter);
            }
            let s = match algo {
                Algo::Sinkhorn => sinkhorn(a, b, cost, &opts)?,
                Algo::Greenkhorn => greenkhorn(a, b, cost, &opts)?,
                _ => accelerated_sinkhorn(a, b, cost, &opts)?,
            };
            let plan = round_to_feasible(&s.plan, a, b)?;
            Ok(SolverRun {
                algo,
                plan,
                raw_plan: s.plan,
                duals: None,
                iterations: s.scaling.iteration,
                trace: s.trace,
                converged: s.converged,
                eta: Some(eta),
            })
        }
        Algo::Apdrcd | Algo::Apdgcd => {
            let mut opts = ApdOptions::new(config.resolved_eps(problem)).seed(config.seed.unwrap_or(0));
            if let Some(eta) = config.eta {
                opts = opts.eta(eta);
            }
            if let Some(max_iter) = config.max_iter {
                opts = opts.max_iter(max_iter);
            }
            let s = if algo == Algo::Apdrcd { apdrcd(a, b, cost, &opts)? } else { apdgcd(a, b, cost, &opts)? };
            let eta = opts.eta.unwrap_or_else(|| opts.epsilon / (4.0 * (a.len().max(2) as f64).ln()));
            Ok(primal_dual_run(algo, s, Some(eta)))
        }
        Algo::Extragradient => {
            let mut opts = ExtragradOptions::new(config.resolved_eps(problem));
            if let Some(b_param) = config.b_param {
                opts = opts.b_param(b_param);
            }
            if let Some(max_iter) = config.max_iter {
                opts = opts.max_iter(max_iter);
            }
            Ok(primal_dual_run(algo, extragradient_ot(a, b, cost, &opts)?, None))
        }
    }
}

fn primal_dual_run(algo: Algo, s: crate::primal_dual::PrimalDualSolution, eta: Option<f64>) -> SolverRun {
    SolverRun {
        algo,
        plan: s.plan,
        raw_plan: s.raw_plan,
        duals: None,
        trace: s.trace,
        iterations: s.iterations,
        converged: s.converged,
        eta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{CostMatrix, DiscreteMeasure};

    fn problem() -> Problem {
        Problem::new(
            DiscreteMeasure::uniform(2).unwrap(),
            DiscreteMeasure::uniform(2).unwrap(),
            CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn parses_configs() {
        let c = SolverConfig::from_json(r#"{"algo":"sinkhorn","eta":0.1,"tol":1e-9,"max_iter":10,"log_domain":true}"#).unwrap();
        assert_eq!(c.algo, Algo::Sinkhorn);
        assert_eq!(c.log_domain, LogDomain::Always);
        assert_eq!(c.max_iter, Some(10));
        let c = SolverConfig::from_json(r#"{"algo":"extragradient","B":2.0,"seed":3}"#).unwrap();
        assert_eq!(c.b_param, Some(2.0));
        assert_eq!(c.log_domain, LogDomain::Auto);
        assert!(SolverConfig::from_json(r#"{"algo":"simplex"}"#).is_err());
        assert!(SolverConfig::from_json(r#"{"algo":"sinkhorn","log_domain":"maybe"}"#).is_err());
        assert!(SolverConfig::from_json(r#"{"algo":"sinkhorn","etaa":1}"#).is_err());
    }

    #[test]
    fn every_algorithm_returns_a_feasible_plan() {
        let p = problem();
        for algo in Algo::ALL {
            let mut cfg = SolverConfig::new(algo);
            cfg.eps = Some(if algo == Algo::Auction { 0.01 } else { 0.05 });
            let run = run_solver(&p, &cfg).unwrap();
            assert!(run.plan.is_feasible(p.a.weights(), p.b.weights(), 1e-9), "{algo}");
            let cost = crate::measure::transport_cost(&p.cost, &run.plan).unwrap();
            assert!(cost <= 0.05 + 1e-9, "{algo}: {cost}");
        }
    }

    #[test]
    fn algo_names_round_trip() {
        for algo in Algo::ALL {
            assert_eq!(algo.name().parse::<Algo>().unwrap(), algo);
        }
    }
}
