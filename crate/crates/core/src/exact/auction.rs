//! Auction algorithm for the assignment problem, cost-minimization form.
//!
//! Prices `z` act as discounts: an unassigned person `i` looks for the
//! object minimizing `C_ij − z_j`, and bids the object's price down so the
//! object stays best for `i` by a margin of `epsilon`.

use std::collections::VecDeque;

use crate::error::{OtError, Result};
use crate::measure::{CostMatrix, MongeMap};

/// `(S, ξ, z)` of a running auction.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionState {
    /// `owner[j] = Some(i)` when object `j` is held by person `i`.
    owner: Vec<Option<usize>>,
    assigned: Vec<Option<usize>>,
    prices: Vec<f64>,
    epsilon: f64,
}

impl AuctionState {
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(OtError::InvalidInput(format!("auction epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { owner: vec![None; n], assigned: vec![None; n], prices: vec![0.0; n], epsilon })
    }

    /// Object held by person `i`, if any.
    pub fn assignment_of(&self, i: usize) -> Option<usize> {
        self.assigned[i]
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn assigned_count(&self) -> usize {
        self.assigned.iter().filter(|x| x.is_some()).count()
    }

    /// One bid by person `i`. Returns the person who was outbid, if any.
    fn bid(&mut self, cost: &CostMatrix, i: usize) -> Option<usize> {
        let row = cost.row(i);
        let mut best = (usize::MAX, f64::INFINITY);
        let mut second = f64::INFINITY;
        for (j, (&c, &z)) in row.iter().zip(&self.prices).enumerate() {
            let value = c - z;
            if value < best.1 {
                second = best.1;
                best = (j, value);
            } else if value < second {
                second = value;
            }
        }
        let (j1, v1) = best;
        // with a single object there is no runner-up; only the margin applies
        let gap = if second.is_finite() { second - v1 } else { 0.0 };
        self.prices[j1] -= gap + self.epsilon;
        let previous = self.owner[j1].replace(i);
        if let Some(k) = previous {
            self.assigned[k] = None;
        }
        self.assigned[i] = Some(j1);
        previous
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionResult {
    pub assignment: MongeMap,
    pub prices: Vec<f64>,
    pub cost: f64,
    /// Number of bids placed.
    pub rounds: usize,
}

/// The usual choice `0.01·‖C‖∞` (or 0.01 for an all-zero cost).
pub fn default_auction_epsilon(cost: &CostMatrix) -> f64 {
    let scale = cost.max_abs();
    if scale > 0.0 {
        0.01 * scale
    } else {
        0.01
    }
}

/// Runs the auction to a complete assignment, at most `n·epsilon` above the
/// optimal assignment cost.
pub fn auction_solve(cost: &CostMatrix, epsilon: f64) -> Result<AuctionResult> {
    let (n, m) = cost.shape();
    if n != m {
        return Err(OtError::NonSquare { rows: n, cols: m });
    }
    let mut state = AuctionState::new(n, epsilon)?;
    let span = cost.max_abs();
    let guard = (n as f64 + 1.0) * (2.0 * span / epsilon + 2.0) * n as f64 + 16.0;
    let mut queue: VecDeque<usize> = (0..n).collect();
    let mut rounds = 0usize;
    while let Some(i) = queue.pop_front() {
        if rounds as f64 > guard {
            return Err(OtError::NonConvergence(format!("auction exceeded {rounds} bids")));
        }
        if let Some(k) = state.bid(cost, i) {
            queue.push_back(k);
        }
        rounds += 1;
    }
    let prices = state.prices.clone();
    let assignment: Vec<usize> = state.assigned.iter().map(|j| j.expect("auction ends fully assigned")).collect();
    let assignment = MongeMap::new(assignment, n)?;
    let total = assignment.cost(cost);
    Ok(AuctionResult { assignment, prices, cost: total, rounds })
}
