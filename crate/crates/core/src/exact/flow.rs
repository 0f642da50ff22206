//! Exact OT as min-cost flow on the complete bipartite graph.
//!
//! Successive shortest augmenting paths with node potentials (dense
//! Dijkstra), followed by zero-cost cycle cancelling so the returned plan is
//! a vertex of the transportation polytope.

use crate::duality::{c_transform, cbar_transform};
use crate::error::{OtError, Result};
use crate::measure::{
    check_len, require_balanced, transport_cost, CostMatrix, DualPotentials, TransportPlan,
};

/// Largest `n·m` accepted by the exact solver unless overridden.
pub const DEFAULT_CAP_CELLS: usize = 1_000_000;

/// Optimal primal-dual pair certified by complementary slackness.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub plan: TransportPlan,
    pub duals: DualPotentials,
    pub cost: f64,
    /// Number of augmenting paths used.
    pub iterations: usize,
}

pub(crate) fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    for (index, &value) in w.iter().enumerate() {
        if !value.is_finite() {
            return Err(OtError::InvalidInput(format!("{name}[{index}] is not finite")));
        }
        if value < 0.0 {
            return Err(OtError::NegativeEntry { index, value });
        }
    }
    Ok(())
}

/// Solves `min ⟨C, P⟩` over `U(a, b)` exactly with the default size cap.
pub fn solve_exact(a: &[f64], b: &[f64], cost: &CostMatrix) -> Result<ExactSolution> {
    solve_exact_capped(a, b, cost, DEFAULT_CAP_CELLS)
}

pub fn solve_exact_capped(a: &[f64], b: &[f64], cost: &CostMatrix, cap_cells: usize) -> Result<ExactSolution> {
    let (n, m) = cost.shape();
    check_len("a", n, a.len())?;
    check_len("b", m, b.len())?;
    check_weights("a", a)?;
    check_weights("b", b)?;
    require_balanced(a, b)?;
    if n * m > cap_cells {
        return Err(OtError::SizeCapExceeded { cells: n * m, cap: cap_cells });
    }

    // zero-weight rows/columns are solved out and reinstated as zeros
    let rows: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
    let (plan, row_potential, iterations) = if rows.is_empty() || cols.is_empty() {
        (TransportPlan::zeros(n, m), vec![0.0; rows.len()], 0)
    } else {
        let sub = cost.select(&rows, &cols);
        let sa: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
        let sb: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
        let mut flow = FlowState::new(&sub, &sa, &sb);
        let iterations = flow.run()?;
        let row_potential = flow.source_potential.iter().map(|p| -p).collect();
        let mut sub_plan = flow.flow;
        make_basic(&sub, &mut sub_plan);
        let sub_plan = TransportPlan::from_entries_unchecked(rows.len(), cols.len(), sub_plan);
        (sub_plan.embed(n, m, &rows, &cols), row_potential, iterations)
    };

    let duals = complete_duals(cost, &rows, &row_potential)?;
    let cost_value = transport_cost(cost, &plan)?;
    Ok(ExactSolution { plan, duals, cost: cost_value, iterations })
}

/// Extends row potentials on the supported rows to a full feasible pair by
/// alternating C-transforms, which keeps tight edges tight.
fn complete_duals(cost: &CostMatrix, rows: &[usize], w_sub: &[f64]) -> Result<DualPotentials> {
    let z = if rows.is_empty() {
        c_transform(&vec![0.0; cost.rows()], cost)?
    } else {
        let sub = cost.select(rows, &(0..cost.cols()).collect::<Vec<_>>());
        c_transform(w_sub, &sub)?
    };
    let w = cbar_transform(&z, cost)?;
    let z = c_transform(&w, cost)?;
    Ok(DualPotentials::new(w, z))
}

struct FlowState<'a> {
    cost: &'a CostMatrix,
    supply: Vec<f64>,
    demand: Vec<f64>,
    flow: Vec<f64>,
    source_potential: Vec<f64>,
    sink_potential: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Parent {
    Root,
    Source(usize),
    Sink(usize),
}

impl<'a> FlowState<'a> {
    fn new(cost: &'a CostMatrix, a: &[f64], b: &[f64]) -> Self {
        let (n, m) = cost.shape();
        // sink potentials start at column minima so reduced costs are ≥ 0
        let sink_potential = (0..m).map(|j| (0..n).map(|i| cost.get(i, j)).fold(f64::INFINITY, f64::min)).collect();
        Self {
            cost,
            supply: a.to_vec(),
            demand: b.to_vec(),
            flow: vec![0.0; n * m],
            source_potential: vec![0.0; n],
            sink_potential,
        }
    }

    fn run(&mut self) -> Result<usize> {
        let (n, m) = self.cost.shape();
        let guard = 64 * (n + m) * (n + m) + 1024;
        let mut augmentations = 0;
        while self.supply.iter().any(|&s| s > 0.0) && self.demand.iter().any(|&d| d > 0.0) {
            if augmentations >= guard {
                return Err(OtError::NonConvergence(format!(
                    "min-cost flow exceeded {guard} augmentations"
                )));
            }
            self.augment_once()?;
            augmentations += 1;
        }
        Ok(augmentations)
    }

    fn augment_once(&mut self) -> Result<()> {
        let (n, m) = self.cost.shape();
        let nodes = n + m;
        let mut dist = vec![f64::INFINITY; nodes];
        let mut done = vec![false; nodes];
        let mut parent = vec![Parent::Root; nodes];
        for i in 0..n {
            if self.supply[i] > 0.0 {
                dist[i] = 0.0;
            }
        }

        let mut target = None;
        loop {
            let mut best = f64::INFINITY;
            let mut node = usize::MAX;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    node = v;
                }
            }
            if node == usize::MAX {
                break;
            }
            done[node] = true;
            if node >= n {
                let j = node - n;
                if self.demand[j] > 0.0 {
                    target = Some(j);
                    break;
                }
                // residual reverse arcs sink j -> source i
                for i in 0..n {
                    if self.flow[i * m + j] > 0.0 && !done[i] {
                        let reduced = -self.cost.get(i, j) + self.sink_potential[j] - self.source_potential[i];
                        let nd = best + reduced.max(0.0);
                        if nd < dist[i] {
                            dist[i] = nd;
                            parent[i] = Parent::Sink(j);
                        }
                    }
                }
            } else {
                let i = node;
                let row = self.cost.row(i);
                for j in 0..m {
                    if done[n + j] {
                        continue;
                    }
                    let reduced = row[j] + self.source_potential[i] - self.sink_potential[j];
                    let nd = best + reduced.max(0.0);
                    if nd < dist[n + j] {
                        dist[n + j] = nd;
                        parent[n + j] = Parent::Source(i);
                    }
                }
            }
        }

        let t = target.ok_or_else(|| {
            OtError::NonConvergence("no augmenting path between remaining supply and demand".into())
        })?;
        let cap = dist[n + t];
        for i in 0..n {
            self.source_potential[i] += dist[i].min(cap);
        }
        for j in 0..m {
            self.sink_potential[j] += dist[n + j].min(cap);
        }

        // walk back to the root, collecting the bottleneck
        let mut path = Vec::new();
        let mut bottleneck = self.demand[t];
        let mut node = n + t;
        let root = loop {
            match parent[node] {
                Parent::Source(i) => {
                    path.push((i, node - n, true));
                    node = i;
                }
                Parent::Sink(j) => {
                    let i = node;
                    path.push((i, j, false));
                    bottleneck = bottleneck.min(self.flow[i * m + j]);
                    node = n + j;
                }
                Parent::Root => break node,
            }
        };
        bottleneck = bottleneck.min(self.supply[root]);

        for &(i, j, forward) in &path {
            let f = &mut self.flow[i * m + j];
            if forward {
                *f += bottleneck;
            } else {
                *f = (*f - bottleneck).max(0.0);
            }
        }
        self.supply[root] = (self.supply[root] - bottleneck).max(0.0);
        self.demand[t] = (self.demand[t] - bottleneck).max(0.0);
        Ok(())
    }
}

/// Cancels cycles in the support graph until it is a forest, never raising
/// the cost. The result has at most `n + m − 1` positive entries.
pub(crate) fn make_basic(cost: &CostMatrix, flow: &mut [f64]) {
    let (n, m) = cost.shape();
    while let Some(cycle) = find_support_cycle(n, m, flow) {
        // cycle alternates: even positions +, odd positions −
        let plus: f64 = cycle.iter().step_by(2).map(|&(i, j)| cost.get(i, j)).sum();
        let minus: f64 = cycle.iter().skip(1).step_by(2).map(|&(i, j)| cost.get(i, j)).sum();
        let flip = plus > minus;
        let decreasing: Vec<usize> = (0..cycle.len()).filter(|k| (k % 2 == 1) != flip).collect();
        let (arg, theta) = decreasing
            .iter()
            .map(|&k| (k, flow[cycle[k].0 * m + cycle[k].1]))
            .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        for (k, &(i, j)) in cycle.iter().enumerate() {
            let f = &mut flow[i * m + j];
            if k == arg {
                *f = 0.0;
            } else if (k % 2 == 1) != flip {
                *f = (*f - theta).max(0.0);
            } else {
                *f += theta;
            }
        }
    }
}

/// Returns a cycle of support cells ordered so consecutive cells share a row
/// or a column, or `None` if the support is a forest.
fn find_support_cycle(n: usize, m: usize, flow: &[f64]) -> Option<Vec<(usize, usize)>> {
    let mut uf = UnionFind::new(n + m);
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for i in 0..n {
        for j in 0..m {
            if flow[i * m + j] <= 0.0 {
                continue;
            }
            if uf.union(i, n + j) {
                adjacency[i].push(n + j);
                adjacency[n + j].push(i);
                continue;
            }
            // path in the forest from source i to sink j closes a cycle
            let path = forest_path(&adjacency, i, n + j)?;
            let mut cycle = Vec::with_capacity(path.len());
            for w in path.windows(2) {
                let (u, v) = (w[0], w[1]);
                cycle.push(if u < n { (u, v - n) } else { (v, u - n) });
            }
            cycle.push((i, j));
            return Some(cycle);
        }
    }
    None
}

fn forest_path(adjacency: &[Vec<usize>], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; adjacency.len()];
    let mut queue = std::collections::VecDeque::from([from]);
    prev[from] = from;
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut v = to;
            while v != from {
                v = prev[v];
                path.push(v);
            }
            path.reverse();
            return Some(path);
        }
        for &v in &adjacency[u] {
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the two sets; false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
