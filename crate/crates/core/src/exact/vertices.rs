//! Brute-force optimum by walking every basic feasible solution of the
//! transportation polytope. Independent of the flow solver, used as an
//! oracle on tiny instances.

use std::collections::VecDeque;

use rustc_hash::FxHashSet;

use crate::error::{OtError, Result};
use crate::exact::flow::check_weights;
use crate::measure::{check_len, require_balanced, CostMatrix};

/// Largest side accepted by the enumeration.
pub const MAX_ORACLE_SIDE: usize = 6;

const VISIT_LIMIT: usize = 5_000_000;

/// Minimum of `⟨C, P⟩` over all bases reachable by simplex pivots from the
/// northwest-corner basis. Every basis is visited, degenerate ones included.
pub fn enumerate_vertices_oracle(a: &[f64], b: &[f64], cost: &CostMatrix) -> Result<f64> {
    let (n, m) = cost.shape();
    check_len("a", n, a.len())?;
    check_len("b", m, b.len())?;
    if n > MAX_ORACLE_SIDE || m > MAX_ORACLE_SIDE {
        return Err(OtError::SizeCapExceeded { cells: n * m, cap: MAX_ORACLE_SIDE * MAX_ORACLE_SIDE });
    }
    check_weights("a", a)?;
    check_weights("b", b)?;
    require_balanced(a, b)?;

    // zero-mass rows and columns carry no flow in any feasible plan
    let rows: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Ok(0.0);
    }
    let a: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
    let cost = cost.select(&rows, &cols);
    let tree = Tree { n: rows.len(), m: cols.len(), a: &a, b: &b };
    let (n, m) = (tree.n, tree.m);
    let scale = a.iter().sum::<f64>().max(1.0);
    let tol = 1e-12 * scale;

    let start = tree.northwest_corner();
    let mut seen = FxHashSet::default();
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    let mut best = f64::INFINITY;
    let mut x = [0.0; CELLS];
    let mut walk = Walk::default();
    let mut cycle = Vec::with_capacity(2 * NODES);
    while let Some(basis) = queue.pop_front() {
        if seen.len() > VISIT_LIMIT {
            return Err(OtError::NonConvergence("vertex enumeration visited too many bases".into()));
        }
        if !tree.solve(basis, &mut x) {
            unreachable!("stored bases are spanning trees");
        }
        let value: f64 = cells_of(basis).map(|k| x[k] * cost.entries()[k]).sum();
        best = best.min(value);

        walk.root(&tree, basis);
        for entering in (0..n * m).filter(|&k| basis & (1 << k) == 0) {
            walk.cycle(&tree, entering, &mut cycle);
            // cells at odd cycle positions lose mass
            let theta = cycle.iter().skip(1).step_by(2).map(|&k| x[k]).fold(f64::INFINITY, f64::min);
            for &leaving in cycle.iter().skip(1).step_by(2) {
                if x[leaving] - theta > tol {
                    continue;
                }
                let next = (basis | (1 << entering)) & !(1u64 << leaving);
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(best)
}

const NODES: usize = 2 * MAX_ORACLE_SIDE;
const CELLS: usize = MAX_ORACLE_SIDE * MAX_ORACLE_SIDE;

fn cells_of(basis: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&k| basis & (1 << k) != 0)
}

/// Transportation data of an instance without zero-mass rows or columns.
/// Node `i < n` is row `i`, node `n + j` is column `j`.
struct Tree<'a> {
    n: usize,
    m: usize,
    a: &'a [f64],
    b: &'a [f64],
}

impl Tree<'_> {
    fn northwest_corner(&self) -> u64 {
        let (mut i, mut j) = (0, 0);
        let mut row_left = self.a[0];
        let mut col_left = self.b[0];
        let mut basis = 0u64;
        loop {
            basis |= 1 << (i * self.m + j);
            if i == self.n - 1 && j == self.m - 1 {
                break;
            }
            let shipped = row_left.min(col_left);
            row_left -= shipped;
            col_left -= shipped;
            // advance the row only when it is done or the columns are
            let advance_row = j == self.m - 1 || (i < self.n - 1 && row_left <= col_left);
            if advance_row {
                i += 1;
                row_left = self.a[i];
            } else {
                j += 1;
                col_left = self.b[j];
            }
        }
        basis
    }

    /// Basic values of a spanning-tree basis by leaf peeling. Returns false
    /// if the cells do not form a spanning tree.
    fn solve(&self, basis: u64, x: &mut [f64; CELLS]) -> bool {
        let (n, m) = (self.n, self.m);
        let mut cells = [0usize; NODES];
        let mut count = 0;
        for k in cells_of(basis) {
            if count == n + m - 1 {
                return false;
            }
            cells[count] = k;
            count += 1;
        }
        if count != n + m - 1 {
            return false;
        }
        let mut residual = [0.0; NODES];
        residual[..n].copy_from_slice(self.a);
        residual[n..n + m].copy_from_slice(self.b);
        let mut degree = [0usize; NODES];
        for &k in &cells[..count] {
            degree[k / m] += 1;
            degree[n + k % m] += 1;
        }
        let mut alive = (1u32 << count) - 1;
        while alive != 0 {
            let mut progressed = false;
            for (e, &k) in cells[..count].iter().enumerate() {
                if alive & (1 << e) == 0 {
                    continue;
                }
                let (r, c) = (k / m, n + k % m);
                let (leaf, other) = if degree[r] == 1 {
                    (r, c)
                } else if degree[c] == 1 {
                    (c, r)
                } else {
                    continue;
                };
                x[k] = residual[leaf];
                residual[other] -= residual[leaf];
                residual[leaf] = 0.0;
                degree[r] -= 1;
                degree[c] -= 1;
                alive &= !(1 << e);
                progressed = true;
            }
            if !progressed {
                return false;
            }
        }
        true
    }
}

/// A basis tree rooted at row 0, for walking cycles.
#[derive(Default)]
struct Walk {
    /// Parent node and the cell joining it, per node.
    parent: [(usize, usize); NODES],
    depth: [usize; NODES],
}

impl Walk {
    fn root(&mut self, tree: &Tree, basis: u64) {
        let (n, m) = (tree.n, tree.m);
        let mut adjacency = [0u16; NODES];
        for k in cells_of(basis) {
            let (r, c) = (k / m, n + k % m);
            adjacency[r] |= 1 << c;
            adjacency[c] |= 1 << r;
        }
        let mut stack = [0usize; NODES];
        let mut top = 1;
        let mut visited = 1u16;
        self.depth[0] = 0;
        while top > 0 {
            top -= 1;
            let u = stack[top];
            let mut next = adjacency[u] & !visited;
            while next != 0 {
                let v = next.trailing_zeros() as usize;
                next &= next - 1;
                visited |= 1 << v;
                let cell = if u < n { u * m + (v - n) } else { v * m + (u - n) };
                self.parent[v] = (u, cell);
                self.depth[v] = self.depth[u] + 1;
                stack[top] = v;
                top += 1;
            }
        }
    }

    /// Cycle closed by `entering`: the entering cell, then the tree path
    /// from its column back to its row. Positions alternate gain and loss.
    fn cycle(&self, tree: &Tree, entering: usize, cycle: &mut Vec<usize>) {
        let (n, m) = (tree.n, tree.m);
        let (mut u, mut v) = (n + entering % m, entering / m);
        cycle.clear();
        cycle.push(entering);
        let mut tail = [0usize; NODES];
        let mut tail_len = 0;
        while u != v {
            if self.depth[u] >= self.depth[v] {
                let (p, k) = self.parent[u];
                cycle.push(k);
                u = p;
            } else {
                let (p, k) = self.parent[v];
                tail[tail_len] = k;
                tail_len += 1;
                v = p;
            }
        }
        cycle.extend(tail[..tail_len].iter().rev());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        let c = CostMatrix::new(1, 1, vec![3.5]).unwrap();
        assert_eq!(enumerate_vertices_oracle(&[2.0], &[2.0], &c).unwrap(), 7.0);
    }

    #[test]
    fn two_by_two() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let v = enumerate_vertices_oracle(&[0.7, 0.3], &[0.4, 0.6], &c).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
    }

    #[test]
    fn degenerate_marginals() {
        // every northwest step ties; bases are heavily degenerate
        let c = CostMatrix::from_rows(&[vec![3.0, 1.0, 2.0], vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 1.0]]).unwrap();
        let w = [1.0 / 3.0; 3];
        let v = enumerate_vertices_oracle(&w, &w, &c).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_large_inputs() {
        let c = CostMatrix::from_fn(7, 1, |_, _| 0.0).unwrap();
        assert!(matches!(
            enumerate_vertices_oracle(&[1.0; 7], &[7.0], &c),
            Err(OtError::SizeCapExceeded { .. })
        ));
    }
}
