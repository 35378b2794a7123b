//! Exact transport by the network simplex method on the bipartite
//! transportation graph.
//!
//! The basis is a spanning tree over the `n + m` row/column nodes with
//! `n + m - 1` basic cells. Potentials satisfy `u_i + v_j = c_ij` on basic
//! cells; entering cells are chosen by block search over reduced costs
//! `c_ij - u_i - v_j`, and the leaving cell is the first blocking cell on the
//! cycle the entering cell closes.

use serde::{Deserialize, Serialize};

use super::{normalize_weights, CostMatrix, OtError, Solver, TransportPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdOptions {
    pub max_iter: usize,
}

impl Default for EmdOptions {
    fn default() -> Self {
        EmdOptions { max_iter: 10_000_000 }
    }
}

/// Solves `min <plan, C>` over couplings with marginals `a` and `b`.
///
/// Weights are normalized; atoms with zero weight are removed before solving
/// and reappear as zero rows/columns of the plan.
pub fn solve_emd(a: &[f64], b: &[f64], cost: &CostMatrix, opts: &EmdOptions) -> Result<TransportPlan, OtError> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(OtError::Empty("marginal"));
    }
    if cost.rows() != n || cost.cols() != m {
        return Err(OtError::Shape(format!("cost is {}x{}, marginals are {}x{}", cost.rows(), cost.cols(), n, m)));
    }
    if cost.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(OtError::NonFinite("cost"));
    }
    let a = normalize_weights(a)?;
    let b = normalize_weights(b)?;

    let rows: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
    let sub_a: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
    let sub_b: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
    let mut sub_c = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        for &j in &cols {
            sub_c.push(cost.values[i][j]);
        }
    }

    let mut simplex = Simplex::new(&sub_a, &sub_b, sub_c);
    let iterations = simplex.run(opts.max_iter)?;

    let mut coupling = vec![vec![0.0; m]; n];
    let sm = cols.len();
    for (ri, &i) in rows.iter().enumerate() {
        for (cj, &j) in cols.iter().enumerate() {
            coupling[i][j] = simplex.flow[ri * sm + cj];
        }
    }
    let objective_value = super::frobenius(&coupling, &cost.values);
    Ok(TransportPlan {
        coupling,
        source_marginal: a,
        target_marginal: b,
        objective_value,
        solver: Solver::Emd,
        regularization: None,
        iterations,
        sinkhorn: None,
    })
}

struct Simplex {
    n: usize,
    m: usize,
    cost: Vec<f64>,
    flow: Vec<f64>,
    basic: Vec<bool>,
    /// Tree adjacency: node -> (neighbour node, cell index). Rows are nodes
    /// `0..n`, columns `n..n+m`.
    adj: Vec<Vec<(usize, usize)>>,
    potential: Vec<f64>,
    parent: Vec<usize>,
    parent_cell: Vec<usize>,
    depth: Vec<usize>,
    order: Vec<usize>,
    next_block_start: usize,
    tolerance: f64,
}

const NONE: usize = usize::MAX;

impl Simplex {
    fn new(a: &[f64], b: &[f64], cost: Vec<f64>) -> Self {
        let (n, m) = (a.len(), b.len());
        let cmax = cost.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut s = Simplex {
            n,
            m,
            cost,
            flow: vec![0.0; n * m],
            basic: vec![false; n * m],
            adj: vec![Vec::new(); n + m],
            potential: vec![0.0; n + m],
            parent: vec![NONE; n + m],
            parent_cell: vec![NONE; n + m],
            depth: vec![0; n + m],
            order: Vec::with_capacity(n + m),
            next_block_start: 0,
            tolerance: 1e-12 * cmax.max(1e-300),
        };
        s.north_west_corner(a, b);
        s
    }

    fn add_basic(&mut self, i: usize, j: usize, x: f64) {
        let cell = i * self.m + j;
        self.basic[cell] = true;
        self.flow[cell] = x;
        self.adj[i].push((self.n + j, cell));
        self.adj[self.n + j].push((i, cell));
    }

    fn remove_basic(&mut self, cell: usize) {
        let (i, j) = (cell / self.m, cell % self.m);
        self.basic[cell] = false;
        self.flow[cell] = 0.0;
        let col = self.n + j;
        self.adj[i].retain(|&(_, c)| c != cell);
        self.adj[col].retain(|&(_, c)| c != cell);
    }

    fn north_west_corner(&mut self, a: &[f64], b: &[f64]) {
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra[i].min(rb[j]);
            self.add_basic(i, j, x);
            ra[i] -= x;
            rb[j] -= x;
            if i + 1 == self.n && j + 1 == self.m {
                break;
            }
            if j + 1 == self.m || (i + 1 < self.n && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    /// Recomputes potentials, parents and depths by traversing the tree from
    /// row 0.
    fn refresh_tree(&mut self) {
        self.order.clear();
        self.parent[0] = NONE;
        self.parent_cell[0] = NONE;
        self.depth[0] = 0;
        self.potential[0] = 0.0;
        self.order.push(0);
        let mut head = 0;
        while head < self.order.len() {
            let node = self.order[head];
            head += 1;
            for k in 0..self.adj[node].len() {
                let (next, cell) = self.adj[node][k];
                if next == self.parent[node] && cell == self.parent_cell[node] {
                    continue;
                }
                self.parent[next] = node;
                self.parent_cell[next] = cell;
                self.depth[next] = self.depth[node] + 1;
                // u_i + v_j = c_ij
                self.potential[next] = self.cost[cell] - self.potential[node];
                self.order.push(next);
            }
        }
        debug_assert_eq!(self.order.len(), self.n + self.m, "basis must span all nodes");
    }

    fn reduced_cost(&self, cell: usize) -> f64 {
        let (i, j) = (cell / self.m, cell % self.m);
        self.cost[cell] - self.potential[i] - self.potential[self.n + j]
    }

    /// Block pricing: scans blocks of cells cyclically and returns the most
    /// negative reduced cost of the first block that contains one.
    fn entering_cell(&mut self) -> Option<usize> {
        let total = self.n * self.m;
        let block = ((total as f64).sqrt().ceil() as usize).max(1);
        let mut best = NONE;
        let mut best_rc = -self.tolerance;
        let mut scanned = 0;
        let mut pos = self.next_block_start;
        while scanned < total {
            let end = (scanned + block).min(total);
            while scanned < end {
                if !self.basic[pos] {
                    let rc = self.reduced_cost(pos);
                    if rc < best_rc {
                        best_rc = rc;
                        best = pos;
                    }
                }
                pos += 1;
                if pos == total {
                    pos = 0;
                }
                scanned += 1;
            }
            if best != NONE {
                self.next_block_start = pos;
                return Some(best);
            }
        }
        None
    }

    fn pivot(&mut self, entering: usize) {
        let (i, j) = (entering / self.m, entering % self.m);
        // Walk from the column node and the row node up to their common
        // ancestor; the cycle is entering cell + path(column -> row).
        let mut from_col = Vec::new();
        let mut from_row = Vec::new();
        let (mut p, mut q) = (self.n + j, i);
        while self.depth[p] > self.depth[q] {
            from_col.push(self.parent_cell[p]);
            p = self.parent[p];
        }
        while self.depth[q] > self.depth[p] {
            from_row.push(self.parent_cell[q]);
            q = self.parent[q];
        }
        while p != q {
            from_col.push(self.parent_cell[p]);
            p = self.parent[p];
            from_row.push(self.parent_cell[q]);
            q = self.parent[q];
        }
        let path: Vec<usize> = from_col.into_iter().chain(from_row.into_iter().rev()).collect();

        // Cells at even positions along the path lose flow.
        let mut theta = f64::INFINITY;
        let mut leaving = NONE;
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 && self.flow[cell] < theta {
                theta = self.flow[cell];
                leaving = cell;
            }
        }
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[cell] = (self.flow[cell] - theta).max(0.0);
            } else {
                self.flow[cell] += theta;
            }
        }
        self.remove_basic(leaving);
        self.add_basic(i, j, theta);
    }

    fn run(&mut self, max_iter: usize) -> Result<usize, OtError> {
        let mut iterations = 0;
        loop {
            self.refresh_tree();
            let Some(entering) = self.entering_cell() else {
                return Ok(iterations);
            };
            if iterations >= max_iter {
                return Err(OtError::EmdNotConverged { iterations });
            }
            self.pivot(entering);
            iterations += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::Metric;

    fn cm(v: Vec<Vec<f64>>) -> CostMatrix {
        CostMatrix { values: v, metric: Metric::SqEuclidean }
    }

    #[test]
    fn forced_coupling() {
        let p = solve_emd(&[1.0], &[1.0], &cm(vec![vec![4.0]]), &EmdOptions::default()).unwrap();
        assert_eq!(p.coupling, vec![vec![1.0]]);
        assert_eq!(p.objective_value, 4.0);
    }

    #[test]
    fn identity_optimum() {
        let c = cm(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p = solve_emd(&[0.5, 0.5], &[0.5, 0.5], &c, &EmdOptions::default()).unwrap();
        assert_eq!(p.coupling, vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert_eq!(p.objective_value, 0.0);
    }

    #[test]
    fn unbalanced_two_by_two() {
        let c = cm(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p = solve_emd(&[0.3, 0.7], &[0.7, 0.3], &c, &EmdOptions::default()).unwrap();
        let want = [[0.3, 0.0], [0.4, 0.3]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.coupling[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
        assert!((p.objective_value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_atoms_are_dropped() {
        let c = cm(vec![vec![0.0, 5.0], vec![9.0, 1.0], vec![2.0, 0.0]]);
        let p = solve_emd(&[0.5, 0.0, 0.5], &[0.5, 0.5], &c, &EmdOptions::default()).unwrap();
        assert_eq!(p.coupling[1], vec![0.0, 0.0]);
        assert!((p.objective_value - 0.0).abs() < 1e-15);
        assert!(p.marginal_residual() < 1e-12);
    }

    #[test]
    fn rejects_all_zero_weights() {
        let c = cm(vec![vec![1.0]]);
        assert!(matches!(solve_emd(&[0.0], &[1.0], &c, &EmdOptions::default()), Err(OtError::Weights(_))));
    }

    #[test]
    fn permutation_is_recovered_for_large_instances() {
        // Points on a line matched to a shifted copy: the optimum is the
        // monotone matching, cost = shift^2.
        let n = 120;
        let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 * 0.37).sin() * 3.0 + i as f64 * 0.01]).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] + 0.05]).collect();
        let c = crate::ot::cost_matrix(&xs, &ys).unwrap();
        let w = vec![1.0 / n as f64; n];
        let p = solve_emd(&w, &w, &c, &EmdOptions::default()).unwrap();
        assert!((p.objective_value - 0.0025).abs() < 1e-12, "{}", p.objective_value);
        assert!(p.marginal_residual() < 1e-12);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let c = cm(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let err = solve_emd(&[0.5, 0.5], &[0.5, 0.5], &c, &EmdOptions { max_iter: 0 }).unwrap_err();
        assert!(matches!(err, OtError::EmdNotConverged { iterations: 0 }));
    }
}
