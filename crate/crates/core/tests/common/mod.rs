#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive weights summing to one.
pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

pub fn random_cost(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Minimum of `<P, C>` over the transport polytope by enumerating its
/// vertices. Every vertex is the unique flow on some spanning tree of the
/// complete bipartite graph whose flows are non-negative, so trying every
/// subset of `n + m - 1` cells finds them all.
pub fn brute_force_emd(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let size = n + m - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(size);
    subsets(&cells, size, 0, &mut chosen, &mut |edges| {
        if let Some(flow) = tree_flow(a, b, edges) {
            let v: f64 = edges.iter().zip(&flow).map(|(&(i, j), f)| f * cost[i][j]).sum();
            best = best.min(v);
        }
    });
    best
}

fn subsets<F: FnMut(&[(usize, usize)])>(
    cells: &[(usize, usize)],
    size: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    if chosen.len() == size {
        visit(chosen);
        return;
    }
    for k in start..cells.len() {
        if cells.len() - k < size - chosen.len() {
            break;
        }
        chosen.push(cells[k]);
        subsets(cells, size, k + 1, chosen, visit);
        chosen.pop();
    }
}

/// Flows on a spanning tree (rows are nodes `0..n`, columns `n..n+m`),
/// or `None` if the edges contain a cycle or some flow is negative.
fn tree_flow(a: &[f64], b: &[f64], edges: &[(usize, usize)]) -> Option<Vec<f64>> {
    let n = a.len();
    let total = n + b.len();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, n + j));
        if ri == rj {
            return None;
        }
        parent[ri] = rj;
    }
    // Peel leaves: a leaf's only edge carries its whole remaining supply.
    let mut supply: Vec<f64> = a.iter().copied().chain(b.iter().copied()).collect();
    let mut flow = vec![f64::NAN; edges.len()];
    let mut done = vec![false; edges.len()];
    for _ in 0..edges.len() {
        let mut degree = vec![0usize; total];
        for (k, &(i, j)) in edges.iter().enumerate() {
            if !done[k] {
                degree[i] += 1;
                degree[n + j] += 1;
            }
        }
        let (k, leaf, other) = edges
            .iter()
            .enumerate()
            .filter(|(k, _)| !done[*k])
            .find_map(|(k, &(i, j))| {
                if degree[i] == 1 {
                    Some((k, i, n + j))
                } else if degree[n + j] == 1 {
                    Some((k, n + j, i))
                } else {
                    None
                }
            })?;
        flow[k] = supply[leaf];
        supply[other] -= supply[leaf];
        supply[leaf] = 0.0;
        done[k] = true;
    }
    if flow.iter().any(|&f| f < -1e-12) {
        return None;
    }
    Some(flow)
}

/// Type-7 quantile, written out independently of the library.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|x, y| x.total_cmp(y));
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}
