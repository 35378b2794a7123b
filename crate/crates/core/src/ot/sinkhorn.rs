//! Entropic transport by Sinkhorn-Knopp scaling in the log domain.
//!
//! Solves `min <P, C> + reg * sum P log P` over couplings with marginals
//! `a`, `b`. Dual potentials `f`, `g` are updated by alternating soft-min
//! steps, so the coupling `exp((f_i + g_j - C_ij) / reg)` never under- or
//! overflows even for very small `reg`.

use serde::{Deserialize, Serialize};

use super::{normalize_weights, CostMatrix, OtError, Solver, TransportPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornOptions {
    pub max_iter: usize,
    /// Stop once both marginals are matched to this tolerance.
    pub tolerance: f64,
    /// Divide the cost by its maximum before solving.
    pub normalize_cost: bool,
    /// Solve a decreasing sequence of regularizations first, warm-starting the
    /// potentials. The optimum is unchanged; small `reg` converges faster.
    pub epsilon_scaling: bool,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions { max_iter: 10_000, tolerance: 1e-6, normalize_cost: false, epsilon_scaling: true }
    }
}

/// Sweep cap and residual target of each warm-up stage.
const STAGE_SWEEPS: usize = 1000;
const STAGE_TOLERANCE: f64 = 1e-6;

pub fn solve_sinkhorn(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    reg: f64,
    opts: &SinkhornOptions,
) -> Result<TransportPlan, OtError> {
    if !(reg > 0.0) || !reg.is_finite() {
        return Err(OtError::Regularization(reg));
    }
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

    let scale = if opts.normalize_cost {
        let mx = cost.max();
        if mx > 0.0 {
            mx
        } else {
            1.0
        }
    } else {
        1.0
    };
    let c: Vec<f64> = cost.values.iter().flatten().map(|v| v / scale).collect();

    let mut state = LogSinkhorn::new(&a, &b, &c, m);
    let mut iterations = 0;
    if opts.epsilon_scaling {
        // Halve from the cost scale down to the target; each stage is brought
        // close to its own fixed point so the next one starts warm.
        let cmax = c.iter().fold(0.0f64, |acc, v| acc.max(*v));
        let mut stage = cmax;
        while stage > reg * 2.0 {
            for k in 1..=STAGE_SWEEPS {
                state.sweep(stage);
                if k % 10 == 0 && state.row_residual(stage) < STAGE_TOLERANCE.max(opts.tolerance) {
                    break;
                }
            }
            stage *= 0.5;
        }
    }

    let mut residual = f64::INFINITY;
    while iterations < opts.max_iter {
        state.sweep(reg);
        iterations += 1;
        if iterations % 10 == 0 || iterations == opts.max_iter {
            residual = state.row_residual(reg);
            if residual < opts.tolerance {
                break;
            }
        }
    }
    if !(residual < opts.tolerance) {
        return Err(OtError::SinkhornNotConverged { iterations, residual });
    }

    let coupling = state.coupling(reg);
    let objective_value = super::frobenius(&coupling, &cost.values);
    let plan = TransportPlan {
        coupling,
        source_marginal: a,
        target_marginal: b,
        objective_value,
        solver: Solver::EmdR,
        regularization: Some(reg),
        iterations,
        sinkhorn: Some(*opts),
    };
    let res = plan.marginal_residual();
    if !(res < opts.tolerance) {
        return Err(OtError::SinkhornNotConverged { iterations, residual: res });
    }
    Ok(plan)
}

struct LogSinkhorn<'a> {
    log_a: Vec<f64>,
    log_b: Vec<f64>,
    a: &'a [f64],
    c: &'a [f64],
    m: usize,
    f: Vec<f64>,
    g: Vec<f64>,
    scratch: Vec<f64>,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + xs.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
}

impl<'a> LogSinkhorn<'a> {
    fn new(a: &'a [f64], b: &[f64], c: &'a [f64], m: usize) -> Self {
        let n = a.len();
        LogSinkhorn {
            log_a: a.iter().map(|v| v.ln()).collect(),
            log_b: b.iter().map(|v| v.ln()).collect(),
            a,
            c,
            m,
            f: vec![0.0; n],
            g: vec![0.0; m],
            scratch: vec![0.0; n.max(m)],
        }
    }

    fn sweep(&mut self, reg: f64) {
        let (n, m) = (self.f.len(), self.m);
        for i in 0..n {
            let row = &self.c[i * m..(i + 1) * m];
            for j in 0..m {
                self.scratch[j] = (self.g[j] - row[j]) / reg;
            }
            self.f[i] = reg * (self.log_a[i] - log_sum_exp(&self.scratch[..m]));
        }
        for j in 0..m {
            for i in 0..n {
                self.scratch[i] = (self.f[i] - self.c[i * m + j]) / reg;
            }
            self.g[j] = reg * (self.log_b[j] - log_sum_exp(&self.scratch[..n]));
        }
    }

    /// After a sweep the column sums are exact up to rounding; the row sums
    /// carry the remaining error.
    fn row_residual(&self, reg: f64) -> f64 {
        let m = self.m;
        let mut worst = 0.0f64;
        for (i, &ai) in self.a.iter().enumerate() {
            let row = &self.c[i * m..(i + 1) * m];
            let s: f64 = (0..m).map(|j| ((self.f[i] + self.g[j] - row[j]) / reg).exp()).sum();
            worst = worst.max((s - ai).abs());
        }
        worst
    }

    fn coupling(&self, reg: f64) -> Vec<Vec<f64>> {
        let m = self.m;
        (0..self.f.len())
            .map(|i| (0..m).map(|j| ((self.f[i] + self.g[j] - self.c[i * m + j]) / reg).exp()).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::{solve_emd, EmdOptions, Metric};

    fn swap_cost() -> CostMatrix {
        CostMatrix { values: vec![vec![0.0, 1.0], vec![1.0, 0.0]], metric: Metric::SqEuclidean }
    }

    #[test]
    fn large_regularization_tends_to_independent_coupling() {
        let p = solve_sinkhorn(&[0.5, 0.5], &[0.5, 0.5], &swap_cost(), 1e3, &SinkhornOptions::default()).unwrap();
        for row in &p.coupling {
            for v in row {
                assert!((v - 0.25).abs() < 1e-3);
            }
        }
        assert_eq!(p.regularization, Some(1e3));
    }

    #[test]
    fn small_regularization_approaches_emd() {
        let c = swap_cost();
        let p = solve_sinkhorn(&[0.5, 0.5], &[0.5, 0.5], &c, 1e-3, &SinkhornOptions::default()).unwrap();
        let e = solve_emd(&[0.5, 0.5], &[0.5, 0.5], &c, &EmdOptions::default()).unwrap();
        assert!((p.objective_value - e.objective_value).abs() < 1e-3);
        assert!(p.marginal_residual() < 1e-6);
    }

    #[test]
    fn nonpositive_regularization_is_rejected() {
        let c = swap_cost();
        for reg in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                solve_sinkhorn(&[0.5, 0.5], &[0.5, 0.5], &c, reg, &SinkhornOptions::default()),
                Err(OtError::Regularization(_))
            ));
        }
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let c = CostMatrix {
            values: vec![vec![0.0, 3.0, 1.0], vec![2.0, 0.0, 5.0], vec![1.0, 4.0, 0.0]],
            metric: Metric::SqEuclidean,
        };
        let opts = SinkhornOptions { max_iter: 1, tolerance: 1e-15, epsilon_scaling: false, ..Default::default() };
        let err = solve_sinkhorn(&[0.2, 0.3, 0.5], &[0.6, 0.1, 0.3], &c, 0.01, &opts).unwrap_err();
        match err {
            OtError::SinkhornNotConverged { iterations, residual } => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn epsilon_scaling_does_not_change_the_optimum() {
        let c = CostMatrix {
            values: vec![vec![0.0, 3.0, 1.0], vec![2.0, 0.0, 5.0], vec![1.0, 4.0, 0.0]],
            metric: Metric::SqEuclidean,
        };
        let (a, b) = ([0.2, 0.3, 0.5], [0.6, 0.1, 0.3]);
        let tight = SinkhornOptions { tolerance: 1e-12, ..Default::default() };
        let p1 = solve_sinkhorn(&a, &b, &c, 0.5, &tight).unwrap();
        let p2 = solve_sinkhorn(&a, &b, &c, 0.5, &SinkhornOptions { epsilon_scaling: false, ..tight }).unwrap();
        for (r1, r2) in p1.coupling.iter().zip(&p2.coupling) {
            for (x, y) in r1.iter().zip(r2) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
