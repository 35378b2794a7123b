//! Soft-margin RBF SVM trained by SMO with maximal-violating-pair selection.

use serde::{Deserialize, Serialize};

use super::{check_training_data, ModelError};
use crate::ot::sq_dist;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 0.1, gamma: 0.001, tolerance: 1e-3, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub iterations: usize,
}

const TAU: f64 = 1e-12;

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

pub fn train_svm(x: &[Vec<f64>], y: &[u8], params: &SvmParams) -> Result<SvmModel, ModelError> {
    check_training_data(x, y)?;
    if !(params.c > 0.0) || !(params.gamma > 0.0) {
        return Err(ModelError::Params(format!("C and gamma must be positive (C={}, gamma={})", params.c, params.gamma)));
    }
    let n = x.len();
    let c = params.c;
    let ys: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let k: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| rbf(params.gamma, &x[i], &x[j])).collect();
    let q = |i: usize, j: usize| ys[i] * ys[j] * k[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    loop {
        // i maximises -y G over I_up, j maximises y G over I_low
        let (mut gmax, mut gmax2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let up = if ys[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if ys[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && -ys[t] * grad[t] > gmax {
                gmax = -ys[t] * grad[t];
                i = t;
            }
            if low && ys[t] * grad[t] > gmax2 {
                gmax2 = ys[t] * grad[t];
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < params.tolerance {
            break;
        }
        if iterations >= params.max_iter {
            log::warn!("SVM: iteration cap {} reached with KKT gap {:.3e}", params.max_iter, gmax + gmax2);
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if ys[i] != ys[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // libsvm bias rule: average over free vectors, otherwise midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if alpha[t] >= c {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            dual_coef.push(alpha[t] * ys[t]);
        }
    }
    Ok(SvmModel { support_vectors, dual_coef, bias: -rho, gamma: params.gamma, c, iterations })
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.support_vectors.iter().zip(&self.dual_coef).map(|(sv, a)| a * rbf(self.gamma, sv, x)).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.decision(x) > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::test_support::blobs;

    #[test]
    fn separable_blobs() {
        let (x, y) = blobs(200, 10.0, 4);
        let m = train_svm(&x, &y, &SvmParams { c: 10.0, gamma: 0.5, ..Default::default() }).unwrap();
        let acc = x.iter().zip(&y).filter(|(xi, yi)| m.predict(xi) == **yi).count() as f64 / 200.0;
        assert!(acc >= 0.99, "accuracy {acc}");
        for a in &m.dual_coef {
            assert!(a.abs() <= 10.0 + 1e-12);
        }
    }

    #[test]
    fn single_class_is_an_error() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(train_svm(&x, &[1, 1], &SvmParams::default()), Err(ModelError::SingleClass)));
    }

    #[test]
    fn contradictory_duplicates_train() {
        let x = vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 0.0]];
        let m = train_svm(&x, &[0, 1, 0, 1], &SvmParams::default()).unwrap();
        for xi in &x {
            assert!(m.decision(xi).is_finite());
        }
    }

    #[test]
    fn dual_coefficients_are_box_constrained() {
        let (x, y) = blobs(80, 1.0, 9);
        let m = train_svm(&x, &y, &SvmParams::default()).unwrap();
        for a in &m.dual_coef {
            assert!(a.abs() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn reordering_does_not_change_decisions() {
        let (x, y) = blobs(60, 2.0, 17);
        let p = SvmParams { c: 1.0, gamma: 0.3, ..Default::default() };
        let m1 = train_svm(&x, &y, &p).unwrap();
        let xr: Vec<Vec<f64>> = x.iter().rev().cloned().collect();
        let yr: Vec<u8> = y.iter().rev().cloned().collect();
        let m2 = train_svm(&xr, &yr, &p).unwrap();
        for xi in &x {
            assert!((m1.decision(xi) - m2.decision(xi)).abs() < 1e-2);
        }
    }
}
