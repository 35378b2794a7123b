//! Discrete optimal transport between point clouds and the adaptation maps
//! built on top of it.

mod emd;
mod mapping;
mod sinkhorn;

pub use emd::{solve_emd, EmdOptions};
pub use mapping::{fit_gaussian_mapping, AdaptationModel, AdaptationVariant, KernelMap, KernelMapOptions, OtMethod};
pub use sinkhorn::{solve_sinkhorn, SinkhornOptions};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum OtError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("weights cannot be normalized: {0}")]
    Weights(&'static str),
    #[error("regularization must be positive, got {0}")]
    Regularization(f64),
    #[error("network simplex did not reach optimality after {iterations} pivots")]
    EmdNotConverged { iterations: usize },
    #[error("Sinkhorn did not converge after {iterations} iterations (marginal residual {residual:e})")]
    SinkhornNotConverged { iterations: usize, residual: f64 },
    #[error("kernel system is singular; increase the ridge term (currently {ridge:e})")]
    SingularKernel { ridge: f64 },
    #[error("point is not in the training support")]
    NotInSupport,
    #[error("source atom {0} has no transported mass")]
    IsolatedAtom(usize),
    #[error("model has no transport plan")]
    NoPlan,
}

/// Weighted point cloud. Weights are normalized to sum to one on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, OtError> {
        check_points(&support, "support")?;
        if weights.len() != support.len() {
            return Err(OtError::Shape(format!("{} weights for {} points", weights.len(), support.len())));
        }
        let weights = normalize_weights(&weights)?;
        Ok(DiscreteDistribution { support, weights })
    }

    pub fn uniform(support: Vec<Vec<f64>>) -> Result<Self, OtError> {
        let n = support.len();
        Self::new(support, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    SqEuclidean,
}

/// Ground cost between two point sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub values: Vec<Vec<f64>>,
    pub metric: Metric,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, &v| m.max(v))
    }

    pub fn mean(&self) -> f64 {
        let n = self.rows() * self.cols();
        if n == 0 {
            return 0.0;
        }
        self.values.iter().flatten().sum::<f64>() / n as f64
    }
}

/// Squared Euclidean distances between every `x` and every `y`.
pub fn cost_matrix(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<CostMatrix, OtError> {
    check_points(xs, "X")?;
    check_points(ys, "Y")?;
    let d = xs[0].len();
    if ys[0].len() != d {
        return Err(OtError::Dimension { expected: d, found: ys[0].len() });
    }
    let values = xs.iter().map(|x| ys.iter().map(|y| sq_dist(x, y)).collect()).collect();
    Ok(CostMatrix { values, metric: Metric::SqEuclidean })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solver {
    #[serde(rename = "EMD")]
    Emd,
    #[serde(rename = "EMD-R")]
    EmdR,
    #[serde(rename = "Gaussian")]
    Gaussian,
}

/// A coupling between two discrete distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub coupling: Vec<Vec<f64>>,
    pub source_marginal: Vec<f64>,
    pub target_marginal: Vec<f64>,
    pub objective_value: f64,
    pub solver: Solver,
    pub regularization: Option<f64>,
    /// Pivots (EMD) or scaling iterations (Sinkhorn) used.
    pub iterations: usize,
    /// Solver settings that influence the result, for reproducibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sinkhorn: Option<SinkhornOptions>,
}

impl crate::doc::Document for TransportPlan {
    const FORMAT: &'static str = "lingot.transport_plan";
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        self.coupling.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let m = self.target_marginal.len();
        let mut out = vec![0.0; m];
        for row in &self.coupling {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    /// Largest deviation of the row and column sums from the marginals.
    pub fn marginal_residual(&self) -> f64 {
        let r = self.row_sums().iter().zip(&self.source_marginal).map(|(x, a)| (x - a).abs()).fold(0.0, f64::max);
        let c = self.col_sums().iter().zip(&self.target_marginal).map(|(x, b)| (x - b).abs()).fold(0.0, f64::max);
        r.max(c)
    }
}

/// `<plan, cost>`.
pub fn transport_cost(plan: &TransportPlan, cost: &CostMatrix) -> Result<f64, OtError> {
    if plan.coupling.len() != cost.rows() || plan.coupling.first().map_or(0, Vec::len) != cost.cols() {
        return Err(OtError::Shape(format!(
            "plan is {}x{}, cost is {}x{}",
            plan.coupling.len(),
            plan.coupling.first().map_or(0, Vec::len),
            cost.rows(),
            cost.cols()
        )));
    }
    Ok(frobenius(&plan.coupling, &cost.values))
}

pub(crate) fn frobenius(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x * y).sum::<f64>()).sum()
}

pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn check_points(points: &[Vec<f64>], what: &'static str) -> Result<(), OtError> {
    let first = points.first().ok_or(OtError::Empty(what))?;
    let d = first.len();
    for p in points {
        if p.len() != d {
            return Err(OtError::Dimension { expected: d, found: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(OtError::NonFinite(what));
        }
    }
    Ok(())
}

pub(crate) fn normalize_weights(w: &[f64]) -> Result<Vec<f64>, OtError> {
    if w.is_empty() {
        return Err(OtError::Empty("weights"));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(OtError::Weights("negative or non-finite weight"));
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(OtError::Weights("all weights are zero"));
    }
    Ok(w.iter().map(|v| v / total).collect())
}
