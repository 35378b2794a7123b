//! Fitted source-to-target maps.
//!
//! Barycentric variants send a training source atom to the coupling-weighted
//! mean of the target atoms. Unseen points borrow the displacement
//! (image - atom) of their nearest training atoms. The kernel variant fits a
//! smooth Gaussian-kernel map jointly with an exact coupling and is evaluated
//! directly anywhere.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    check_points, cost_matrix, solve_emd, solve_sinkhorn, sq_dist, CostMatrix, EmdOptions, Metric, OtError,
    SinkhornOptions, TransportPlan,
};
use crate::preprocess::RobustScaler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdaptationVariant {
    BarycentricEmd,
    BarycentricSinkhorn,
    KernelMap,
}

/// Adaptation method with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OtMethod {
    Emd,
    Sinkhorn { reg: f64, normalize_cost: bool },
    Gaussian { mu: f64, max_iter: usize, tol: f64 },
}

impl OtMethod {
    pub fn sinkhorn_default() -> Self {
        OtMethod::Sinkhorn { reg: 3.0, normalize_cost: false }
    }

    pub fn gaussian_default() -> Self {
        let o = KernelMapOptions::default();
        OtMethod::Gaussian { mu: o.mu, max_iter: o.max_iter, tol: o.tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMapOptions {
    /// Weight of the linear transport cost between the original source points
    /// and the targets.
    pub mu: f64,
    pub max_iter: usize,
    /// Stop once no mapped training point moves more than this (max-norm).
    pub tol: f64,
    pub ridge: f64,
    /// Kernel bandwidth; `None` uses the median pairwise source distance.
    pub sigma: Option<f64>,
}

impl Default for KernelMapOptions {
    fn default() -> Self {
        KernelMapOptions { mu: 1.0, max_iter: 20, tol: 1e-5, ridge: 1e-6, sigma: None }
    }
}

/// Parameters of `f(x) = x + sum_i alpha_i exp(-|x - x_i|^2 / (2 sigma^2))`.
/// Far from the training points the map falls back to the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMap {
    pub alpha: Vec<Vec<f64>>,
    pub sigma: f64,
    pub mu: f64,
    pub ridge: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationModel {
    pub variant: AdaptationVariant,
    pub source_support: Vec<Vec<f64>>,
    pub target_support: Vec<Vec<f64>>,
    pub plan: Option<TransportPlan>,
    pub kernel: Option<KernelMap>,
    /// Image of every training source point; rows of isolated atoms hold NaN.
    pub images: Vec<Vec<f64>>,
    /// Neighbours averaged by the out-of-sample rule.
    pub k_oos: usize,
    /// When present, the model was fitted in this scaler's coordinates:
    /// inputs are scaled before mapping and outputs unscaled afterwards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_scaler: Option<RobustScaler>,
}

impl crate::doc::Document for AdaptationModel {
    const FORMAT: &'static str = "lingot.adaptation_model";
}

impl AdaptationModel {
    pub fn fit(xs: &[Vec<f64>], xt: &[Vec<f64>], method: &OtMethod) -> Result<Self, OtError> {
        match *method {
            OtMethod::Emd => Self::fit_emd(xs, xt, &EmdOptions::default()),
            OtMethod::Sinkhorn { reg, normalize_cost } => {
                Self::fit_sinkhorn(xs, xt, reg, &SinkhornOptions { normalize_cost, ..Default::default() })
            }
            OtMethod::Gaussian { mu, max_iter, tol } => {
                fit_gaussian_mapping(xs, xt, &KernelMapOptions { mu, max_iter, tol, ..Default::default() })
            }
        }
    }

    /// Fits in the coordinates of `scaler`; the returned model maps raw
    /// features to raw features.
    pub fn fit_scaled(
        xs: &[Vec<f64>],
        xt: &[Vec<f64>],
        method: &OtMethod,
        scaler: &RobustScaler,
    ) -> Result<Self, OtError> {
        let xs = scaler.transform(xs).map_err(|e| OtError::Shape(e.to_string()))?;
        let xt = scaler.transform(xt).map_err(|e| OtError::Shape(e.to_string()))?;
        let mut model = Self::fit(&xs, &xt, method)?;
        model.feature_scaler = Some(scaler.clone());
        Ok(model)
    }

    pub fn fit_emd(xs: &[Vec<f64>], xt: &[Vec<f64>], opts: &EmdOptions) -> Result<Self, OtError> {
        let cost = cost_matrix(xs, xt)?;
        let plan = solve_emd(&uniform(xs.len()), &uniform(xt.len()), &cost, opts)?;
        Ok(Self::barycentric(AdaptationVariant::BarycentricEmd, xs, xt, plan))
    }

    pub fn fit_sinkhorn(xs: &[Vec<f64>], xt: &[Vec<f64>], reg: f64, opts: &SinkhornOptions) -> Result<Self, OtError> {
        let cost = cost_matrix(xs, xt)?;
        let plan = solve_sinkhorn(&uniform(xs.len()), &uniform(xt.len()), &cost, reg, opts)?;
        Ok(Self::barycentric(AdaptationVariant::BarycentricSinkhorn, xs, xt, plan))
    }

    /// Barycentric model from an existing plan between `xs` and `xt`.
    pub fn barycentric(variant: AdaptationVariant, xs: &[Vec<f64>], xt: &[Vec<f64>], plan: TransportPlan) -> Self {
        let images = barycentric_images(&plan.coupling, xt);
        AdaptationModel {
            variant,
            source_support: xs.to_vec(),
            target_support: xt.to_vec(),
            plan: Some(plan),
            kernel: None,
            images,
            k_oos: 1,
            feature_scaler: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.source_support.first().map_or(0, Vec::len)
    }

    /// Maps one point. `in_sample` requires `x` to be a training source point
    /// (exact match) and returns its barycentric image.
    pub fn map_point(&self, x: &[f64], in_sample: bool) -> Result<Vec<f64>, OtError> {
        if x.len() != self.dim() {
            return Err(OtError::Dimension { expected: self.dim(), found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OtError::NonFinite("point"));
        }
        match &self.feature_scaler {
            Some(s) => {
                let z = s.transform_one(x);
                let mapped = self.map_core(&z, in_sample)?;
                Ok(s.inverse_one(&mapped))
            }
            None => self.map_core(x, in_sample),
        }
    }

    /// Out-of-sample mapping of a batch.
    pub fn transform(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, OtError> {
        points.iter().map(|p| self.map_point(p, false)).collect()
    }

    fn map_core(&self, x: &[f64], in_sample: bool) -> Result<Vec<f64>, OtError> {
        if let (AdaptationVariant::KernelMap, Some(k)) = (self.variant, &self.kernel) {
            if in_sample && !self.source_support.iter().any(|s| s.as_slice() == x) {
                return Err(OtError::NotInSupport);
            }
            return Ok(k.eval(&self.source_support, x));
        }
        if in_sample {
            let i = self.source_support.iter().position(|s| s.as_slice() == x).ok_or(OtError::NotInSupport)?;
            return self.image(i);
        }
        // Displacement of the nearest training atoms (ties: lowest index).
        let mut by_dist: Vec<(f64, usize)> =
            self.source_support.iter().enumerate().map(|(i, s)| (sq_dist(s, x), i)).collect();
        let k = self.k_oos.max(1).min(by_dist.len());
        by_dist.select_nth_unstable_by(k - 1, |p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        let mut nearest = by_dist[..k].to_vec();
        nearest.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        let mut out = x.to_vec();
        for &(_, i) in &nearest {
            let img = self.image(i)?;
            for ((o, im), s) in out.iter_mut().zip(&img).zip(&self.source_support[i]) {
                *o += (im - s) / k as f64;
            }
        }
        Ok(out)
    }

    fn image(&self, i: usize) -> Result<Vec<f64>, OtError> {
        let img = &self.images[i];
        if img.iter().any(|v| v.is_nan()) {
            return Err(OtError::IsolatedAtom(i));
        }
        Ok(img.clone())
    }

    /// Mean displacement norm of the training source points.
    pub fn mean_displacement(&self) -> f64 {
        let n = self.source_support.len().max(1) as f64;
        self.source_support
            .iter()
            .zip(&self.images)
            .filter(|(_, img)| !img.iter().any(|v| v.is_nan()))
            .map(|(s, img)| sq_dist(s, img).sqrt())
            .sum::<f64>()
            / n
    }
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn barycentric_images(coupling: &[Vec<f64>], xt: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = xt.first().map_or(0, Vec::len);
    coupling
        .iter()
        .map(|row| {
            let mass: f64 = row.iter().sum();
            if mass <= 0.0 {
                return vec![f64::NAN; d];
            }
            let mut img = vec![0.0; d];
            for (g, y) in row.iter().zip(xt) {
                if *g == 0.0 {
                    continue;
                }
                for (o, v) in img.iter_mut().zip(y) {
                    *o += g * v;
                }
            }
            img.iter_mut().for_each(|v| *v /= mass);
            img
        })
        .collect()
}

impl KernelMap {
    /// `x` plus the kernel-weighted displacement.
    pub fn eval(&self, support: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        let denom = 2.0 * self.sigma * self.sigma;
        for (s, a) in support.iter().zip(&self.alpha) {
            let k = (-sq_dist(s, x) / denom).exp();
            for (o, v) in out.iter_mut().zip(a) {
                *o += k * v;
            }
        }
        out
    }
}

fn median_pairwise_distance(xs: &[Vec<f64>]) -> f64 {
    let mut d = Vec::with_capacity(xs.len() * xs.len().saturating_sub(1) / 2);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            d.push(sq_dist(&xs[i], &xs[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let med = crate::stats::quantile_sorted(&d, 0.5);
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// Fits a Gaussian-kernel transport map by alternating an exact coupling step
/// and a kernel ridge step.
///
/// The coupling step solves EMD under the cost `|f(x_i) - y_j|^2 +
/// mu |x_i - y_j|^2`, starting from `f = identity`. The map step fits the
/// displacement `f(x_i) - x_i` to the barycentric targets `n * (P Y)_i - x_i`
/// with ridge `opts.ridge`.
pub fn fit_gaussian_mapping(xs: &[Vec<f64>], xt: &[Vec<f64>], opts: &KernelMapOptions) -> Result<AdaptationModel, OtError> {
    check_points(xs, "Xs")?;
    check_points(xt, "Xt")?;
    let d = xs[0].len();
    if xt[0].len() != d {
        return Err(OtError::Dimension { expected: d, found: xt[0].len() });
    }
    let n = xs.len();
    let sigma = opts.sigma.unwrap_or_else(|| median_pairwise_distance(xs));
    let denom = 2.0 * sigma * sigma;
    let gram = DMatrix::from_fn(n, n, |i, j| (-sq_dist(&xs[i], &xs[j]) / denom).exp());
    let mut system = gram.clone();
    for i in 0..n {
        system[(i, i)] += opts.ridge;
    }
    let chol = system.cholesky().ok_or(OtError::SingularKernel { ridge: opts.ridge })?;

    let base = cost_matrix(xs, xt)?;
    let a = uniform(n);
    let b = uniform(xt.len());
    let mut images: Vec<Vec<f64>> = xs.to_vec();
    let mut alpha = DMatrix::<f64>::zeros(n, d);
    let mut plan = None;
    let mut iterations = 0;
    for _ in 0..opts.max_iter.max(1) {
        iterations += 1;
        let fit_cost = cost_matrix(&images, xt)?;
        let values = fit_cost
            .values
            .iter()
            .zip(&base.values)
            .map(|(rf, rb)| rf.iter().zip(rb).map(|(f, c)| f + opts.mu * c).collect())
            .collect();
        let step_plan = solve_emd(&a, &b, &CostMatrix { values, metric: Metric::SqEuclidean }, &EmdOptions::default())?;

        let targets = DMatrix::from_fn(n, d, |i, k| {
            n as f64 * step_plan.coupling[i].iter().zip(xt).map(|(g, y)| g * y[k]).sum::<f64>() - xs[i][k]
        });
        alpha = chol.solve(&targets);
        if alpha.iter().any(|v| !v.is_finite()) {
            return Err(OtError::SingularKernel { ridge: opts.ridge });
        }
        let mapped = &gram * &alpha;
        let mut change = 0.0f64;
        for i in 0..n {
            for k in 0..d {
                let v = xs[i][k] + mapped[(i, k)];
                change = change.max((v - images[i][k]).abs());
                images[i][k] = v;
            }
        }
        let mut step_plan = step_plan;
        step_plan.solver = super::Solver::Gaussian;
        step_plan.objective_value = super::frobenius(&step_plan.coupling, &base.values);
        plan = Some(step_plan);
        if change < opts.tol {
            break;
        }
    }

    let alpha_rows = (0..n).map(|i| (0..d).map(|k| alpha[(i, k)]).collect()).collect();
    Ok(AdaptationModel {
        variant: AdaptationVariant::KernelMap,
        source_support: xs.to_vec(),
        target_support: xt.to_vec(),
        plan,
        kernel: Some(KernelMap { alpha: alpha_rows, sigma, mu: opts.mu, ridge: opts.ridge, iterations }),
        images,
        k_oos: 1,
        feature_scaler: None,
    })
}
