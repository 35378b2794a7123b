use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::{index::sample, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{features, labels, macro_f1, auroc, subject_stratified_kfold, EvalError, ExperimentData};
use crate::corpus::{Accent, FeatureSample};
use crate::models::{
    train_autoencoder, AutoencoderModel, AutoencoderParams, Classifier, ClassifierKind, ClassifierParams, ModelBundle,
};
use crate::ot::{AdaptationModel, KernelMapOptions, OtMethod};
use crate::preprocess::RobustScaler;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegimeKind {
    Unilingual,
    DirectTransfer,
    MultilingualEncoding,
    #[serde(rename = "OT-EMD")]
    OtEmd,
    #[serde(rename = "OT-Gaussian")]
    OtGaussian,
    #[serde(rename = "OT-EMD-R")]
    OtEmdR,
}

impl RegimeKind {
    pub const ALL: [RegimeKind; 6] = [
        RegimeKind::Unilingual,
        RegimeKind::DirectTransfer,
        RegimeKind::MultilingualEncoding,
        RegimeKind::OtEmd,
        RegimeKind::OtGaussian,
        RegimeKind::OtEmdR,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeKind::Unilingual => "Unilingual",
            RegimeKind::DirectTransfer => "DirectTransfer",
            RegimeKind::MultilingualEncoding => "MultilingualEncoding",
            RegimeKind::OtEmd => "OT-EMD",
            RegimeKind::OtGaussian => "OT-Gaussian",
            RegimeKind::OtEmdR => "OT-EMD-R",
        }
    }

    pub fn is_ot(self) -> bool {
        matches!(self, RegimeKind::OtEmd | RegimeKind::OtGaussian | RegimeKind::OtEmdR)
    }

    fn uses_pools(self) -> bool {
        self.is_ot() || self == RegimeKind::MultilingualEncoding
    }
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Number of source-pool samples kept per accent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccentMix {
    pub na: usize,
    pub other: usize,
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSpec {
    /// Display name; defaults to a label derived from the other fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub regime: RegimeKind,
    #[serde(default)]
    pub include_aphasic_in_ot: bool,
    #[serde(default)]
    pub paired: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accent_mix: Option<AccentMix>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub train_fraction: f64,
    pub classifier: ClassifierKind,
    pub seeds: Vec<u64>,
}

impl RegimeSpec {
    pub fn new(regime: RegimeKind, classifier: ClassifierKind, seeds: Vec<u64>) -> Self {
        RegimeSpec {
            name: None,
            regime,
            include_aphasic_in_ot: false,
            paired: false,
            accent_mix: None,
            train_fraction: 1.0,
            classifier,
            seeds,
        }
    }

    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let mut s = self.regime.as_str().to_string();
        if self.include_aphasic_in_ot {
            s.push_str(" - with aphasic");
        }
        if self.paired {
            s.push_str(" - paired");
        }
        if let Some(m) = self.accent_mix {
            s.push_str(&format!(" - NA {} / other {}", m.na, m.other));
        }
        if self.train_fraction != 1.0 {
            s.push_str(&format!(" - fraction {}", self.train_fraction));
        }
        s
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Spec(format!("{}: {m}", self.label())));
        if !self.regime.is_ot() && (self.include_aphasic_in_ot || self.paired) {
            return bad("include_aphasic_in_ot and paired apply only to OT regimes".into());
        }
        if !self.regime.uses_pools() && (self.accent_mix.is_some() || self.train_fraction != 1.0) {
            return bad("accent_mix and train_fraction apply only to regimes that use the adaptation pools".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return bad(format!("train_fraction must lie in (0, 1], got {}", self.train_fraction));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let distinct: HashSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSettings {
    pub classifiers: ClassifierParams,
    pub autoencoder: AutoencoderParams,
    pub unilingual_folds: usize,
    pub smote_k: usize,
    pub sinkhorn_reg: f64,
    pub gaussian_mu: f64,
    pub gaussian_max_iter: usize,
    pub gaussian_tol: f64,
    /// Training atoms averaged when mapping unseen points.
    pub k_oos: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        let g = KernelMapOptions::default();
        EvalSettings {
            classifiers: ClassifierParams::default(),
            autoencoder: AutoencoderParams::default(),
            unilingual_folds: 10,
            smote_k: 3,
            sinkhorn_reg: 3.0,
            gaussian_mu: g.mu,
            gaussian_max_iter: g.max_iter,
            gaussian_tol: g.tol,
            k_oos: 1,
        }
    }
}

impl EvalSettings {
    fn ot_method(&self, kind: RegimeKind) -> OtMethod {
        match kind {
            RegimeKind::OtEmdR => OtMethod::Sinkhorn { reg: self.sinkhorn_reg, normalize_cost: false },
            RegimeKind::OtGaussian => {
                OtMethod::Gaussian { mu: self.gaussian_mu, max_iter: self.gaussian_max_iter, tol: self.gaussian_tol }
            }
            _ => OtMethod::Emd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedScore {
    pub seed: u64,
    pub f1: f64,
    pub auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeResult {
    pub spec: RegimeSpec,
    /// Sorted by seed.
    pub per_seed: Vec<SeedScore>,
}

static LEAKAGE_CHECKS: AtomicUsize = AtomicUsize::new(0);

/// Number of train/evaluation subject-disjointness checks performed so far.
pub fn leakage_checks() -> usize {
    LEAKAGE_CHECKS.load(Ordering::Relaxed)
}

fn assert_disjoint<'a>(train: impl IntoIterator<Item = &'a FeatureSample>, eval: &[&FeatureSample]) -> Result<(), EvalError> {
    LEAKAGE_CHECKS.fetch_add(1, Ordering::Relaxed);
    let seen: HashSet<&str> = train.into_iter().map(|s| s.subject_id.as_str()).collect();
    match eval.iter().find(|s| seen.contains(s.subject_id.as_str())) {
        Some(s) => Err(EvalError::Leakage(s.subject_id.clone())),
        None => Ok(()),
    }
}

/// Runs one regime for every seed in the spec.
pub fn run_regime(data: &ExperimentData, spec: &RegimeSpec, settings: &EvalSettings) -> Result<RegimeResult, EvalError> {
    spec.validate()?;
    data.validate()?;
    if spec.paired && !data.pools_paired {
        return Err(EvalError::Spec(format!("{}: paired regime needs paired pools", spec.label())));
    }
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    let per_seed = seeds
        .par_iter()
        .map(|&seed| run_seed(data, spec, settings, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RegimeResult { spec: spec.clone(), per_seed })
}

/// Scaler and classifier trained on `x` after SMOTE balancing.
struct Pipeline {
    encoder: Option<AutoencoderModel>,
    scaler: RobustScaler,
    classifier: Classifier,
}

impl Pipeline {
    fn train(
        x: &[Vec<f64>],
        y: &[u8],
        encoder: Option<AutoencoderModel>,
        kind: ClassifierKind,
        settings: &EvalSettings,
        seed: u64,
    ) -> Result<Self, EvalError> {
        let b = ModelBundle::fit(x, y, kind, &settings.classifiers, settings.smote_k, encoder, seed)?;
        Ok(Pipeline { encoder: b.encoder, scaler: b.scaler, classifier: b.classifier })
    }

    fn predict(&self, x: &[f64]) -> (u8, f64) {
        let v = match &self.encoder {
            Some(e) => self.scaler.transform_one(&e.encode(x)),
            None => self.scaler.transform_one(x),
        };
        (self.classifier.predict(&v), self.classifier.score(&v))
    }
}

fn score(y: &[u8], pred: &[(u8, f64)]) -> Result<(f64, f64), EvalError> {
    let p: Vec<u8> = pred.iter().map(|r| r.0).collect();
    let s: Vec<f64> = pred.iter().map(|r| r.1).collect();
    Ok((macro_f1(y, &p)?, auroc(y, &s)?))
}

fn run_seed(data: &ExperimentData, spec: &RegimeSpec, settings: &EvalSettings, seed: u64) -> Result<SeedScore, EvalError> {
    let (f1, auc) = match spec.regime {
        RegimeKind::Unilingual => unilingual(data, spec, settings, seed)?,
        RegimeKind::DirectTransfer => {
            let pipe = source_pipeline(data, None, spec, settings, seed)?;
            evaluate(&pipe, None, data, &data.target_clinical.iter().collect::<Vec<_>>())?
        }
        RegimeKind::MultilingualEncoding => {
            let (src, tgt) = select_pools(data, spec, seed)?;
            let pooled: Vec<Vec<f64>> =
                src.iter().chain(&tgt).map(|s| s.features.to_vec()).collect();
            let encoder = train_autoencoder(&pooled, &settings.autoencoder, seed)?;
            let pipe = source_pipeline(data, Some(encoder), spec, settings, seed)?;
            evaluate(&pipe, None, data, &data.target_clinical.iter().collect::<Vec<_>>())?
        }
        _ => optimal_transport(data, spec, settings, seed)?,
    };
    Ok(SeedScore { seed, f1, auroc: auc })
}

fn source_pipeline(
    data: &ExperimentData,
    encoder: Option<AutoencoderModel>,
    spec: &RegimeSpec,
    settings: &EvalSettings,
    seed: u64,
) -> Result<Pipeline, EvalError> {
    Pipeline::train(&features(&data.source_clinical), &labels(&data.source_clinical)?, encoder, spec.classifier, settings, seed)
}

/// Scores `eval` (target-language clinical samples), mapped by `adaptation` first when given.
fn evaluate(
    pipe: &Pipeline,
    adaptation: Option<&AdaptationModel>,
    data: &ExperimentData,
    eval: &[&FeatureSample],
) -> Result<(f64, f64), EvalError> {
    assert_disjoint(&data.source_clinical, eval)?;
    let y: Vec<u8> = eval.iter().map(|s| s.label.class().map(|c| c as u8).ok_or(EvalError::Labels)).collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(eval.len());
    for s in eval {
        let x = match adaptation {
            Some(a) => a.map_point(&s.features, false)?,
            None => s.features.to_vec(),
        };
        out.push(pipe.predict(&x));
    }
    score(&y, &out)
}

fn unilingual(data: &ExperimentData, spec: &RegimeSpec, settings: &EvalSettings, seed: u64) -> Result<(f64, f64), EvalError> {
    let samples = &data.target_clinical;
    let x = features(samples);
    let y = labels(samples)?;
    let subjects: Vec<String> = samples.iter().map(|s| s.subject_id.clone()).collect();
    let folds = subject_stratified_kfold(&subjects, &y, settings.unilingual_folds, seed)?;
    let mut pred = vec![(0u8, 0.0f64); samples.len()];
    for f in 0..folds.k {
        let (train, test) = folds.split(f);
        let test_samples: Vec<&FeatureSample> = test.iter().map(|&i| &samples[i]).collect();
        assert_disjoint(train.iter().map(|&i| &samples[i]), &test_samples)?;
        let xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let yt: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        let pipe = Pipeline::train(&xt, &yt, None, spec.classifier, settings, seed)?;
        for &i in &test {
            pred[i] = pipe.predict(&x[i]);
        }
    }
    // out-of-fold predictions pooled into one score per seed
    score(&y, &pred)
}

/// Pool samples used to fit adaptations for this seed.
fn select_pools<'a>(
    data: &'a ExperimentData,
    spec: &RegimeSpec,
    seed: u64,
) -> Result<(Vec<&'a FeatureSample>, Vec<&'a FeatureSample>), EvalError> {
    let mut rng = substream(seed, Stream::Pool, 0);
    let mut src_idx: Vec<usize> = match spec.accent_mix {
        None => (0..data.source_pool.len()).collect(),
        Some(mix) => {
            let mut chosen = Vec::with_capacity(mix.na + mix.other);
            for (accent, want) in [(Accent::NorthAmerican, mix.na), (Accent::Other, mix.other)] {
                let mut avail: Vec<usize> = (0..data.source_pool.len()).filter(|&i| data.source_pool[i].accent == accent).collect();
                if want > avail.len() {
                    return Err(EvalError::Insufficient(format!(
                        "accent mix asks for {want} '{}' pool samples, {} available",
                        accent.as_str(),
                        avail.len()
                    )));
                }
                avail.shuffle(&mut rng);
                chosen.extend_from_slice(&avail[..want]);
            }
            chosen.sort_unstable();
            chosen
        }
    };
    let mut tgt_idx: Vec<usize> = if spec.paired { src_idx.clone() } else { (0..data.target_pool.len()).collect() };
    if spec.train_fraction < 1.0 {
        let keep = |n: usize| ((spec.train_fraction * n as f64).ceil() as usize).clamp(1, n.max(1));
        let mut rng = substream(seed, Stream::Subsample, 0);
        let pick = |idx: &[usize], rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
            let mut p: Vec<usize> = sample(rng, idx.len(), keep(idx.len())).into_iter().map(|k| idx[k]).collect();
            p.sort_unstable();
            p
        };
        src_idx = pick(&src_idx, &mut rng);
        tgt_idx = if spec.paired {
            src_idx.clone()
        } else {
            let mut rng = substream(seed, Stream::Subsample, 1);
            pick(&tgt_idx, &mut rng)
        };
    }
    if src_idx.is_empty() || tgt_idx.is_empty() {
        return Err(EvalError::Empty("selected adaptation pool"));
    }
    Ok((src_idx.iter().map(|&i| &data.source_pool[i]).collect(), tgt_idx.iter().map(|&i| &data.target_pool[i]).collect()))
}

fn optimal_transport(data: &ExperimentData, spec: &RegimeSpec, settings: &EvalSettings, seed: u64) -> Result<(f64, f64), EvalError> {
    let (src_pool, tgt_pool) = select_pools(data, spec, seed)?;
    let pipe = source_pipeline(data, None, spec, settings, seed)?;
    let method = settings.ot_method(spec.regime);
    let fit = |from: &[&FeatureSample], to: &[&FeatureSample]| -> Result<AdaptationModel, EvalError> {
        let xs: Vec<Vec<f64>> = from.iter().map(|s| s.features.to_vec()).collect();
        let xt: Vec<Vec<f64>> = to.iter().map(|s| s.features.to_vec()).collect();
        let mut m = AdaptationModel::fit_scaled(&xs, &xt, &method, &pipe.scaler)?;
        m.k_oos = settings.k_oos;
        Ok(m)
    };

    if !spec.include_aphasic_in_ot {
        let model = fit(&tgt_pool, &src_pool)?;
        return evaluate(&pipe, Some(&model), data, &data.target_clinical.iter().collect::<Vec<_>>());
    }

    // Two-fold scheme: one half of the target clinical data joins the
    // adaptation pool, the other half is evaluated; then roles swap.
    let target = &data.target_clinical;
    let y = labels(target)?;
    let mut per_class: [HashSet<&str>; 2] = [HashSet::new(), HashSet::new()];
    for (s, &l) in target.iter().zip(&y) {
        per_class[l as usize].insert(s.subject_id.as_str());
    }
    if per_class.iter().any(|c| c.len() < 2) {
        return Err(EvalError::Insufficient(format!(
            "aphasic-inclusion needs at least 2 subjects per class (healthy {}, aphasic {})",
            per_class[0].len(),
            per_class[1].len()
        )));
    }
    let subjects: Vec<String> = target.iter().map(|s| s.subject_id.clone()).collect();
    let folds = subject_stratified_kfold(&subjects, &y, 2, seed)?;
    let source_y = labels(&data.source_clinical)?;
    let mut totals = (0.0, 0.0);
    for orientation in 0..2 {
        let (eval_idx, ot_idx) = folds.split(orientation);
        let ot_fold: Vec<&FeatureSample> = ot_idx.iter().map(|&i| &target[i]).collect();
        let eval_fold: Vec<&FeatureSample> = eval_idx.iter().map(|&i| &target[i]).collect();
        assert_disjoint(ot_fold.iter().copied(), &eval_fold)?;

        // Matching source clinical samples with the fold's class counts keep
        // the two sides' class masses balanced.
        let mut rng = substream(seed, Stream::Subsample, 2 + orientation as u64);
        let mut extra_source: Vec<&FeatureSample> = Vec::new();
        for class in [0u8, 1] {
            let want = ot_idx.iter().filter(|&&i| y[i] == class).count();
            let pool: Vec<usize> = (0..source_y.len()).filter(|&i| source_y[i] == class).collect();
            let take = want.min(pool.len());
            extra_source.extend(sample(&mut rng, pool.len(), take).into_iter().map(|k| &data.source_clinical[pool[k]]));
        }

        let from: Vec<&FeatureSample> = tgt_pool.iter().copied().chain(ot_fold.iter().copied()).collect();
        let to: Vec<&FeatureSample> = src_pool.iter().copied().chain(extra_source).collect();
        let model = fit(&from, &to)?;
        let (f1, auc) = evaluate(&pipe, Some(&model), data, &eval_fold)?;
        totals.0 += f1;
        totals.1 += auc;
    }
    Ok((totals.0 / 2.0, totals.1 / 2.0))
}
