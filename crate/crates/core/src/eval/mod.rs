//! Experiment engine: metrics, subject-stratified folds, training regimes,
//! reports and the synthetic bilingual benchmark.
//!
//! Language roles follow the transfer direction: classifiers are trained on
//! the high-resource *source* language and evaluated on the low-resource
//! *target* language. Adaptation maps target features into source space.

mod config;
mod folds;
mod metrics;
mod regime;
mod report;
mod synth;

use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, InputPaths, RegimeEntry, CONFIG_VERSION};
pub use folds::{subject_stratified_kfold, FoldAssignment};
pub use metrics::{auroc, macro_f1};
pub use regime::{leakage_checks, run_regime, AccentMix, EvalSettings, RegimeKind, RegimeResult, RegimeSpec, SeedScore};
pub use report::{Comparison, ExperimentReport, ReportRow, Summary};
pub use synth::{generate_synthetic_corpus, AffineTransform, ClassCounts, SynthCorpusSpec};

use crate::corpus::{CorpusError, FeatureSample, Label};
use crate::doc::DocError;
use crate::models::ModelError;
use crate::ot::OtError;
use crate::preprocess::PreprocessError;
use crate::stats::TTest;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("length mismatch ({left} vs {right})")]
    Length { left: usize, right: usize },
    #[error("labels must be 0 or 1")]
    Labels,
    #[error("both classes must be present")]
    SingleClass,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("{subjects} subjects cannot fill {folds} folds")]
    TooFewSubjects { subjects: usize, folds: usize },
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("synthetic {class} distribution has no admissible mass inside the feature simplex")]
    Infeasible { class: &'static str },
    #[error("insufficient samples: {0}")]
    Insufficient(String),
    #[error("subject '{0}' appears in both training and evaluation data")]
    Leakage(String),
    #[error("configuration is invalid:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ot(#[from] OtError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Doc(#[from] DocError),
}

/// The four sample groups an experiment draws on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentData {
    /// Labelled high-resource data; trains every transfer classifier.
    pub source_clinical: Vec<FeatureSample>,
    /// Labelled low-resource data; the evaluation set.
    pub target_clinical: Vec<FeatureSample>,
    /// Healthy out-of-domain pools used to fit adaptations and encoders.
    pub source_pool: Vec<FeatureSample>,
    pub target_pool: Vec<FeatureSample>,
    /// Row `i` of the two pools comes from the same underlying draw.
    pub pools_paired: bool,
}

impl ExperimentData {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, group) in [("source_clinical", &self.source_clinical), ("target_clinical", &self.target_clinical)] {
            if group.iter().any(|s| s.label == Label::Unlabeled) {
                return Err(EvalError::Spec(format!("{name} contains unlabeled samples")));
            }
            let labels = labels(group)?;
            if !labels.contains(&0) || !labels.contains(&1) {
                return Err(EvalError::Spec(format!("{name} must contain both classes")));
            }
        }
        if self.source_pool.is_empty() || self.target_pool.is_empty() {
            return Err(EvalError::Empty("adaptation pool"));
        }
        if self.pools_paired && self.source_pool.len() != self.target_pool.len() {
            return Err(EvalError::Spec("paired pools must have equal sizes".into()));
        }
        let source: std::collections::HashSet<&str> =
            self.source_clinical.iter().map(|s| s.subject_id.as_str()).collect();
        if let Some(s) = self.target_clinical.iter().find(|s| source.contains(s.subject_id.as_str())) {
            return Err(EvalError::Leakage(s.subject_id.clone()));
        }
        Ok(())
    }
}

pub(crate) fn features(samples: &[FeatureSample]) -> Vec<Vec<f64>> {
    samples.iter().map(|s| s.features.to_vec()).collect()
}

pub(crate) fn labels(samples: &[FeatureSample]) -> Result<Vec<u8>, EvalError> {
    samples.iter().map(|s| s.label.class().map(|c| c as u8).ok_or(EvalError::Labels)).collect()
}

/// Two-sided paired t-test of `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Length { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(EvalError::Insufficient(format!("paired t-test needs at least 2 pairs, got {}", a.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite("score"));
    }
    Ok(crate::stats::paired(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_ttest_cases() {
        let r = paired_ttest(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        let r = paired_ttest(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        let r = paired_ttest(&[2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(r.p < 1e-12);
        assert!(paired_ttest(&[1.0], &[1.0]).is_err());
        assert!(paired_ttest(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn paired_ttest_hand_value() {
        // d = [1, 2, 3, 6]: mean 3, sd sqrt(14/3), t = 3 / (sd / 2)
        let r = paired_ttest(&[2.0, 4.0, 6.0, 10.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let t = 3.0 / ((14.0f64 / 3.0).sqrt() / 2.0);
        assert!((r.t - t).abs() < 1e-12);
        assert!((r.df - 3.0).abs() < 1e-12);
    }
}
