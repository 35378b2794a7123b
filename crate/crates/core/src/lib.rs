//! Cross-lingual adaptation of part-of-speech feature distributions.
//!
//! The crate is organised around the pipeline it implements:
//!
//! * [`corpus`] turns tagged transcripts into 8-dimensional POS-proportion
//!   feature samples.
//! * [`ot`] holds the discrete optimal transport solvers (exact network
//!   simplex, log-domain Sinkhorn) and the fitted adaptation maps.
//! * [`preprocess`] contains robust scaling and SMOTE oversampling.
//! * [`models`] provides the SVM, random forest, MLP and autoencoder.
//! * [`eval`] runs the training regimes, metrics and the synthetic benchmark.

pub mod corpus;
pub mod doc;
pub mod eval;
pub mod fmt;
pub mod models;
pub mod ot;
pub mod preprocess;
pub mod rng;
pub mod stats;

pub use corpus::{
    Accent, FeatureSample, FeatureTTestReport, Label, Language, LanguageRole, TaggedTranscript,
    UposTag, Utterance, FEATURE_DIM, FEATURE_NAMES,
};
pub use eval::{ExperimentReport, RegimeKind, RegimeSpec, SynthCorpusSpec};
pub use ot::{AdaptationModel, CostMatrix, DiscreteDistribution, TransportPlan};
pub use preprocess::{RobustScaler, SmoteConfig};

/// Crate-wide error, wrapping the per-module error types.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Ot(#[from] ot::OtError),
    #[error(transparent)]
    Preprocess(#[from] preprocess::PreprocessError),
    #[error(transparent)]
    Model(#[from] models::ModelError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Doc(#[from] doc::DocError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
