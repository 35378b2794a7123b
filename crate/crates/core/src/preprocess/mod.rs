//! Training-set conditioning: robust scaling and SMOTE oversampling.

mod scaler;
mod smote;

pub use scaler::{apply_robust_scaler, fit_robust_scaler, RobustScaler};
pub use smote::{smote, SmoteConfig};

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("invalid SMOTE configuration: {0}")]
    Config(String),
}
