use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::stats::quantile_sorted;

/// Per-dimension median/IQR scaling. Quartiles use linear interpolation
/// between order statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustScaler {
    pub median: Vec<f64>,
    pub iqr: Vec<f64>,
}

pub fn fit_robust_scaler(samples: &[Vec<f64>]) -> Result<RobustScaler, PreprocessError> {
    RobustScaler::fit(samples)
}

pub fn apply_robust_scaler(scaler: &RobustScaler, samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, PreprocessError> {
    scaler.transform(samples)
}

impl RobustScaler {
    pub fn fit(samples: &[Vec<f64>]) -> Result<Self, PreprocessError> {
        if samples.len() < 2 {
            return Err(PreprocessError::TooFewSamples { needed: 2, got: samples.len() });
        }
        let d = samples[0].len();
        let mut median = Vec::with_capacity(d);
        let mut iqr = Vec::with_capacity(d);
        let mut column = Vec::with_capacity(samples.len());
        for k in 0..d {
            column.clear();
            for s in samples {
                if s.len() != d {
                    return Err(PreprocessError::Dimension { expected: d, found: s.len() });
                }
                if !s[k].is_finite() {
                    return Err(PreprocessError::NonFinite);
                }
                column.push(s[k]);
            }
            column.sort_by(f64::total_cmp);
            median.push(quantile_sorted(&column, 0.5));
            iqr.push((quantile_sorted(&column, 0.75) - quantile_sorted(&column, 0.25)).max(0.0));
        }
        Ok(RobustScaler { median, iqr })
    }

    pub fn dim(&self) -> usize {
        self.median.len()
    }

    /// `(x - median) / iqr`; dimensions with zero IQR are only centred.
    pub fn transform_one(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.median.iter().zip(&self.iqr))
            .map(|(v, (m, q))| if *q > 0.0 { (v - m) / q } else { v - m })
            .collect()
    }

    pub fn inverse_one(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.median.iter().zip(&self.iqr))
            .map(|(v, (m, q))| if *q > 0.0 { v * q + m } else { v + m })
            .collect()
    }

    pub fn transform(&self, samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, PreprocessError> {
        samples
            .iter()
            .map(|s| {
                if s.len() != self.dim() {
                    return Err(PreprocessError::Dimension { expected: self.dim(), found: s.len() });
                }
                Ok(self.transform_one(s))
            })
            .collect()
    }
}
