//! From-scratch binary classifiers and the embedding autoencoder.
//!
//! Labels are `0` (healthy) and `1` (aphasic). Every trainer is deterministic
//! given its data and seed.

mod autoencoder;
pub mod dense;
mod forest;
mod mlp;
mod svm;

use serde::{Deserialize, Serialize};

pub use autoencoder::{train_autoencoder, AutoencoderModel, AutoencoderParams, AUTOENCODER_MIN_SAMPLES};
pub use forest::{train_forest, ForestModel, ForestParams, Node};
pub use mlp::{train_mlp, MlpModel, MlpParams};
pub use svm::{train_svm, SvmModel, SvmParams};

use crate::doc::Document;
use crate::ot::AdaptationModel;
use crate::preprocess::{smote, PreprocessError, RobustScaler, SmoteConfig};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training data is empty")]
    Empty,
    #[error("features and labels differ in length ({features} vs {labels})")]
    Length { features: usize, labels: usize },
    #[error("inconsistent feature dimensions")]
    Dimension,
    #[error("labels must be 0 or 1")]
    Labels,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("non-finite feature value")]
    NonFinite,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("loss became NaN at epoch {epoch}")]
    NanLoss { epoch: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

pub(crate) fn check_training_data(x: &[Vec<f64>], y: &[u8]) -> Result<(), ModelError> {
    if x.is_empty() {
        return Err(ModelError::Empty);
    }
    if x.len() != y.len() {
        return Err(ModelError::Length { features: x.len(), labels: y.len() });
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(ModelError::Dimension);
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    if y.iter().any(|&v| v > 1) {
        return Err(ModelError::Labels);
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(ModelError::SingleClass);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "RF")]
    Forest,
    #[serde(rename = "MLP")]
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Svm, ClassifierKind::Forest, ClassifierKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Forest => "RF",
            ClassifierKind::Mlp => "MLP",
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ClassifierKind::Svm),
            "rf" | "forest" => Ok(ClassifierKind::Forest),
            "mlp" => Ok(ClassifierKind::Mlp),
            _ => Err(format!("unknown classifier '{s}' (expected svm, rf or mlp)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierParams {
    pub svm: SvmParams,
    pub forest: ForestParams,
    pub mlp: MlpParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Classifier {
    #[serde(rename = "SVM")]
    Svm(SvmModel),
    #[serde(rename = "RF")]
    Forest(ForestModel),
    #[serde(rename = "MLP")]
    Mlp(MlpModel),
}

impl Classifier {
    pub fn train(kind: ClassifierKind, x: &[Vec<f64>], y: &[u8], params: &ClassifierParams, seed: u64) -> Result<Self, ModelError> {
        Ok(match kind {
            ClassifierKind::Svm => Classifier::Svm(train_svm(x, y, &params.svm)?),
            ClassifierKind::Forest => Classifier::Forest(train_forest(x, y, &params.forest, seed)?),
            ClassifierKind::Mlp => Classifier::Mlp(train_mlp(x, y, &params.mlp, seed)?),
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Svm(_) => ClassifierKind::Svm,
            Classifier::Forest(_) => ClassifierKind::Forest,
            Classifier::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        match self {
            Classifier::Svm(m) => m.predict(x),
            Classifier::Forest(m) => m.predict(x),
            Classifier::Mlp(m) => m.predict(x),
        }
    }

    /// Larger means more likely aphasic: SVM margin, forest vote share, MLP probability.
    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            Classifier::Svm(m) => m.decision(x),
            Classifier::Forest(m) => m.score(x),
            Classifier::Mlp(m) => m.score(x),
        }
    }
}

/// Everything needed to score raw feature vectors: optional adaptation map,
/// optional encoder, the training scaler and the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub scaler: RobustScaler,
    pub classifier: Classifier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<AutoencoderModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptation: Option<AdaptationModel>,
    pub seed: u64,
}

impl Document for ModelBundle {
    const FORMAT: &'static str = "lingot.model_bundle";
}

impl ModelBundle {
    /// Robust scaling fitted on `x` (after the optional encoder), SMOTE up to
    /// class balance with `smote_k` neighbours, then the classifier.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[u8],
        kind: ClassifierKind,
        params: &ClassifierParams,
        smote_k: usize,
        encoder: Option<AutoencoderModel>,
        seed: u64,
    ) -> Result<Self, ModelError> {
        check_training_data(x, y)?;
        let x: Vec<Vec<f64>> = match &encoder {
            Some(e) => x.iter().map(|v| e.encode(v)).collect(),
            None => x.to_vec(),
        };
        let scaler = RobustScaler::fit(&x)?;
        let mut xs = scaler.transform(&x)?;
        let mut ys = y.to_vec();
        let pos = ys.iter().filter(|&&v| v == 1).count();
        let neg = ys.len() - pos;
        if pos != neg && pos > 0 && neg > 0 {
            let minority = u8::from(pos < neg);
            let members: Vec<Vec<f64>> =
                xs.iter().zip(&ys).filter(|(_, &l)| l == minority).map(|(v, _)| v.clone()).collect();
            let cfg = SmoteConfig { k: smote_k, target: pos.max(neg) - pos.min(neg), seed };
            let synthetic = smote(&members, &cfg)?;
            ys.extend(std::iter::repeat_n(minority, synthetic.len()));
            xs.extend(synthetic);
        }
        let classifier = Classifier::train(kind, &xs, &ys, params, seed)?;
        Ok(ModelBundle { scaler, classifier, encoder, adaptation: None, seed })
    }

    /// Feature vector as seen by the classifier.
    pub fn prepare(&self, x: &[f64]) -> Result<Vec<f64>, crate::Error> {
        let mut v = x.to_vec();
        if let Some(a) = &self.adaptation {
            v = a.map_point(&v, false)?;
        }
        if let Some(e) = &self.encoder {
            v = e.encode(&v);
        }
        Ok(self.scaler.transform_one(&v))
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8, crate::Error> {
        Ok(self.classifier.predict(&self.prepare(x)?))
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, crate::Error> {
        Ok(self.classifier.score(&self.prepare(x)?))
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use rand_distr::{Distribution, StandardNormal};

    use crate::rng::{stream, Stream};

    /// Two unit-variance 2-D Gaussian blobs `distance` apart, half per class.
    pub fn blobs(n: usize, distance: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = stream(seed, Stream::SynthClinical);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let c = u8::from(i % 2 == 1);
            let cx = if c == 1 { distance / 2.0 } else { -distance / 2.0 };
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            x.push(vec![cx + a, b]);
            y.push(c);
        }
        (x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.as_str().parse::<ClassifierKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(serde_json::from_str::<ClassifierKind>(&json).unwrap(), k);
        }
        assert!("knn".parse::<ClassifierKind>().is_err());
    }

    #[test]
    fn bundle_round_trips_through_json() {
        let (x, y) = test_support::blobs(40, 3.0, 2);
        let scaler = RobustScaler::fit(&x).unwrap();
        let xs = scaler.transform(&x).unwrap();
        let classifier = Classifier::train(ClassifierKind::Forest, &xs, &y, &ClassifierParams::default(), 4).unwrap();
        let b = ModelBundle { scaler, classifier, encoder: None, adaptation: None, seed: 4 };
        let text = crate::doc::to_json(&b).unwrap();
        let back: ModelBundle = crate::doc::from_json(&text).unwrap();
        assert_eq!(back, b);
        for xi in &x {
            assert_eq!(back.predict(xi).unwrap(), b.predict(xi).unwrap());
        }
    }

    #[test]
    fn label_validation() {
        assert!(matches!(check_training_data(&[vec![1.0]], &[2]), Err(ModelError::Labels)));
        assert!(matches!(check_training_data(&[vec![1.0]], &[0, 1]), Err(ModelError::Length { .. })));
        assert!(matches!(check_training_data(&[vec![f64::NAN], vec![0.0]], &[0, 1]), Err(ModelError::NonFinite)));
    }
}
