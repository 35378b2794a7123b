//! Tanh autoencoder used as a shared multilingual embedding.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dense::{squared_error, Activation, Adam, Network};
use super::ModelError;
use crate::preprocess::RobustScaler;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AutoencoderParams {
    /// Hidden layer widths; the narrowest middle layer is the code.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub tolerance: f64,
}

impl Default for AutoencoderParams {
    fn default() -> Self {
        AutoencoderParams {
            hidden: vec![5, 3, 3, 5],
            learning_rate: 1e-2,
            batch_size: 32,
            max_epochs: 2000,
            patience: 20,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub network: Network,
    /// Number of layers that make up the encoder.
    pub encoder_layers: usize,
    /// Robust scaling fitted on the training data, applied before encoding.
    pub scaler: RobustScaler,
    pub seed: u64,
    pub epochs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

pub const AUTOENCODER_MIN_SAMPLES: usize = 10;

pub fn train_autoencoder(x: &[Vec<f64>], params: &AutoencoderParams, seed: u64) -> Result<AutoencoderModel, ModelError> {
    if x.len() < AUTOENCODER_MIN_SAMPLES {
        return Err(ModelError::TooFewSamples { needed: AUTOENCODER_MIN_SAMPLES, got: x.len() });
    }
    if params.hidden.len() < 2 || params.hidden.len() % 2 != 0 {
        return Err(ModelError::Params("autoencoder needs an even number of hidden layers".into()));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(ModelError::Dimension);
    }
    let scaler = RobustScaler::fit(x)?;
    let z = scaler.transform(x)?;

    let mut rng = stream(seed, Stream::Autoencoder);
    let mut sizes = vec![d];
    sizes.extend(&params.hidden);
    sizes.push(d);
    let mut acts = vec![Activation::Tanh; params.hidden.len()];
    acts.push(Activation::Identity);
    let mut network = Network::new(&sizes, &acts, &mut rng);
    let mut opt = Adam::new(&network, params.learning_rate);

    let loss = |out: &[f64], i: usize| squared_error(out, &z[i]);
    let all: Vec<usize> = (0..z.len()).collect();
    let initial_loss = network.loss_and_gradients(&all, &z, 0.0, loss).0;
    let mut order = all.clone();
    let mut best = f64::INFINITY;
    let mut best_network = network.clone();
    let (mut stale, mut epochs) = (0, 0);
    while epochs < params.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size.max(1)) {
            let (l, g) = network.loss_and_gradients(batch, &z, 0.0, loss);
            if !l.is_finite() {
                return Err(ModelError::NanLoss { epoch: epochs });
            }
            opt.step(&mut network, &g);
        }
        epochs += 1;
        let l = network.loss_and_gradients(&all, &z, 0.0, loss).0;
        if !l.is_finite() {
            return Err(ModelError::NanLoss { epoch: epochs });
        }
        if l < best - params.tolerance {
            best = l;
            best_network = network.clone();
            stale = 0;
        } else {
            if l < best {
                best = l;
                best_network = network.clone();
            }
            stale += 1;
            if stale >= params.patience {
                break;
            }
        }
    }
    Ok(AutoencoderModel {
        network: best_network,
        encoder_layers: params.hidden.len() / 2,
        scaler,
        seed,
        epochs,
        initial_loss,
        final_loss: best,
    })
}

impl AutoencoderModel {
    pub fn code_dim(&self) -> usize {
        self.network.layers[self.encoder_layers - 1].outputs
    }

    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        self.network.forward_to(&self.scaler.transform_one(x), self.encoder_layers)
    }

    pub fn reconstruct(&self, x: &[f64]) -> Vec<f64> {
        self.scaler.inverse_one(&self.network.forward(&self.scaler.transform_one(x)))
    }
}
