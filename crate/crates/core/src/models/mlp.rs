//! ReLU multilayer perceptron with a two-way softmax output.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dense::{softmax, softmax_cross_entropy, Activation, Adam, Network};
use super::{check_training_data, ModelError};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without an improvement of at least `tolerance` before stopping.
    pub patience: usize,
    pub tolerance: f64,
    pub l2: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![100, 100],
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 2000,
            patience: 20,
            tolerance: 1e-4,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: Network,
    pub seed: u64,
    pub epochs: usize,
    pub final_loss: f64,
}

pub fn train_mlp(x: &[Vec<f64>], y: &[u8], params: &MlpParams, seed: u64) -> Result<MlpModel, ModelError> {
    check_training_data(x, y)?;
    if params.batch_size == 0 || !(params.learning_rate > 0.0) {
        return Err(ModelError::Params("batch size and learning rate must be positive".into()));
    }
    let mut rng = stream(seed, Stream::Classifier);
    let mut sizes = vec![x[0].len()];
    sizes.extend(&params.hidden);
    sizes.push(2);
    let mut acts = vec![Activation::Relu; params.hidden.len()];
    acts.push(Activation::Identity);
    let mut network = Network::new(&sizes, &acts, &mut rng);
    let mut opt = Adam::new(&network, params.learning_rate);

    let loss = |out: &[f64], i: usize| softmax_cross_entropy(out, y[i] as usize);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut epochs = 0;
    let mut final_loss = f64::NAN;
    while epochs < params.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(params.batch_size) {
            let (l, g) = network.loss_and_gradients(batch, x, params.l2, loss);
            if !l.is_finite() {
                return Err(ModelError::NanLoss { epoch: epochs });
            }
            total += l * batch.len() as f64;
            opt.step(&mut network, &g);
        }
        epochs += 1;
        final_loss = total / x.len() as f64;
        if final_loss < best - params.tolerance {
            best = final_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= params.patience {
                break;
            }
        }
    }
    if !network.is_finite() {
        return Err(ModelError::NanLoss { epoch: epochs });
    }
    Ok(MlpModel { network, seed, epochs, final_loss })
}

impl MlpModel {
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.network.forward(x))
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.probabilities(x)[1]
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let p = self.probabilities(x);
        u8::from(p[1] > p[0])
    }
}
