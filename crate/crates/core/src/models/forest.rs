//! Random forest of shallow Gini trees.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, ModelError};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 200, max_depth: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
    /// Class distribution `[p0, p1]` of the training samples reaching the leaf.
    Leaf { distribution: [f64; 2] },
}

impl Node {
    fn leaf(counts: [usize; 2]) -> Node {
        let n = (counts[0] + counts[1]) as f64;
        Node::Leaf { distribution: [counts[0] as f64 / n, counts[1] as f64 / n] }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn positive_probability(&self, x: &[f64]) -> f64 {
        match self {
            Node::Leaf { distribution } => distribution[1],
            Node::Split { feature, threshold, left, right } => {
                if x[*feature] <= *threshold {
                    left.positive_probability(x)
                } else {
                    right.positive_probability(x)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Node>,
    pub max_depth: usize,
    pub seed: u64,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = counts[1] as f64 / n;
    2.0 * p * (1.0 - p)
}

fn count(y: &[u8], idx: &[usize]) -> [usize; 2] {
    let pos = idx.iter().filter(|&&i| y[i] == 1).count();
    [idx.len() - pos, pos]
}

fn grow<R: Rng>(x: &[Vec<f64>], y: &[u8], idx: &[usize], depth: usize, max_depth: usize, mtry: usize, rng: &mut R) -> Node {
    let counts = count(y, idx);
    if depth >= max_depth || counts[0] == 0 || counts[1] == 0 {
        return Node::leaf(counts);
    }
    let d = x[0].len();
    let parent = gini(counts) * idx.len() as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut features = sample(rng, d, mtry).into_vec();
    features.sort_unstable();
    for f in features {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut left = [0usize; 2];
        let mut right = counts;
        for w in 0..order.len() - 1 {
            let c = y[order[w]] as usize;
            left[c] += 1;
            right[c] -= 1;
            let (lo, hi) = (x[order[w]][f], x[order[w + 1]][f]);
            if lo == hi {
                continue;
            }
            let impurity = gini(left) * (w + 1) as f64 + gini(right) * (order.len() - w - 1) as f64;
            if best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, f, lo + (hi - lo) / 2.0));
            }
        }
    }
    match best {
        Some((impurity, feature, threshold)) if impurity < parent - 1e-12 => {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] <= threshold);
            Node::Split {
                feature,
                threshold,
                left: Box::new(grow(x, y, &l, depth + 1, max_depth, mtry, rng)),
                right: Box::new(grow(x, y, &r, depth + 1, max_depth, mtry, rng)),
            }
        }
        _ => Node::leaf(counts),
    }
}

pub fn train_forest(x: &[Vec<f64>], y: &[u8], params: &ForestParams, seed: u64) -> Result<ForestModel, ModelError> {
    if x.is_empty() {
        return Err(ModelError::Empty);
    }
    check_training_data(x, y).or_else(|e| if matches!(e, ModelError::SingleClass) { Ok(()) } else { Err(e) })?;
    if params.trees == 0 {
        return Err(ModelError::Params("forest needs at least one tree".into()));
    }
    let n = x.len();
    let d = x[0].len();
    let mtry = ((d as f64).sqrt().floor() as usize).clamp(1, d);
    let trees = (0..params.trees)
        .map(|t| {
            let mut rng = substream(seed, Stream::Bootstrap, t as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow(x, y, &idx, 0, params.max_depth, mtry, &mut rng)
        })
        .collect();
    Ok(ForestModel { trees, max_depth: params.max_depth, seed })
}

impl ForestModel {
    /// Mean leaf probability of the positive class.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.positive_probability(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// Majority vote of the per-tree decisions.
    pub fn predict(&self, x: &[f64]) -> u8 {
        let votes = self.trees.iter().filter(|t| t.positive_probability(x) > 0.5).count();
        u8::from(2 * votes > self.trees.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::test_support::blobs;

    #[test]
    fn one_dimensional_threshold() {
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![if i < 100 { -1.0 - i as f64 } else { 1.0 + i as f64 }]).collect();
        let y: Vec<u8> = (0..200).map(|i| u8::from(i >= 100)).collect();
        let f = train_forest(&x, &y, &ForestParams::default(), 7).unwrap();
        assert!(x.iter().zip(&y).all(|(xi, yi)| f.predict(xi) == *yi));
    }

    #[test]
    fn constant_features_predict_majority() {
        let x = vec![vec![0.5, 0.5]; 30];
        let y: Vec<u8> = (0..30).map(|i| u8::from(i < 20)).collect();
        let f = train_forest(&x, &y, &ForestParams::default(), 1).unwrap();
        assert!(f.trees.iter().all(|t| t.depth() == 0));
        assert!(x.iter().all(|xi| f.predict(xi) == 1));
    }

    #[test]
    fn deterministic_and_depth_bounded() {
        let (x, y) = blobs(100, 1.5, 3);
        let a = train_forest(&x, &y, &ForestParams::default(), 42).unwrap();
        let b = train_forest(&x, &y, &ForestParams::default(), 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trees.len(), 200);
        assert!(a.trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn leaf_distributions_sum_to_one() {
        fn walk(n: &Node) {
            match n {
                Node::Leaf { distribution } => assert!((distribution[0] + distribution[1] - 1.0).abs() < 1e-12),
                Node::Split { left, right, .. } => {
                    walk(left);
                    walk(right);
                }
            }
        }
        let (x, y) = blobs(60, 1.0, 8);
        train_forest(&x, &y, &ForestParams::default(), 0).unwrap().trees.iter().for_each(walk);
    }

    #[test]
    fn positive_rescaling_keeps_predictions() {
        let (x, y) = blobs(80, 1.0, 12);
        let xs: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| v * 3.0).collect()).collect();
        let a = train_forest(&x, &y, &ForestParams::default(), 5).unwrap();
        let b = train_forest(&xs, &y, &ForestParams::default(), 5).unwrap();
        for (xi, xsi) in x.iter().zip(&xs) {
            assert_eq!(a.predict(xi), b.predict(xsi));
            assert!((a.score(xi) - b.score(xsi)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(train_forest(&[], &[], &ForestParams::default(), 0), Err(ModelError::Empty)));
    }
}
