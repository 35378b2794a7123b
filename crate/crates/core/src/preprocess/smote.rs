use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k: usize,
    /// Number of synthetic points to produce.
    pub target: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig { k: 3, target: 0, seed: 0 }
    }
}

impl SmoteConfig {
    /// Config that tops `minority` up to `majority` samples.
    pub fn balance(minority: usize, majority: usize, seed: u64) -> Self {
        SmoteConfig { k: 3, target: majority.saturating_sub(minority), seed }
    }
}

/// Synthetic minority oversampling. Each point interpolates a random minority
/// sample towards one of its k nearest minority neighbours.
pub fn smote(minority: &[Vec<f64>], cfg: &SmoteConfig) -> Result<Vec<Vec<f64>>, PreprocessError> {
    if cfg.k == 0 {
        return Err(PreprocessError::Config("k must be at least 1".into()));
    }
    let n = minority.len();
    if n < 2 {
        return Err(PreprocessError::TooFewSamples { needed: 2, got: n });
    }
    let d = minority[0].len();
    for s in minority {
        if s.len() != d {
            return Err(PreprocessError::Dimension { expected: d, found: s.len() });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(PreprocessError::NonFinite);
        }
    }
    if cfg.target == 0 {
        return Ok(Vec::new());
    }
    let k = if cfg.k > n - 1 {
        log::warn!("SMOTE: only {} neighbours available, using k={} instead of {}", n - 1, n - 1, cfg.k);
        n - 1
    } else {
        cfg.k
    };

    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (crate::ot::sq_dist(&minority[i], &minority[j]), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();

    let mut rng = stream(cfg.seed, Stream::Smote);
    let mut out = Vec::with_capacity(cfg.target);
    for _ in 0..cfg.target {
        let i = rng.random_range(0..n);
        let j = neighbours[i][rng.random_range(0..k)];
        let u: f64 = rng.random();
        out.push(minority[i].iter().zip(&minority[j]).map(|(a, b)| a + u * (b - a)).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_points_give_the_diagonal() {
        let m = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let out = smote(&m, &SmoteConfig { k: 1, target: 50, seed: 3 }).unwrap();
        assert_eq!(out.len(), 50);
        for p in out {
            assert_eq!(p[0], p[1]);
            assert!((0.0..=1.0).contains(&p[0]));
        }
    }

    #[test]
    fn identical_points_are_reproduced() {
        let m = vec![vec![0.3, 0.7], vec![0.3, 0.7]];
        for p in smote(&m, &SmoteConfig { k: 3, target: 10, seed: 0 }).unwrap() {
            assert_eq!(p, vec![0.3, 0.7]);
        }
    }

    #[test]
    fn neighbour_deficit_truncates_k() {
        let m = vec![vec![0.0], vec![1.0]];
        let out = smote(&m, &SmoteConfig { k: 3, target: 5, seed: 1 }).unwrap();
        assert_eq!(out.len(), 5);
    }

    #[test]
    fn rejects_tiny_minority_and_zero_k() {
        assert!(smote(&[vec![1.0]], &SmoteConfig { k: 3, target: 1, seed: 0 }).is_err());
        assert!(smote(&[vec![1.0], vec![2.0]], &SmoteConfig { k: 0, target: 1, seed: 0 }).is_err());
    }

    #[test]
    fn balance_counts() {
        assert_eq!(SmoteConfig::balance(3, 10, 0).target, 7);
        assert_eq!(SmoteConfig::balance(10, 3, 0).target, 0);
    }

    fn on_segment(p: &[f64], a: &[f64], b: &[f64]) -> bool {
        // p = a + u (b - a) for a single u in [0, 1]
        let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let len2: f64 = ab.iter().map(|v| v * v).sum();
        if len2 == 0.0 {
            return p.iter().zip(a).all(|(x, y)| (x - y).abs() < 1e-12);
        }
        let u: f64 = p.iter().zip(a).zip(&ab).map(|((x, y), d)| (x - y) * d).sum::<f64>() / len2;
        (-1e-12..=1.0 + 1e-12).contains(&u)
            && p.iter().zip(a).zip(&ab).all(|((x, y), d)| (x - (y + u * d)).abs() < 1e-9)
    }

    proptest! {
        #[test]
        fn synthetic_points_lie_on_neighbour_segments(
            pts in prop::collection::vec(prop::array::uniform2(-3.0f64..3.0), 2..12),
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            let m: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
            let cfg = SmoteConfig { k, target: 20, seed };
            let out = smote(&m, &cfg).unwrap();
            prop_assert_eq!(out.len(), 20);
            let kk = k.min(m.len() - 1);
            for p in &out {
                let found = (0..m.len()).any(|i| {
                    let mut d: Vec<(f64, usize)> = (0..m.len()).filter(|&j| j != i)
                        .map(|j| (crate::ot::sq_dist(&m[i], &m[j]), j)).collect();
                    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    d.iter().take(kk).any(|&(_, j)| on_segment(p, &m[i], &m[j]))
                });
                prop_assert!(found);
            }
            prop_assert_eq!(out, smote(&m, &cfg).unwrap());
        }
    }
}
