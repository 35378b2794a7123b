use serde::{Deserialize, Serialize};

use super::{CorpusError, FeatureSample, FEATURE_DIM, FEATURE_NAMES};
use crate::stats;

/// Per-feature significance threshold after Bonferroni correction over the
/// 8 features.
pub const BONFERRONI_ALPHA: f64 = 0.05 / FEATURE_DIM as f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTTest {
    pub feature: String,
    pub t: f64,
    pub p: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTTestReport {
    pub tests: Vec<FeatureTTest>,
    pub threshold: f64,
}

/// Welch t-test of every feature between two groups of samples.
pub fn feature_ttests(group_a: &[FeatureSample], group_b: &[FeatureSample]) -> Result<FeatureTTestReport, CorpusError> {
    if group_a.len() < 2 {
        return Err(CorpusError::GroupTooSmall { group: 'A', size: group_a.len() });
    }
    if group_b.len() < 2 {
        return Err(CorpusError::GroupTooSmall { group: 'B', size: group_b.len() });
    }
    let tests = (0..FEATURE_DIM)
        .map(|k| {
            let a: Vec<f64> = group_a.iter().map(|s| s.features[k]).collect();
            let b: Vec<f64> = group_b.iter().map(|s| s.features[k]).collect();
            let r = stats::welch(&a, &b);
            FeatureTTest {
                feature: FEATURE_NAMES[k].to_string(),
                t: r.t,
                p: r.p,
                significant: r.p < BONFERRONI_ALPHA,
            }
        })
        .collect();
    Ok(FeatureTTestReport { tests, threshold: BONFERRONI_ALPHA })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(f: [f64; FEATURE_DIM]) -> FeatureSample {
        FeatureSample {
            features: f,
            subject_id: "s".into(),
            language: Default::default(),
            accent: Default::default(),
            label: Default::default(),
        }
    }

    #[test]
    fn identical_groups() {
        let g: Vec<_> = (0..4).map(|i| sample([0.1 * i as f64; FEATURE_DIM])).collect();
        let r = feature_ttests(&g, &g).unwrap();
        for t in &r.tests {
            assert_eq!((t.t, t.p, t.significant), (0.0, 1.0, false));
        }
    }

    #[test]
    fn constant_but_different_groups_are_flagged() {
        let mut fa = [0.0; FEATURE_DIM];
        fa[0] = 0.1;
        let mut fb = [0.0; FEATURE_DIM];
        fb[0] = 0.9;
        let a = vec![sample(fa); 3];
        let b = vec![sample(fb); 3];
        let r = feature_ttests(&a, &b).unwrap();
        // -0.8 / sqrt(1e-12) = -8e5 with 4 degrees of freedom
        assert!((r.tests[0].t + 8e5).abs() < 1e-3);
        assert!(r.tests[0].significant);
        // the untouched features are zero in both groups
        assert!(r.tests[1..].iter().all(|t| t.p == 1.0 && !t.significant));
    }

    #[test]
    fn singleton_group_is_an_error() {
        let g = vec![sample([0.1; FEATURE_DIM])];
        assert!(matches!(feature_ttests(&g, &[g[0].clone(), g[0].clone()]), Err(CorpusError::GroupTooSmall { group: 'A', .. })));
    }

    proptest! {
        #[test]
        fn swapping_groups_negates_t(
            a in prop::collection::vec(prop::array::uniform8(0.0f64..0.12), 2..8),
            b in prop::collection::vec(prop::array::uniform8(0.0f64..0.12), 2..8),
        ) {
            let ga: Vec<_> = a.into_iter().map(sample).collect();
            let gb: Vec<_> = b.into_iter().map(sample).collect();
            let ab = feature_ttests(&ga, &gb).unwrap();
            let ba = feature_ttests(&gb, &ga).unwrap();
            for (x, y) in ab.tests.iter().zip(&ba.tests) {
                prop_assert!((x.t + y.t).abs() <= 1e-9 * x.t.abs().max(1.0));
                prop_assert!((x.p - y.p).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&x.p));
            }
        }
    }
}
