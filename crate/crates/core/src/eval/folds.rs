use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// Fold index of each sample.
    pub folds: Vec<usize>,
}

impl FoldAssignment {
    /// Sample indices outside and inside fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &fold) in self.folds.iter().enumerate() {
            if fold == f {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Partitions subjects into `k` folds. Subjects are shuffled by `seed`, grouped
/// by class, then each goes to the fold holding the fewest samples of its
/// class (ties: fewest samples overall, then lowest index).
pub fn subject_stratified_kfold(subjects: &[String], labels: &[u8], k: usize, seed: u64) -> Result<FoldAssignment, EvalError> {
    if subjects.len() != labels.len() {
        return Err(EvalError::Length { left: subjects.len(), right: labels.len() });
    }
    if k < 2 {
        return Err(EvalError::Spec(format!("need at least 2 folds, got {k}")));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut members: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, s) in subjects.iter().enumerate() {
        members
            .entry(s.as_str())
            .or_insert_with(|| {
                order.push(s.as_str());
                Vec::new()
            })
            .push(i);
    }
    if order.len() < k {
        return Err(EvalError::TooFewSubjects { subjects: order.len(), folds: k });
    }
    let subject_label = |s: &str| -> Result<u8, EvalError> {
        let idx = &members[s];
        let l = labels[idx[0]];
        if l > 1 {
            return Err(EvalError::Labels);
        }
        if idx.iter().any(|&i| labels[i] != l) {
            return Err(EvalError::Spec(format!("subject '{s}' has samples with both labels")));
        }
        Ok(l)
    };
    let mut rng = stream(seed, Stream::Folds);
    order.shuffle(&mut rng);
    let mut keyed = Vec::with_capacity(order.len());
    for s in order {
        keyed.push((subject_label(s)?, s));
    }
    keyed.sort_by_key(|(l, _)| *l);

    let mut class_counts = vec![[0usize; 2]; k];
    let mut totals = vec![0usize; k];
    let mut folds = vec![0usize; subjects.len()];
    for (label, s) in keyed {
        let idx = &members[s];
        let f = (0..k).min_by_key(|&f| (class_counts[f][label as usize], totals[f], f)).unwrap();
        class_counts[f][label as usize] += idx.len();
        totals[f] += idx.len();
        for &i in idx {
            folds[i] = f;
        }
    }
    Ok(FoldAssignment { k, folds })
}
