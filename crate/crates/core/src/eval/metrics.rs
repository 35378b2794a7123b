use super::EvalError;

fn check_binary(y: &[u8]) -> Result<(), EvalError> {
    if y.iter().any(|&v| v > 1) {
        return Err(EvalError::Labels);
    }
    Ok(())
}

/// Unweighted mean of the two per-class F1 scores, in percent. A class with
/// no true and no predicted members scores 0.
pub fn macro_f1(y_true: &[u8], y_pred: &[u8]) -> Result<f64, EvalError> {
    if y_true.is_empty() {
        return Err(EvalError::Empty("macro_f1 input"));
    }
    if y_true.len() != y_pred.len() {
        return Err(EvalError::Length { left: y_true.len(), right: y_pred.len() });
    }
    check_binary(y_true)?;
    check_binary(y_pred)?;
    let mut total = 0.0;
    for class in [0u8, 1] {
        let tp = y_true.iter().zip(y_pred).filter(|(t, p)| **t == class && **p == class).count();
        let fp = y_true.iter().zip(y_pred).filter(|(t, p)| **t != class && **p == class).count();
        let fn_ = y_true.iter().zip(y_pred).filter(|(t, p)| **t == class && **p != class).count();
        let denom = 2 * tp + fp + fn_;
        if denom > 0 {
            total += 2.0 * tp as f64 / denom as f64;
        }
    }
    Ok(50.0 * total)
}

/// Mann-Whitney AUROC with average ranks for ties, in percent.
pub fn auroc(y_true: &[u8], scores: &[f64]) -> Result<f64, EvalError> {
    if y_true.len() != scores.len() {
        return Err(EvalError::Length { left: y_true.len(), right: scores.len() });
    }
    check_binary(y_true)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::NonFinite("scores"));
    }
    let n_pos = y_true.iter().filter(|&&v| v == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += avg * order[i..=j].iter().filter(|&&k| y_true[k] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(100.0 * u / (n_pos * n_neg) as f64)
}
