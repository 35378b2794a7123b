//! Small statistics helpers shared by the corpus comparisons and the
//! experiment engine.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Variance floor used when a t statistic would otherwise divide by zero.
pub const VARIANCE_EPS: f64 = 1e-12;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`).
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Population standard deviation (denominator `n`).
pub fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df.max(1e-9)).expect("valid Student-t parameters");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Result of a t-test.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

/// Welch's unequal-variance two-sample t-test on `a - b`.
///
/// Callers guarantee both groups have at least two observations.
pub fn welch(a: &[f64], b: &[f64]) -> TTest {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a), sample_variance(b));
    let diff = mean(a) - mean(b);
    let se2 = va / na + vb / nb;
    if se2 < VARIANCE_EPS {
        let df = na + nb - 2.0;
        if diff == 0.0 {
            return TTest { t: 0.0, p: 1.0, df };
        }
        let t = diff / VARIANCE_EPS.sqrt();
        return TTest { t, p: two_sided_p(t, df), df };
    }
    let t = diff / se2.sqrt();
    // Welch–Satterthwaite; a zero-variance group contributes nothing.
    let mut denom = 0.0;
    if va > 0.0 {
        denom += (va / na).powi(2) / (na - 1.0);
    }
    if vb > 0.0 {
        denom += (vb / nb).powi(2) / (nb - 1.0);
    }
    let df = se2 * se2 / denom;
    TTest { t, p: two_sided_p(t, df), df }
}

/// Paired t-test on `a - b`.
///
/// Callers guarantee equal lengths of at least two.
pub fn paired(a: &[f64], b: &[f64]) -> TTest {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let df = n - 1.0;
    let m = mean(&diffs);
    let v = sample_variance(&diffs);
    if v <= 0.0 {
        if m == 0.0 {
            return TTest { t: 0.0, p: 1.0, df };
        }
        let t = m / (VARIANCE_EPS / n).sqrt();
        return TTest { t, p: two_sided_p(t, df), df };
    }
    let t = m / (v / n).sqrt();
    TTest { t, p: two_sided_p(t, df), df }
}

/// Quantile with linear interpolation between order statistics
/// (the "type 7" rule). `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}
