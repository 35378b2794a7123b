use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{paired_ttest, EvalError, RegimeResult, RegimeSpec, SeedScore};
use crate::doc::Document;
use crate::models::ClassifierKind;
use crate::stats::{mean, population_std, TTest};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        Summary { mean: mean(values), std: population_std(values) }
    }
}

/// Paired t-tests of a row against the baseline row with the same classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub f1: TTest,
    pub auroc: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub spec: RegimeSpec,
    pub f1: Summary,
    pub auroc: Summary,
    pub per_seed: Vec<SeedScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

impl ReportRow {
    pub fn classifier(&self) -> ClassifierKind {
        self.spec.classifier
    }

    pub fn f1_scores(&self) -> Vec<f64> {
        self.per_seed.iter().map(|s| s.f1).collect()
    }

    pub fn auroc_scores(&self) -> Vec<f64> {
        self.per_seed.iter().map(|s| s.auroc).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    pub rows: Vec<ReportRow>,
}

impl Document for ExperimentReport {
    const FORMAT: &'static str = "lingot.experiment_report";
}

impl ExperimentReport {
    /// Summarises regime results; rows keep the input order. With a baseline
    /// label, every other row with the same classifier and seeds gets paired
    /// t-tests against it.
    pub fn from_results(results: Vec<RegimeResult>, baseline: Option<&str>) -> Result<Self, EvalError> {
        let mut rows: Vec<ReportRow> = results
            .into_iter()
            .map(|r| {
                let f1: Vec<f64> = r.per_seed.iter().map(|s| s.f1).collect();
                let au: Vec<f64> = r.per_seed.iter().map(|s| s.auroc).collect();
                ReportRow {
                    label: r.spec.label(),
                    f1: Summary::of(&f1),
                    auroc: Summary::of(&au),
                    spec: r.spec,
                    per_seed: r.per_seed,
                    comparison: None,
                }
            })
            .collect();
        if let Some(base) = baseline {
            if !rows.iter().any(|r| r.label == base) {
                return Err(EvalError::Spec(format!("baseline '{base}' is not one of the regimes")));
            }
            let bases: BTreeMap<ClassifierKind, (Vec<u64>, Vec<f64>, Vec<f64>)> = rows
                .iter()
                .filter(|r| r.label == base)
                .map(|r| (r.classifier(), (r.per_seed.iter().map(|s| s.seed).collect(), r.f1_scores(), r.auroc_scores())))
                .collect();
            for row in rows.iter_mut().filter(|r| r.label != base) {
                let Some((seeds, f1, au)) = bases.get(&row.classifier()) else { continue };
                let row_seeds: Vec<u64> = row.per_seed.iter().map(|s| s.seed).collect();
                if &row_seeds != seeds || seeds.len() < 2 {
                    continue;
                }
                row.comparison = Some(Comparison {
                    baseline: base.to_string(),
                    f1: paired_ttest(&row.f1_scores(), f1)?,
                    auroc: paired_ttest(&row.auroc_scores(), au)?,
                });
            }
        }
        Ok(ExperimentReport { baseline: baseline.map(str::to_string), rows })
    }

    pub fn row(&self, label: &str, classifier: ClassifierKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label && r.classifier() == classifier)
    }

    /// Regime rows by classifier columns, each cell `F1 AUROC` as mean±std.
    pub fn to_table(&self) -> String {
        let mut labels: Vec<&str> = Vec::new();
        let mut classifiers: Vec<ClassifierKind> = Vec::new();
        for r in &self.rows {
            if !labels.contains(&r.label.as_str()) {
                labels.push(&r.label);
            }
            if !classifiers.contains(&r.classifier()) {
                classifiers.push(r.classifier());
            }
        }
        classifiers.sort();
        let cell = |label: &str, c: ClassifierKind| -> String {
            match self.row(label, c) {
                Some(r) => format!("{:.2}±{:.2} {:.2}±{:.2}", r.f1.mean, r.f1.std, r.auroc.mean, r.auroc.std),
                None => "-".to_string(),
            }
        };
        let mut grid: Vec<Vec<String>> = vec![std::iter::once("Regime".to_string())
            .chain(classifiers.iter().map(|c| format!("{c} (F1 AUROC)")))
            .collect()];
        for l in &labels {
            grid.push(std::iter::once(l.to_string()).chain(classifiers.iter().map(|&c| cell(l, c))).collect());
        }
        let mut out = render(&grid);

        let compared: Vec<&ReportRow> = self.rows.iter().filter(|r| r.comparison.is_some()).collect();
        if let (Some(base), false) = (&self.baseline, compared.is_empty()) {
            out.push_str(&format!("\nPaired t-tests against {base}\n"));
            let mut grid = vec![vec![
                "Regime".to_string(),
                "Classifier".to_string(),
                "dF1".to_string(),
                "p(F1)".to_string(),
                "dAUROC".to_string(),
                "p(AUROC)".to_string(),
            ]];
            for r in compared {
                let c = r.comparison.as_ref().unwrap();
                let base_row = self.row(base, r.classifier()).unwrap();
                grid.push(vec![
                    r.label.clone(),
                    r.classifier().to_string(),
                    format!("{:+.2}", r.f1.mean - base_row.f1.mean),
                    format_p(c.f1.p),
                    format!("{:+.2}", r.auroc.mean - base_row.auroc.mean),
                    format_p(c.auroc.p),
                ]);
            }
            out.push_str(&render(&grid));
        }
        out
    }
}

fn format_p(p: f64) -> String {
    if p < 1e-3 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

fn render(grid: &[Vec<String>]) -> String {
    let cols = grid.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| grid.iter().map(|r| r.get(c).map_or(0, |s| s.chars().count())).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in grid.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s}{}", " ".repeat(widths[c] - s.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1)));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::RegimeKind;

    fn result(kind: RegimeKind, scores: &[(u64, f64, f64)]) -> RegimeResult {
        RegimeResult {
            spec: RegimeSpec::new(kind, ClassifierKind::Svm, scores.iter().map(|s| s.0).collect()),
            per_seed: scores.iter().map(|&(seed, f1, auroc)| SeedScore { seed, f1, auroc }).collect(),
        }
    }

    #[test]
    fn summaries_and_comparisons() {
        let r = ExperimentReport::from_results(
            vec![
                result(RegimeKind::Unilingual, &[(0, 50.0, 60.0), (1, 52.0, 60.0), (2, 54.0, 60.0)]),
                result(RegimeKind::OtEmd, &[(0, 60.0, 70.0), (1, 63.0, 70.0), (2, 63.0, 70.0)]),
            ],
            Some("Unilingual"),
        )
        .unwrap();
        let base = r.row("Unilingual", ClassifierKind::Svm).unwrap();
        assert_eq!(base.f1.mean, 52.0);
        assert!((base.f1.std - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(base.comparison.is_none());
        let ot = r.row("OT-EMD", ClassifierKind::Svm).unwrap();
        let c = ot.comparison.as_ref().unwrap();
        // differences 10, 11, 9
        assert!((c.f1.t - 10.0 / (1.0 / 3.0f64.sqrt())).abs() < 1e-9);
        assert!(c.auroc.p < 1e-9);
        let table = r.to_table();
        assert!(table.contains("52.00±1.63 60.00±0.00"));
        assert!(table.contains("Paired t-tests against Unilingual"));
    }

    #[test]
    fn unknown_baseline_is_an_error() {
        assert!(ExperimentReport::from_results(vec![result(RegimeKind::OtEmd, &[(0, 1.0, 2.0)])], Some("nope")).is_err());
    }

    #[test]
    fn json_round_trip() {
        let r = ExperimentReport::from_results(
            vec![result(RegimeKind::OtEmd, &[(0, 1.0, 2.0), (1, 3.0, 4.0)]), result(RegimeKind::Unilingual, &[(0, 1.0, 2.0), (1, 2.0, 2.0)])],
            Some("Unilingual"),
        )
        .unwrap();
        let text = crate::doc::to_json(&r).unwrap();
        assert_eq!(crate::doc::from_json::<ExperimentReport>(&text).unwrap(), r);
    }
}
