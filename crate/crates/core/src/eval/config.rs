use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    generate_synthetic_corpus, run_regime, AccentMix, EvalError, EvalSettings, ExperimentData, ExperimentReport,
    RegimeKind, RegimeSpec, SynthCorpusSpec,
};
use crate::corpus::table::read_features;
use crate::corpus::LanguageRole;
use crate::models::ClassifierKind;

pub const CONFIG_VERSION: u32 = 1;

/// Feature CSVs for the four sample groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub source_clinical: PathBuf,
    pub target_clinical: PathBuf,
    pub source_pool: PathBuf,
    pub target_pool: PathBuf,
    #[serde(default)]
    pub pools_paired: bool,
}

/// One regime of the grid, expanded into a spec per classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub regime: RegimeKind,
    #[serde(default)]
    pub include_aphasic_in_ot: bool,
    #[serde(default)]
    pub paired: bool,
    #[serde(default)]
    pub accent_mix: Option<AccentMix>,
    #[serde(default = "one")]
    pub train_fraction: f64,
    pub classifiers: Vec<ClassifierKind>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub synthetic: Option<SynthCorpusSpec>,
    #[serde(default)]
    pub inputs: Option<InputPaths>,
    pub regimes: Vec<RegimeEntry>,
    pub seeds: Vec<u64>,
    /// Regime label the others are tested against.
    #[serde(default)]
    pub baseline: Option<String>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub settings: EvalSettings,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Config(vec![e.to_string()]))
    }

    /// Reads a config; relative paths inside it are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(i) = &mut self.inputs {
            fix(&mut i.source_clinical);
            fix(&mut i.target_clinical);
            fix(&mut i.source_pool);
            fix(&mut i.target_pool);
        }
        fix(&mut self.output_dir);
    }

    /// Specs in grid order: regimes as listed, classifiers as listed per regime.
    pub fn specs(&self) -> Vec<RegimeSpec> {
        self.regimes
            .iter()
            .flat_map(|e| {
                e.classifiers.iter().map(move |&classifier| RegimeSpec {
                    name: e.name.clone(),
                    regime: e.regime,
                    include_aphasic_in_ot: e.include_aphasic_in_ot,
                    paired: e.paired,
                    accent_mix: e.accent_mix,
                    train_fraction: e.train_fraction,
                    classifier,
                    seeds: self.seeds.clone(),
                })
            })
            .collect()
    }

    /// Every problem found, not just the first.
    pub fn validate(&self) -> Result<(), EvalError> {
        let mut errors = Vec::new();
        if self.version != CONFIG_VERSION {
            errors.push(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        match (&self.synthetic, &self.inputs) {
            (Some(_), Some(_)) => errors.push("give either 'synthetic' or 'inputs', not both".into()),
            (None, None) => errors.push("one of 'synthetic' or 'inputs' is required".into()),
            _ => {}
        }
        if let Some(s) = &self.synthetic {
            if let Err(e) = s.validate() {
                errors.push(format!("synthetic: {e}"));
            }
        }
        if let Some(i) = &self.inputs {
            for p in [&i.source_clinical, &i.target_clinical, &i.source_pool, &i.target_pool] {
                if !p.is_file() {
                    errors.push(format!("input file not found: {}", p.display()));
                }
            }
        }
        if self.regimes.is_empty() {
            errors.push("no regimes listed".into());
        }
        for (k, e) in self.regimes.iter().enumerate() {
            if e.classifiers.is_empty() {
                errors.push(format!("regimes[{k}]: no classifiers listed"));
            }
        }
        for spec in self.specs() {
            if let Err(e) = spec.validate() {
                errors.push(e.to_string());
            }
        }
        let specs = self.specs();
        for (a, s) in specs.iter().enumerate() {
            if specs[..a].iter().any(|t| t.label() == s.label() && t.classifier == s.classifier) {
                errors.push(format!("duplicate regime row '{}' for {}", s.label(), s.classifier));
            }
        }
        if let Some(b) = &self.baseline {
            if !specs.iter().any(|s| &s.label() == b) {
                errors.push(format!("baseline '{b}' does not name a regime"));
            }
        }
        if self.settings.unilingual_folds < 2 {
            errors.push("settings.unilingual_folds must be at least 2".into());
        }
        if self.settings.smote_k == 0 {
            errors.push("settings.smote_k must be at least 1".into());
        }
        if !(self.settings.sinkhorn_reg > 0.0) {
            errors.push("settings.sinkhorn_reg must be positive".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(EvalError::Config(errors))
        }
    }

    /// Data for unpaired regimes and, when any regime asks for it, for paired ones.
    pub fn load_data(&self) -> Result<(ExperimentData, Option<ExperimentData>), EvalError> {
        let wants_paired = self.regimes.iter().any(|r| r.paired);
        if let Some(spec) = &self.synthetic {
            let data = generate_synthetic_corpus(spec)?;
            let paired = if spec.paired {
                Some(data.clone())
            } else if wants_paired {
                Some(generate_synthetic_corpus(&SynthCorpusSpec { paired: true, ..spec.clone() })?)
            } else {
                None
            };
            return Ok((data, paired));
        }
        let inputs = self.inputs.as_ref().ok_or_else(|| EvalError::Config(vec!["no data source".into()]))?;
        let read = |p: &Path, role: LanguageRole| -> Result<_, EvalError> {
            let f = File::open(p).map_err(|e| EvalError::Config(vec![format!("cannot open {}: {e}", p.display())]))?;
            Ok(read_features(f, role)?)
        };
        let data = ExperimentData {
            source_clinical: read(&inputs.source_clinical, LanguageRole::Source)?,
            target_clinical: read(&inputs.target_clinical, LanguageRole::Target)?,
            source_pool: read(&inputs.source_pool, LanguageRole::Source)?,
            target_pool: read(&inputs.target_pool, LanguageRole::Target)?,
            pools_paired: inputs.pools_paired,
        };
        let paired = if inputs.pools_paired { Some(data.clone()) } else { None };
        Ok((data, paired))
    }

    /// Runs the full grid; regimes execute in parallel, rows keep grid order.
    pub fn run(&self) -> Result<ExperimentReport, EvalError> {
        self.validate()?;
        let (data, paired) = self.load_data()?;
        let specs = self.specs();
        let results = specs
            .par_iter()
            .map(|spec| {
                let d = if spec.paired {
                    paired.as_ref().ok_or_else(|| EvalError::Spec(format!("{}: pools are not paired", spec.label())))?
                } else {
                    &data
                };
                log::info!("running {} / {}", spec.label(), spec.classifier);
                run_regime(d, spec, &self.settings)
            })
            .collect::<Result<Vec<_>, _>>()?;
        ExperimentReport::from_results(results, self.baseline.as_deref())
    }
}
