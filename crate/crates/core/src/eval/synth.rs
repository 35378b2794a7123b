//! Synthetic bilingual benchmark. Target-language features are truncated
//! Gaussians per class; source-language features are an affine image of
//! target-like draws plus noise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{EvalError, ExperimentData};
use crate::corpus::{Accent, FeatureSample, Label, Language, LanguageRole, FEATURE_DIM};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassCounts {
    pub healthy: usize,
    pub aphasic: usize,
}

/// `y = matrix * x + shift + noise * N(0, I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineTransform {
    pub matrix: Vec<Vec<f64>>,
    pub shift: [f64; FEATURE_DIM],
    pub noise: f64,
}

impl AffineTransform {
    pub fn identity() -> Self {
        let matrix = (0..FEATURE_DIM).map(|i| (0..FEATURE_DIM).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        AffineTransform { matrix, shift: [0.0; FEATURE_DIM], noise: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCorpusSpec {
    pub source_clinical: ClassCounts,
    pub target_clinical: ClassCounts,
    /// Healthy, unlabeled-domain samples per language.
    pub source_pool: usize,
    pub target_pool: usize,
    #[serde(default = "one")]
    pub segments_per_subject: usize,
    pub healthy_mean: [f64; FEATURE_DIM],
    pub aphasic_mean: [f64; FEATURE_DIM],
    pub healthy_cov: Vec<Vec<f64>>,
    pub aphasic_cov: Vec<Vec<f64>>,
    pub transform: AffineTransform,
    /// Source pool rows are images of the matching target pool rows.
    #[serde(default)]
    pub paired: bool,
    /// Share of source-language samples tagged with a North American accent;
    /// the rest are tagged `other`.
    #[serde(default = "one_f")]
    pub na_fraction: f64,
    /// Extra offset for `other`-accent source-language samples.
    #[serde(default)]
    pub accent_shift: [f64; FEATURE_DIM],
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

fn diag(v: f64) -> Vec<Vec<f64>> {
    (0..FEATURE_DIM).map(|i| (0..FEATURE_DIM).map(|j| if i == j { v } else { 0.0 }).collect()).collect()
}

impl SynthCorpusSpec {
    /// Small balanced corpus used in examples and tests.
    pub fn small(seed: u64) -> Self {
        SynthCorpusSpec {
            source_clinical: ClassCounts { healthy: 40, aphasic: 40 },
            target_clinical: ClassCounts { healthy: 20, aphasic: 20 },
            source_pool: 60,
            target_pool: 60,
            segments_per_subject: 1,
            healthy_mean: [0.22, 0.2, 0.04, 0.07, 0.06, 0.04, 0.1, 0.1],
            aphasic_mean: [0.28, 0.15, 0.02, 0.05, 0.05, 0.03, 0.06, 0.14],
            healthy_cov: diag(0.02f64.powi(2)),
            aphasic_cov: diag(0.02f64.powi(2)),
            transform: AffineTransform::identity(),
            paired: false,
            na_fraction: 1.0,
            accent_shift: [0.0; FEATURE_DIM],
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Spec(m));
        for (name, m) in [("healthy_mean", &self.healthy_mean), ("aphasic_mean", &self.aphasic_mean)] {
            if m.iter().any(|v| !(0.0..=1.0).contains(v)) || m.iter().sum::<f64>() > 1.0 {
                return bad(format!("{name} must be a sub-probability vector"));
            }
        }
        for (name, c) in [("healthy_cov", &self.healthy_cov), ("aphasic_cov", &self.aphasic_cov)] {
            if c.len() != FEATURE_DIM || c.iter().any(|r| r.len() != FEATURE_DIM) {
                return bad(format!("{name} must be {FEATURE_DIM}x{FEATURE_DIM}"));
            }
        }
        let t = &self.transform;
        if t.matrix.len() != FEATURE_DIM || t.matrix.iter().any(|r| r.len() != FEATURE_DIM) {
            return bad(format!("transform.matrix must be {FEATURE_DIM}x{FEATURE_DIM}"));
        }
        if !(t.noise >= 0.0) {
            return bad("transform.noise must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.na_fraction) {
            return bad("na_fraction must lie in [0, 1]".into());
        }
        if self.segments_per_subject == 0 {
            return bad("segments_per_subject must be at least 1".into());
        }
        if self.paired && self.source_pool != self.target_pool {
            return bad(format!("paired pools need equal sizes ({} vs {})", self.source_pool, self.target_pool));
        }
        Ok(())
    }
}

/// Lower Cholesky factor of a PSD matrix; semidefinite matrices get a tiny jitter.
fn cholesky(cov: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>, EvalError> {
    let n = cov.len();
    let m = DMatrix::from_fn(n, n, |i, j| cov[i][j]);
    if (0..n).any(|i| (0..n).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-12)) {
        return Err(EvalError::Spec(format!("{name} is not symmetric")));
    }
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
    let jittered = &m + DMatrix::identity(n, n) * (scale * 1e-12);
    jittered
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| EvalError::Spec(format!("{name} is not positive semidefinite")))
}

const MAX_REJECTIONS: usize = 10_000;

struct Sampler {
    mean: [[f64; FEATURE_DIM]; 2],
    chol: [DMatrix<f64>; 2],
    matrix: DMatrix<f64>,
    shift: DVector<f64>,
    noise: f64,
    accent_shift: [f64; FEATURE_DIM],
}

impl Sampler {
    /// Target-language draw for `class`, rejected until it is a proportion vector.
    fn target(&self, class: usize, rng: &mut ChaCha8Rng) -> Result<[f64; FEATURE_DIM], EvalError> {
        for _ in 0..MAX_REJECTIONS {
            let z = DVector::from_fn(FEATURE_DIM, |_, _| StandardNormal.sample(rng));
            let v = &self.chol[class] * z;
            let mut x = [0.0; FEATURE_DIM];
            for k in 0..FEATURE_DIM {
                x[k] = self.mean[class][k] + v[k];
            }
            if x.iter().all(|v| (0.0..=1.0).contains(v)) && x.iter().sum::<f64>() <= 1.0 {
                return Ok(x);
            }
        }
        Err(EvalError::Infeasible { class: if class == 1 { "aphasic" } else { "healthy" } })
    }

    /// Source-language image, clipped to [0, 1] and rescaled to sum at most 1.
    fn source(&self, x: &[f64; FEATURE_DIM], accent: Accent, rng: &mut ChaCha8Rng) -> [f64; FEATURE_DIM] {
        let y = &self.matrix * DVector::from_column_slice(x) + &self.shift;
        let mut out = [0.0; FEATURE_DIM];
        for k in 0..FEATURE_DIM {
            let e: f64 = StandardNormal.sample(rng);
            let mut v = y[k] + self.noise * e;
            if accent == Accent::Other {
                v += self.accent_shift[k];
            }
            out[k] = v.clamp(0.0, 1.0);
        }
        let s: f64 = out.iter().sum();
        if s > 1.0 {
            out.iter_mut().for_each(|v| *v /= s);
        }
        out
    }
}

fn sample(features: [f64; FEATURE_DIM], subject_id: String, role: LanguageRole, accent: Accent, label: Label) -> FeatureSample {
    let name = match role {
        LanguageRole::Source => "source",
        LanguageRole::Target => "target",
    };
    FeatureSample { features, subject_id, language: Language::new(role, name), accent, label }
}

fn accent(rng: &mut ChaCha8Rng, na_fraction: f64) -> Accent {
    if rng.random::<f64>() < na_fraction {
        Accent::NorthAmerican
    } else {
        Accent::Other
    }
}

pub fn generate_synthetic_corpus(spec: &SynthCorpusSpec) -> Result<ExperimentData, EvalError> {
    spec.validate()?;
    let sampler = Sampler {
        mean: [spec.healthy_mean, spec.aphasic_mean],
        chol: [cholesky(&spec.healthy_cov, "healthy_cov")?, cholesky(&spec.aphasic_cov, "aphasic_cov")?],
        matrix: DMatrix::from_fn(FEATURE_DIM, FEATURE_DIM, |i, j| spec.transform.matrix[i][j]),
        shift: DVector::from_column_slice(&spec.transform.shift),
        noise: spec.transform.noise,
        accent_shift: spec.accent_shift,
    };

    let clinical = |role: LanguageRole, counts: ClassCounts| -> Result<Vec<FeatureSample>, EvalError> {
        let (index, prefix) = match role {
            LanguageRole::Source => (0, "src-c"),
            LanguageRole::Target => (1, "tgt-c"),
        };
        let mut rng = substream(spec.seed, Stream::SynthClinical, index);
        let mut out = Vec::with_capacity(counts.healthy + counts.aphasic);
        let mut subject = 0;
        for (class, n, label) in [(0, counts.healthy, Label::Healthy), (1, counts.aphasic, Label::Aphasic)] {
            let mut acc = Accent::Unknown;
            for i in 0..n {
                if i % spec.segments_per_subject == 0 {
                    subject += 1;
                    if role == LanguageRole::Source {
                        acc = accent(&mut rng, spec.na_fraction);
                    }
                }
                let x = sampler.target(class, &mut rng)?;
                let f = match role {
                    LanguageRole::Source => sampler.source(&x, acc, &mut rng),
                    LanguageRole::Target => x,
                };
                out.push(sample(f, format!("{prefix}-{subject:04}"), role, acc, label));
            }
        }
        Ok(out)
    };
    let source_clinical = clinical(LanguageRole::Source, spec.source_clinical)?;
    let target_clinical = clinical(LanguageRole::Target, spec.target_clinical)?;

    let mut rng = substream(spec.seed, Stream::SynthPool, 0);
    let mut target_latent = Vec::with_capacity(spec.target_pool);
    for _ in 0..spec.target_pool {
        target_latent.push(sampler.target(0, &mut rng)?);
    }
    let target_pool: Vec<FeatureSample> = target_latent
        .iter()
        .enumerate()
        .map(|(i, x)| sample(*x, format!("tgt-p-{:04}", i + 1), LanguageRole::Target, Accent::Unknown, Label::Healthy))
        .collect();

    let source_latent = if spec.paired {
        target_latent
    } else {
        let mut rng = substream(spec.seed, Stream::SynthPool, 1);
        (0..spec.source_pool).map(|_| sampler.target(0, &mut rng)).collect::<Result<Vec<_>, _>>()?
    };
    let mut rng = substream(spec.seed, Stream::SynthPairedPool, u64::from(spec.paired));
    let source_pool = source_latent
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let acc = accent(&mut rng, spec.na_fraction);
            let f = sampler.source(x, acc, &mut rng);
            sample(f, format!("src-p-{:04}", i + 1), LanguageRole::Source, acc, Label::Healthy)
        })
        .collect();

    Ok(ExperimentData { source_clinical, target_clinical, source_pool, target_pool, pools_paired: spec.paired })
}
