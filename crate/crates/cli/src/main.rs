use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lingot_core::corpus::table::{features_to_string, read_features};
use lingot_core::corpus::{parse_chat, parse_conllu_with_subject, pos_proportions, segment_transcript};
use lingot_core::doc::{self, Document};
use lingot_core::eval::{auroc, generate_synthetic_corpus, macro_f1, ExperimentConfig, ExperimentData, EvalError};
use lingot_core::models::{ClassifierKind, ClassifierParams, ModelBundle};
use lingot_core::ot::{OtMethod, KernelMapOptions};
use lingot_core::{AdaptationModel, FeatureSample, Label, LanguageRole, SynthCorpusSpec, TaggedTranscript};

#[derive(Parser)]
#[command(name = "lingot", version, about = "Optimal transport adaptation of POS features across languages")]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract POS-proportion features from tagged transcripts.
    Featurize(FeaturizeArgs),
    /// Fit an adaptation model that transports FROM features onto TO features.
    FitOt(FitOtArgs),
    /// Map features through a fitted adaptation model.
    Transport(TransportArgs),
    /// Train a classifier bundle (scaler, SMOTE, classifier).
    Train(TrainArgs),
    /// Score a trained bundle on labelled features.
    Evaluate(EvaluateArgs),
    /// Run an experiment config and write report.json and report.txt.
    Experiment(ExperimentArgs),
    /// Write a synthetic corpus as four feature CSVs.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// Choose by extension: .conllu for CoNLL-U, .cha for CHAT.
    Auto,
    Conllu,
    Chat,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Source,
    Target,
}

impl From<RoleArg> for LanguageRole {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Source => LanguageRole::Source,
            RoleArg::Target => LanguageRole::Target,
        }
    }
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Transcript files or directories (searched recursively).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    format: InputFormat,
    /// Utterances per segment; 0 keeps each subject's transcript whole.
    #[arg(long, default_value_t = 25)]
    segment_len: usize,
    /// Output feature CSV.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Emd,
    Sinkhorn,
    Gaussian,
}

#[derive(Args)]
struct FitOtArgs {
    /// Features to be transported (e.g. the low-resource language pool).
    from: PathBuf,
    /// Destination features (e.g. the high-resource language pool).
    to: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Entropic regularization (sinkhorn).
    #[arg(long, default_value_t = 3.0)]
    reg: f64,
    /// Divide the cost matrix by its maximum before solving (sinkhorn).
    #[arg(long)]
    normalize_cost: bool,
    /// Weight of the linear transport term (gaussian).
    #[arg(long, default_value_t = KernelMapOptions::default().mu)]
    mu: f64,
    /// Alternating iterations (gaussian).
    #[arg(long, default_value_t = KernelMapOptions::default().max_iter)]
    max_iter: usize,
    /// Convergence tolerance (gaussian).
    #[arg(long, default_value_t = KernelMapOptions::default().tol)]
    tol: f64,
    /// Fit in the robust-scaled coordinates of the TO features.
    #[arg(long)]
    scaled: bool,
    /// Training atoms averaged when mapping unseen points.
    #[arg(long, default_value_t = 1)]
    k_oos: usize,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TransportArgs {
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV to map.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Svm,
    Rf,
    Mlp,
}

impl From<ClassifierArg> for ClassifierKind {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::Svm => ClassifierKind::Svm,
            ClassifierArg::Rf => ClassifierKind::Forest,
            ClassifierArg::Mlp => ClassifierKind::Mlp,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Labelled training features.
    #[arg(long)]
    train: PathBuf,
    #[arg(long, value_enum)]
    classifier: ClassifierArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    smote_k: usize,
    /// JSON file with classifier hyperparameters (`svm`, `forest`, `mlp` sections).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Adaptation model applied to inputs at prediction time.
    #[arg(long)]
    adaptation: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labelled evaluation features.
    #[arg(long, short)]
    input: PathBuf,
    /// Optional CSV of per-sample predictions and scores.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// A synthetic corpus spec, or an experiment config with a `synthetic` section.
    spec: PathBuf,
    /// Generate paired pools regardless of the spec.
    #[arg(long)]
    paired: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Failure with its exit code: 2 for bad usage or input, 1 for runtime errors.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn core_failure(e: lingot_core::Error) -> Failure {
    use lingot_core::Error as E;
    match e {
        E::Corpus(_) | E::Doc(_) => usage(e),
        E::Eval(EvalError::Config(_) | EvalError::Spec(_) | EvalError::Corpus(_) | EvalError::Doc(_)) => usage(e),
        _ => runtime(e),
    }
}

impl<E: Into<lingot_core::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        core_failure(e.into())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Featurize(a) => featurize(a),
        Command::FitOt(a) => fit_ot(a),
        Command::Transport(a) => transport(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn read_csv(path: &Path, role: LanguageRole) -> CliResult<Vec<FeatureSample>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display())).map_err(usage)?;
    let samples = read_features(f, role).map_err(|e| usage(anyhow::Error::new(e).context(path.display().to_string())))?;
    if samples.is_empty() {
        return Err(usage(anyhow::anyhow!("{}: no samples", path.display())));
    }
    Ok(samples)
}

fn write_text(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).map_err(runtime)?;
    }
    doc::write_atomic(path, text.as_bytes()).map_err(runtime)
}

fn save<T: Document>(value: &T, path: &Path) -> CliResult {
    write_text(path, &doc::to_json(value).map_err(runtime)?)
}

fn load<T: Document>(path: &Path) -> CliResult<T> {
    doc::load(path).map_err(usage)
}

fn matrix(samples: &[FeatureSample]) -> Vec<Vec<f64>> {
    samples.iter().map(|s| s.features.to_vec()).collect()
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> CliResult {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .with_context(|| format!("cannot read directory {}", path.display()))
            .map_err(usage)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(usage)?;
        entries.sort();
        for e in entries {
            if e.is_dir() || matches!(e.extension().and_then(|x| x.to_str()), Some("conllu" | "cha")) {
                collect_files(&e, out)?;
            }
        }
    } else if path.is_file() {
        out.push(path.to_path_buf());
    } else {
        return Err(usage(anyhow::anyhow!("input not found: {}", path.display())));
    }
    Ok(())
}

fn parse_transcript(path: &Path, format: InputFormat) -> CliResult<TaggedTranscript> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(usage)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("subject");
    let format = match format {
        InputFormat::Auto => match path.extension().and_then(|x| x.to_str()) {
            Some("cha") => InputFormat::Chat,
            Some("conllu") => InputFormat::Conllu,
            _ => return Err(usage(anyhow::anyhow!("{}: cannot infer format; pass --format", path.display()))),
        },
        f => f,
    };
    let parsed = match format {
        InputFormat::Chat => parse_chat(&text, Some(stem)),
        _ => parse_conllu_with_subject(&text, stem),
    };
    parsed.map_err(|e| usage(anyhow::Error::new(e).context(path.display().to_string())))
}

fn featurize(a: FeaturizeArgs) -> CliResult {
    let mut files = Vec::new();
    for p in &a.inputs {
        collect_files(p, &mut files)?;
    }
    // Files of one subject (one per task) are concatenated in path order.
    let mut subjects: Vec<TaggedTranscript> = Vec::new();
    for f in &files {
        let t = parse_transcript(f, a.format)?;
        match subjects.iter_mut().find(|s| s.subject_id == t.subject_id && s.language == t.language) {
            Some(s) => s.extend(t),
            None => subjects.push(t),
        }
    }
    let mut samples = Vec::new();
    for t in &subjects {
        let segments = if a.segment_len == 0 { vec![t.clone()] } else { segment_transcript(t, a.segment_len) };
        for seg in segments {
            match pos_proportions(&seg) {
                Ok(s) => samples.push(s),
                Err(e) => log::warn!("{}: skipping segment: {e}", t.subject_id),
            }
        }
    }
    if samples.is_empty() {
        return Err(usage(anyhow::anyhow!("no samples extracted from {} file(s)", files.len())));
    }
    write_text(&a.out, &features_to_string(&samples))?;
    print!("{}", sample_counts(&samples));
    Ok(())
}

/// Per-language sample and subject counts by label.
fn sample_counts(samples: &[FeatureSample]) -> String {
    let mut by_lang: BTreeMap<&str, BTreeMap<Label, (usize, std::collections::BTreeSet<&str>)>> = BTreeMap::new();
    for s in samples {
        let e = by_lang.entry(s.language.name.as_str()).or_default().entry(s.label).or_default();
        e.0 += 1;
        e.1.insert(&s.subject_id);
    }
    let cell = |m: &BTreeMap<Label, (usize, std::collections::BTreeSet<&str>)>, l: Label| {
        m.get(&l).map_or("0 (0)".to_string(), |(n, subj)| format!("{n} ({})", subj.len()))
    };
    let mut rows = vec![["Language".to_string(), "Healthy".to_string(), "Aphasic".to_string(), "Unlabeled".to_string()]];
    for (lang, m) in &by_lang {
        let name = if lang.is_empty() { "-" } else { lang };
        rows.push([name.to_string(), cell(m, Label::Healthy), cell(m, Label::Aphasic), cell(m, Label::Unlabeled)]);
    }
    let widths: Vec<usize> = (0..4).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::from("samples (subjects)\n");
    for r in &rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn fit_ot(a: FitOtArgs) -> CliResult {
    let from = read_csv(&a.from, LanguageRole::Target)?;
    let to = read_csv(&a.to, LanguageRole::Source)?;
    if a.k_oos == 0 {
        return Err(usage(anyhow::anyhow!("--k-oos must be at least 1")));
    }
    let method = match a.method {
        MethodArg::Emd => OtMethod::Emd,
        MethodArg::Sinkhorn => {
            if !(a.reg > 0.0) {
                return Err(usage(anyhow::anyhow!("--reg must be positive")));
            }
            OtMethod::Sinkhorn { reg: a.reg, normalize_cost: a.normalize_cost }
        }
        MethodArg::Gaussian => OtMethod::Gaussian { mu: a.mu, max_iter: a.max_iter, tol: a.tol },
    };
    let (xs, xt) = (matrix(&from), matrix(&to));
    let mut model = if a.scaled {
        let scaler = lingot_core::RobustScaler::fit(&xt)?;
        AdaptationModel::fit_scaled(&xs, &xt, &method, &scaler)?
    } else {
        AdaptationModel::fit(&xs, &xt, &method)?
    };
    model.k_oos = a.k_oos;
    let plan = model.plan.as_ref().expect("every fitted model carries its plan");
    save(&model, &a.out)?;
    println!("transport cost: {}", plan.objective_value);
    if let Some(reg) = plan.regularization {
        println!("regularization: {reg}");
    }
    println!("marginal residual: {:.3e}", plan.marginal_residual());
    Ok(())
}

fn transport(a: TransportArgs) -> CliResult {
    let model: AdaptationModel = load(&a.model)?;
    let samples = read_csv(&a.input, LanguageRole::Target)?;
    let mapped = model.transform(&matrix(&samples))?;
    let out: Vec<FeatureSample> = samples
        .into_iter()
        .zip(mapped)
        .map(|(mut s, m)| {
            s.features.copy_from_slice(&m);
            s
        })
        .collect();
    write_text(&a.out, &features_to_string(&out))
}

fn labelled(samples: &[FeatureSample], path: &Path) -> CliResult<Vec<u8>> {
    samples
        .iter()
        .map(|s| s.label.class().map(|c| c as u8))
        .collect::<Option<Vec<u8>>>()
        .ok_or_else(|| usage(anyhow::anyhow!("{}: every row needs a healthy/aphasic label", path.display())))
}

fn train(a: TrainArgs) -> CliResult {
    let samples = read_csv(&a.train, LanguageRole::Source)?;
    let y = labelled(&samples, &a.train)?;
    let params: ClassifierParams = match &a.params {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())).map_err(usage)?;
            serde_json::from_str(&text).with_context(|| format!("{}: invalid parameters", p.display())).map_err(usage)?
        }
        None => ClassifierParams::default(),
    };
    if a.smote_k == 0 {
        return Err(usage(anyhow::anyhow!("--smote-k must be at least 1")));
    }
    let mut bundle = ModelBundle::fit(&matrix(&samples), &y, a.classifier.into(), &params, a.smote_k, None, a.seed)?;
    if let Some(p) = &a.adaptation {
        bundle.adaptation = Some(load(p)?);
    }
    save(&bundle, &a.out)?;
    println!("trained {} on {} samples", bundle.classifier.kind(), samples.len());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> CliResult {
    let bundle: ModelBundle = load(&a.model)?;
    let samples = read_csv(&a.input, LanguageRole::Target)?;
    let y = labelled(&samples, &a.input)?;
    let mut pred = Vec::with_capacity(samples.len());
    let mut score = Vec::with_capacity(samples.len());
    for s in &samples {
        pred.push(bundle.predict(&s.features)?);
        score.push(bundle.score(&s.features)?);
    }
    let f1 = macro_f1(&y, &pred)?;
    println!("macro-F1 {f1:.2}");
    match auroc(&y, &score) {
        Ok(v) => println!("AUROC {v:.2}"),
        Err(e) => log::warn!("AUROC not reported: {e}"),
    }
    if let Some(p) = &a.predictions {
        let mut text = String::from("subject_id,label,prediction,score\n");
        for ((s, p), sc) in samples.iter().zip(&pred).zip(&score) {
            let name = if *p == 1 { Label::Aphasic } else { Label::Healthy };
            text.push_str(&format!("{},{},{},{}\n", s.subject_id, s.label.as_str(), name.as_str(), sc));
        }
        write_text(p, &text)?;
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> CliResult {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(dir) = a.out_dir {
        cfg.output_dir = dir;
    }
    cfg.validate()?;
    let report = cfg.run()?;
    let table = report.to_table();
    save(&report, &cfg.output_dir.join("report.json"))?;
    write_text(&cfg.output_dir.join("report.txt"), &table)?;
    print!("{table}");
    log::info!("wrote report to {}", cfg.output_dir.display());
    Ok(())
}

fn synth(a: SynthArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.spec).with_context(|| format!("cannot read {}", a.spec.display())).map_err(usage)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", a.spec.display())).map_err(usage)?;
    let spec_value = match value.get("synthetic") {
        Some(s) if value.get("regimes").is_some() => s.clone(),
        _ => value,
    };
    let mut spec: SynthCorpusSpec = serde_json::from_value(spec_value)
        .with_context(|| format!("{}: invalid synthetic spec", a.spec.display()))
        .map_err(usage)?;
    spec.paired |= a.paired;
    spec.validate().map_err(usage)?;
    let data: ExperimentData = generate_synthetic_corpus(&spec)?;
    for (name, group) in [
        ("source_clinical", &data.source_clinical),
        ("target_clinical", &data.target_clinical),
        ("source_pool", &data.source_pool),
        ("target_pool", &data.target_pool),
    ] {
        write_text(&a.out_dir.join(format!("{name}.csv")), &features_to_string(group))?;
        println!("{name}: {} samples", group.len());
    }
    Ok(())
}
