use std::path::Path;
use std::process::{Command, Output};

use lingot_core::SynthCorpusSpec;

fn lingot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lingot")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn conllu(subject: &str, label: &str, sentences: usize) -> String {
    let mut s = format!("# subject_id = {subject}\n# language = fra\n# label = {label}\n");
    for _ in 0..sentences {
        s.push_str("1\tLe\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tchat\t_\tNOUN\t_\t_\t3\tnsubj\t_\t_\n3\tdort\t_\tVERB\t_\t_\t0\troot\t_\t_\n\n");
    }
    s
}

#[test]
fn featurize_segments_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    std::fs::write(corpus.join("a.conllu"), conllu("A1", "healthy", 50)).unwrap();
    std::fs::write(corpus.join("b.conllu"), conllu("B1", "aphasic", 30)).unwrap();
    let out = dir.path().join("features.csv");
    let o = lingot(&["featurize", p(&corpus), "--segment-len", "25", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    // 50 utterances give two segments; the trailing 5 of 30 are dropped
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("A1,fra,unknown,healthy,"));
    let table = stdout(&o);
    assert!(table.contains("fra") && table.contains("2 (1)"), "{table}");
}

#[test]
fn featurize_empty_directory_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = lingot(&["featurize", p(dir.path()), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no samples"), "{}", stderr(&o));
    assert!(!out.exists());
}

fn synth_corpus(dir: &Path) {
    let spec = dir.join("spec.json");
    std::fs::write(&spec, serde_json::to_string(&SynthCorpusSpec::small(5)).unwrap()).unwrap();
    let o = lingot(&["synth", p(&spec), "--out-dir", p(dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn fit_ot_reports_cost_and_records_regularization() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path());
    let pool = dir.path().join("target_pool.csv");
    let model = dir.path().join("emd.json");
    let o = lingot(&["fit-ot", p(&pool), p(&pool), "--method", "emd", "--out", p(&model)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cost: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("transport cost: "))
        .expect("cost line")
        .parse()
        .unwrap();
    assert!(cost.abs() <= 1e-9, "{cost}");

    let src = dir.path().join("source_pool.csv");
    let o = lingot(&["fit-ot", p(&pool), p(&src), "--method", "sinkhorn", "--reg", "3", "--out", p(&model)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(doc["format"], "lingot.adaptation_model");
    assert_eq!(doc["body"]["plan"]["regularization"], 3.0);
}

#[test]
fn bad_arguments_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    std::fs::write(&x, "").unwrap();
    let o = lingot(&["fit-ot", p(&x), p(&x), "--method", "wasserstein", "--out", "m.json"]);
    assert_eq!(code(&o), 2);
    let o = lingot(&["synth", "spec.json", "--out-dir", "d", "--frobnicate"]);
    assert_eq!(code(&o), 2);
    let o = lingot(&["evaluate", "--model", "/nonexistent/m.json", "--input", p(&x)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn every_command_documents_its_flags() {
    for (cmd, flag) in [
        ("featurize", "--segment-len"),
        ("fit-ot", "--method"),
        ("transport", "--model"),
        ("train", "--classifier"),
        ("evaluate", "--predictions"),
        ("experiment", "--out-dir"),
        ("synth", "--paired"),
    ] {
        let o = lingot(&[cmd, "--help"]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).contains(flag), "{cmd} --help lacks {flag}");
        assert!(stdout(&o).contains("--jobs"), "{cmd} --help lacks --jobs");
    }
}

#[test]
fn train_transport_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path());
    let f = |name: &str| dir.path().join(name);
    let o = lingot(&["fit-ot", p(&f("target_pool.csv")), p(&f("source_pool.csv")), "--method", "emd", "--scaled", "--out", p(&f("ot.json"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = lingot(&["transport", "--model", p(&f("ot.json")), "--input", p(&f("target_clinical.csv")), "--out", p(&f("mapped.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = lingot(&["train", "--train", p(&f("source_clinical.csv")), "--classifier", "svm", "--out", p(&f("svm.json"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = lingot(&["evaluate", "--model", p(&f("svm.json")), "--input", p(&f("mapped.csv")), "--predictions", p(&f("pred.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = stdout(&o);
    assert!(first.contains("macro-F1") && first.contains("AUROC"), "{first}");
    assert_eq!(std::fs::read_to_string(f("pred.csv")).unwrap().lines().count(), 1 + 40);

    // Same scores when the bundle carries the adaptation itself.
    let o = lingot(&[
        "train", "--train", p(&f("source_clinical.csv")), "--classifier", "svm", "--adaptation", p(&f("ot.json")), "--out", p(&f("svm_ot.json")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = lingot(&["evaluate", "--model", p(&f("svm_ot.json")), "--input", p(&f("target_clinical.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), first);
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let spec = serde_json::to_string(&SynthCorpusSpec::small(1)).unwrap();
    let cfg = format!(
        r#"{{"version": 1, "synthetic": {spec}, "seeds": [0, 1, 2],
            "regimes": [{{"regime": "Unilingual", "classifiers": ["SVM", "RF"]}},
                        {{"regime": "DirectTransfer", "classifiers": ["SVM", "RF"]}},
                        {{"regime": "OT-EMD", "classifiers": ["SVM", "RF"]}}],
            "baseline": "Unilingual", "output_dir": "out",
            "settings": {{"unilingual_folds": 5, "classifiers": {{"forest": {{"trees": 20}}}}}}{extra}}}"#
    );
    let path = dir.join("experiment.json");
    std::fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn experiment_writes_identical_reports_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = lingot(&["--jobs", "2", "experiment", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let first = std::fs::read(out.join("report.json")).unwrap();
    let table = std::fs::read_to_string(out.join("report.txt")).unwrap();
    for row in ["Unilingual", "DirectTransfer", "OT-EMD"] {
        assert!(table.lines().any(|l| l.starts_with(row)), "missing {row}:\n{table}");
    }
    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(doc["body"]["rows"].as_array().unwrap().len(), 6);

    let o = lingot(&["experiment", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(out.join("report.json")).unwrap(), first);
}

#[test]
fn experiment_lists_every_config_problem() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let extra = format!(
        r#", "inputs": {{"source_clinical": "{m}", "target_clinical": "{m}", "source_pool": "{m}", "target_pool": "{m}"}}"#,
        m = p(&missing)
    );
    let cfg = write_config(dir.path(), &extra);
    let o = lingot(&["experiment", p(&cfg)]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("absent.csv") && err.contains("not both"), "{err}");
    assert!(!dir.path().join("out").exists());
}
