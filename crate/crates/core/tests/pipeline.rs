use lingot_core::corpus::table::{features_to_string, read_features};
use lingot_core::corpus::{parse_conllu, pos_proportions, segment_transcript};
use lingot_core::eval::{
    generate_synthetic_corpus, leakage_checks, run_regime, AffineTransform, EvalSettings, RegimeKind, RegimeSpec,
    SynthCorpusSpec,
};
use lingot_core::models::{ClassifierKind, ModelBundle};
use lingot_core::ot::OtMethod;
use lingot_core::{AdaptationModel, Label, LanguageRole, FEATURE_DIM};

fn conllu_document(sentences: usize) -> String {
    let mut s = String::from("# subject_id = T07\n# language = zho\n# role = target\n# label = aphasic\n");
    for k in 0..sentences {
        if k % 2 == 0 {
            s.push_str("1\tgou\t_\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\tpao\t_\tVERB\t_\t_\t0\troot\t_\t_\n\n");
        } else {
            s.push_str("1\two\t_\tPRON\t_\t_\t2\tnsubj\t_\t_\n2\tkan\t_\tVERB\t_\t_\t0\troot\t_\t_\n3\t.\t_\tPUNCT\t_\t_\t2\tpunct\t_\t_\n\n");
        }
    }
    s
}

#[test]
fn fifty_utterances_make_two_segments() {
    let t = parse_conllu(&conllu_document(50)).unwrap();
    assert_eq!(t.utterances.len(), 50);
    let segments = segment_transcript(&t, 25);
    assert_eq!(segments.len(), 2);
    let samples: Vec<_> = segments.iter().map(|s| pos_proportions(s).unwrap()).collect();
    for s in &samples {
        assert_eq!(s.subject_id, "T07");
        assert_eq!(s.label, Label::Aphasic);
        // 13 NOUN, 25 VERB and 12 PRON words per segment
        let words = 13.0 * 2.0 + 12.0 * 2.0;
        assert!((s.features[1] - 25.0 / words).abs() < 1e-12);
        assert!(s.is_proportion_vector());
    }
    let csv = features_to_string(&samples);
    let back = read_features(csv.as_bytes(), LanguageRole::Target).unwrap();
    assert_eq!(back, samples);
}

fn fast_settings() -> EvalSettings {
    let mut s = EvalSettings { unilingual_folds: 5, ..Default::default() };
    s.classifiers.forest.trees = 20;
    s.classifiers.mlp.max_epochs = 60;
    s.autoencoder.max_epochs = 60;
    s
}

#[test]
fn every_regime_keeps_subjects_apart_and_scores_in_range() {
    let data = generate_synthetic_corpus(&SynthCorpusSpec { paired: true, ..SynthCorpusSpec::small(9) }).unwrap();
    let settings = fast_settings();
    for regime in RegimeKind::ALL {
        for classifier in ClassifierKind::ALL {
            let before = leakage_checks();
            let mut spec = RegimeSpec::new(regime, classifier, vec![0, 1]);
            if regime.is_ot() {
                spec.include_aphasic_in_ot = true;
            }
            let r = run_regime(&data, &spec, &settings).unwrap();
            assert!(leakage_checks() > before, "{regime:?} ran without a disjointness check");
            for s in &r.per_seed {
                assert!((0.0..=100.0).contains(&s.f1) && (0.0..=100.0).contains(&s.auroc));
            }
        }
    }
}

#[test]
fn identical_languages_make_direct_transfer_competitive() {
    let spec = SynthCorpusSpec {
        transform: AffineTransform::identity(),
        ..SynthCorpusSpec::small(4)
    };
    let data = generate_synthetic_corpus(&spec).unwrap();
    let settings = fast_settings();
    let seeds = vec![0, 1, 2];
    let mean = |k: RegimeKind| {
        let r = run_regime(&data, &RegimeSpec::new(k, ClassifierKind::Svm, seeds.clone()), &settings).unwrap();
        r.per_seed.iter().map(|s| s.f1).sum::<f64>() / r.per_seed.len() as f64
    };
    let (uni, direct) = (mean(RegimeKind::Unilingual), mean(RegimeKind::DirectTransfer));
    assert!(direct > uni - 10.0, "direct {direct} vs unilingual {uni}");
}

#[test]
fn bundle_with_adaptation_scores_mapped_features() {
    let data = generate_synthetic_corpus(&SynthCorpusSpec::small(2)).unwrap();
    let x: Vec<Vec<f64>> = data.source_clinical.iter().map(|s| s.features.to_vec()).collect();
    let y: Vec<u8> = data.source_clinical.iter().map(|s| s.label.class().unwrap() as u8).collect();
    let settings = EvalSettings::default();
    let mut bundle = ModelBundle::fit(&x, &y, ClassifierKind::Svm, &settings.classifiers, 3, None, 0).unwrap();
    let pool = |v: &[lingot_core::FeatureSample]| v.iter().map(|s| s.features.to_vec()).collect::<Vec<_>>();
    let model = AdaptationModel::fit(&pool(&data.target_pool), &pool(&data.source_pool), &OtMethod::Emd).unwrap();
    let probe = data.target_clinical[0].features;
    let mapped = model.map_point(&probe, false).unwrap();
    let plain = bundle.score(&mapped).unwrap();
    bundle.adaptation = Some(model);
    assert_eq!(bundle.score(&probe).unwrap(), plain);
    assert_eq!(mapped.len(), FEATURE_DIM);

    let text = lingot_core::doc::to_json(&bundle).unwrap();
    let back: ModelBundle = lingot_core::doc::from_json(&text).unwrap();
    assert_eq!(back.score(&probe).unwrap(), plain);
}
