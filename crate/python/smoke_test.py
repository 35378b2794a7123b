"""Quick end-to-end check of the lingot Python bindings.

Build and install first:

    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/lingot-*.whl

then run `python python/smoke_test.py`.
"""

import json
import sys

import lingot


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    # 2x2 problem with a known optimum
    plan = lingot.solve_emd([0.3, 0.7], [0.7, 0.3], [[0.0, 1.0], [1.0, 0.0]])
    assert close(plan.objective_value, 0.4), plan
    assert close(plan.coupling[1][0], 0.4)
    assert plan.marginal_residual() < 1e-12

    smooth = lingot.solve_sinkhorn([0.3, 0.7], [0.7, 0.3], [[0.0, 1.0], [1.0, 0.0]], reg=0.05)
    assert smooth.objective_value >= plan.objective_value - 1e-6
    assert smooth.regularization == 0.05

    data = lingot.synthetic_corpus(seed=3)
    src, tgt = data["source_clinical"], data["target_clinical"]
    assert len(src["features"][0]) == len(lingot.FEATURE_NAMES) == 8

    scaler = lingot.RobustScaler.fit(src["features"])
    z = scaler.transform(src["features"][:3])
    back = scaler.inverse_transform(z)
    assert all(close(a, b, 1e-12) for r, s in zip(back, src["features"][:3]) for a, b in zip(r, s))

    extra = lingot.smote(src["features"][:10], n=25, k=3, seed=1)
    assert len(extra) == 25

    ot = lingot.AdaptationModel.fit(
        data["target_pool"]["features"], data["source_pool"]["features"], method="emd", scaled=True
    )
    mapped = ot.transform(tgt["features"])
    assert len(mapped) == len(tgt["features"])
    ot2 = lingot.AdaptationModel.from_json(ot.to_json())
    assert ot2.transform(tgt["features"][:2]) == mapped[:2]

    bundle = lingot.ModelBundle.fit(src["features"], src["labels"], classifier="svm", seed=0)
    y = tgt["labels"]
    f1 = lingot.macro_f1(y, bundle.predict(mapped))
    auc = lingot.auroc(y, bundle.score(mapped))
    assert 0.0 <= f1 <= 100.0 and 0.0 <= auc <= 100.0
    assert close(lingot.macro_f1([0, 0, 1, 1], [0, 0, 1, 1]), 100.0)
    assert close(lingot.auroc([0, 1], [0.5, 0.5]), 50.0)

    cfg = {
        "version": 1,
        "seeds": [0, 1],
        "regimes": [
            {"regime": "Unilingual", "classifiers": ["SVM"]},
            {"regime": "OT-EMD", "classifiers": ["SVM"]},
        ],
        "baseline": "Unilingual",
        "output_dir": "unused",
        "settings": {"unilingual_folds": 5},
    }
    cfg["synthetic"] = json.loads(lingot.synthetic_spec(seed=3))
    report = lingot.run_experiment(json.dumps(cfg))
    print(report.table())
    assert len(report.f1_scores("OT-EMD", "svm")) == 2
    assert report.to_json() == lingot.run_experiment(json.dumps(cfg)).to_json()

    print(f"target macro-F1 {f1:.2f}, AUROC {auc:.2f}")
    print("smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
