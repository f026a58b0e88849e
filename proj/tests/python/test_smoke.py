"""End-to-end smoke tests for the Python bindings and the CLI binary."""

import json
import os
import subprocess

import numpy as np
import pytest

import properuq as uq


def test_version_matches_package():
    assert uq.__version__ == "0.1.0"
    assert uq.version() == uq.__version__


def test_score_split_identity():
    p = np.array([0.6, 0.3, 0.1])
    q = np.array([0.2, 0.5, 0.3])
    for kind in ("brier", "log", "spherical"):
        es = uq.expected_score(kind, p, q)
        split = uq.divergence(kind, p, q) + uq.entropy(kind, q)
        assert es == pytest.approx(split, abs=1e-12)
        # Propriety: predicting the target itself is never worse.
        assert es >= uq.expected_score(kind, q, q) - 1e-12


def test_generator_is_deterministic_and_calibrated_shape():
    a = uq.gen_calibrated(3, 200, alpha=1.0, seed=42)
    b = uq.gen_calibrated(3, 200, alpha=1.0, seed=42)
    assert np.array_equal(a["predictions"], b["predictions"])
    assert a["labels"] == b["labels"]
    assert a["predictions"].shape == (200, 3)
    assert set(a["labels"]) <= {0, 1, 2}
    row_sums = a["predictions"].sum(axis=1)
    assert np.allclose(row_sums, 1.0, atol=1e-12)


def test_calibration_estimators_run():
    bundle = uq.gen_calibrated(3, 400, alpha=1.0, seed=7)
    preds, labels = bundle["predictions"], bundle["labels"]
    cce = uq.cce_kde(2.0, preds, labels, h=0.1)
    assert cce["estimator"] == "cce"
    assert 0.0 <= cce["value"] < 1.0
    tce = uq.tce_binned(2.0, preds, labels, bins="uniform:10")
    assert tce["bins"] == 10
    rel = uq.reliability(preds, labels, bins="uniform:5")
    assert sum(r["count"] for r in rel) == 400


def test_temperature_round_trip():
    p = np.array([0.5, 0.3, 0.2])
    assert np.array_equal(uq.temperature_scale(p, 1.0), p)
    twice = uq.temperature_scale(uq.temperature_scale(p, 2.0), 3.0)
    assert np.allclose(twice, uq.temperature_scale(p, 6.0), atol=1e-12)

    bundle = uq.gen_miscalibrated(3, 2000, alpha=1.0, ts_alpha=2.0, seed=3)
    fit = uq.fit_temperature("log", bundle["predictions"], bundle["labels"])
    assert fit["risk_after"] <= fit["risk_before"] + 1e-12
    assert fit["alpha"] == pytest.approx(0.5, abs=0.2)


def test_decomposition_identities():
    members = np.array([[0.7, 0.2, 0.1], [0.2, 0.6, 0.2]])
    q = np.array([0.4, 0.4, 0.2])
    for kind in ("brier", "log"):
        r = uq.bvd_classification(kind, members, q)
        assert r["bias"] + r["variance"] + r["noise"] == pytest.approx(r["total"], abs=1e-12)

    rng = np.random.default_rng(0)
    grid = [[rng.normal(size=(6, 2))], [rng.normal(size=(5, 2))]]
    targets = rng.normal(size=(7, 2))
    ks = uq.ks_bvd("rbf:gamma=0.5", grid, targets)
    assert ks["bias"] + ks["variance"] + ks["noise"] == pytest.approx(ks["total"], abs=1e-10)
    assert ks["covariance"] is None


def test_mmd_and_alignment():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(200, 2))
    y = rng.normal(size=(200, 2))
    v = uq.mmd2("rbf:gamma=0.5", x, y)
    assert abs(v) < 0.05  # unbiased, equal distributions

    z = rng.normal(size=(300, 1))
    w = 2.0 * z + 0.01 * rng.normal(size=(300, 1))
    assert uq.cka("poly:gamma=1,c=0,degree=1", "poly:gamma=1,c=0,degree=1", z, w) > 0.99

    m = np.hstack([z, w, rng.normal(size=(300, 1)), rng.normal(size=(300, 1))])
    cm = uq.cka_matrix(m, "rbf:gamma=1")
    clusters = uq.cluster_dimensions(cm["values"], cm["constant_coords"], tau=0.3)
    assert [0, 1] in clusters


def test_risk_pipeline_prefers_exact_conditional():
    train = uq.gen_calibrated(3, 400, alpha=1.0, seed=5000)
    val = uq.gen_calibrated(3, 400, alpha=1.0, seed=5001)
    test = uq.gen_calibrated(3, 400, alpha=1.0, seed=5002)
    candidates = [
        {"kind": "oracle", "ts_alpha": 1.0},
        {"kind": "binned", "bins": 10, "scheme": "uniform"},
        {"kind": "kde", "h": 0.1},
    ]
    report = uq.risk_pipeline(
        candidates,
        train["predictions"], train["labels"],
        val["predictions"], val["labels"],
        test["predictions"], test["labels"],
    )
    chosen = report["candidates"][report["chosen_index"]]
    assert chosen["name"] == "oracle"


def test_improvement_check_identity():
    bundle = uq.gen_miscalibrated(2, 4000, alpha=1.0, ts_alpha=2.0, seed=11)
    exact = lambda p: uq.temperature_scale(p, 0.5)  # noqa: E731
    r = uq.improvement_check("brier", bundle["predictions"], bundle["labels"], exact, 0.5)
    assert r["gap"] == pytest.approx(abs(r["risk_delta"] - r["ce_delta"]), abs=1e-15)
    assert r["gap"] < 0.05


def test_cli_binary_round_trip(tmp_path):
    cli = os.environ.get("PROPERUQ_CLI")
    if not cli or not os.path.exists(cli):
        pytest.skip("PROPERUQ_CLI not set")
    out_csv = tmp_path / "synth.csv"
    gen = subprocess.run(
        [cli, "synth", "--scenario", "calibrated", "--d", "3", "--n", "50",
         "--seed", "4", "--out", str(out_csv)],
        capture_output=True, text=True,
    )
    assert gen.returncode == 0, gen.stderr
    report = json.loads(gen.stdout)
    assert report["manifest"]["version"] == uq.__version__

    score = subprocess.run(
        [cli, "score", "--kind", "brier", "--data", str(out_csv)],
        capture_output=True, text=True,
    )
    assert score.returncode == 0, score.stderr
    scored = json.loads(score.stdout)
    assert scored["n"] == 50
    assert np.isfinite(scored["risk"])
