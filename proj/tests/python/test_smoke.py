import math

import numpy as np
import pytest

import ponly


def dataset(seed=0, n1=60, n0=400, p=2):
    rng = np.random.default_rng(seed)
    return rng.normal(0.5, 1.0, size=(n1, p)), rng.normal(size=(n0, p))


def test_version():
    assert ponly.__version__ == "0.1.0"


def test_maxent_matches_ipp():
    pres, bg = dataset()
    a = ponly.fit(pres, bg, 2.0, model="ipp")
    b = ponly.fit(pres, bg, 2.0, model="maxent")
    assert max(abs(x - y) for x, y in zip(a["beta"], b["beta"])) <= 1e-8
    assert a["model"] == "ipp"
    assert a["eta"] is None


def test_iwlr_matches_ipp():
    pres, bg = dataset(1)
    a = ponly.fit(pres, bg, 1.0, model="ipp", penalty="l2", lam=0.3)
    b = ponly.fit(pres, bg, 1.0, model="iwlr", penalty="l2", lam=0.3)
    assert max(abs(x - y) for x, y in zip(a["beta"], b["beta"])) <= 1e-6
    assert abs(a["alpha"] - b["alpha"]) <= 1e-6


def test_checks():
    pres, bg = dataset(2)
    for which in ("prop1", "prop2", "scores"):
        r = ponly.check(pres, bg, 1.0, which)
        assert r["pass"], r
    forced = ponly.check(pres, bg, 1.0, "prop2", W=10.0)
    assert not forced["pass"]


def test_equivalence_sweep():
    reports = ponly.equivalence_sweep(datasets=3)
    assert len(reports) == 18
    assert all(r["pass"] for r in reports)


def test_population_limit():
    eta, beta = ponly.population_lr_limit(0.0)
    assert beta == 1.325
    assert math.isinf(eta)
    assert ponly.population_lr_limit(1.0)[1] == pytest.approx(1.03365, abs=1e-5)
    assert ponly.mu1() == 1.325


def test_sweep_rows():
    rows = ponly.sweep(n1=200, n0_grid=[300, 600], replicates=2)
    assert len(rows) == 2 * 2 * 2
    assert all(r[3] is not None for r in rows)
    assert rows == ponly.sweep(n1=200, n0_grid=[300, 600], replicates=2)


def test_study_data_and_csv(tmp_path):
    pres, bg = ponly.study_data(50, 80, 7)
    assert pres.shape == (50, 1) and bg.shape == (80, 1)
    path = tmp_path / "d.csv"
    lines = ["y,x1"] + [f"1,{float(v)!r}" for v in pres[:, 0]] + [f"0,{float(v)!r}" for v in bg[:, 0]]
    path.write_text("\n".join(lines) + "\n")
    p2, b2, w = ponly.read_dataset_csv(str(path), 1.0)
    assert np.array_equal(p2, pres) and np.array_equal(b2, bg)
    assert w.sum() == pytest.approx(1.0)


def test_errors():
    pres, bg = dataset(3, p=1)
    const = np.ones((5, 1))
    with pytest.raises(ponly.RankDeficiency):
        ponly.fit(const, np.ones((10, 1)), 1.0)
    with pytest.raises(ponly.InvalidArgument):
        ponly.fit(pres, bg, 1.0, model="svm")
    with pytest.raises(ponly.NonConvergence):
        ponly.fit([[5.0], [6.0]], [[0.0], [1.0], [2.0]], 1.0)
