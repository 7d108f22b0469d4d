"""Acceptance criteria 1-12, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed straight to the terminal even when output is captured.
"""

import json
import time

import numpy as np
import pytest
from scipy import stats

from monorare import cli, harness
from monorare.bootstrap import BootstrapConfig, fit_surrogate
from monorare.engine import EngineConfig, run
from monorare.errors import BoundaryEstimate, DegenerateSignatures
from monorare.estimator import (
    LikelihoodData,
    estimate,
    fisher_hat,
    fixed_point_residual,
    mc_baseline,
    mle,
)
from monorare.geometry import klee_volume, volume_mc
from monorare.problems import hydraulic_problem, toy_problem
from monorare.surrogate import TrainConfig, monotonicity_violations, train

from oracles import random_antichain


def _report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}")


def _toy_runs(d, p, n, reps, stream_base):
    prob = toy_problem(d, p)
    cfg = EngineConfig(n_steps=n, p_guess=p)
    return [run(prob.fresh(), cfg, 2024, (stream_base, i)) for i in range(reps)]


@pytest.fixture(scope="module")
def sandwich_runs():
    return {d: _toy_runs(d, 0.05, 500, 100, d) for d in (2, 3)}


@pytest.fixture(scope="module")
def variance_study():
    runs = _toy_runs(3, 0.05, 400, 300, 30)
    return np.array([estimate(t).p_hat for t in runs])


def test_c01_klee_oracle_equivalence(capsys):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    agree = total = 0
    for d in (2, 3):
        for case in range(50):
            verts = random_antichain(rng, int(rng.integers(5, 41)), d)
            exact = klee_volume(verts)
            mc = volume_mc(verts, "lower", 10**6, (d, case))
            total += 1
            agree += abs(exact - mc.value) <= 4 * max(mc.std_error, 1e-12)
    elapsed = time.perf_counter() - start
    ok = agree / total >= 0.95 and elapsed < 60
    _report(capsys, 1, ok, f"agreement {agree}/{total}, {elapsed:.1f} s")
    assert ok


def test_c02_sandwich_certainty(capsys, sandwich_runs):
    violations = 0
    steps = 0
    for runs in sandwich_runs.values():
        for t in runs:
            path = t.bounds_path()
            pre = np.array([(r.pre_lower, r.pre_upper) for r in t.records])
            both = np.vstack([path, pre])
            violations += int(np.sum((both[:, 0] > 0.05) | (both[:, 1] < 0.05)))
            steps += len(path)
    _report(capsys, 2, violations == 0, f"{violations} violations over {steps} bound pairs in 200 runs")
    assert violations == 0


def test_c03_variance_domination(capsys, sandwich_runs):
    p = 0.05
    worst = 0.0
    bad = 0
    for runs in sandwich_runs.values():
        for t in runs:
            data = LikelihoodData.from_trajectory(t)
            ratio = (1.0 / fisher_hat(p, data)) / (p * (1 - p) / data.n)
            worst = max(worst, ratio)
            bad += ratio > 1.0
    _report(capsys, 3, bad == 0, f"max J^-1(p) / (p(1-p)/n) = {worst:.4f}, {bad} runs above 1")
    assert bad == 0


def test_c04_variance_reduction(capsys, variance_study):
    p, n = 0.05, 400
    ratio = variance_study.var(ddof=1) / (p * (1 - p) / n)
    ok = ratio <= 0.5
    _report(capsys, 4, ok, f"Var(p_hat) / MC variance = {ratio:.4f} (R=300)")
    assert ok


def test_c05_positive_bias(capsys, variance_study):
    res = stats.ttest_1samp(variance_study, 0.05, alternative="greater")
    bias = variance_study.mean() - 0.05
    ok = bias > 0 and res.pvalue < 0.05
    _report(capsys, 5, ok, f"mean bias {bias:.3e}, one-sided p-value {res.pvalue:.3g}")
    assert ok


def test_c06_mle_analytics(capsys):
    two = LikelihoodData.from_triples([(0.2, 0.8, 1), (0.3, 0.8, 0)])
    p = mle(two, 1e-12)
    resid = abs(fixed_point_residual(p, two))
    flagged = []
    for sig, expect in ((1, 0.5), (0, 0.2)):
        data = LikelihoodData.from_triples([(0.1, 0.6, sig), (0.2, 0.5, sig)])
        try:
            mle(data)
            flagged.append(False)
        except DegenerateSignatures as exc:
            flagged.append(isinstance(exc, BoundaryEstimate) and exc.boundary == expect)
    ok = abs(p - 0.5) <= 1e-10 and resid <= 1e-10 and all(flagged)
    _report(capsys, 6, ok, f"root error {abs(p - 0.5):.1e}, residual {resid:.1e}, degenerate flagged {flagged}")
    assert ok


@pytest.mark.slow
def test_c07_bootstrap_correction(capsys, tmp_path):
    cfg = harness.load_config(
        {
            "problem": "toy", "d": 3, "p": 0.05, "seed": 7, "replications": 20,
            "engine": {"n_steps": 500},
            "bootstrap": {"S": 1000, "M": 100000, "Q": 1000000},
        },
        env={},
    )
    summary = harness.cmd_bootstrap(cfg, tmp_path)
    raw, cor = summary["mean_abs_error_raw"], summary["mean_abs_error_corrected"]
    ok = summary["completed"] == 20 and cor <= 0.5 * raw
    _report(capsys, 7, ok, f"mean|corrected-p| {cor:.3e} vs mean|p_hat-p| {raw:.3e} (ratio {cor / raw:.3f}, need <= 0.5)")
    assert ok


def test_c08_hydraulic_reference(capsys):
    p2, _ = mc_baseline(hydraulic_problem("dim2"), 40_000, 808, (0,))
    p4, _ = mc_baseline(hydraulic_problem("dim4"), 40_000, 808, (1,))
    ok = 0.00198 <= p2 <= 0.00357 and 0.0086 <= p4 <= 0.0116
    _report(capsys, 8, ok, f"dim2 MC {p2:.6f}, dim4 MC {p4:.6f}")
    assert ok


@pytest.mark.slow
def test_c09_hydraulic_precision(capsys, tmp_path):
    cfg = harness.load_config(
        {"problem": "hydraulic2", "seed": 9, "replications": 30, "compare": {"budgets": [1000]}}, env={}
    )
    report = harness.cmd_compare(cfg, tmp_path)
    mrm = report["methods"]["MRM"][0]
    ok = report["complete"] and mrm["cv"] <= 0.10 and mrm["gamma"] <= 1.0
    _report(capsys, 9, ok, f"MRM n=1000: CV {100 * mrm['cv']:.2f}%, gamma {100 * mrm['gamma']:.2f}%, mean {mrm['mean_p_hat']:.6f}")
    assert ok


def test_c10_ci_coverage(capsys):
    runs = _toy_runs(2, 0.05, 500, 200, 10)
    hits = sum(e.ci_lower <= 0.05 <= e.ci_upper for e in map(estimate, runs))
    ok = hits / 200 >= 0.80
    _report(capsys, 10, ok, f"95% CI coverage {hits}/200")
    assert ok


def test_c11_monotone_classifier(capsys):
    rng = np.random.default_rng(11)
    x = rng.uniform(size=(4000, 2))
    fail, safe = x[x.sum(axis=1) < 1][:1000], x[x.sum(axis=1) > 1][:1000]
    sanity = train(fail, safe, (2, 2), TrainConfig(epochs=150, batch_size=256))
    traj = run(toy_problem(3, 0.05).fresh(), EngineConfig(n_steps=500, p_guess=0.05), 11)
    toy_fit = fit_surrogate(traj, BootstrapConfig(M=20_000), 11)
    violations = [monotonicity_violations(r.network, 10**4, 12) for r in (sanity, toy_fit)]
    ok = sanity.train_error <= 0.01 and violations == [0, 0]
    _report(capsys, 11, ok, f"sanity train error {sanity.train_error:.4f}, violations {violations}")
    assert ok


def test_c12_determinism(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "toy", "d": 3, "p": 0.05, "seed": 12, "engine": {"n_steps": 300}}))
    for name in ("a", "b"):
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    same = all(
        (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        for f in ("estimate.json", "trajectory.csv")
    )
    _report(capsys, 12, same, "estimate.json and trajectory.csv byte-identical" if same else "outputs differ")
    assert same
