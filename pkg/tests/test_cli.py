import json

import pytest

from monorare import cli, harness
from monorare.errors import ConfigError


def _write(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _toy(**extra):
    cfg = {"problem": "toy", "d": 2, "p": 0.05, "seed": 1, "engine": {"n_steps": 500}}
    cfg.update(extra)
    return cfg


def test_run_sandwich_and_files(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", _write(tmp_path, _toy()), "--out", str(out)]) == 0
    est = json.loads((out / "estimate.json").read_text())
    assert est["bound_lower"] <= 0.05 <= est["bound_upper"]
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("k,x_1,x_2,xi")
    init_calls = sum(1 for row in lines[1:] if int(row.split(",")[0]) <= 0)
    assert est["calls_total"] == init_calls + 500 == len(lines) - 1


def test_run_is_byte_identical(tmp_path):
    path = _write(tmp_path, _toy(engine={"n_steps": 200}))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", path, "--out", str(a)]) == 0
    assert cli.main(["run", "--config", path, "--out", str(b)]) == 0
    for name in ("estimate.json", "trajectory.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_missing_seed_is_config_error(tmp_path, capsys):
    cfg = _toy()
    del cfg["seed"]
    out = tmp_path / "out"
    assert cli.main(["run", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and err["exit_code"] == 2
    assert json.loads((out / "error.json").read_text())["exit_code"] == 2


def test_unknown_key_is_config_error(tmp_path):
    assert cli.main(["run", "--config", _write(tmp_path, _toy(colour="red")), "--out", str(tmp_path)]) == 2


def test_env_seed_overrides_config(tmp_path):
    path = _write(tmp_path, _toy())
    assert harness.load_config(path, env={"MONORARE_SEED": "17"}).seed == 17
    assert harness.load_config(path, env={}).seed == 1
    with pytest.raises(ConfigError):
        harness.load_config(path, env={"MONORARE_SEED": "x"})


def test_replications_independent_of_jobs(tmp_path):
    cfg = harness.load_config(_toy(replications=4, engine={"n_steps": 100}), env={})
    one = harness.cmd_run(cfg, tmp_path / "one", 1)
    two = harness.cmd_run(cfg, tmp_path / "two", 2)
    assert one == two
    assert (tmp_path / "one" / "replications.csv").read_bytes() == (tmp_path / "two" / "replications.csv").read_bytes()


@pytest.mark.parametrize(
    "verts, expected",
    [([[0.8, 0.3], [0.5, 0.5], [0.2, 0.9]], 0.42), ([[0.3, 0.5, 0.7]], 0.105), ([], 0.0)],
)
def test_volume_examples(tmp_path, verts, expected):
    res = harness.cmd_volume(_write(tmp_path, verts), Q=10**5)
    assert res["exact"] == pytest.approx(expected, abs=1e-15)
    assert abs(res["discrepancy"]) <= 4 * max(res["mc_std_error"], 1e-12)


def test_volume_malformed(tmp_path):
    assert cli.main(["volume", "--config", _write(tmp_path, {"vertices": [[0.2, 1.4]]})]) == 2
    assert cli.main(["volume", "--config", str(tmp_path / "missing.json")]) == 2


def test_compare_needs_two_replications(tmp_path):
    cfg = harness.load_config(_toy(), env={})
    with pytest.raises(ConfigError):
        harness.cmd_compare(cfg, tmp_path)


def test_bootstrap_zero_replicates_is_config_error(tmp_path):
    cfg = _toy(bootstrap={"S": 0})
    assert cli.main(["bootstrap", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_bootstrap_identity_through_harness(tmp_path):
    cfg = harness.load_config(
        _toy(engine={"n_steps": 150}, bootstrap={"S": 10, "M": 2000, "Q": 10**5, "epochs": 20, "batch_size": 512}),
        env={},
    )
    rep = harness.cmd_bootstrap(cfg, tmp_path)
    assert rep["bias_hat"] == pytest.approx(sum(rep["replicate_estimates"]) / 10 - rep["surrogate_p"], abs=1e-15)
    # a saved trajectory can be bootstrapped again with the same result
    cfg2 = cfg.model_copy(update={"bootstrap": cfg.bootstrap.model_copy(update={"trajectory": str(tmp_path / "trajectory.csv")})})
    again = harness.cmd_bootstrap(cfg2, tmp_path / "again")
    assert again["p_hat"] == rep["p_hat"]


@pytest.mark.slow
def test_hydraulic2_compare_mrm_beats_mc(tmp_path):
    cfg = harness.load_config(
        {"problem": "hydraulic2", "seed": 3, "replications": 30, "compare": {"budgets": [200]}}, env={}
    )
    report = harness.cmd_compare(cfg, tmp_path, jobs=4)
    mrm, mc = report["methods"]["MRM"][0], report["methods"]["MC"][0]
    assert report["complete"]
    assert mc["cv"] is None or mrm["cv"] < mc["cv"]
    assert (tmp_path / "compare.csv").exists()


def test_compare_gamma_decreasing(tmp_path):
    cfg = harness.load_config(
        _toy(replications=3, compare={"budgets": [50, 100, 200]}), env={}
    )
    gammas = [e["gamma"] for e in harness.cmd_compare(cfg, tmp_path)["methods"]["MRM"]]
    assert gammas[0] >= gammas[1] >= gammas[2]
