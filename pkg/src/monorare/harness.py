"""Batch front-end: config parsing, seeded replications and file outputs.

Every random stream derives from the master seed through
``make_rng(seed, *stream)`` (Philox keyed by a SeedSequence spawn path):

* ``run``        replication ``i`` uses stream ``(0, i)``
* ``compare``    MRM at budget ``n``: ``(1, n, i)``; MC: ``(2, n, i)``;
                 reference MC: ``(3,)``
* ``bootstrap``  replication ``i`` runs on ``(0, i)`` and bootstraps on
                 the seed sequence ``(4, i)``

so results never depend on execution order or on ``--jobs``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .bootstrap import BootstrapConfig, EstimatorConfig, bootstrap
from .engine import BoundsKeeper, EngineConfig, StepRecord, Trajectory, make_rng, run
from .errors import BoundaryEstimate, ConfigError, MonorareError
from .estimator import LikelihoodData, estimate, mc_baseline, mle
from .geometry import BoundsPair, FrontierPair, VolumePolicy, bounds, insert, klee_volume, volume_mc
from .problems import MonotoneProblem, problem_from_config, reference_probability
from .surrogate import TrainConfig

SEED_ENV = "MONORARE_SEED"


# -- configuration ----------------------------------------------------------------


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EngineSection(_Section):
    n_steps: int = Field(500, ge=1)
    p_guess: Optional[float] = Field(None, gt=0.0, lt=1.0)
    init_steps: Optional[int] = Field(None, ge=1)
    init_max_steps: int = Field(32, ge=1)
    max_rejections: int = Field(10**6, ge=1)
    exact_max_dim: int = Field(3, ge=1)
    mc_samples: int = Field(10**6, ge=1)
    mc_seed: int = 0


class EstimatorSection(_Section):
    tol: float = Field(1e-12, gt=0.0)
    level: float = Field(0.95, gt=0.0, lt=1.0)
    window_start: int = Field(1, ge=1)


class BootstrapSection(_Section):
    S: int = Field(1000, ge=1)
    M: int = Field(10**5, ge=1)
    Q: int = Field(10**6, ge=1)
    K: int = Field(4, ge=1)
    H: int = Field(4, ge=1)
    max_reruns: int = Field(10, ge=0)
    epochs: int = Field(40, ge=1)
    learning_rate: float = Field(0.05, gt=0.0)
    batch_size: int = Field(4096, ge=1)
    trajectory: Optional[str] = None


class CompareSection(_Section):
    budgets: list[int] = Field(default_factory=lambda: [200, 500, 1000])
    p_ref: Optional[float] = Field(None, gt=0.0, lt=1.0)
    reference_samples: int = Field(40_000, ge=1)

    @field_validator("budgets")
    @classmethod
    def _positive(cls, v):
        if not v or any(n < 1 for n in v):
            raise ValueError("budgets must be a non-empty list of positive integers")
        return v


class OutputSection(_Section):
    dir: str = "out"
    checkpoints: list[int] = Field(default_factory=list)


class RunConfig(_Section):
    """Whole experiment description; ``seed`` is mandatory."""

    problem: Literal["toy", "hydraulic2", "hydraulic4", "custom"]
    d: Optional[int] = Field(None, ge=2)
    p: Optional[float] = Field(None, gt=0.0, lt=1.0)
    marginals: Optional[list[dict]] = None
    physical_map: Optional[str] = None
    signs: Optional[list[int]] = None
    threshold: float = 0.0
    map_params: Optional[dict] = None
    known_p: Optional[float] = None
    seed: int = Field(ge=0)
    replications: int = Field(1, ge=1)
    engine: EngineSection = Field(default_factory=EngineSection)
    estimator: EstimatorSection = Field(default_factory=EstimatorSection)
    bootstrap: Optional[BootstrapSection] = None
    compare: Optional[CompareSection] = None
    output: OutputSection = Field(default_factory=OutputSection)

    def problem_spec(self) -> dict:
        return self.model_dump(
            include={"problem", "d", "p", "marginals", "physical_map", "signs", "threshold", "map_params", "known_p"}
        )

    def build_problem(self) -> MonotoneProblem:
        if self.problem == "toy" and (self.d is None or self.p is None):
            raise ConfigError("toy problems need 'd' and 'p'")
        if self.problem == "custom" and (not self.marginals or not self.physical_map):
            raise ConfigError("custom problems need 'marginals' and 'physical_map'")
        try:
            return problem_from_config(self.problem_spec())
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"invalid problem: {exc}") from exc

    def engine_config(self, problem: MonotoneProblem, n_steps: int | None = None) -> EngineConfig:
        e = self.engine
        guess = e.p_guess or reference_probability(problem) or 0.01
        return EngineConfig(
            n_steps=n_steps or e.n_steps,
            p_guess=guess,
            init_steps=e.init_steps,
            init_max_steps=e.init_max_steps,
            max_rejections=e.max_rejections,
            volume_policy=VolumePolicy(e.exact_max_dim, e.mc_samples, e.mc_seed),
        )

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(self.estimator.tol, self.estimator.level, self.estimator.window_start)

    def bootstrap_config(self) -> BootstrapConfig:
        b = self.bootstrap or BootstrapSection()
        return BootstrapConfig(
            S=b.S,
            M=b.M,
            Q=b.Q,
            K=b.K,
            H=b.H,
            max_reruns=b.max_reruns,
            train=TrainConfig(epochs=b.epochs, learning_rate=b.learning_rate, batch_size=b.batch_size),
        )


def load_config(source, env: dict | None = None) -> RunConfig:
    """Parse a config file path or mapping; ``MONORARE_SEED`` wins over the file."""
    env = os.environ if env is None else env
    if isinstance(source, (str, Path)):
        try:
            raw = json.loads(Path(source).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {source}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    else:
        raw = dict(source)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if env.get(SEED_ENV):
        try:
            raw["seed"] = int(env[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from exc


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


# -- serialization ------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, tuples lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def trajectory_rows(trajectory: Trajectory, policy: VolumePolicy) -> list[list]:
    """One row per evaluation; init rows have ``k = -(N-1)..0``.

    Bounds of init rows are recomputed by replaying the init points.
    """
    d = trajectory.dimension
    rows = []
    keeper = BoundsKeeper(d, policy)
    fp = FrontierPair.empty(d)
    pre = BoundsPair(0.0, 1.0)
    n_init = trajectory.init_calls
    for j, (x, xi) in enumerate(zip(trajectory.init_points, trajectory.init_signatures)):
        arr = np.array(x)
        fp = insert(fp, arr, xi)
        post = keeper.update(fp, arr, xi)
        rows.append([j - n_init + 1, *x, xi, pre.lower, pre.upper, post.lower, post.upper, 0, j + 1])
        pre = post
    for r in trajectory.records:
        rows.append(
            [r.k, *r.point, r.signature, r.pre_lower, r.pre_upper, r.post_lower, r.post_upper, r.draws, n_init + r.k]
        )
    return rows


def trajectory_header(d: int) -> list[str]:
    return ["k", *(f"x_{i + 1}" for i in range(d)), "xi", "pre_lower", "pre_upper", "p_minus", "p_plus", "draws", "calls_cum"]


def write_trajectory_csv(path: Path, trajectory: Trajectory, policy: VolumePolicy) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trajectory_header(trajectory.dimension))
    for row in trajectory_rows(trajectory, policy):
        w.writerow([_fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


def read_trajectory_csv(path) -> Trajectory:
    """Inverse of :func:`write_trajectory_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = sum(1 for h in header if h.startswith("x_"))
        init_pts, init_sig, records = [], [], []
        init_bounds = None
        for row in reader:
            k = int(row[0])
            x = tuple(float(v) for v in row[1 : 1 + d])
            xi = int(row[1 + d])
            pre_l, pre_u, post_l, post_u = (float(v) for v in row[2 + d : 6 + d])
            draws = int(row[6 + d])
            if k <= 0:
                init_pts.append(x)
                init_sig.append(xi)
                init_bounds = BoundsPair(post_l, post_u)
            else:
                records.append(StepRecord(k, pre_l, pre_u, x, xi, post_l, post_u, draws))
    if init_bounds is None:
        raise ConfigError(f"trajectory file {path} has no initialisation rows")
    return Trajectory(d, None, tuple(init_pts), tuple(init_sig), init_bounds, tuple(records))


def write_table(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else _fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


# -- replication plumbing -------------------------------------------------------------


def _map(fn: Callable, tasks: Sequence, jobs: int) -> list:
    """Ordered map, in-process or over ``jobs`` worker processes."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _safe(fn: Callable, task) -> dict:
    try:
        return {"ok": True, **fn(task)}
    except MonorareError as exc:
        return {"ok": False, "error": type(exc).__name__, "message": str(exc)}


# -- run -------------------------------------------------------------------------------------


def _run_task(task) -> dict:
    cfg_dict, i, keep = task
    cfg = RunConfig.model_validate(cfg_dict)
    problem = cfg.build_problem()
    engine = cfg.engine_config(problem)
    traj = run(problem.fresh(), engine, cfg.seed, (0, i))
    est = estimate(traj, cfg.estimator.level, cfg.estimator.tol, cfg.estimator.window_start)
    out = {"estimate": est.to_dict()}
    if cfg.output.checkpoints:
        out["checkpoints"] = _checkpoint_estimates(traj, cfg.output.checkpoints, cfg.estimator.tol)
    if keep:
        out["trajectory"] = traj
    return out


def _checkpoint_estimates(traj: Trajectory, checkpoints: Sequence[int], tol: float) -> list:
    """``(n, p_hat, lower, upper)`` from the first ``n`` steps of a run."""
    data = LikelihoodData.from_trajectory(traj)
    path = traj.bounds_path()
    out = []
    for n in checkpoints:
        if n > traj.n:
            continue
        sub = LikelihoodData(data.lower[:n], data.upper[:n], data.signature[:n])
        try:
            p = mle(sub, tol)
        except BoundaryEstimate as exc:
            p = exc.boundary
        out.append((n, p, float(path[n, 0]), float(path[n, 1])))
    return out


def cmd_run(config: RunConfig, out_dir: Path | None = None, jobs: int = 1) -> dict:
    """One MRM run (or ``replications`` of them) plus the MLE.

    Writes ``estimate.json`` and ``trajectory.csv`` for replication 0; with
    more replications also ``replications.csv`` and ``summary.json``.
    """
    out_dir = Path(out_dir or config.output.dir)
    problem = config.build_problem()
    engine = config.engine_config(problem)
    dump = config.model_dump(mode="json")
    tasks = [(dump, i, i == 0) for i in range(config.replications)]
    results = _map(_run_safe, tasks, jobs)
    first = results[0]
    if not first["ok"]:
        raise _reraise(first)
    write_json(out_dir / "estimate.json", first["estimate"])
    write_trajectory_csv(out_dir / "trajectory.csv", first["trajectory"], engine.volume_policy)
    summary = {"estimate": first["estimate"]}
    if config.replications > 1:
        summary = _replication_summary(config, problem, results)
        rows = []
        for i, r in enumerate(results):
            if r["ok"]:
                e = r["estimate"]
                rows.append([i, e["p_hat"], e["bound_lower"], e["bound_upper"], e["ci_lower"], e["ci_upper"],
                             e["variance"], int(e["degenerate"]), e["calls_total"], ""])
            else:
                rows.append([i, None, None, None, None, None, None, None, None, r["error"]])
        write_table(
            out_dir / "replications.csv",
            ["replication", "p_hat", "bound_lower", "bound_upper", "ci_lower", "ci_upper", "variance", "degenerate", "calls_total", "error"],
            rows,
        )
        if config.output.checkpoints:
            write_table(out_dir / "series.csv", ["n", "mean_p_hat", "rmse", "mean_lower", "mean_upper", "runs"],
                        _series_rows(results, reference_probability(problem)))
        write_json(out_dir / "summary.json", summary)
    return summary


def _run_safe(task):
    return _safe(_run_task, task)


def _reraise(result: dict) -> MonorareError:
    return MonorareError(f"{result['error']}: {result['message']}")


def _replication_summary(config: RunConfig, problem: MonotoneProblem, results: list) -> dict:
    ok = [r["estimate"] for r in results if r["ok"]]
    p_ref = reference_probability(problem)
    ps = np.array([e["p_hat"] for e in ok])
    widths = np.array([e["bound_upper"] - e["bound_lower"] for e in ok])
    summary = {
        "replications": config.replications,
        "completed": len(ok),
        "failed": [{"replication": i, "error": r["error"], "message": r["message"]} for i, r in enumerate(results) if not r["ok"]],
        "mean_p_hat": float(ps.mean()) if len(ps) else None,
        "sd_p_hat": float(ps.std(ddof=1)) if len(ps) > 1 else None,
        "cv": float(ps.std(ddof=1) / ps.mean()) if len(ps) > 1 and ps.mean() > 0 else None,
        "mean_width": float(widths.mean()) if len(ps) else None,
        "degenerate": int(sum(e["degenerate"] for e in ok)),
        "p_ref": p_ref,
    }
    if p_ref is not None and len(ps):
        n = config.engine.n_steps
        summary["bias"] = float(ps.mean() - p_ref)
        summary["rmse"] = float(np.sqrt(np.mean((ps - p_ref) ** 2)))
        summary["mc_variance"] = p_ref * (1 - p_ref) / n
        summary["variance_ratio"] = float(ps.var(ddof=1) / summary["mc_variance"]) if len(ps) > 1 else None
        summary["ci_coverage"] = float(np.mean([e["ci_lower"] <= p_ref <= e["ci_upper"] for e in ok]))
        summary["bounds_coverage"] = float(np.mean([e["bound_lower"] <= p_ref <= e["bound_upper"] for e in ok]))
    return summary


def _series_rows(results: list, p_ref: float | None) -> list:
    by_n: dict[int, list] = {}
    for r in results:
        if r["ok"]:
            for n, p, lo, hi in r.get("checkpoints", []):
                by_n.setdefault(n, []).append((p, lo, hi))
    rows = []
    for n in sorted(by_n):
        arr = np.array(by_n[n])
        rmse = float(np.sqrt(np.mean((arr[:, 0] - p_ref) ** 2))) if p_ref is not None else None
        rows.append([n, float(arr[:, 0].mean()), rmse, float(arr[:, 1].mean()), float(arr[:, 2].mean()), len(arr)])
    return rows


# -- compare -----------------------------------------------------------------------------------


def _compare_task(task) -> dict:
    cfg_dict, method, n, i = task
    cfg = RunConfig.model_validate(cfg_dict)
    problem = cfg.build_problem()
    if method == "MRM":
        engine = cfg.engine_config(problem, n_steps=n)
        traj = run(problem.fresh(), engine, cfg.seed, (1, n, i))
        est = estimate(traj, cfg.estimator.level, cfg.estimator.tol, cfg.estimator.window_start)
        return {"p_hat": est.p_hat, "lower": est.final_bounds.lower, "upper": est.final_bounds.upper,
                "calls": traj.calls_total, "degenerate": est.degenerate}
    engine = cfg.engine_config(problem, n_steps=n)
    probe = problem.fresh()
    rng = make_rng(cfg.seed, 2, n, i)
    x = rng.random((n, problem.dimension))
    x[x == 0.0] = np.nextafter(0.0, 1.0)
    sig = (probe.evaluate_batch(x) <= 0.0).astype(int)
    b = bounds(FrontierPair.from_points(x, sig, problem.dimension), engine.volume_policy)
    return {"p_hat": float(sig.mean()), "lower": b.lower, "upper": b.upper, "calls": probe.calls, "degenerate": False}


def _compare_safe(task):
    return _safe(_compare_task, task)


def cmd_compare(config: RunConfig, out_dir: Path | None = None, jobs: int = 1) -> dict:
    """MRM against plain MC over budgets: E[p_hat], CV and gamma_n.

    ``gamma_n = E[p_n+ - p_n-] / p_ref``; MC bounds come from the same
    monotone frontiers built on the MC design.
    """
    out_dir = Path(out_dir or config.output.dir)
    if config.replications < 2:
        raise ConfigError("compare needs replications >= 2")
    section = config.compare or CompareSection()
    problem = config.build_problem()
    p_ref, p_ref_source = _reference(config, section, problem)
    dump = config.model_dump(mode="json")
    tasks = [(dump, m, n, i) for m in ("MRM", "MC") for n in section.budgets for i in range(config.replications)]
    results = _map(_compare_safe, tasks, jobs)

    rows = []
    report = {"p_ref": p_ref, "p_ref_source": p_ref_source, "replications": config.replications, "methods": {}}
    complete = True
    for m in ("MRM", "MC"):
        per_budget = []
        for n in section.budgets:
            got = [r for (_, mm, nn, _), r in zip(tasks, results) if mm == m and nn == n]
            ok = [r for r in got if r["ok"]]
            complete &= len(ok) == len(got)
            ps = np.array([r["p_hat"] for r in ok])
            widths = np.array([r["upper"] - r["lower"] for r in ok])
            mean = float(ps.mean()) if len(ps) else None
            cv = float(ps.std(ddof=1) / ps.mean()) if len(ps) > 1 and ps.mean() > 0 else None
            gamma = float(widths.mean() / p_ref) if len(ps) else None
            entry = {
                "n": n,
                "mean_p_hat": mean,
                "cv": cv,
                "gamma": gamma,
                "completed": len(ok),
                "mean_calls": float(np.mean([r["calls"] for r in ok])) if ok else None,
                "degenerate": int(sum(r["degenerate"] for r in ok)),
                "errors": [r["error"] for r in got if not r["ok"]],
            }
            per_budget.append(entry)
            rows.append([m, n, mean, cv, gamma, len(ok)])
        report["methods"][m] = per_budget
    report["complete"] = complete
    write_json(out_dir / "compare.json", report)
    write_table(out_dir / "compare.csv", ["method", "n", "mean_p_hat", "cv", "gamma", "completed"], rows)
    return report


def _reference(config: RunConfig, section: CompareSection, problem: MonotoneProblem):
    if section.p_ref is not None:
        return section.p_ref, "config"
    if problem.known_p is not None:
        return problem.known_p, "exact"
    if problem.params.get("p_ref") is not None:
        return problem.params["p_ref"], "published"
    p, _ = mc_baseline(problem.fresh(), section.reference_samples, config.seed, (3,))
    if p <= 0.0:
        raise ConfigError("reference Monte Carlo saw no failure; set compare.p_ref")
    return p, f"monte-carlo-{section.reference_samples}"


# -- bootstrap -------------------------------------------------------------------------------------


def _bootstrap_task(task) -> dict:
    cfg_dict, i, trajectory_path = task
    cfg = RunConfig.model_validate(cfg_dict)
    problem = cfg.build_problem()
    engine = cfg.engine_config(problem)
    if trajectory_path:
        traj = read_trajectory_csv(trajectory_path)
        engine = cfg.engine_config(problem, n_steps=traj.n)
    else:
        traj = run(problem.fresh(), engine, cfg.seed, (0, i))
    est = estimate(traj, cfg.estimator.level, cfg.estimator.tol, cfg.estimator.window_start)
    seed = np.random.SeedSequence(cfg.seed, spawn_key=(4, i))
    report, net = bootstrap(traj, est.p_hat, engine, cfg.estimator_config(), cfg.bootstrap_config(), seed)
    return {"estimate": est.to_dict(), "report": report.to_dict(), "network": net.to_dict(),
            "trajectory": traj if i == 0 else None}


def _bootstrap_safe(task):
    return _safe(_bootstrap_task, task)


def cmd_bootstrap(config: RunConfig, out_dir: Path | None = None, jobs: int = 1) -> dict:
    """Run (or load) a trajectory, then the five-step bias correction.

    With ``replications > 1`` every replication is an independent run plus
    bootstrap, summarised in ``bootstrap_summary.json``.
    """
    out_dir = Path(out_dir or config.output.dir)
    if config.bootstrap is None:
        raise ConfigError("bootstrap section missing")
    problem = config.build_problem()
    engine = config.engine_config(problem)
    dump = config.model_dump(mode="json")
    path = config.bootstrap.trajectory
    if path and config.replications > 1:
        raise ConfigError("a saved trajectory allows a single replication only")
    tasks = [(dump, i, path) for i in range(config.replications)]
    results = _map(_bootstrap_safe, tasks, jobs)
    first = results[0]
    if not first["ok"]:
        raise _reraise(first)
    write_json(out_dir / "estimate.json", first["estimate"])
    write_json(out_dir / "bootstrap.json", first["report"])
    write_json(out_dir / "network.json", first["network"])
    write_trajectory_csv(out_dir / "trajectory.csv", first["trajectory"], engine.volume_policy)
    if config.replications == 1:
        return first["report"]
    p_ref = reference_probability(problem)
    rows = []
    for i, r in enumerate(results):
        if r["ok"]:
            rep = r["report"]
            rows.append([i, rep["p_hat"], rep["corrected_p"], rep["bias_hat"], rep["surrogate_p"],
                         rep["bound_lower"], rep["bound_upper"], rep["train_error"], ""])
        else:
            rows.append([i, None, None, None, None, None, None, None, r["error"]])
    write_table(out_dir / "bootstrap_replications.csv",
                ["replication", "p_hat", "corrected_p", "bias_hat", "surrogate_p", "bound_lower", "bound_upper", "train_error", "error"],
                rows)
    ok = [r["report"] for r in results if r["ok"]]
    summary: dict[str, Any] = {"replications": config.replications, "completed": len(ok), "p_ref": p_ref}
    if p_ref is not None and ok:
        raw = np.array([rep["p_hat"] for rep in ok])
        cor = np.array([rep["corrected_p"] for rep in ok])
        summary.update({
            "mean_abs_error_raw": float(np.mean(np.abs(raw - p_ref))),
            "mean_abs_error_corrected": float(np.mean(np.abs(cor - p_ref))),
            "mean_error_raw": float(np.mean(raw - p_ref)),
            "mean_error_corrected": float(np.mean(cor - p_ref)),
            "mean_bias_hat": float(np.mean([rep["bias_hat"] for rep in ok])),
        })
    write_json(out_dir / "bootstrap_summary.json", summary)
    return summary


# -- volume ------------------------------------------------------------------------------------------


def cmd_volume(source, Q: int = 10**6, seed: int = 0, out_dir: Path | None = None) -> dict:
    """Exact and Monte Carlo volume of a union of lower orthants.

    ``source`` is a vertex list or ``{"vertices": [...], "Q": .., "seed": ..}``.
    """
    spec = source
    if isinstance(source, (str, Path)):
        try:
            spec = json.loads(Path(source).read_text())
        except (FileNotFoundError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read vertex list: {exc}") from exc
    if isinstance(spec, dict):
        Q = int(spec.get("Q", Q))
        seed = int(spec.get("seed", seed))
        spec = spec.get("vertices")
    if not isinstance(spec, list):
        raise ConfigError("expected a list of vertices")
    try:
        verts = np.array(spec, dtype=float)
        if verts.size == 0:
            d = 1
            verts = np.empty((0, d))
        exact = klee_volume(verts)
        mc = volume_mc(verts, "lower", Q, seed)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"malformed vertex list: {exc}") from exc
    result = {
        "exact": exact,
        "mc": mc.value,
        "mc_std_error": mc.std_error,
        "Q": Q,
        "seed": seed,
        "discrepancy": mc.value - exact,
        "discrepancy_in_se": (mc.value - exact) / mc.std_error if mc.std_error > 0 else None,
    }
    if out_dir is not None:
        write_json(Path(out_dir) / "volume.json", result)
    return result
