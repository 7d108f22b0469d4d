"""Bootstrap bias correction on a replicated limit state surface.

Steps:

1. sample ``M`` points uniformly in each dominated region of a finished run;
2. fit a monotone MIN-MAX classifier to them;
3. use its sign as a cheap stand-in for ``g``;
4. estimate the volume under the replicated surface by Monte Carlo;
5. rerun the sequential design and the MLE ``S`` times on the stand-in and
   read the bias off the replicate mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from . import _kernels
from .engine import EngineConfig, StepRecord, Trajectory, make_rng, run
from .errors import (
    BoundaryEstimate,
    InitFailed,
    RejectionBudgetExceeded,
)
from .estimator import LikelihoodData, mle
from .geometry import BoundsPair, FrontierPair, _MC_CHUNK
from .surrogate import MinMaxNetwork, TrainConfig, train

FrontierSide = Literal["failure", "safe"]


def sample_dominated(
    frontiers: FrontierPair,
    side: FrontierSide,
    M: int,
    rng: np.random.Generator,
    max_tries: int | None = None,
) -> np.ndarray:
    """``M`` uniform points on the failure-dominated or safe-dominated region.

    Rejection from the bounding box of the region, which is uniform on the
    region just like rejection from the whole cube, with fewer misses.

    Raises
    ------
    RejectionBudgetExceeded
        The region is empty or too thin for the draw budget
        (default ``1000 * M + 10**6``).
    """
    if side not in ("failure", "safe"):
        raise ValueError(f"side must be 'failure' or 'safe', got {side!r}")
    if M < 0:
        raise ValueError("M must be >= 0")
    d = frontiers.dimension
    if M == 0:
        return np.empty((0, d))
    verts = frontiers.failure if side == "failure" else frontiers.safe
    if len(verts) == 0:
        raise RejectionBudgetExceeded(f"the {side}-dominated region is empty")
    if side == "failure":
        box_lo, box_hi = np.zeros(d), verts.max(axis=0)
    else:
        box_lo, box_hi = verts.min(axis=0), np.ones(d)
    budget = max_tries if max_tries is not None else 1000 * M + 10**6
    pts, drawn = _kernels.sample_in_union(
        np.ascontiguousarray(verts), side == "failure", box_lo, box_hi, rng, M, budget
    )
    if drawn < 0:
        raise RejectionBudgetExceeded(f"only {len(pts)} of {M} {side} points in {budget} draws")
    return pts


def surrogate_volume(net: MinMaxNetwork, Q: int, seed) -> float:
    """Monte Carlo share of the cube where ``g_hat <= 0``."""
    if Q < 1:
        raise ValueError("Q must be >= 1")
    rng = np.random.default_rng(seed)
    hits = 0
    left = Q
    while left:
        n = min(left, _MC_CHUNK)
        hits += int(np.count_nonzero(net.value(rng.random((n, net.dimension))) <= 0.0))
        left -= n
    return hits / Q


class SurrogateProblem:
    """The classifier sign in place of ``g``: -1 failure, +1 safe."""

    def __init__(self, net: MinMaxNetwork):
        self.net = net
        self.dimension = net.dimension
        self.calls = 0

    def evaluate(self, x) -> float:
        self.calls += 1
        return -1.0 if _kernels.minmax_value(np.asarray(x, dtype=float), self.net.weights, self.net.offsets) <= 0.0 else 1.0

    def evaluate_batch(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        self.calls += len(pts)
        return np.where(self.net.value(pts) <= 0.0, -1.0, 1.0)


def _fast_path(net: MinMaxNetwork, config: EngineConfig) -> bool:
    d = net.dimension
    return d in (2, 3) and config.volume_policy.is_exact(d)


def surrogate_run(net: MinMaxNetwork, config: EngineConfig, seed, stream: Sequence[int] = ()) -> Trajectory:
    """One sequential run against the surrogate.

    Uses the compiled loop when the bounds are exact in 2 or 3 dimensions;
    the result is identical to :func:`monorare.engine.run` on a
    :class:`SurrogateProblem`.
    """
    if not _fast_path(net, config):
        return run(SurrogateProblem(net), config, seed, stream)
    d = net.dimension
    at_least = config.min_init_steps(d)
    out = _kernels.minmax_mrm(
        net.weights,
        net.offsets,
        config.n_steps,
        at_least,
        max(at_least, config.init_max_steps),
        config.max_rejections,
        make_rng(seed, *stream),
    )
    status, ipts, isig, ilo, ihi, pts, sig, plo, phi, qlo, qhi, draws = out
    if status == 1:
        raise InitFailed(
            f"bounds still trivial after {len(ipts)} diagonal evaluations "
            f"(lower={ilo}, upper={ihi}); is g <= 0 somewhere on the diagonal?",
            ilo,
            ihi,
        )
    if status == 2:
        raise RejectionBudgetExceeded(
            f"no non-dominated point in {config.max_rejections} draws; bounds nearly closed?"
        )
    records = tuple(
        StepRecord(
            k=k + 1,
            pre_lower=float(plo[k]),
            pre_upper=float(phi[k]),
            point=tuple(pts[k].tolist()),
            signature=int(sig[k]),
            post_lower=float(qlo[k]),
            post_upper=float(qhi[k]),
            draws=int(draws[k]),
        )
        for k in range(config.n_steps)
    )
    return Trajectory(
        dimension=d,
        seed=(seed, tuple(stream)) if stream else seed,
        init_points=tuple(tuple(p) for p in ipts.tolist()),
        init_signatures=tuple(int(s) for s in isig),
        init_bounds=BoundsPair(float(ilo), float(ihi)),
        records=records,
    )


@dataclass(frozen=True)
class EstimatorConfig:
    tol: float = 1e-12
    level: float = 0.95
    window_start: int = 1


@dataclass(frozen=True)
class BootstrapConfig:
    """Sizes of the bootstrap: ``M`` training points per side, ``Q`` volume
    samples, ``S`` replicates, a ``K`` x ``H`` network."""

    S: int = 1000
    M: int = 10**5
    Q: int = 10**6
    K: int = 4
    H: int = 4
    max_reruns: int = 10
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.S < 1:
            raise ValueError("S must be >= 1")
        if self.M < 1 or self.Q < 1:
            raise ValueError("M and Q must be >= 1")
        if self.max_reruns < 0:
            raise ValueError("max_reruns must be >= 0")


@dataclass(frozen=True)
class BootstrapReport:
    surrogate_p: float
    replicate_estimates: tuple[float, ...]
    bias_hat: float
    corrected_p: float | None
    M: int
    Q: int
    S: int
    train_error: float
    p_hat: float | None = None
    bounds: BoundsPair | None = None
    reruns: int = 0
    boundary_replicates: int = 0

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "corrected_p": self.corrected_p,
            "bias_hat": self.bias_hat,
            "surrogate_p": self.surrogate_p,
            "bound_lower": None if self.bounds is None else self.bounds.lower,
            "bound_upper": None if self.bounds is None else self.bounds.upper,
            "M": self.M,
            "Q": self.Q,
            "S": self.S,
            "train_error": self.train_error,
            "reruns": self.reruns,
            "boundary_replicates": self.boundary_replicates,
            "replicate_estimates": list(self.replicate_estimates),
        }


def corrected_estimate(p_hat: float, report: BootstrapReport, bounds: BoundsPair) -> float:
    """``p_hat - bias_hat`` clipped to the certain bounds."""
    return min(max(p_hat - report.bias_hat, bounds.lower), bounds.upper)


def _replicate_run(surrogate, config, seed, stream):
    if isinstance(surrogate, MinMaxNetwork):
        return surrogate_run(surrogate, config, seed, stream)
    box = surrogate.fresh() if hasattr(surrogate, "fresh") else surrogate
    return run(box, config, seed, stream)


def _replicate_mle(surrogate, engine_config, estimator_config, master_seed, i, max_reruns):
    """MLE of replicate ``i``; boundary outcomes are rerun on a fresh stream.

    Returns ``(p, reruns, boundary)``. After ``max_reruns`` reruns the
    boundary value of the last attempt is kept.
    """
    for attempt in range(max_reruns + 1):
        traj = _replicate_run(surrogate, engine_config, master_seed, (i, attempt))
        data = LikelihoodData.from_trajectory(traj, estimator_config.window_start)
        try:
            return mle(data, estimator_config.tol), attempt, False
        except BoundaryEstimate as exc:
            last = exc.boundary
    return last, max_reruns, True


def bootstrap_bias(
    net,
    engine_config: EngineConfig,
    estimator_config: EstimatorConfig,
    S: int,
    master_seed,
    *,
    Q: int = 10**6,
    M: int = 0,
    train_error: float = 0.0,
    p_hat: float | None = None,
    bounds: BoundsPair | None = None,
    max_reruns: int = 10,
    surrogate_p: float | None = None,
) -> BootstrapReport:
    """Run ``S`` sequential designs plus MLE on the surrogate.

    ``net`` is normally a :class:`MinMaxNetwork`; any monotone black box
    with ``dimension`` and ``evaluate`` also works, in which case
    ``surrogate_p`` must be given. Replicate ``i`` draws from stream ``(i, attempt)`` of ``master_seed``;
    results are kept in replicate order. With ``p_hat`` and ``bounds`` the
    report carries the corrected estimate.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    if surrogate_p is None:
        if not isinstance(net, MinMaxNetwork):
            raise ValueError("surrogate_p is required for a non-network surrogate")
        surrogate_p = surrogate_volume(net, Q, make_rng(master_seed, 2**31).integers(2**63))
    estimates = []
    reruns = 0
    boundary = 0
    for i in range(S):
        p, r, flagged = _replicate_mle(net, engine_config, estimator_config, master_seed, i, max_reruns)
        estimates.append(p)
        reruns += r
        boundary += flagged
    bias = math.fsum(estimates) / S - surrogate_p
    report = BootstrapReport(
        surrogate_p=surrogate_p,
        replicate_estimates=tuple(estimates),
        bias_hat=bias,
        corrected_p=None,
        M=M,
        Q=Q,
        S=S,
        train_error=train_error,
        p_hat=p_hat,
        bounds=bounds,
        reruns=reruns,
        boundary_replicates=boundary,
    )
    if p_hat is not None and bounds is not None:
        report = _with_correction(report, p_hat, bounds)
    return report


def _with_correction(report: BootstrapReport, p_hat: float, bounds: BoundsPair) -> BootstrapReport:
    return replace(report, p_hat=p_hat, bounds=bounds, corrected_p=corrected_estimate(p_hat, report, bounds))


def fit_surrogate(trajectory: Trajectory, config: BootstrapConfig, seed):
    """Steps 1 and 2: sample both dominated regions and train the network."""
    frontiers = trajectory.frontiers()
    rng = make_rng(seed, 0)
    x_fail = sample_dominated(frontiers, "failure", config.M, rng)
    x_safe = sample_dominated(frontiers, "safe", config.M, rng)
    return train(x_fail, x_safe, (config.K, config.H), config.train)


def bootstrap(
    trajectory: Trajectory,
    p_hat: float,
    engine_config: EngineConfig,
    estimator_config: EstimatorConfig,
    config: BootstrapConfig,
    seed,
) -> tuple[BootstrapReport, MinMaxNetwork]:
    """Full bias correction of ``p_hat`` estimated from ``trajectory``.

    Sub-streams of ``seed``: 0 for training data, 1 for the volume sample,
    2 for the replicates.
    """
    fitted = fit_surrogate(trajectory, config, seed)
    net = fitted.network
    volume_seed = make_rng(seed, 1).integers(2**63)
    p_tilde = surrogate_volume(net, config.Q, volume_seed)
    replicate_seed = np.random.SeedSequence(int(make_rng(seed, 2).integers(2**63)))
    report = bootstrap_bias(
        net,
        engine_config,
        estimator_config,
        config.S,
        replicate_seed,
        Q=config.Q,
        M=config.M,
        train_error=fitted.train_error,
        p_hat=p_hat,
        bounds=trajectory.final_bounds,
        max_reruns=config.max_reruns,
        surrogate_p=p_tilde,
    )
    return report, net
