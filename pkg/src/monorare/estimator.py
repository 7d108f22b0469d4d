"""Maximum likelihood estimation from a sequential run.

At step k the signature is Bernoulli with parameter
``(p - l_k) / (u_k - l_k)`` given the bounds ``(l_k, u_k)`` before the step,
so a run yields a product likelihood in ``p``. Its log is strictly concave
on the last bracket, and its derivative reads

    score(p) = sum_k xi_k / (p - l_k) - (1 - xi_k) / (u_k - p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .engine import Trajectory
from .errors import BoundaryEstimate, BracketError, DegenerateSignatures
from .geometry import BoundsPair


@dataclass(frozen=True)
class LikelihoodData:
    """Pre-step bounds and signatures of the sequential steps of a run."""

    lower: np.ndarray
    upper: np.ndarray
    signature: np.ndarray

    def __post_init__(self):
        n = len(self.signature)
        if n == 0:
            raise ValueError("likelihood data needs at least one record")
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError("lower, upper and signature lengths differ")
        if np.any(self.lower >= self.upper):
            raise ValueError("every record needs pre_lower < pre_upper")
        if not np.all(np.isin(self.signature, (0, 1))):
            raise ValueError("signatures must be 0 or 1")

    @classmethod
    def from_triples(cls, triples: Sequence[tuple[float, float, int]]) -> "LikelihoodData":
        arr = np.asarray(triples, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].astype(int))

    @classmethod
    def from_trajectory(cls, trajectory: Trajectory, start_k: int = 1) -> "LikelihoodData":
        recs = trajectory.records[start_k - 1 :]
        return cls(
            np.array([r.pre_lower for r in recs]),
            np.array([r.pre_upper for r in recs]),
            np.array([r.signature for r in recs], dtype=int),
        )

    @property
    def n(self) -> int:
        return len(self.signature)

    @property
    def bracket(self) -> tuple[float, float]:
        """Open interval where every factor of the likelihood is positive."""
        return float(self.lower.max()), float(self.upper.min())

    @property
    def local_estimates(self) -> np.ndarray:
        """``p_k``: the upper bound after a failure, the lower after a safe point."""
        return np.where(self.signature == 1, self.upper, self.lower)

    def window(self, start_k: int) -> "LikelihoodData":
        if not 1 <= start_k <= self.n:
            raise ValueError(f"start_k must lie in [1, {self.n}]")
        s = slice(start_k - 1, None)
        return LikelihoodData(self.lower[s], self.upper[s], self.signature[s])


def conditional_prob(p: float, pre_lower: float, pre_upper: float) -> float:
    """Chance that a uniform draw from the undecided region fails."""
    if not pre_lower < pre_upper:
        raise BracketError("degenerate bracket: pre_lower must be < pre_upper")
    if not pre_lower <= p <= pre_upper:
        raise BracketError(f"p={p} outside [{pre_lower}, {pre_upper}]")
    return (p - pre_lower) / (pre_upper - pre_lower)


def _check_open(p: float, data: LikelihoodData) -> None:
    lo, hi = data.bracket
    if not lo < p < hi:
        raise BracketError(f"p={p} outside the open bracket ({lo}, {hi})")


def weights(p: float, data: LikelihoodData) -> np.ndarray:
    """``1 / ((p - l_k)(u_k - p))`` for every record."""
    return 1.0 / ((p - data.lower) * (data.upper - p))


def score(p: float, data: LikelihoodData) -> float:
    _check_open(p, data)
    return _score(p, data)


def _score(p: float, data: LikelihoodData) -> float:
    xi = data.signature
    return float(np.sum(xi / (p - data.lower)) - np.sum((1 - xi) / (data.upper - p)))


def _score_slope(p: float, data: LikelihoodData) -> float:
    xi = data.signature
    return float(-np.sum(xi / (p - data.lower) ** 2) - np.sum((1 - xi) / (data.upper - p) ** 2))


def log_likelihood(p: float, data: LikelihoodData) -> float:
    _check_open(p, data)
    xi = data.signature
    width = data.upper - data.lower
    return float(
        np.sum(xi * np.log((p - data.lower) / width))
        + np.sum((1 - xi) * np.log((data.upper - p) / width))
    )


def fixed_point_residual(p: float, data: LikelihoodData) -> float:
    """``p - sum(w_k p_k) / sum(w_k)`` at ``p``; zero at the MLE."""
    w = weights(p, data)
    return float(p - np.sum(w * data.local_estimates) / np.sum(w))


def mle(data: LikelihoodData, tol: float = 1e-12) -> float:
    """Root of the score in the bracket ``(max l_k, min u_k)``.

    Bisection to a bracket width of ``tol``, then Newton polishing kept
    inside the final bisection interval.

    Raises
    ------
    DegenerateSignatures
        All signatures equal; ``.boundary`` is the bound where the monotone
        likelihood peaks.
    BoundaryEstimate
        Mixed signatures but the likelihood still peaks at a bracket end
        (a bound jumped past the root); ``.boundary`` holds that end.
    """
    lo, hi = data.bracket
    n_fail = int(data.signature.sum())
    if n_fail == data.n:
        raise DegenerateSignatures("all signatures are failures", hi)
    if n_fail == 0:
        raise DegenerateSignatures("all signatures are safe", lo)

    # a pole at an end sends the score to +-inf there; otherwise the
    # concave likelihood may peak on the end itself
    xi = data.signature
    pole_lo = bool(np.any((xi == 1) & (data.lower == lo)))
    pole_hi = bool(np.any((xi == 0) & (data.upper == hi)))
    if not pole_lo and _score_at_end(lo, data) <= 0.0:
        raise BoundaryEstimate("likelihood peaks at the lower bracket end", lo)
    if not pole_hi and _score_at_end(hi, data) >= 0.0:
        raise BoundaryEstimate("likelihood peaks at the upper bracket end", hi)

    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if _score(mid, data) > 0.0:
            a = mid
        else:
            b = mid
    p = 0.5 * (a + b)
    for _ in range(4):
        s = _score(p, data)
        if s == 0.0:
            break
        nxt = p - s / _score_slope(p, data)
        if not a <= nxt <= b:
            break
        p = nxt
    return p


def _score_at_end(p: float, data: LikelihoodData) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = data.signature
        up = np.where(xi == 1, 1.0 / (p - data.lower), 0.0)
        down = np.where(xi == 0, 1.0 / (data.upper - p), 0.0)
    return float(np.sum(up) - np.sum(down))


def fisher_hat(p: float, data: LikelihoodData) -> float:
    """Empirical information ``sum_k 1 / ((p - l_k)(u_k - p))``."""
    _check_open(p, data)
    return float(np.sum(weights(p, data)))


def confidence_interval(
    p_hat: float,
    data: LikelihoodData,
    level: float = 0.95,
    bounds: BoundsPair | None = None,
) -> tuple[float, float]:
    """Wald interval ``p_hat +- z / sqrt(J(p_hat))`` clipped to certain bounds.

    ``bounds`` defaults to the data's bracket; pass the run's final bounds
    to clip to the tightest certain interval.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if bounds is None:
        bounds = BoundsPair(*data.bracket)
    half = NormalDist().inv_cdf(0.5 + 0.5 * level) / math.sqrt(fisher_hat(p_hat, data))
    lo = min(max(p_hat - half, bounds.lower), bounds.upper)
    hi = max(min(p_hat + half, bounds.upper), bounds.lower)
    return lo, hi


def windowed_mle(data: LikelihoodData, start_k: int, tol: float = 1e-12) -> float:
    """MLE over records ``start_k..n`` only."""
    return mle(data.window(start_k), tol)


@dataclass(frozen=True)
class Estimate:
    p_hat: float
    fisher_hat: float
    variance: float
    ci_lower: float
    ci_upper: float
    level: float
    final_bounds: BoundsPair
    gamma0: float
    n: int
    calls_total: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "fisher_hat": self.fisher_hat,
            "variance": self.variance,
            "ci_lower": self.ci_lower,
            "ci_upper": self.ci_upper,
            "level": self.level,
            "bound_lower": self.final_bounds.lower,
            "bound_upper": self.final_bounds.upper,
            "gamma0": self.gamma0,
            "degenerate": self.degenerate,
            "n": self.n,
            "calls_total": self.calls_total,
        }


def gamma0(init_bounds: BoundsPair) -> float:
    """``((p0+ - p0-) / p0-)^2`` from the post-initialisation bounds."""
    if init_bounds.lower <= 0.0:
        return math.inf
    return (init_bounds.width / init_bounds.lower) ** 2


def estimate(
    trajectory: Trajectory,
    level: float = 0.95,
    tol: float = 1e-12,
    start_k: int = 1,
) -> Estimate:
    """MLE, information, variance and clipped interval for a finished run.

    Boundary estimates (degenerate signatures or a likelihood peaking on a
    bracket end) are flagged; their interval is the certain bounds.
    """
    data = LikelihoodData.from_trajectory(trajectory, start_k)
    final = trajectory.final_bounds
    try:
        p_hat = mle(data, tol)
    except BoundaryEstimate as exc:
        p_hat = exc.boundary
        lo, hi = data.bracket
        inner = min(max(p_hat, lo + (hi - lo) * 1e-9), hi - (hi - lo) * 1e-9)
        info = fisher_hat(inner, data)
        return Estimate(
            p_hat=p_hat,
            fisher_hat=info,
            variance=1.0 / info,
            ci_lower=final.lower,
            ci_upper=final.upper,
            level=level,
            final_bounds=final,
            gamma0=gamma0(trajectory.init_bounds),
            n=trajectory.n,
            calls_total=trajectory.calls_total,
            degenerate=True,
        )
    info = fisher_hat(p_hat, data)
    ci = confidence_interval(p_hat, data, level, final)
    return Estimate(
        p_hat=p_hat,
        fisher_hat=info,
        variance=1.0 / info,
        ci_lower=ci[0],
        ci_upper=ci[1],
        level=level,
        final_bounds=final,
        gamma0=gamma0(trajectory.init_bounds),
        n=trajectory.n,
        calls_total=trajectory.calls_total,
    )


def mc_baseline(problem, n: int, seed, stream: Sequence[int] = ()) -> tuple[float, float]:
    """Plain Monte Carlo: failure frequency and plug-in variance ``p(1-p)/n``."""
    from .engine import make_rng

    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed, *stream)
    x = rng.random((n, problem.dimension))
    x[x == 0.0] = np.nextafter(0.0, 1.0)
    values = problem.evaluate_batch(x)
    p_hat = float(np.mean(values <= 0.0))
    return p_hat, p_hat * (1.0 - p_hat) / n
