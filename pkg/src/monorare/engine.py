"""Sequential bound narrowing for monotone functions.

A run starts with a deterministic bisection along the cube diagonal until
both bounds are non-trivial, then evaluates one point per step, drawn
uniformly from the region the current frontiers leave undecided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from . import _kernels
from .errors import InitFailed, RejectionBudgetExceeded
from .geometry import (
    BoundsPair,
    FrontierPair,
    McBoundsTracker,
    Region,
    VolumePolicy,
    _reflect,
    _vol,
    classify,
    insert,
)


class BlackBox(Protocol):
    dimension: int

    def evaluate(self, x) -> float: ...


def make_rng(seed, *stream: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and an optional stream path.

    ``make_rng(master, i)`` is replication ``i`` of ``master``: the stream
    key is appended to the seed sequence's spawn key, so streams do not
    depend on the order replications are run in.
    """
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + stream)
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=stream)
    return np.random.Generator(np.random.Philox(ss))


def k0_min(p_guess: float, d: int) -> int:
    """Fewest diagonal steps with ``k0 >= 1 + log(1/p) / (d log 2)``."""
    if not 0.0 < p_guess < 1.0:
        raise ValueError("p_guess must lie in (0, 1)")
    if d < 1:
        raise ValueError("d must be >= 1")
    value = 1.0 + math.log(1.0 / p_guess) / (d * math.log(2.0))
    return math.ceil(value - 1e-12)


@dataclass(frozen=True)
class EngineConfig:
    """Settings of one sequential run.

    ``init_steps`` is the minimum number of diagonal evaluations (``None``
    means ``max(k0_min(p_guess, d), 4)``); bisection continues past it until
    both bounds are non-trivial, up to ``init_max_steps`` evaluations.
    """

    n_steps: int
    p_guess: float
    init_steps: int | None = None
    init_max_steps: int = 32
    max_rejections: int = 10**6
    volume_policy: VolumePolicy = field(default_factory=VolumePolicy)

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not 0.0 < self.p_guess < 1.0:
            raise ValueError("p_guess must lie in (0, 1)")
        if self.init_steps is not None and self.init_steps < 1:
            raise ValueError("init_steps must be >= 1")
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be >= 1")

    def min_init_steps(self, d: int) -> int:
        if self.init_steps is not None:
            return self.init_steps
        return max(k0_min(self.p_guess, d), 4)


@dataclass(frozen=True)
class StepRecord:
    k: int
    pre_lower: float
    pre_upper: float
    point: tuple[float, ...]
    signature: int
    post_lower: float
    post_upper: float
    draws: int = 1


@dataclass(frozen=True)
class Trajectory:
    """Everything a run produced; the sufficient statistic for estimation."""

    dimension: int
    seed: object
    init_points: tuple[tuple[float, ...], ...]
    init_signatures: tuple[int, ...]
    init_bounds: BoundsPair
    records: tuple[StepRecord, ...]

    @property
    def init_calls(self) -> int:
        return len(self.init_points)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def calls_total(self) -> int:
        return self.init_calls + self.n

    @property
    def final_bounds(self) -> BoundsPair:
        if not self.records:
            return self.init_bounds
        last = self.records[-1]
        return BoundsPair(last.post_lower, last.post_upper)

    def bounds_path(self) -> np.ndarray:
        """``(n + 1, 2)`` array of bounds after init and after each step."""
        rows = [(self.init_bounds.lower, self.init_bounds.upper)]
        rows += [(r.post_lower, r.post_upper) for r in self.records]
        return np.array(rows)

    def frontiers(self) -> FrontierPair:
        """Rebuild the final frontiers by replaying every evaluation."""
        points = list(self.init_points) + [r.point for r in self.records]
        sigs = list(self.init_signatures) + [r.signature for r in self.records]
        return FrontierPair.from_points(np.array(points), sigs, self.dimension)


class BoundsKeeper:
    """Keeps the bounds of a growing frontier pair up to date.

    Exact policy: only the side that changed is recomputed. Monte Carlo
    policy: one fixed sample is swept incrementally.
    """

    def __init__(self, dimension: int, policy: VolumePolicy):
        self.exact = policy.is_exact(dimension)
        self._tracker = None if self.exact else McBoundsTracker(policy, dimension)
        self.lower = 0.0
        self.upper = 1.0

    def update(self, frontiers: FrontierPair, x: np.ndarray, signature: int) -> BoundsPair:
        if self.exact:
            # the union only grows; max/min absorb rounding noise
            if signature == 1:
                self.lower = max(self.lower, _vol(frontiers.failure))
            else:
                self.upper = min(self.upper, 1.0 - _vol(_reflect(frontiers.safe)))
        else:
            self._tracker.add(x, signature)
            b = self._tracker.bounds()
            self.lower, self.upper = max(self.lower, b.lower), min(self.upper, b.upper)
        return self.bounds

    @property
    def bounds(self) -> BoundsPair:
        return BoundsPair(min(self.lower, self.upper), self.upper)


def signature_of(value: float) -> int:
    """``1{g <= 0}``; an exact zero counts as failure."""
    if math.isnan(value):
        raise ValueError("g returned NaN")
    return 1 if value <= 0.0 else 0


class InitResult(NamedTuple):
    frontiers: FrontierPair
    bounds: BoundsPair
    calls: int
    points: tuple[tuple[float, ...], ...]
    signatures: tuple[int, ...]


def diagonal_init(
    problem: BlackBox,
    config: EngineConfig,
    frontiers: FrontierPair | None = None,
    keeper: BoundsKeeper | None = None,
) -> InitResult:
    """Dichotomic search along the diagonal ``t * (1, ..., 1)``.

    Starts at t = 1/2 and halves the active interval toward the sign
    change: up after a failure, down after a safe point.
    """
    d = problem.dimension
    fp = FrontierPair.empty(d) if frontiers is None else frontiers
    keeper = keeper or BoundsKeeper(d, config.volume_policy)
    at_least = config.min_init_steps(d)
    cap = max(at_least, config.init_max_steps)
    lo, hi = 0.0, 1.0
    points: list[tuple[float, ...]] = []
    sigs: list[int] = []
    b = keeper.bounds
    for step in range(cap):
        t = 0.5 * (lo + hi)
        x = np.full(d, t)
        if classify(fp, x) is not Region.NON_DOMINATED:
            break
        xi = signature_of(problem.evaluate(x))
        fp = insert(fp, x, xi)
        b = keeper.update(fp, x, xi)
        points.append(tuple(x.tolist()))
        sigs.append(xi)
        if xi:
            lo = t
        else:
            hi = t
        if step + 1 >= at_least and b.lower > 0.0 and b.upper < 1.0:
            break
    if not (b.lower > 0.0 and b.upper < 1.0):
        raise InitFailed(
            f"bounds still trivial after {len(points)} diagonal evaluations "
            f"(lower={b.lower}, upper={b.upper}); is g <= 0 somewhere on the diagonal?",
            b.lower,
            b.upper,
        )
    return InitResult(fp, b, len(points), tuple(points), tuple(sigs))


def _draw(frontiers: FrontierPair, rng: np.random.Generator, max_rejections: int):
    x, draws = _kernels.sample_nondominated(frontiers.failure, frontiers.safe, rng, max_rejections)
    if draws < 0:
        raise RejectionBudgetExceeded(
            f"no non-dominated point in {max_rejections} draws; bounds nearly closed?"
        )
    return x, draws


def sample_nondominated(
    frontiers: FrontierPair, rng: np.random.Generator, max_rejections: int = 10**6
) -> np.ndarray:
    """Uniform point on the non-dominated set, by rejection from the cube."""
    return _draw(frontiers, rng, max_rejections)[0]


class MRMState:
    """Mutable state of one run; owned by a single caller."""

    def __init__(self, problem: BlackBox, config: EngineConfig, rng: np.random.Generator):
        self.problem = problem
        self.config = config
        self.rng = rng
        self.keeper = BoundsKeeper(problem.dimension, config.volume_policy)
        init = diagonal_init(problem, config, keeper=self.keeper)
        self.init = init
        self.frontiers = init.frontiers
        self.bounds = init.bounds
        self.k = 0
        self.calls = init.calls

    def step(self) -> StepRecord:
        pre = self.bounds
        x, draws = _draw(self.frontiers, self.rng, self.config.max_rejections)
        xi = signature_of(self.problem.evaluate(x))
        self.calls += 1
        self.frontiers = insert(self.frontiers, x, xi)
        post = self.keeper.update(self.frontiers, x, xi)
        self.bounds = post
        self.k += 1
        return StepRecord(
            k=self.k,
            pre_lower=pre.lower,
            pre_upper=pre.upper,
            point=tuple(x.tolist()),
            signature=xi,
            post_lower=post.lower,
            post_upper=post.upper,
            draws=draws,
        )


def step(state: MRMState) -> StepRecord:
    """One sampled point, one call to g, frontier and bound update."""
    return state.step()


def run(problem: BlackBox, config: EngineConfig, seed, stream: Sequence[int] = ()) -> Trajectory:
    """Diagonal initialisation then ``config.n_steps`` sequential steps.

    Deterministic given ``(seed, stream)``.
    """
    state = MRMState(problem, config, make_rng(seed, *stream))
    records = tuple(state.step() for _ in range(config.n_steps))
    return Trajectory(
        dimension=problem.dimension,
        seed=(seed, tuple(stream)) if stream else seed,
        init_points=state.init.points,
        init_signatures=state.init.signatures,
        init_bounds=state.init.bounds,
        records=records,
    )
