"""Dominated subspaces of the unit cube and their volumes.

A run keeps two antichains of evaluated points. The union of the lower
orthants ``[0, f]`` of the failure points is certified failure; the union
of the upper orthants ``[s, 1]`` of the safe points is certified safe.
Their volumes give the deterministic bounds ``lower <= p <= upper``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, SeparabilityViolation

Side = Literal["lower", "upper"]

#: sample chunk for Monte Carlo volumes; keeps memory flat for large Q
_MC_CHUNK = 1 << 18


def as_point(x, dimension: int | None = None) -> np.ndarray:
    """Validate ``x`` as a point of the unit cube and return a float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatch(f"a point must be a non-empty vector, got shape {arr.shape}")
    if dimension is not None and arr.size != dimension:
        raise DimensionMismatch(f"expected dimension {dimension}, got {arr.size}")
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise ValueError(f"point {arr.tolist()} leaves the unit cube")
    return arr


def as_vertices(vertices, dimension: int | None = None) -> np.ndarray:
    arr = np.asarray(vertices, dtype=float)
    if arr.size == 0:
        if dimension is None:
            dimension = arr.shape[1] if arr.ndim == 2 else 1
        return np.empty((0, dimension))
    if arr.ndim != 2:
        raise DimensionMismatch(f"vertex set must be 2-d, got shape {arr.shape}")
    if dimension is not None and arr.shape[1] != dimension:
        raise DimensionMismatch(f"expected dimension {dimension}, got {arr.shape[1]}")
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise ValueError("vertices must lie in the unit cube")
    return np.ascontiguousarray(arr)


def dominates(x, y) -> bool:
    """``x`` dominates ``y`` iff every coordinate of x is >= that of y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"cannot compare shapes {x.shape} and {y.shape}")
    return bool(np.all(x >= y))


class Region(enum.Enum):
    FAILURE_DOMINATED = "failure"
    SAFE_DOMINATED = "safe"
    NON_DOMINATED = "non-dominated"


@dataclass(frozen=True)
class FrontierPair:
    """The failure and safe antichains of a run.

    ``failure`` holds points with signature 1 (g <= 0), ``safe`` points with
    signature 0. Both are ``(m, d)`` arrays; treat them as read-only.
    """

    failure: np.ndarray
    safe: np.ndarray

    def __post_init__(self):
        if self.failure.ndim != 2 or self.safe.ndim != 2:
            raise DimensionMismatch("frontiers must be 2-d arrays")
        if self.failure.shape[1] != self.safe.shape[1]:
            raise DimensionMismatch("failure and safe frontiers differ in dimension")
        self.failure.setflags(write=False)
        self.safe.setflags(write=False)

    @classmethod
    def empty(cls, dimension: int) -> "FrontierPair":
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        return cls(np.empty((0, dimension)), np.empty((0, dimension)))

    @classmethod
    def from_points(cls, points, signatures, dimension: int | None = None) -> "FrontierPair":
        """Build frontiers from an evaluated design, skipping dominated points."""
        pts = as_vertices(points, dimension)
        fp = cls.empty(pts.shape[1] if dimension is None else dimension)
        for x, xi in zip(pts, signatures):
            if classify(fp, x) is Region.NON_DOMINATED:
                fp = insert(fp, x, int(xi))
        return fp

    @property
    def dimension(self) -> int:
        return self.failure.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FrontierPair):
            return NotImplemented
        return np.array_equal(self.failure, other.failure) and np.array_equal(self.safe, other.safe)

    __hash__ = None


def classify(frontiers: FrontierPair, x) -> Region:
    x = as_point(x, frontiers.dimension)
    in_failure = _kernels.below_any(x, frontiers.failure)
    in_safe = _kernels.above_any(x, frontiers.safe)
    if in_failure and in_safe:
        raise SeparabilityViolation(
            f"point {x.tolist()} is dominated by both frontiers; g is not monotone"
        )
    if in_failure:
        return Region.FAILURE_DOMINATED
    if in_safe:
        return Region.SAFE_DOMINATED
    return Region.NON_DOMINATED


def insert(frontiers: FrontierPair, x, signature: int) -> FrontierPair:
    """Add an evaluated point to its frontier, pruning members it supersedes."""
    x = as_point(x, frontiers.dimension)
    if signature not in (0, 1):
        raise ValueError(f"signature must be 0 or 1, got {signature!r}")
    failure, safe = frontiers.failure, frontiers.safe
    if signature == 1:
        if _kernels.above_any(x, safe):
            raise SeparabilityViolation(f"failure point {x.tolist()} dominates a safe point")
        keep = ~np.all(failure <= x, axis=1)
        failure = np.vstack([failure[keep], x[None, :]])
    else:
        if _kernels.below_any(x, failure):
            raise SeparabilityViolation(f"safe point {x.tolist()} is dominated by a failure point")
        keep = ~np.all(safe >= x, axis=1)
        safe = np.vstack([safe[keep], x[None, :]])
    return FrontierPair(failure, safe)


def _vol(vertices: np.ndarray) -> float:
    m, d = vertices.shape
    if m == 0:
        return 0.0
    if d == 1:
        return float(vertices[:, 0].max())
    if d == 2:
        return float(_kernels.staircase_area(vertices))
    if d == 3:
        return float(_kernels.sweep_volume3(vertices))
    # sweep along the last axis; each slice is the (d-1)-volume of the
    # vertices at or above it
    order = np.argsort(vertices[:, -1], kind="stable")
    ordered = vertices[order]
    total = 0.0
    prev = 0.0
    for i in range(m):
        width = ordered[i, -1] - prev
        prev = ordered[i, -1]
        if width > 0.0:
            total += width * _vol(np.ascontiguousarray(ordered[i:, :-1]))
    return total


def klee_volume(vertices, dimension: int | None = None) -> float:
    """Exact measure of the union of the boxes ``[0, v]`` over ``vertices``.

    Uses the recursive sweepline: sort on the last coordinate, take slices,
    recurse on one dimension less, with the running maximum as the 1-d base.
    Cost is O(m^d), fine for the frontier sizes met in practice.
    """
    verts = as_vertices(vertices, dimension)
    return _vol(verts)


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    std_error: float = 0.0
    sample_count: int = 0

    @property
    def exact(self) -> bool:
        return self.sample_count == 0


def _reflect(vertices: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(1.0 - vertices)


def volume_mc(frontier, side: Side, Q: int, seed) -> VolumeEstimate:
    """Monte Carlo volume of the lower (``[0, v]``) or upper (``[v, 1]``) union.

    The upper side reuses the lower-orthant test on reflected vertices.
    Deterministic given ``(frontier, Q, seed)``.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    verts = as_vertices(frontier)
    if verts.shape[0] == 0:
        return VolumeEstimate(0.0, 0.0, Q)
    if side == "upper":
        verts = _reflect(verts)
    rng = np.random.default_rng(seed)
    hits = 0
    left = Q
    while left:
        n = min(left, _MC_CHUNK)
        hits += _kernels.count_below_any(rng.random((n, verts.shape[1])), verts)
        left -= n
    v = hits / Q
    return VolumeEstimate(v, math.sqrt(v * (1.0 - v) / Q), Q)


@dataclass(frozen=True)
class BoundsPair:
    lower: float
    upper: float

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise ValueError(f"invalid bounds ({self.lower}, {self.upper})")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, p: float) -> bool:
        return self.lower <= p <= self.upper


@dataclass(frozen=True)
class VolumePolicy:
    """How bound volumes are computed: exact sweepline up to ``exact_max_dim``,
    Monte Carlo with ``mc_samples`` points drawn from ``mc_seed`` beyond.

    A fixed ``mc_seed`` makes every bound computation of a run reuse the same
    sample, so Monte Carlo bounds stay monotone as the frontiers grow.
    """

    exact_max_dim: int = 3
    mc_samples: int = 10**6
    mc_seed: int = 0

    def is_exact(self, dimension: int) -> bool:
        return dimension <= self.exact_max_dim


def check_separable(frontiers: FrontierPair) -> None:
    for f in frontiers.failure:
        if _kernels.above_any(f, frontiers.safe):
            raise SeparabilityViolation(f"failure point {f.tolist()} dominates a safe point")


def side_volume(vertices: np.ndarray, side: Side, policy: VolumePolicy) -> float:
    d = vertices.shape[1]
    if policy.is_exact(d):
        return _vol(vertices if side == "lower" else _reflect(vertices))
    return volume_mc(vertices, side, policy.mc_samples, policy.mc_seed).value


def bounds(frontiers: FrontierPair, policy: VolumePolicy = VolumePolicy()) -> BoundsPair:
    """``(Vol(failure union), 1 - Vol(safe union))``."""
    check_separable(frontiers)
    lower = side_volume(frontiers.failure, "lower", policy)
    upper = 1.0 - side_volume(frontiers.safe, "upper", policy)
    return BoundsPair(min(lower, upper), upper)


@dataclass
class McBoundsTracker:
    """Incremental Monte Carlo bounds over one fixed sample.

    Produces the same numbers as :func:`bounds` under the same policy, at the
    cost of one pass over the sample per inserted point.
    """

    policy: VolumePolicy
    dimension: int
    _points: np.ndarray = field(init=False, repr=False)
    _lower_hit: np.ndarray = field(init=False, repr=False)
    _upper_hit: np.ndarray = field(init=False, repr=False)
    _n_lower: int = field(init=False, default=0)
    _n_upper: int = field(init=False, default=0)

    def __post_init__(self):
        rng = np.random.default_rng(self.policy.mc_seed)
        q = self.policy.mc_samples
        chunks = []
        left = q
        while left:
            n = min(left, _MC_CHUNK)
            chunks.append(rng.random((n, self.dimension)))
            left -= n
        self._points = np.ascontiguousarray(np.vstack(chunks))
        self._lower_hit = np.zeros(q, dtype=bool)
        self._upper_hit = np.zeros(q, dtype=bool)

    def add(self, x: np.ndarray, signature: int) -> None:
        if signature == 1:
            self._n_lower += _kernels.mark_below(self._points, x, self._lower_hit)
        else:
            self._n_upper += _kernels.mark_below(self._points, 1.0 - x, self._upper_hit)

    def bounds(self) -> BoundsPair:
        q = self.policy.mc_samples
        lower = self._n_lower / q
        upper = 1.0 - self._n_upper / q
        return BoundsPair(min(lower, upper), upper)
