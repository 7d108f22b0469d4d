"""Monotone test problems behind one black-box evaluation interface.

A problem evaluates ``g(x) = phys(T^-1(flip(x))) - threshold`` for unit-cube
points ``x``: coordinates with sign -1 are flipped (``x -> 1 - x``), each
coordinate goes through its marginal quantile, then the physical map is
applied. Signs are chosen so the result is increasing in every coordinate.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .marginals import (
    Gamma,
    Marginal,
    Triangular,
    TruncatedGumbel,
    TruncatedNormal,
    beta2_ppf,
    marginal_from_dict,
)

PhysicalMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SignVector:
    """Monotone dependence signs: +1 increasing, -1 decreasing (flipped)."""

    signs: tuple[int, ...]

    def __post_init__(self):
        if not self.signs or any(s not in (-1, 1) for s in self.signs):
            raise ValueError(f"signs must be a non-empty sequence of +-1, got {self.signs}")
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))

    @property
    def flipped(self) -> np.ndarray:
        return np.array([s == -1 for s in self.signs])

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.where(self.flipped, 1.0 - x, x)


@dataclass
class MonotoneProblem:
    """Black-box ``g`` on the unit cube with call counting.

    Attributes
    ----------
    marginals : list of Marginal
        One input law per coordinate.
    sign_vector : SignVector
        Flips applied before the quantile transform.
    physical_map : callable
        Vectorised map from an ``(n, d)`` array of physical inputs to ``(n,)``.
    threshold : float
        Subtracted from the physical map; ``g <= 0`` is failure.
    known_p : float or None
        Exact failure probability when known (test problems).
    """

    name: str
    marginals: list[Marginal]
    sign_vector: SignVector
    physical_map: PhysicalMap
    threshold: float = 0.0
    known_p: float | None = None
    params: dict = field(default_factory=dict)
    calls: int = field(default=0, compare=False)

    def __post_init__(self):
        if len(self.marginals) != len(self.sign_vector.signs):
            raise ValueError("need one sign per marginal")
        self._flip = self.sign_vector.flipped

    @property
    def dimension(self) -> int:
        return len(self.marginals)

    def to_physical(self, x) -> np.ndarray:
        """Map cube points (one row per point) to physical inputs."""
        arr = np.atleast_2d(np.asarray(x, dtype=float))
        if arr.shape[1] != self.dimension:
            raise ValueError(f"expected {self.dimension} coordinates, got {arr.shape[1]}")
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise ValueError("points must lie in the unit cube")
        u = np.where(self._flip, 1.0 - arr, arr)
        y = np.empty_like(u)
        for i, m in enumerate(self.marginals):
            y[:, i] = m.quantile(u[:, i])
        return y

    def evaluate(self, x) -> float:
        value = float(self.physical_map(self.to_physical(x))[0]) - self.threshold
        self.calls += 1
        return value

    def evaluate_batch(self, points) -> np.ndarray:
        values = np.asarray(self.physical_map(self.to_physical(points)), dtype=float) - self.threshold
        self.calls += values.shape[0]
        return values

    def fresh(self) -> "MonotoneProblem":
        """Copy with its own zeroed call counter (one counter per run)."""
        twin = copy.copy(self)
        twin.calls = 0
        return twin


# -- physical maps --------------------------------------------------------------


def beta_ratio(y: np.ndarray) -> np.ndarray:
    """``Y1 / (Y1 + Y2 + ... + Yd)``."""
    return y[:, 0] / y.sum(axis=1)


def water_height(q, ks, zm, zv, width=300.0, length=5000.0):
    """Downstream water level of the river section (metres)."""
    return (q / (width * ks * np.sqrt((zm - zv) / length))) ** 0.6


def flood_margin(
    y: np.ndarray,
    dike: float = 55.5,
    width: float = 300.0,
    length: float = 5000.0,
    zm: float = 55.0,
    zv: float = 50.0,
) -> np.ndarray:
    """Dike height minus river level; columns are (Q, Ks[, Zm, Zv])."""
    q, ks = y[:, 0], y[:, 1]
    if y.shape[1] == 4:
        zm, zv = y[:, 2], y[:, 3]
    return dike - zv - water_height(q, ks, zm, zv, width, length)


def linear(y: np.ndarray, coefficients: Sequence[float] | None = None) -> np.ndarray:
    c = np.ones(y.shape[1]) if coefficients is None else np.asarray(coefficients, dtype=float)
    return y @ c


PHYSICAL_MAPS: dict[str, Callable[..., np.ndarray]] = {
    "beta_ratio": beta_ratio,
    "flood_margin": flood_margin,
    "linear": linear,
}


def _bind(name: str, params: dict) -> PhysicalMap:
    if name not in PHYSICAL_MAPS:
        raise ValueError(f"unknown physical map {name!r}; known: {sorted(PHYSICAL_MAPS)}")
    fn = PHYSICAL_MAPS[name]
    if not params:
        return fn
    return lambda y: fn(y, **params)


# -- problem factories ------------------------------------------------------------


def toy_beta_shape(d: int) -> float:
    """Second shape of the Beta law of ``Y1 / sum(Y)``: (d+1)(d+2)/2 - 3."""
    return (d + 1) * (d + 2) / 2 - 3


def toy_problem(d: int, p: float) -> MonotoneProblem:
    """Gamma-ratio family with exactly known failure probability ``p``.

    ``Y_i ~ Gamma(i + 1, 1)`` and ``Z = Y1 / sum(Y) ~ Beta(2, b_d)``; the
    threshold is the p-quantile of Z so ``P(Z <= threshold) = p``. Z grows
    with Y1 and shrinks with the other inputs, so coordinates 2..d are
    flipped.
    """
    if d < 2:
        raise ValueError("toy problems need d >= 2")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    b = toy_beta_shape(d)
    return MonotoneProblem(
        name="toy",
        marginals=[Gamma(i + 1) for i in range(1, d + 1)],
        sign_vector=SignVector((1,) + (-1,) * (d - 1)),
        physical_map=beta_ratio,
        threshold=beta2_ppf(p, b),
        known_p=p,
        params={"d": d, "p": p},
    )


#: reference probabilities from 40,000-sample Monte Carlo runs
HYDRAULIC_REFERENCE = {"dim2": 0.002775, "dim4": 0.010075}


def hydraulic_problem(version: str = "dim2") -> MonotoneProblem:
    """Flood model: dike 55.5 m, river 300 m wide and 5000 m long.

    Inputs are discharge Q (Gumbel 1013/558 truncated to [10, 1e4]) and
    friction Ks (normal 27.8, sd 3, truncated at 0); ``dim4`` adds the
    triangular bed altitudes Zm and Zv, which ``dim2`` fixes at 55 and 50.
    """
    q = TruncatedGumbel(loc=1013.0, scale=558.0, lower=10.0, upper=1e4)
    ks = TruncatedNormal(mean=27.8, sd=3.0, lower=0.0)
    if version == "dim2":
        marginals: list[Marginal] = [q, ks]
        signs = (-1, 1)
    elif version == "dim4":
        marginals = [
            q,
            ks,
            Triangular(low=53.5, mode=55.0, high=56.5),
            Triangular(low=48.5, mode=50.0, high=51.5),
        ]
        signs = (-1, 1, 1, -1)
    else:
        raise ValueError(f"unknown hydraulic version {version!r}")
    return MonotoneProblem(
        name=f"hydraulic-{version}",
        marginals=marginals,
        sign_vector=SignVector(signs),
        physical_map=flood_margin,
        threshold=0.0,
        params={"version": version, "p_ref": HYDRAULIC_REFERENCE[version]},
    )


def custom_problem(
    marginals: Sequence[dict],
    physical_map: str,
    signs: Sequence[int] | None = None,
    threshold: float = 0.0,
    map_params: dict | None = None,
    known_p: float | None = None,
) -> MonotoneProblem:
    margs = [marginal_from_dict(m) for m in marginals]
    return MonotoneProblem(
        name=f"custom-{physical_map}",
        marginals=margs,
        sign_vector=SignVector(tuple(signs) if signs else (1,) * len(margs)),
        physical_map=_bind(physical_map, map_params or {}),
        threshold=float(threshold),
        known_p=known_p,
        params={"physical_map": physical_map, **(map_params or {})},
    )


def problem_from_config(spec: dict) -> MonotoneProblem:
    """Build a problem from ``{"problem": "toy"|"hydraulic2"|"hydraulic4"|"custom", ...}``."""
    kind = spec.get("problem")
    if kind == "toy":
        return toy_problem(int(spec["d"]), float(spec["p"]))
    if kind == "hydraulic2":
        return hydraulic_problem("dim2")
    if kind == "hydraulic4":
        return hydraulic_problem("dim4")
    if kind == "custom":
        return custom_problem(
            spec["marginals"],
            spec["physical_map"],
            signs=spec.get("signs"),
            threshold=spec.get("threshold", 0.0),
            map_params=spec.get("map_params"),
            known_p=spec.get("known_p"),
        )
    raise ValueError(f"unknown problem {kind!r}")


def reference_probability(problem: MonotoneProblem) -> float | None:
    if problem.known_p is not None:
        return problem.known_p
    return problem.params.get("p_ref")


def monotonicity_violations(problem: MonotoneProblem, pairs: int, seed) -> int:
    """Count random comparable pairs ``x >= y`` with ``g(x) < g(y)``.

    Does not touch the call counter of ``problem``.
    """
    rng = np.random.default_rng(seed)
    d = problem.dimension
    lo = rng.uniform(0.0, 1.0, size=(pairs, d))
    hi = lo + (1.0 - lo) * rng.uniform(0.0, 1.0, size=(pairs, d))
    lo = np.clip(lo, 1e-12, 1 - 1e-12)
    hi = np.clip(hi, 1e-12, 1 - 1e-12)
    probe = problem.fresh()
    g_lo = probe.evaluate_batch(lo)
    g_hi = probe.evaluate_batch(hi)
    return int(np.sum(g_hi < g_lo))
