"""Monotone MIN-MAX classifier used to replicate the limit state surface.

The network computes

    g_hat(x) = max_k min_h (w_kh . x + b_kh),    w_kh >= 0,

so it is nondecreasing in every coordinate. Training fits it by logistic
loss to points sampled in the two dominated regions, with failure points
as negative targets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import TrainingDiverged


@dataclass(frozen=True)
class MinMaxNetwork:
    """``K`` groups of ``H`` affine units over ``d`` inputs.

    Attributes
    ----------
    weights : ndarray, shape (K, H, d)
        Nonnegative unit weights.
    offsets : ndarray, shape (K, H)
        Unit offsets.
    """

    weights: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        b = np.ascontiguousarray(np.asarray(self.offsets, dtype=float))
        if w.ndim != 3 or b.shape != w.shape[:2]:
            raise ValueError(f"weights (K, H, d) and offsets (K, H) disagree: {w.shape}, {b.shape}")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)) or not np.all(np.isfinite(b)):
            raise ValueError("weights must be finite and nonnegative")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "offsets", b)

    @property
    def dimension(self) -> int:
        return self.weights.shape[2]

    @property
    def arch(self) -> tuple[int, int]:
        return self.weights.shape[0], self.weights.shape[1]

    def value(self, x) -> np.ndarray | float:
        """Exact ``g_hat`` for one point or an ``(n, d)`` array."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 1:
            return float(_kernels.minmax_value(arr, self.weights, self.offsets))
        K, H, d = self.weights.shape
        units = (arr @ self.weights.reshape(K * H, d).T).reshape(-1, K, H) + self.offsets
        return units.min(axis=2).max(axis=1)

    def signature(self, x) -> int:
        return surrogate_signature(self, x)

    def to_dict(self) -> dict:
        return {
            "groups": [
                [{"weights": w.tolist(), "offset": float(b)} for w, b in zip(gw, gb)]
                for gw, gb in zip(self.weights, self.offsets)
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MinMaxNetwork":
        groups = data["groups"]
        w = [[unit["weights"] for unit in g] for g in groups]
        b = [[unit["offset"] for unit in g] for g in groups]
        return cls(np.array(w, dtype=float), np.array(b, dtype=float))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "MinMaxNetwork":
        return cls.from_dict(json.loads(Path(path).read_text()))


def surrogate_signature(net: MinMaxNetwork, x) -> int:
    """-1 when ``g_hat(x) <= 0`` (failure), +1 otherwise."""
    return -1 if net.value(np.asarray(x, dtype=float)) <= 0.0 else 1


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser settings for :func:`train`.

    The smooth min/max temperature decays geometrically from ``temp_start``
    to ``temp_end`` over the epochs; inference always uses exact min/max.
    """

    epochs: int = 40
    learning_rate: float = 0.05
    batch_size: int = 4096
    temp_start: float = 0.05
    temp_end: float = 0.002
    margin_scale: float = 50.0
    seed: int = 0


@dataclass(frozen=True)
class TrainResult:
    network: MinMaxNetwork
    train_error: float
    loss_history: tuple[float, ...]


def _softmin(u: np.ndarray, temp: float, axis: int):
    """Smooth minimum and its weights along ``axis``."""
    z = -u / temp
    zmax = z.max(axis=axis, keepdims=True)
    e = np.exp(z - zmax)
    s = e.sum(axis=axis, keepdims=True)
    value = -temp * (np.log(s) + zmax)
    return np.squeeze(value, axis), e / s


def _softmax(u: np.ndarray, temp: float, axis: int):
    value, weights = _softmin(-u, temp, axis)
    return -value, weights


def _forward(x, v, b, temp):
    K, H, d = v.shape
    w = (v * v).reshape(K * H, d)
    units = (x @ w.T).reshape(-1, K, H) + b
    mins, alpha = _softmin(units, temp, axis=2)
    out, beta = _softmax(mins, temp, axis=1)
    return out, alpha, beta


def _init_params(failure, safe, K, H, rng):
    d = failure.shape[1]
    v = np.sqrt(rng.uniform(0.5, 1.5, size=(K, H, d)))
    # each unit starts as a hyperplane through the midpoint of a random
    # failure/safe pair
    fi = rng.integers(0, len(failure), size=(K, H))
    si = rng.integers(0, len(safe), size=(K, H))
    centres = 0.5 * (failure[fi] + safe[si])
    b = -np.einsum("khd,khd->kh", v * v, centres)
    return v, b


def train(
    samples_failure,
    samples_safe,
    arch: tuple[int, int] = (4, 4),
    hyper: TrainConfig | None = None,
) -> TrainResult:
    """Fit a MIN-MAX network separating failure points from safe points.

    Weights are ``v**2`` so they stay nonnegative; Adam on mini-batches of
    the logistic loss ``log(1 + exp(-t * s * g_hat))`` with ``t = -1`` for
    failure and ``+1`` for safe.

    Raises
    ------
    ValueError
        Either sample set is empty or the dimensions differ.
    TrainingDiverged
        The loss becomes non-finite or ends above its starting value.
    """
    hyper = hyper or TrainConfig()
    failure = np.asarray(samples_failure, dtype=float)
    safe = np.asarray(samples_safe, dtype=float)
    if failure.ndim != 2 or safe.ndim != 2 or len(failure) == 0 or len(safe) == 0:
        raise ValueError("both failure and safe samples must be non-empty (n, d) arrays")
    if failure.shape[1] != safe.shape[1]:
        raise ValueError("failure and safe samples differ in dimension")
    K, H = arch
    if K < 1 or H < 1:
        raise ValueError("arch needs K >= 1 and H >= 1")

    rng = np.random.default_rng(hyper.seed)
    x_all = np.vstack([failure, safe])
    t_all = np.concatenate([-np.ones(len(failure)), np.ones(len(safe))])
    n = len(x_all)
    v, b = _init_params(failure, safe, K, H, rng)

    lr, beta1, beta2, eps = hyper.learning_rate, 0.9, 0.999, 1e-8
    m_v, s_v = np.zeros_like(v), np.zeros_like(v)
    m_b, s_b = np.zeros_like(b), np.zeros_like(b)
    scale = hyper.margin_scale
    batch = min(hyper.batch_size, n)
    decay = (hyper.temp_end / hyper.temp_start) ** (1.0 / max(hyper.epochs - 1, 1))
    history = []
    step = 0
    for epoch in range(hyper.epochs):
        temp = hyper.temp_start * decay**epoch
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            x, t = x_all[idx], t_all[idx]
            out, alpha, beta = _forward(x, v, b, temp)
            margin = -t * scale * out
            total += float(np.sum(np.logaddexp(0.0, margin)))
            # d loss / d out, then through the smooth max and min
            g_out = -t * scale / (1.0 + np.exp(-margin)) / len(idx)
            g_units = g_out[:, None, None] * beta[:, :, None] * alpha
            g_b = g_units.sum(axis=0)
            g_w = (g_units.reshape(len(idx), K * H).T @ x).reshape(K, H, -1)
            g_v = 2.0 * v * g_w
            step += 1
            for p, g, m, s in ((v, g_v, m_v, s_v), (b, g_b, m_b, s_b)):
                m *= beta1
                m += (1 - beta1) * g
                s *= beta2
                s += (1 - beta2) * g * g
                p -= lr * (m / (1 - beta1**step)) / (np.sqrt(s / (1 - beta2**step)) + eps)
        loss = total / n
        if not math.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss} at epoch {epoch}")
        history.append(loss)
    if history[-1] > history[0]:
        raise TrainingDiverged(f"loss rose from {history[0]:.4g} to {history[-1]:.4g}")

    net = MinMaxNetwork(v * v, b)
    predicted_fail = net.value(x_all) <= 0.0
    error = float(np.mean(predicted_fail != (t_all < 0)))
    return TrainResult(net, error, tuple(history))


def monotonicity_violations(net: MinMaxNetwork, pairs: int, seed) -> int:
    """Count random comparable pairs ``x >= y`` with ``g_hat(x) < g_hat(y)``."""
    rng = np.random.default_rng(seed)
    lo = rng.random((pairs, net.dimension))
    hi = lo + (1.0 - lo) * rng.random((pairs, net.dimension))
    return int(np.sum(net.value(hi) < net.value(lo)))
