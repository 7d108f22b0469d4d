"""Compiled inner loops for the geometry and sampling hot paths.

Everything here works on plain float64 arrays; the public wrappers in
:mod:`monorare.geometry` do validation and type conversion.
"""

from __future__ import annotations

import numba
import numpy as np

_jit = numba.njit(cache=True, nogil=True)


@_jit
def below_any(x, vertices):
    """True if some vertex v satisfies x <= v coordinatewise."""
    m, d = vertices.shape
    for i in range(m):
        ok = True
        for j in range(d):
            if x[j] > vertices[i, j]:
                ok = False
                break
        if ok:
            return True
    return False


@_jit
def above_any(x, vertices):
    """True if some vertex v satisfies x >= v coordinatewise."""
    m, d = vertices.shape
    for i in range(m):
        ok = True
        for j in range(d):
            if x[j] < vertices[i, j]:
                ok = False
                break
        if ok:
            return True
    return False


@_jit
def below_any_rows(points, vertices):
    q = points.shape[0]
    out = np.zeros(q, dtype=np.bool_)
    for i in range(q):
        out[i] = below_any(points[i], vertices)
    return out


@_jit
def above_any_rows(points, vertices):
    q = points.shape[0]
    out = np.zeros(q, dtype=np.bool_)
    for i in range(q):
        out[i] = above_any(points[i], vertices)
    return out


@_jit
def count_below_any(points, vertices):
    n = 0
    for i in range(points.shape[0]):
        if below_any(points[i], vertices):
            n += 1
    return n


@_jit
def mark_below(points, vertex, covered):
    """Flag rows of ``points`` lying in the lower orthant of ``vertex``.

    Returns the number of rows newly flagged.
    """
    q, d = points.shape
    added = 0
    for i in range(q):
        if covered[i]:
            continue
        inside = True
        for j in range(d):
            if points[i, j] > vertex[j]:
                inside = False
                break
        if inside:
            covered[i] = True
            added += 1
    return added


@_jit
def staircase_area(vertices):
    """Area of the union of rectangles [0, x] x [0, y]."""
    m = vertices.shape[0]
    if m == 0:
        return 0.0
    order = np.argsort(-vertices[:, 0])
    area = 0.0
    top = 0.0
    for j in range(m):
        k = order[j]
        if vertices[k, 1] > top:
            top = vertices[k, 1]
        nxt = vertices[order[j + 1], 0] if j + 1 < m else 0.0
        area += (vertices[k, 0] - nxt) * top
    return area


@_jit
def sweep_volume3(vertices):
    """Volume of a union of lower orthants in three dimensions.

    Slices along the last axis in increasing order; each slice's section
    is the 2-d staircase of the vertices at or above it.
    """
    m = vertices.shape[0]
    if m == 0:
        return 0.0
    by_z = np.argsort(vertices[:, 2])
    rank = np.empty(m, dtype=np.int64)
    for i in range(m):
        rank[by_z[i]] = i
    by_x = np.argsort(-vertices[:, 0])
    vol = 0.0
    prev = 0.0
    for i in range(m):
        z = vertices[by_z[i], 2]
        width = z - prev
        prev = z
        if width <= 0.0:
            continue
        area = 0.0
        top = 0.0
        for j in range(m):
            k = by_x[j]
            if rank[k] >= i and vertices[k, 1] > top:
                top = vertices[k, 1]
            nxt = vertices[by_x[j + 1], 0] if j + 1 < m else 0.0
            area += (vertices[k, 0] - nxt) * top
        vol += width * area
    return vol


@_jit
def sample_nondominated(failure, safe, rng, max_tries):
    """Rejection sampler for the uniform law on the non-dominated set.

    Returns ``(point, tries)``; ``tries`` is -1 when the budget ran out.
    Draws with a zero coordinate are rejected so callers never see a cube
    endpoint.
    """
    d = failure.shape[1]
    x = np.empty(d)
    for t in range(max_tries):
        edge = False
        for j in range(d):
            x[j] = rng.random()
            if x[j] == 0.0:
                edge = True
        if edge:
            continue
        if below_any(x, failure) or above_any(x, safe):
            continue
        return x, t + 1
    return x, -1


@_jit
def sample_in_union(vertices, lower_side, box_lo, box_hi, rng, count, max_tries):
    """Uniform draws on a union of orthants by rejection from its bounding box.

    ``lower_side`` selects lower orthants [0, v]; otherwise upper orthants
    [v, 1]. Returns ``(points, drawn)``; ``drawn`` is -1 on budget exhaustion.
    """
    d = vertices.shape[1]
    out = np.empty((count, d))
    x = np.empty(d)
    got = 0
    tries = 0
    while got < count:
        if tries >= max_tries:
            return out[:got], -1
        tries += 1
        for j in range(d):
            x[j] = box_lo[j] + (box_hi[j] - box_lo[j]) * rng.random()
        if lower_side:
            hit = below_any(x, vertices)
        else:
            hit = above_any(x, vertices)
        if hit:
            out[got] = x
            got += 1
    return out, tries


@_jit
def minmax_value(x, weights, offsets):
    """``max_k min_h (w_kh . x + b_kh)`` for one point."""
    K, H, d = weights.shape
    best = -np.inf
    for k in range(K):
        low = np.inf
        for h in range(H):
            u = offsets[k, h]
            for j in range(d):
                u += weights[k, h, j] * x[j]
            if u < low:
                low = u
        if low > best:
            best = low
    return best


@_jit
def _orthant_volume(vertices):
    d = vertices.shape[1]
    if vertices.shape[0] == 0:
        return 0.0
    if d == 2:
        return staircase_area(vertices)
    return sweep_volume3(vertices)


@_jit
def _insert_compact(front, count, x, lower_side):
    """Drop members superseded by ``x``, keep order, append ``x``."""
    m = 0
    d = x.shape[0]
    for i in range(count):
        covered = True
        for j in range(d):
            if lower_side:
                if front[i, j] > x[j]:
                    covered = False
                    break
            else:
                if front[i, j] < x[j]:
                    covered = False
                    break
        if not covered:
            if m != i:
                front[m] = front[i]
            m += 1
    front[m] = x
    return m + 1


@_jit
def minmax_mrm(weights, offsets, n_steps, min_init, max_init, max_tries, rng):
    """Whole sequential run against a MIN-MAX surrogate, for d in {2, 3}.

    Mirrors the generic engine step for step (same random stream, same
    frontier order, same exact volumes), without Python overhead.

    Returns ``(status, init_points, init_sig, init_lower, init_upper,
    points, sig, pre_lo, pre_hi, post_lo, post_hi, draws)``; status 0 is
    success, 1 a failed initialisation, 2 an exhausted rejection budget.
    """
    d = weights.shape[2]
    cap = n_steps + max_init + 1
    fail = np.empty((cap, d))
    safe = np.empty((cap, d))
    refl = np.empty((cap, d))
    nf = 0
    ns = 0
    lower = 0.0
    upper = 1.0

    init_pts = np.empty((max_init, d))
    init_sig = np.empty(max_init, dtype=np.int64)
    ni = 0
    lo = 0.0
    hi = 1.0
    x = np.empty(d)
    for step in range(max_init):
        t = 0.5 * (lo + hi)
        for j in range(d):
            x[j] = t
        if below_any(x, fail[:nf]) or above_any(x, safe[:ns]):
            break
        xi = 1 if minmax_value(x, weights, offsets) <= 0.0 else 0
        if xi == 1:
            nf = _insert_compact(fail, nf, x, True)
            lower = max(lower, _orthant_volume(fail[:nf]))
            lo = t
        else:
            ns = _insert_compact(safe, ns, x, False)
            for i in range(ns):
                for j in range(d):
                    refl[i, j] = 1.0 - safe[i, j]
            upper = min(upper, 1.0 - _orthant_volume(refl[:ns]))
            hi = t
        init_pts[ni] = x
        init_sig[ni] = xi
        ni += 1
        if step + 1 >= min_init and min(lower, upper) > 0.0 and upper < 1.0:
            break

    points = np.empty((n_steps, d))
    sig = np.empty(n_steps, dtype=np.int64)
    pre_lo = np.empty(n_steps)
    pre_hi = np.empty(n_steps)
    post_lo = np.empty(n_steps)
    post_hi = np.empty(n_steps)
    draws = np.empty(n_steps, dtype=np.int64)
    init_lower = min(lower, upper)
    init_upper = upper
    if not (init_lower > 0.0 and init_upper < 1.0):
        return (1, init_pts[:ni], init_sig[:ni], init_lower, init_upper,
                points[:0], sig[:0], pre_lo[:0], pre_hi[:0], post_lo[:0], post_hi[:0], draws[:0])

    for k in range(n_steps):
        pre_lo[k] = min(lower, upper)
        pre_hi[k] = upper
        y, tries = sample_nondominated(fail[:nf], safe[:ns], rng, max_tries)
        if tries < 0:
            return (2, init_pts[:ni], init_sig[:ni], init_lower, init_upper,
                    points[:k], sig[:k], pre_lo[:k], pre_hi[:k], post_lo[:k], post_hi[:k], draws[:k])
        xi = 1 if minmax_value(y, weights, offsets) <= 0.0 else 0
        if xi == 1:
            nf = _insert_compact(fail, nf, y, True)
            lower = max(lower, _orthant_volume(fail[:nf]))
        else:
            ns = _insert_compact(safe, ns, y, False)
            for i in range(ns):
                for j in range(d):
                    refl[i, j] = 1.0 - safe[i, j]
            upper = min(upper, 1.0 - _orthant_volume(refl[:ns]))
        points[k] = y
        sig[k] = xi
        post_lo[k] = min(lower, upper)
        post_hi[k] = upper
        draws[k] = tries
    return (0, init_pts[:ni], init_sig[:ni], init_lower, init_upper,
            points, sig, pre_lo, pre_hi, post_lo, post_hi, draws)
