"""Adaptive 1-D quadrature and seeded Monte-Carlo integration.

``integrate_1d`` is a global adaptive Gauss-Kronrod (7/15 point) scheme with
the usual QUADPACK error heuristic.  Half-infinite ranges are mapped to
``[0, 1)`` by ``t = a + u/(1-u)``; endpoint singularities of inverse square
root type are removed by a sine substitution before any rule is applied.

``integrate_mc`` averages ``f/p`` over draws from a sampler.  Work is split
into fixed-size chunks, each with its own child seed, and the chunk summaries
are merged in chunk order, so the result does not depend on the number of
worker threads.
"""
from __future__ import annotations

import heapq
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "IntegrationResult",
    "integrate_1d",
    "integrate_mc",
    "default_threads",
    "ABS_FLOOR",
]

# absolute error control takes over below this magnitude
ABS_FLOOR = 1e-8

# Kronrod 15-point abscissae (descending, last is the centre) and weights,
# and the Gauss 7-point weights attached to xgk[1], xgk[3], xgk[5], 0.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
# full 15 node layout on [-1, 1]
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_GW = np.zeros(15)
for _k, _idx in enumerate((1, 3, 5)):
    _GW[_idx] = _WG[_k]
    _GW[14 - _idx] = _WG[_k]
_GW[7] = _WG[3]
_EPMACH = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny


@dataclass(frozen=True)
class IntegrationResult:
    """Value of an integral with its error estimate.

    ``converged`` is True only when ``error_estimate`` met the requested
    tolerance.
    """

    value: float
    error_estimate: float
    evaluations: int
    converged: bool

    def __float__(self) -> float:
        return float(self.value)


def _gk15(g, a: float, b: float):
    """One Gauss-Kronrod panel.  Returns (integral, error, resabs, resasc)."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fv = g(c + h * _NODES)
    rk = h * np.dot(_KW, fv)
    rg = h * np.dot(_GW, fv)
    ah = abs(h)
    resabs = ah * np.dot(_KW, np.abs(fv))
    mean = rk / (2.0 * h) if h != 0 else 0.0
    resasc = ah * np.dot(_KW, np.abs(fv - mean))
    err = abs(rk - rg)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > _UFLOW / (50.0 * _EPMACH):
        err = max(err, 50.0 * _EPMACH * resabs)
    return float(rk), float(err), float(resabs), float(resasc)


def _wrap(f, vectorized: bool):
    if vectorized:
        def g(x):
            return np.asarray(f(x), dtype=float)
    else:
        def g(x):
            return np.array([f(float(t)) for t in x], dtype=float)
    return g


def _transform(g, a: float, b: float, singular: Optional[str]):
    """Return (h, lo, hi) with int_a^b g = int_lo^hi h."""
    if math.isinf(a) and math.isinf(b):
        raise ValueError("use two half-infinite pieces for the whole real line")
    if math.isinf(b):
        if b < 0:
            raise ValueError("upper limit -inf not supported")
        def h(u):
            v = 1.0 - u
            return g(a + u / v) / v**2
        return h, 0.0, 1.0
    if math.isinf(a):
        def h(u):
            v = 1.0 - u
            return g(b - u / v) / v**2
        return h, 0.0, 1.0
    if singular in (None, "none"):
        return g, a, b
    c = 0.5 * (a + b)
    w = 0.5 * (b - a)
    if singular == "both":
        def h(phi):
            return g(c + w * np.sin(phi)) * (w * np.cos(phi))
        return h, -0.5 * math.pi, 0.5 * math.pi
    L = b - a
    # x - a = L (1 - cos(phi)) written as 2 L sin^2(phi/2) keeps the distance
    # to the singular end accurate for tiny phi
    if singular == "left":
        def h(phi):
            return g(a + 2.0 * L * np.sin(0.5 * phi) ** 2) * (L * np.sin(phi))
        return h, 0.0, 0.5 * math.pi
    if singular == "right":
        def h(phi):
            return g(b - 2.0 * L * np.sin(0.5 * phi) ** 2) * (L * np.sin(phi))
        return h, 0.0, 0.5 * math.pi
    raise ValueError(f"unknown singular mode {singular!r}")


def integrate_1d(
    f: Callable,
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    *,
    singular: Optional[str] = None,
    vectorized: bool = False,
    points: Optional[Sequence[float]] = None,
    max_intervals: int = 2000,
) -> IntegrationResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    Parameters
    ----------
    f : callable
        Integrand.  With ``vectorized=True`` it receives an array of nodes.
    a, b : float
        Limits; ``b`` may be ``+inf`` (or ``a`` may be ``-inf``).
    rel_tol : float
        Requested relative accuracy.  The target is
        ``rel_tol * max(|I|, 1e-8)`` so near-zero integrals are controlled
        in absolute terms.
    singular : {None, 'left', 'right', 'both'}
        Endpoints carrying an integrable ``1/sqrt`` singularity.
    points : sequence of float, optional
        Interior break points (kinks) used for the initial partition.  They
        must be given in the original variable and only for finite ranges
        without a singular substitution.
    max_intervals : int
        Subdivision budget.

    Returns
    -------
    IntegrationResult
    """
    if not (1e-15 <= rel_tol < 1.0):
        raise ValueError("rel_tol must lie in [1e-15, 1)")
    if a == b:
        return IntegrationResult(0.0, 0.0, 0, True)
    sign = 1.0
    if not math.isinf(a) and not math.isinf(b) and b < a:
        a, b = b, a
        sign = -1.0
        if singular == "left":
            singular = "right"
        elif singular == "right":
            singular = "left"
    g = _wrap(f, vectorized)
    h, lo, hi = _transform(g, float(a), float(b), singular)
    edges = [lo, hi]
    if points:
        if singular not in (None, "none") or math.isinf(a) or math.isinf(b):
            raise ValueError("break points only supported on plain finite ranges")
        inner = sorted(p for p in points if lo < p < hi)
        edges = [lo] + inner + [hi]

    heap = []
    total = 0.0
    err_total = 0.0
    nev = 0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        if x1 <= x0:
            continue
        r, e, _, _ = _gk15(h, x0, x1)
        nev += 15
        total += r
        err_total += e
        heapq.heappush(heap, (-e, x0, x1, r))
    n_int = len(heap)
    converged = False
    while True:
        tol = rel_tol * max(abs(total), ABS_FLOOR)
        if err_total <= tol:
            converged = True
            break
        if n_int >= max_intervals:
            break
        neg_e, x0, x1, r = heapq.heappop(heap)
        m = 0.5 * (x0 + x1)
        if not (x0 < m < x1) or (x1 - x0) <= 1e2 * _EPMACH * max(abs(x0), abs(x1)):
            # panel cannot be split further in floating point
            heapq.heappush(heap, (neg_e, x0, x1, r))
            break
        r1, e1, _, _ = _gk15(h, x0, m)
        r2, e2, _, _ = _gk15(h, m, x1)
        nev += 30
        total += r1 + r2 - r
        err_total += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, x0, m, r1))
        heapq.heappush(heap, (-e2, m, x1, r2))
        n_int += 1
        if len(heap) % 64 == 0:
            # refresh sums to avoid drift from repeated updates
            total = sum(item[3] for item in heap)
            err_total = sum(-item[0] for item in heap)
    total = sum(item[3] for item in heap)
    err_total = sum(-item[0] for item in heap)
    if not math.isfinite(total):
        converged = False
    return IntegrationResult(sign * total, err_total, nev, converged and math.isfinite(total))


# --------------------------------------------------------------------------
# Monte Carlo


def default_threads() -> int:
    """Worker cap from ``LFP_THREADS`` (defaults to 1)."""
    raw = os.environ.get("LFP_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"LFP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError("LFP_THREADS must be >= 1")
    return n


CHUNK = 1 << 14


def _chunk_stats(f, sampler, rng, m):
    pts, dens = sampler(rng, m)
    vals = np.asarray(f(pts), dtype=float).reshape(-1)
    if vals.shape[0] != m:
        raise ValueError("integrand returned the wrong number of values")
    if dens is not None:
        dens = np.asarray(dens, dtype=float).reshape(-1)
        if np.any(~(dens > 0)):
            bad = int(np.flatnonzero(~(dens > 0))[0])
            raise ValueError(f"sampler returned a point with zero density (draw {bad} of chunk)")
        vals = vals / dens
    mean = float(np.mean(vals))
    m2 = float(np.sum((vals - mean) ** 2))
    return m, mean, m2


def integrate_mc(
    f: Callable[[np.ndarray], np.ndarray],
    sampler: Callable,
    n: int,
    seed: int = 0,
    *,
    threads: Optional[int] = None,
    chunk: int = CHUNK,
) -> IntegrationResult:
    """Importance-weighted Monte-Carlo average.

    Parameters
    ----------
    f : callable
        Vectorized integrand, points array -> values array.
    sampler : callable
        ``sampler(rng, m) -> (points, density)``.  ``density`` holds the
        proposal density at each point, or is None when the points come from
        the probability law the integral is taken against (plain average).
    n : int
        Number of draws (at least 1000).
    seed : int
        Base seed; chunk ``k`` uses the ``k``-th spawned child sequence.

    Returns
    -------
    IntegrationResult
        ``error_estimate`` is the sample standard deviation over ``sqrt(n)``.
    """
    from .sampling import make_generator

    if n < 1000:
        raise ValueError("integrate_mc needs n >= 1000")
    sizes = [chunk] * (n // chunk)
    if n % chunk:
        sizes.append(n % chunk)
    gens = [make_generator(seed, k) for k in range(len(sizes))]
    nthreads = threads or default_threads()
    if nthreads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            parts = list(ex.map(lambda args: _chunk_stats(f, sampler, *args), zip(gens, sizes)))
    else:
        parts = [_chunk_stats(f, sampler, g, m) for g, m in zip(gens, sizes)]
    # Chan et al. pairwise merge, always in chunk order
    cnt, mean, m2 = parts[0]
    for nb, mb, m2b in parts[1:]:
        tot = cnt + nb
        delta = mb - mean
        mean = mean + delta * nb / tot
        m2 = m2 + m2b + delta * delta * cnt * nb / tot
        cnt = tot
    var = m2 / (cnt - 1)
    return IntegrationResult(mean, math.sqrt(var / cnt), cnt, True)
