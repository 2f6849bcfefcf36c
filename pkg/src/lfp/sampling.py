"""Seeded random ensembles: Haar orthogonal matrices, Wishart matrices,
log-uniform diagonal parts and weighted points on the d=2 channel manifold.

Every stochastic routine takes either an integer seed or a ready
``numpy.random.Generator``.  Integer seeds build a Philox (counter based)
bit generator from ``SeedSequence([seed, *stream])``; normals come from
numpy's ziggurat sampler.  The pair is recorded in :data:`RNG_METADATA`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .lattice_core import cholesky

__all__ = [
    "RNG_METADATA",
    "make_generator",
    "haar_orthogonal",
    "wishart_sample",
    "NuEpsilonParams",
    "nu_epsilon_sample",
    "ManifoldSample",
    "manifold_sample_d2",
    "random_spd",
    "random_unimodular",
    "write_samples_csv",
]

RNG_METADATA = {"bit_generator": "Philox4x64-10", "normals": "ziggurat", "seeding": "SeedSequence([seed, stream...])"}

SeedLike = Union[int, np.random.Generator]


def make_generator(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``seed`` (a 64-bit unsigned integer) and a stream index."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *map(int, stream)])))


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_generator(seed)


def haar_orthogonal(d: int, seed: SeedLike = 0, size: int | None = None, *, special: bool = False):
    """Haar-distributed orthogonal matrices.

    A standard Gaussian matrix is QR-factorized and each column of the
    orthogonal factor is multiplied by the sign of the matching diagonal
    entry of the triangular factor.  This gives the Haar law on the whole
    group O_d (both determinant signs).  With ``special=True`` the first row
    of every matrix of determinant -1 is negated, which yields the Haar law
    on SO_d.

    Parameters
    ----------
    d : int
    seed : int or Generator
    size : int, optional
        Number of matrices; ``None`` returns a single ``(d, d)`` array.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = _rng(seed)
    m = 1 if size is None else int(size)
    Z = rng.standard_normal((m, d, d))
    Qm, R = np.linalg.qr(Z)
    s = np.sign(np.diagonal(R, axis1=1, axis2=2))
    s[s == 0] = 1.0
    P = Qm * s[:, None, :]
    if special:
        neg = np.linalg.det(P) < 0
        P[neg, 0, :] *= -1.0
    return P[0] if size is None else P


def wishart_sample(V, n: int, seed: SeedLike = 0, size: int | None = None):
    """Draw ``X^T X`` where the ``n`` rows of ``X`` are i.i.d. ``N_d(0, V)``.

    Raises
    ------
    ValueError
        If ``n < d`` (no density on the cone).
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    d = V.shape[0]
    if n < d:
        raise ValueError(f"Wishart needs n >= d (got n={n}, d={d})")
    C = cholesky(V)  # V = C^T C, so z C has covariance V
    rng = _rng(seed)
    m = 1 if size is None else int(size)
    X = rng.standard_normal((m, n, d)) @ C
    W = np.einsum("kni,knj->kij", X, X)
    return W[0] if size is None else W


@dataclass(frozen=True)
class NuEpsilonParams:
    d: int
    epsilon: float

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")


def nu_epsilon_sample(params: NuEpsilonParams, seed: SeedLike = 0, size: int | None = None):
    """Diagonal parts with log-uniform first ``d-1`` entries and unit product.

    ``log alpha_i`` is uniform on ``[log eps, -log eps]`` for ``i < d`` and the
    last entry is the reciprocal of their product.
    """
    rng = _rng(seed)
    m = 1 if size is None else int(size)
    le = math.log(params.epsilon)
    logs = rng.uniform(le, -le, size=(m, params.d - 1))
    out = np.empty((m, params.d))
    out[:, :-1] = np.exp(logs)
    out[:, -1] = np.exp(-np.sum(logs, axis=1))
    return out[0] if size is None else out


@dataclass
class ManifoldSample:
    """Weighted points ``H`` on the d=2 capacity manifold.

    ``weights`` are importance weights for the requested measure, so
    ``mean(weights * phi(H)) / kappa`` estimates the normalized expectation
    of ``phi``.  ``a, b`` are the chart coordinates (entries of the unit
    determinant factor ``L = [[a, b], [0, 1/a]]``).
    """

    H: np.ndarray
    a: np.ndarray
    b: np.ndarray
    weights: np.ndarray
    rejected: int
    drawn: int
    measure: str

    @property
    def rejection_rate(self) -> float:
        return self.rejected / self.drawn if self.drawn else 0.0


def manifold_sample_d2(gamma: float, c0: float, n: int, seed: SeedLike = 0, *, measure: str = "surface") -> ManifoldSample:
    """Importance sample of the d=2 manifold through the ``(a, b)`` chart.

    The chart domain is ``sqrt(delta*) < a < 1/sqrt(delta*)``,
    ``|b| < theta(a)``.  Points are proposed as ``a = lo + (hi - lo) s^2``
    and ``b = theta(a) sin(phi)`` with ``s`` and ``phi`` uniform; that choice
    cancels the integrable endpoint blow-ups of the density so that the weights
    stay bounded.  The weight is the chart density (``J*Gamma`` for
    ``measure='surface'``, ``J`` alone for ``measure='chart'``) divided by
    the proposal density.

    Points whose reconstruction hits a non-positive radicand (only possible
    through rounding at the domain edge) are dropped and redrawn; the count
    is kept in ``rejected``.
    """
    from . import integer_forcing as itf

    if not c0 > gamma**2:
        raise ValueError("need c0 > gamma^2 for a nonempty manifold")
    if measure not in ("surface", "chart"):
        raise ValueError("measure must be 'surface' or 'chart'")
    rng = _rng(seed)
    lo, hi = itf.chart_a_range(gamma, c0)
    span = hi - lo
    out_a, out_b, out_w = [], [], []
    have = rejected = drawn = 0
    while have < n:
        m = max(n - have, 1024)
        s = rng.uniform(0.0, 1.0, m)
        phi = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, m)
        drawn += m
        a = lo + span * s * s
        th = itf.theta_d2(a, gamma, c0)
        b = th * np.sin(phi)
        with np.errstate(invalid="ignore", divide="ignore"):
            dens = itf.chart_density_d2(a, b, gamma, c0, measure=measure)
            w = dens * (2.0 * span * s) * (math.pi * th * np.cos(phi))
        ok = np.isfinite(w) & (w > 0) & (a > lo) & (a < hi)
        rejected += int(np.count_nonzero(~ok))
        a, b, w = a[ok], b[ok], w[ok]
        take = min(n - have, a.shape[0])
        out_a.append(a[:take])
        out_b.append(b[:take])
        out_w.append(w[:take])
        have += take
    a = np.concatenate(out_a)
    b = np.concatenate(out_b)
    w = np.concatenate(out_w)
    u, v, wz = itf.h_entries_d2(a, b, gamma, c0)
    H = np.zeros((n, 2, 2))
    H[:, 0, 0] = u
    H[:, 0, 1] = v
    H[:, 1, 1] = wz
    return ManifoldSample(H, a, b, w, rejected, drawn, measure)


# --------------------------------------------------------------------------
# helpers for tests and property checks


def random_spd(d: int, seed: SeedLike = 0, size: int | None = None, *, ridge: float = 0.05):
    """Random positive definite forms ``A^T A + ridge*I`` with Gaussian ``A``."""
    rng = _rng(seed)
    m = 1 if size is None else int(size)
    A = rng.standard_normal((m, d, d))
    Q = np.einsum("kij,kil->kjl", A, A) + ridge * np.eye(d)
    return Q[0] if size is None else Q


def random_unimodular(d: int, seed: SeedLike = 0, n_ops: int = 6, max_mult: int = 2) -> np.ndarray:
    """Integer matrix of determinant 1 built from elementary row operations."""
    rng = _rng(seed)
    Z = np.eye(d, dtype=np.int64)
    for _ in range(n_ops):
        i, j = rng.choice(d, size=2, replace=False)
        k = int(rng.integers(1, max_mult + 1)) * (1 if rng.random() < 0.5 else -1)
        Z[i, :] += k * Z[j, :]
    return Z


def write_samples_csv(path: str | Path, rows: np.ndarray, names: Sequence[str]) -> None:
    """Dump samples as CSV with a header row, 17 significant digits."""
    rows = np.asarray(rows, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(list(names))
        for r in rows:
            wr.writerow([f"{v:.17g}" for v in r])
