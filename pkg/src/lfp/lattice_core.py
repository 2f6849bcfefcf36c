"""Exact lattice minima of positive definite quadratic forms.

The minimum of ``x^T Q x`` over nonzero integer vectors is found by a
depth-first enumeration of the integer points inside the ellipsoid
``x^T Q x <= R`` written in terms of the upper Cholesky factor (Fincke-Pohst
bounds, Schnorr-Euchner zig-zag order).  The radius shrinks whenever a
shorter vector turns up.

The module also carries the factorizations used everywhere else (Cholesky,
cyclic Jacobi eigen-decomposition), Hermite's upper bound and the matrix text
formats understood by the command line.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "NotPositiveDefiniteError",
    "LatticeMinimumResult",
    "as_form",
    "cholesky",
    "spectral_decompose",
    "hermite_upper_bound",
    "lattice_minimum",
    "has_short_vector",
    "quadratic_value",
    "read_matrix",
    "format_matrix",
]

SYMMETRY_RTOL = 1e-12
PIVOT_RTOL = 1e-13
JACOBI_RTOL = 1e-14


class NotPositiveDefiniteError(ValueError):
    """Raised when a form fails the positive definiteness check.

    Attributes
    ----------
    index : int
        1-based order of the leading principal minor (equivalently the
        Cholesky pivot) that is not positive.
    """

    def __init__(self, index: int, pivot: float):
        self.index = index
        self.pivot = pivot
        super().__init__(
            f"matrix is not positive definite: leading principal minor of order "
            f"{index} is not positive (Cholesky pivot {index} has radicand {pivot:.6g})"
        )


@dataclass(frozen=True)
class LatticeMinimumResult:
    """Outcome of :func:`lattice_minimum`.

    ``argmin`` is normalized so that its first nonzero coordinate is positive,
    and among minimizers of equal value it is the lexicographically smallest.
    """

    value: float
    argmin: np.ndarray
    nodes_visited: int


def as_form(Q, *, check_symmetric: bool = True) -> np.ndarray:
    """Validate and return a symmetric matrix as a float array.

    Parameters
    ----------
    Q : array_like
        Square matrix.  Symmetry is required to ``1e-12`` relative to the
        largest entry; the returned array is exactly symmetrized.
    """
    A = np.array(Q, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if check_symmetric:
        scale = max(np.max(np.abs(A)), 1e-300)
        asym = np.max(np.abs(A - A.T))
        if asym > SYMMETRY_RTOL * scale:
            raise ValueError(f"matrix is not symmetric (max |Q - Q^T| = {asym:.3g})")
    return 0.5 * (A + A.T)


def cholesky(Q) -> np.ndarray:
    """Upper triangular ``L`` with positive diagonal such that ``L^T L = Q``.

    Parameters
    ----------
    Q : array_like
        Symmetric positive definite matrix.

    Returns
    -------
    numpy.ndarray
        Upper triangular factor.

    Raises
    ------
    NotPositiveDefiniteError
        When a pivot falls below ``1e-13`` times the largest diagonal entry.
    """
    A = as_form(Q)
    d = A.shape[0]
    threshold = PIVOT_RTOL * max(np.max(np.diag(A)), 0.0)
    L = np.zeros_like(A)
    for i in range(d):
        r = A[i, i] - L[:i, i] @ L[:i, i]
        if not r > threshold:
            raise NotPositiveDefiniteError(i + 1, float(r))
        L[i, i] = math.sqrt(r)
        if i + 1 < d:
            L[i, i + 1:] = (A[i, i + 1:] - L[:i, i] @ L[:i, i + 1:]) / L[i, i]
    return L


def spectral_decompose(Q, *, max_sweeps: int = 100):
    """Eigen-decomposition ``Q = P^T diag(lam) P`` by cyclic Jacobi rotations.

    The rows of ``P`` are orthonormal eigenvectors; eigenvalues come back in
    ascending order.  Sweeps stop once the off-diagonal Frobenius mass drops
    under ``1e-14`` times the diagonal mass.

    Returns
    -------
    P : numpy.ndarray
        Orthogonal matrix, eigenvectors as rows.
    eigenvalues : numpy.ndarray
    """
    A = as_form(Q).copy()
    d = A.shape[0]
    V = np.eye(d)
    for _ in range(max_sweeps):
        off = np.sum(A**2) - np.sum(np.diag(A) ** 2)
        if off <= (JACOBI_RTOL**2) * np.sum(np.diag(A) ** 2):
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * (abs(A[p, p]) + abs(A[q, q])):
                    # negligible coupling: a rotation would only add rounding noise
                    A[p, q] = A[q, p] = 0.0
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                # A <- J^T A J with J the rotation in the (p, q) plane
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
    lam = np.diag(A).copy()
    order = np.argsort(lam, kind="stable")
    return V[:, order].T.copy(), lam[order]


def hermite_upper_bound(Q) -> float:
    """Hermite's bound ``(4/3)^((d-1)/2) det(Q)^(1/d)`` on the lattice minimum."""
    L = cholesky(Q)
    d = L.shape[0]
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return (4.0 / 3.0) ** ((d - 1) / 2.0) * math.exp(logdet / d)


def quadratic_value(Q, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ np.asarray(Q, dtype=float) @ x)


class _Enumerator:
    """Depth-first walk over integer points of ``sum q_i (x_i - c_i)^2 <= R``.

    Level ``i`` runs from ``d-1`` down to ``0``;  ``c_i`` depends on the
    already fixed coordinates ``x_{i+1..d-1}``.  Only one vector of each
    ``+-x`` pair is visited (the last nonzero coordinate is kept positive).
    """

    def __init__(self, L: np.ndarray, radius: float, shrink: bool):
        self.d = L.shape[0]
        diag = np.diag(L)
        self.q = diag**2
        self.mu = (L / diag[:, None]).tolist()
        self.q = self.q.tolist()
        self.radius = radius
        self.shrink = shrink
        self.x = [0] * self.d
        self.nodes = 0
        self.found: list[tuple[float, tuple[int, ...]]] = []
        self.stop = False

    def center(self, i: int) -> float:
        mu = self.mu[i]
        x = self.x
        s = 0.0
        for j in range(i + 1, self.d):
            s += mu[j] * x[j]
        return -s

    def run(self):
        self._level(self.d - 1, 0.0, True)

    def _level(self, i: int, partial: float, zero_above: bool):
        c = self.center(i)
        q = self.q[i]
        x0 = int(math.floor(c + 0.5))
        # zig-zag over x0, x0 +- 1, ... nearest first
        first_up = c >= x0
        t = 0
        while not self.stop:
            progressed = False
            if t == 0:
                cands = (x0,)
            elif first_up:
                cands = (x0 + t, x0 - t)
            else:
                cands = (x0 - t, x0 + t)
            for xi in cands:
                val = partial + q * (xi - c) ** 2
                if val > self.radius:
                    continue
                progressed = True
                if zero_above and xi < 0:
                    continue
                self.nodes += 1
                self.x[i] = xi
                za = zero_above and xi == 0
                if i == 0:
                    if not za:
                        self._leaf(val)
                else:
                    self._level(i - 1, val, za)
                if self.stop:
                    break
            self.x[i] = 0
            if not progressed and t > 0:
                break
            if t == 0 and not progressed:
                break
            t += 1

    def _leaf(self, val: float):
        self.found.append((val, tuple(self.x)))
        if not self.shrink:
            self.stop = True
        elif val * (1.0 + 1e-10) < self.radius:
            self.radius = val * (1.0 + 1e-10)


def _canonical(v: Sequence[int]) -> tuple[int, ...]:
    for c in v:
        if c != 0:
            return tuple(v) if c > 0 else tuple(-k for k in v)
    return tuple(v)


def lattice_minimum(Q) -> LatticeMinimumResult:
    """Exact minimum of ``x^T Q x`` over ``x`` in ``Z^d \\ {0}``.

    Examples
    --------
    >>> r = lattice_minimum([[1.0, 0.5], [0.5, 1.0]])
    >>> r.value, tuple(r.argmin)
    (1.0, (0, 1))
    """
    A = as_form(Q)
    L = cholesky(A)
    radius = float(np.min(np.diag(A))) * (1.0 + 1e-10)
    en = _Enumerator(L, radius, shrink=True)
    en.run()
    ties = []
    for _, x in en.found:
        xv = _canonical(x)
        ties.append((quadratic_value(A, xv), xv))
    exact_best = min(v for v, _ in ties)
    cands = sorted(x for v, x in ties if v <= exact_best * (1.0 + 1e-12))
    arg = np.array(cands[0], dtype=np.int64)
    return LatticeMinimumResult(quadratic_value(A, arg), arg, en.nodes)


def has_short_vector(Q, bound: float, *, factor: np.ndarray | None = None) -> bool:
    """Decide whether some nonzero integer ``x`` has ``x^T Q x <= bound``.

    Cheaper than :func:`lattice_minimum` on skewed forms since the search
    radius is fixed at ``bound`` from the start.  ``factor`` may carry a
    precomputed upper Cholesky factor of ``Q``.
    """
    if bound <= 0.0:
        return False
    if factor is None:
        A = np.asarray(Q, dtype=float)
        if np.min(np.diag(A)) <= bound:
            return True
        L = cholesky(A)
    else:
        L = np.asarray(factor, dtype=float)
        if np.min(np.sum(L**2, axis=0)) <= bound:
            return True
    en = _Enumerator(L, float(bound), shrink=False)
    en.run()
    return bool(en.found)


# --------------------------------------------------------------------------
# matrix text formats


def _parse_matrix_text(text: str) -> np.ndarray:
    text = text.strip()
    if text.startswith("{") or text.startswith("["):
        obj = json.loads(text)
        if isinstance(obj, dict):
            rows = obj.get("rows")
            if rows is None:
                raise ValueError("JSON matrix needs a 'rows' field")
            A = np.array(rows, dtype=float)
            dim = obj.get("dim", A.shape[0])
            if A.ndim != 2 or A.shape != (dim, dim):
                raise ValueError(f"JSON matrix: 'dim' = {dim} does not match rows of shape {A.shape}")
            return A
        return np.array(obj, dtype=float)
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ValueError("text matrix rows have unequal lengths")
    return np.array(rows, dtype=float)


def read_matrix(source: str | Path) -> np.ndarray:
    """Read a matrix from a file path (JSON ``{"dim", "rows"}`` or whitespace rows)."""
    text = Path(source).read_text(encoding="utf-8")
    return _parse_matrix_text(text)


def format_matrix(A, fmt: str = "json") -> str:
    """Serialize with 17 significant digits so that values round-trip exactly."""
    A = np.asarray(A, dtype=float)
    if fmt == "json":
        rows = [[float(f"{v:.17g}") for v in row] for row in A]
        return json.dumps({"dim": int(A.shape[0]), "rows": rows})
    return "\n".join(" ".join(f"{v:.17g}" for v in row) for row in A) + "\n"


def primitive(v: Iterable[int]) -> bool:
    g = 0
    for c in v:
        g = math.gcd(g, int(c))
    return g == 1
