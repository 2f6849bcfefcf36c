"""Ellipsoid geometry, spherical cap measures and the spectral-route bounds.

A form ``Q = P^T Delta^{-2} P`` with ``P`` orthogonal and ``Delta`` diagonal
has a nonzero integer vector of value at most ``delta`` exactly when the
rotated lattice ``P Z^d`` meets the axis-aligned ellipsoid with semi-axes
``sqrt(delta) * Delta``.  The probabilities over Haar ``P`` are controlled
through the normalized spherical measure of such ellipsoids, computed here
by a nested-quadrature recursion or bracketed by products of incomplete
Wallis integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg as sla
from scipy.special import gammaln

from .lattice_core import has_short_vector
from .quadrature import IntegrationResult, integrate_1d, integrate_mc
from .sampling import SeedLike, _rng, haar_orthogonal, make_generator, nu_epsilon_sample, NuEpsilonParams

__all__ = [
    "BoundPair",
    "Ellipsoid",
    "SphericalMeasure",
    "HyperplaneSection",
    "CapMeasureBounds",
    "Theorem2Result",
    "Theorem3Result",
    "unit_ball_volume",
    "sphere_area",
    "zeta",
    "km_bounds",
    "wallis",
    "incomplete_wallis",
    "intersect_hyperplane",
    "reduced_axes",
    "I_d",
    "L_d",
    "a_const",
    "a_prime_const",
    "cap_measure_recursive",
    "cap_measure_bounds",
    "cap_measure",
    "cube_cap_mc",
    "sphere_cap_mc",
    "p_d_ellipsoid_mc",
    "primitive_points_in_ball",
    "theorem2_bounds",
    "theorem3_bounds",
    "theorem3_constants",
    "j2_volume",
    "tau_epsilon_mc",
]


# --------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class BoundPair:
    """A lower and an upper estimate of one probability.

    ``lower`` may be None when that side is not available (never silently
    replaced by 0).  Errors are one standard error for Monte-Carlo sides and
    the quadrature estimate otherwise.
    """

    lower: Optional[float]
    upper: Optional[float]
    lower_label: str = ""
    upper_label: str = ""
    lower_error: float = 0.0
    upper_error: float = 0.0

    def __post_init__(self):
        if self.lower is not None and self.upper is not None:
            slack = 1e-12 + 3.0 * (self.lower_error + self.upper_error)
            if self.lower > self.upper + slack:
                raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def contains(self, x: float, sigma: float = 0.0, k: float = 3.0) -> bool:
        lo = -math.inf if self.lower is None else self.lower - k * (sigma + self.lower_error)
        hi = math.inf if self.upper is None else self.upper + k * (sigma + self.upper_error)
        return lo <= x <= hi

    def as_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_label": self.lower_label,
            "upper_label": self.upper_label,
            "lower_error": self.lower_error,
            "upper_error": self.upper_error,
        }


@dataclass(frozen=True)
class SphericalMeasure:
    value: float
    method: str
    error_estimate: float = 0.0
    converged: bool = True


@dataclass(frozen=True)
class Ellipsoid:
    """Axis-aligned ellipsoid ``sum x_i^2 / alpha_i^2 <= 1``.

    Use :meth:`from_axes` to obtain the sorted, tie-free representative the
    cap-measure routines expect.
    """

    semi_axes: np.ndarray
    sorted: bool = False

    @classmethod
    def from_axes(cls, axes) -> "Ellipsoid":
        return cls(_sorted_axes(axes), True)

    @property
    def dim(self) -> int:
        return int(np.asarray(self.semi_axes).shape[0])


AxesLike = Union[Ellipsoid, Sequence[float], np.ndarray]

TIE_STEP = 1e-12


def _sorted_axes(axes: AxesLike) -> np.ndarray:
    """Ascending axes with ties split by a relative ``1e-12 * i`` nudge."""
    if isinstance(axes, Ellipsoid):
        if axes.sorted:
            return np.asarray(axes.semi_axes, dtype=float)
        axes = axes.semi_axes
    al = np.sort(np.asarray(axes, dtype=float).ravel())
    if al.size == 0 or np.any(~(al > 0)) or not np.all(np.isfinite(al)):
        raise ValueError("semi-axes must be finite and positive")
    if np.any(np.diff(al) <= 0):
        al = al * (1.0 + TIE_STEP * np.arange(al.size))
    return al


@dataclass(frozen=True)
class HyperplaneSection:
    """Intersection of an ellipsoid with a central hyperplane ``v^T x = 0``.

    ``form`` is the matrix of the section in the coordinates obtained by
    dropping the pivot coordinate, i.e. ``D (I + u u^T) D``.  Those
    coordinates are not orthonormal on the hyperplane; ``metric`` is the
    Gram matrix of that parametrization and ``semi_axes`` are the geometric
    semi-axes, solving ``form z = lam * metric z``.
    """

    form: np.ndarray
    metric: np.ndarray
    semi_axes: np.ndarray
    pivot: int


@dataclass(frozen=True)
class CapMeasureBounds:
    tight: BoundPair
    crude: BoundPair
    envelope: BoundPair


# --------------------------------------------------------------------------
# constants


def unit_ball_volume(d: int) -> float:
    """``V_d = pi^(d/2) / Gamma(d/2 + 1)``."""
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))


def sphere_area(d: int) -> float:
    """Surface area ``A_d = 2 pi^(d/2) / Gamma(d/2)`` of the unit sphere in R^d."""
    return 2.0 * math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d))


# B_2k / (2k)! for k = 1..8
_BERN = [1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6, -3617.0 / 510]


@lru_cache(maxsize=None)
def zeta(s: float) -> float:
    """Riemann zeta for real ``s > 1`` by Euler-Maclaurin summation.

    A direct sum up to ``N - 1 = 11`` is followed by the integral tail and
    Bernoulli corrections; the neglected remainder is below ``1e-15`` for
    ``s >= 2``.
    """
    if not s > 1:
        raise ValueError("zeta needs s > 1")
    N = 12
    total = math.fsum(n ** (-s) for n in range(1, N))
    total += N ** (1.0 - s) / (s - 1.0) + 0.5 * N ** (-s)
    rising = s  # s (s+1) ... (s+2k-2)
    for k, B in enumerate(_BERN, start=1):
        term = B / math.factorial(2 * k) * rising * N ** (-s - 2 * k + 1)
        total += term
        if abs(term) < 1e-18 * total:
            break
        rising *= (s + 2 * k - 1) * (s + 2 * k)
    return total


def km_bounds(d: int, delta: float) -> BoundPair:
    """Bounds on ``P(M(Q) <= delta)`` for the invariant measure on unimodular forms.

    The upper side is ``V_d/(2 zeta(d)) * delta^(d/2)``.  The lower side
    subtracts ``c_d V_d^2/4 * delta^d`` with ``c_d = 1/(zeta(d) zeta(d-1))``,
    which is only available for ``d >= 3``; for ``d = 2`` it is None.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if not delta > 0:
        raise ValueError("delta must be positive")
    V = unit_ball_volume(d)
    up = V / (2.0 * zeta(d)) * delta ** (d / 2.0)
    if d == 2:
        return BoundPair(None, up, "unavailable: constant c_2 not given", "V_d/(2 zeta(d)) delta^(d/2)")
    cd = 1.0 / (zeta(d) * zeta(d - 1))
    lo = up - cd * V * V / 4.0 * delta**d
    return BoundPair(lo, up, "V_d/(2 zeta(d)) delta^(d/2) - c_d V_d^2/4 delta^d", "V_d/(2 zeta(d)) delta^(d/2)")


def wallis(k: int) -> float:
    """``W_k = int_0^{pi/2} sin^k``, via log-Gamma."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return 0.5 * math.sqrt(math.pi) * math.exp(gammaln((k + 1) / 2.0) - gammaln((k + 2) / 2.0))


def incomplete_wallis(k: int, lo: float, hi: float = 0.5 * math.pi, rel_tol: float = 1e-12) -> IntegrationResult:
    """``int_lo^hi sin^k(t) dt`` by adaptive quadrature."""
    if hi <= lo:
        return IntegrationResult(0.0, 0.0, 0, True)
    if k == 0:
        return IntegrationResult(hi - lo, 0.0, 0, True)
    return integrate_1d(lambda t: np.sin(t) ** k, lo, hi, rel_tol, vectorized=True)


def _b(x: float) -> float:
    return math.acos(min(1.0, x))


def a_const(d: int) -> float:
    return 2.0**d / (math.factorial(d - 1) * sphere_area(d)) * (0.5 * math.pi) ** ((d - 2) * (d - 3) / 2.0)


def a_prime_const(d: int) -> float:
    return 2.0**d / sphere_area(d) * (0.5 * math.pi) ** (d * (d - 1) / 2.0)


# --------------------------------------------------------------------------
# geometry


def intersect_hyperplane(E: AxesLike, v) -> HyperplaneSection:
    """Section of ``E`` by the hyperplane orthogonal to ``v``.

    The pivot is the coordinate of largest magnitude in ``v`` (the last one
    among equals).  Eliminating it gives the form ``D (I + u u^T) D`` in the
    remaining coordinates, with ``D = diag(1/alpha_i)`` and
    ``u_i = alpha_i v_i / (alpha_p v_p)``.

    Examples
    --------
    >>> s = intersect_hyperplane([1.0, 2.0], [2**-0.5, 2**-0.5])
    >>> round(float(s.semi_axes[0]), 6)
    1.264911
    """
    al = np.asarray(E.semi_axes if isinstance(E, Ellipsoid) else E, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != al.shape:
        raise ValueError("v and the semi-axes must have the same length")
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ValueError("the normal vector must be nonzero")
    v = v / nv
    mags = np.abs(v)
    p = int(np.flatnonzero(mags == mags.max())[-1])
    keep = [i for i in range(al.size) if i != p]
    u = al[keep] * v[keep] / (al[p] * v[p])
    D = np.diag(1.0 / al[keep])
    form = D @ (np.eye(len(keep)) + np.outer(u, u)) @ D
    w = v[keep] / v[p]
    metric = np.eye(len(keep)) + np.outer(w, w)
    lam = sla.eigh(form, metric, eigvals_only=True)
    axes = np.sort(1.0 / np.sqrt(lam))
    return HyperplaneSection(form, metric, axes, p)


def reduced_axes(E: AxesLike, clamp: bool = False) -> np.ndarray:
    """``alpha~_i = sqrt(alpha_i^2 (alpha_d^2 - 1) / (alpha_d^2 - alpha_i^2))``.

    ``clamp=True`` returns ``min(1, alpha~_i)`` instead.
    """
    al = _sorted_axes(E)
    ad2 = al[-1] ** 2
    if not al[-1] > 1.0:
        raise ValueError("reduced axes need the largest semi-axis to exceed 1")
    ai2 = al[:-1] ** 2
    at = np.sqrt(ai2 * (ad2 - 1.0) / (ad2 - ai2))
    return np.minimum(at, 1.0) if clamp else at


# --------------------------------------------------------------------------
# cube-type products


def I_d(alpha, rel_tol: float = 1e-12) -> float:
    """Product of incomplete Wallis integrals bounding cap measures.

    ``I_d(alpha) = (2^d/A_d) prod_{i=2}^d int_{b(alpha_{d-i+1})}^{pi/2} sin^{i-2}``
    with ``b(x) = arccos(min(1, x))``.  Requires sorted input with
    ``alpha_d >= 1``.
    """
    al = np.asarray(alpha, dtype=float).ravel()
    d = al.size
    if d < 2:
        raise ValueError("need d >= 2")
    if np.any(np.diff(al) < 0):
        raise ValueError("alpha must be sorted ascending")
    if al[-1] < 1.0:
        raise ValueError("I_d is undefined when the last coordinate is below 1")
    out = 2.0**d / sphere_area(d)
    for i in range(2, d + 1):
        out *= incomplete_wallis(i - 2, _b(al[d - i]), rel_tol=rel_tol).value
    return out


def L_d(alpha) -> float:
    """Closed-form majorant ``2^d/((d-1)! A_d) prod_j ((pi/2)^j - b(alpha_{d-j})^j)``."""
    al = np.asarray(alpha, dtype=float).ravel()
    d = al.size
    if al[-1] < 1.0:
        raise ValueError("L_d is undefined when the last coordinate is below 1")
    out = 2.0**d / (math.factorial(d - 1) * sphere_area(d))
    for j in range(1, d):
        out *= (0.5 * math.pi) ** j - _b(al[d - j - 1]) ** j
    return out


def L_d_lower_factor(d: int) -> float:
    """Factor ``f`` with ``f * L_d <= I_d``.

    Comes from ``sin t >= 2t/pi`` applied to each of the ``d - 1`` factors:
    ``(2/pi)^((d-1)(d-2)/2)``.  For ``d <= 3`` this equals ``(2/pi)^(d-2)``.
    """
    return (2.0 / math.pi) ** ((d - 1) * (d - 2) / 2.0)


# --------------------------------------------------------------------------
# cap measures


def _sigma(al: np.ndarray, tol: float, depth: int):
    """Recursive cap measure.  Returns (value, error, converged, evaluations)."""
    d = al.size
    if al[0] >= 1.0:
        return 1.0, 0.0, True, 0
    if al[-1] <= 1.0:
        return 0.0, 0.0, True, 0
    ad2 = al[-1] ** 2
    ai2 = al[:-1] ** 2
    at = np.sqrt(ai2 * (ad2 - 1.0) / (ad2 - ai2))
    if d == 2:
        return 2.0 / math.pi * math.asin(min(1.0, at[0])), 0.0, True, 1
    k = d - 2
    t1 = math.asin(min(1.0, at[0]))
    t2 = math.asin(min(1.0, at[-1]))
    full = incomplete_wallis(k, 0.0, t1).value if t1 > 0 else 0.0
    sub_tol = tol / (depth + 2)
    state = {"err": 0.0, "conv": True, "nev": 0}

    def integrand(th):
        s = math.sin(th)
        val, err, conv, nev = _sigma(at / s, sub_tol, depth + 1)
        state["conv"] &= conv
        state["nev"] += nev
        state["err"] = max(state["err"], err)
        return val * s**k

    if t2 > t1:
        kinks = [math.asin(x) for x in at[1:-1] if x < 1.0]
        res = integrate_1d(integrand, t1, t2, tol, points=kinks)
        part, perr, pconv, pnev = res.value, res.error_estimate, res.converged, res.evaluations
    else:
        part, perr, pconv, pnev = 0.0, 0.0, True, 0
    W = wallis(k)
    err = (perr + state["err"] * (t2 - t1)) / W
    return (full + part) / W, err, pconv and state["conv"], pnev + state["nev"]


def cap_measure_recursive(E: AxesLike, rel_tol: float = 1e-9) -> SphericalMeasure:
    """Normalized spherical measure of ``E`` by the dimension-reducing recursion.

    Trivial cases: 1 when every semi-axis is at least 1, 0 when none
    exceeds 1.  Otherwise the measure in dimension ``d`` is an integral over
    ``theta`` of the measure of the ``(d-2)``-sphere ellipsoid with axes
    ``alpha~/sin(theta)``; the ``d = 2`` case is ``(2/pi) arcsin(alpha~_1)``.
    """
    al = _sorted_axes(E)
    if al[0] >= 1.0 or al[-1] <= 1.0:
        return SphericalMeasure(1.0 if al[0] >= 1.0 else 0.0, "exact-case", 0.0, True)
    val, err, conv, _ = _sigma(al, rel_tol, 0)
    val = min(1.0, max(0.0, val))
    return SphericalMeasure(val, "recursion", err, conv)


def cap_measure_bounds(E: AxesLike) -> CapMeasureBounds:
    """Brackets on the cap measure of ``E`` from products of Wallis integrals.

    ``tight`` uses the clamped reduced axes with a final coordinate 1
    appended; ``crude`` uses the axes themselves (its lower side exists only
    when ``alpha_d >= sqrt(d)``).  ``envelope`` brackets ``I_d(alpha)`` by
    ``a(d) prod min(alpha_j, 1)`` and ``a'(d) prod min(alpha_j, 1)``.
    """
    al = _sorted_axes(E)
    d = al.size
    if not (al[0] < 1.0 < al[-1]):
        raise ValueError("cap_measure_bounds needs alpha_1 < 1 < alpha_d")
    ats = reduced_axes(al, clamp=True)
    tight = BoundPair(
        I_d(np.r_[ats / math.sqrt(d - 1), 1.0]),
        I_d(np.r_[ats, 1.0]),
        "I_d(alpha~*/sqrt(d-1), 1)",
        "I_d(alpha~*, 1)",
    )
    up = I_d(al)
    lo = I_d(al / math.sqrt(d)) if al[-1] >= math.sqrt(d) else None
    crude = BoundPair(lo, up, "I_d(alpha/sqrt(d))" if lo is not None else "undefined: alpha_d < sqrt(d)", "I_d(alpha)")
    prod = float(np.prod(np.minimum(al[:-1], 1.0)))
    env = BoundPair(a_const(d) * prod, a_prime_const(d) * prod, "a(d) prod min(alpha_j,1)", "a'(d) prod min(alpha_j,1)")
    return CapMeasureBounds(tight, crude, env)


RECURSION_MAX_DIM = 4


def cap_measure(E: AxesLike, rel_tol: float = 1e-9) -> SphericalMeasure:
    """Cap measure by recursion up to dimension 4, bounds midpoint above."""
    al = _sorted_axes(E)
    if al[0] >= 1.0 or al[-1] <= 1.0:
        return cap_measure_recursive(al, rel_tol)
    if al.size <= RECURSION_MAX_DIM:
        return cap_measure_recursive(al, rel_tol)
    t = cap_measure_bounds(al).tight
    return SphericalMeasure(0.5 * (t.lower + t.upper), "bounds-midpoint", 0.5 * (t.upper - t.lower), True)


def _uniform_sphere(rng, n, d):
    X = rng.standard_normal((n, d))
    return X / np.linalg.norm(X, axis=1)[:, None]


def sphere_cap_mc(E: AxesLike, n: int = 10**6, seed: SeedLike = 0) -> SphericalMeasure:
    """Fraction of uniform points on the sphere lying inside ``E``."""
    al = np.asarray(E.semi_axes if isinstance(E, Ellipsoid) else E, dtype=float)
    rng = _rng(seed)
    X = _uniform_sphere(rng, n, al.size)
    hit = np.sum((X / al) ** 2, axis=1) <= 1.0
    p = float(np.mean(hit))
    return SphericalMeasure(p, "monte-carlo", math.sqrt(max(p * (1 - p), 0.0) / n), True)


def cube_cap_mc(alpha, n: int = 10**6, seed: SeedLike = 0) -> SphericalMeasure:
    """Fraction of uniform sphere points in the box ``|x_i| <= alpha_i``."""
    al = np.asarray(alpha, dtype=float)
    rng = _rng(seed)
    X = _uniform_sphere(rng, n, al.size)
    hit = np.all(np.abs(X) <= al, axis=1)
    p = float(np.mean(hit))
    return SphericalMeasure(p, "monte-carlo", math.sqrt(max(p * (1 - p), 0.0) / n), True)


# --------------------------------------------------------------------------
# lattice probabilities over Haar rotations


def _lattice_hits(forms: np.ndarray, bound: float = 1.0) -> np.ndarray:
    return np.fromiter((has_short_vector(F, bound) for F in forms), dtype=bool, count=forms.shape[0])


def p_d_ellipsoid_mc(E: AxesLike, n_samples: int = 10**4, seed: SeedLike = 0) -> SphericalMeasure:
    """Haar-probability that ``P Z^d`` has a nonzero point inside ``E``.

    Each draw is decided exactly: ``P Z^d`` meets ``E`` iff the form
    ``P^T diag(alpha^-2) P`` takes a value at most 1 on ``Z^d \\ {0}``.
    """
    al = np.asarray(E.semi_axes if isinstance(E, Ellipsoid) else E, dtype=float).ravel()
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if np.all(al < 0.5):
        # inside the open ball of radius 1/2 there is no nonzero lattice point
        return SphericalMeasure(0.0, "exact-case", 0.0, True)
    rng = _rng(seed)
    P = haar_orthogonal(al.size, rng, n_samples)
    A = 1.0 / al**2
    forms = np.einsum("kji,j,kjl->kil", P, A, P)
    hits = _lattice_hits(forms)
    p = float(np.mean(hits))
    return SphericalMeasure(p, "monte-carlo", math.sqrt(p * (1.0 - p) / n_samples), True)


PRIMITIVE_CAP = 2_000_000


def primitive_points_in_ball(d: int, radius: float, cap: int = PRIMITIVE_CAP) -> np.ndarray:
    """All integer vectors with gcd 1 and Euclidean norm at most ``radius``.

    Both members of each ``+-n`` pair are returned; rows are sorted
    lexicographically.

    Raises
    ------
    ValueError
        When the expected count ``V_d r^d / zeta(d)`` exceeds ``cap``.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius < 1.0:
        return np.zeros((0, d), dtype=np.int64)
    est = unit_ball_volume(d) * radius**d / zeta(d) if d >= 2 else 2.0
    if est > cap:
        raise ValueError(f"about {est:.3g} primitive points in the ball, above the cap {cap}")
    R = int(math.floor(radius + 1e-12))
    grid = np.arange(-R, R + 1)
    pts = np.stack(np.meshgrid(*([grid] * d), indexing="ij"), axis=-1).reshape(-1, d)
    nrm2 = np.sum(pts * pts, axis=1)
    pts = pts[(nrm2 > 0) & (nrm2 <= radius * radius * (1 + 1e-12))]
    g = np.gcd.reduce(np.abs(pts), axis=1)
    return pts[g == 1].astype(np.int64)


@dataclass(frozen=True)
class Theorem2Result:
    bounds: BoundPair
    cap_term: float
    hyperplane_term: Optional[float]
    hyperplane_error: float
    n_primitive: int
    details: dict = field(default_factory=dict)


def _hyperplane_term(al: np.ndarray, n: int, seed: SeedLike):
    """MC estimate of ``int_{S^{d-1}} p_{d-1}(E cap v^perp) dsigma(v)``.

    For each uniform ``v`` the section's semi-axes come from
    :func:`intersect_hyperplane`.  In dimension 1 the section meets
    ``Z \\ {0}`` iff its half-length is at least 1; otherwise a fresh Haar
    rotation of ``Z^{d-1}`` is drawn and the lattice event is decided
    exactly, which gives an unbiased estimate of ``p_{d-1}``.
    """
    d = al.size
    rng = _rng(seed)
    V = _uniform_sphere(rng, n, d)
    hits = np.empty(n, dtype=bool)
    if d == 2:
        # section of a planar ellipse by a line: closed form for speed
        beta = 1.0 / np.sqrt(V[:, 1] ** 2 / al[0] ** 2 + V[:, 0] ** 2 / al[1] ** 2)
        hits[:] = beta >= 1.0
    else:
        Ps = haar_orthogonal(d - 1, rng, n)
        for k in range(n):
            beta = intersect_hyperplane(al, V[k]).semi_axes
            F = Ps[k].T @ np.diag(beta**-2.0) @ Ps[k]
            hits[k] = has_short_vector(F, 1.0)
    p = float(np.mean(hits))
    return p, math.sqrt(p * (1.0 - p) / n)


def theorem2_bounds(Delta, delta: float, *, mc_n: int = 20000, seed: SeedLike = 0, rel_tol: float = 1e-9) -> Theorem2Result:
    """Bounds on ``mu_d{P : P Z^d meets E(sqrt(delta) Delta)}``.

    Upper side: ``min(1, sum_n sigma(E(sqrt(delta)/|n| Delta)))`` over
    primitive ``n`` with ``|n|_2 <= sqrt(delta) |Delta|_inf``.  Lower side:
    the larger of ``sigma(E(sqrt(delta) Delta))`` (deterministic) and the
    hyperplane-section average (Monte Carlo, ``mc_n`` draws).
    """
    Dl = np.asarray(Delta, dtype=float).ravel()
    if np.any(~(Dl > 0)):
        raise ValueError("Delta entries must be positive")
    if abs(float(np.prod(Dl)) - 1.0) > 1e-9:
        raise ValueError("Delta must have product 1")
    if not delta > 0:
        raise ValueError("delta must be positive")
    d = Dl.size
    rd = math.sqrt(delta)
    radius = rd * float(np.max(Dl))
    prim = primitive_points_in_ball(d, radius)
    upper_err = 0.0
    if prim.shape[0] == 0:
        f = 0.0
    else:
        norms2, counts = np.unique(np.sum(prim * prim, axis=1), return_counts=True)
        total = 0.0
        for n2, cnt in zip(norms2, counts):
            sm = cap_measure(rd / math.sqrt(n2) * Dl, rel_tol)
            total += cnt * sm.value
            upper_err += cnt * sm.error_estimate
            if total >= 1.0 + 10 * upper_err:
                break
        f = min(1.0, total)
    cap = cap_measure(rd * Dl, rel_tol)
    hyp, herr = _hyperplane_term(np.sort(rd * Dl), mc_n, seed) if mc_n else (None, 0.0)
    if hyp is not None and hyp > cap.value:
        lower, lerr, llab = hyp, herr, "hyperplane-section average (MC)"
    else:
        lower, lerr, llab = cap.value, cap.error_estimate, "sigma(E(sqrt(delta) Delta))"
    bp = BoundPair(lower, f, llab, "sum over primitive points of sigma(E(sqrt(delta)/|n| Delta))", lerr, upper_err)
    return Theorem2Result(bp, cap.value, hyp, herr, int(prim.shape[0]), {"radius": radius})


# --------------------------------------------------------------------------
# log-uniform diagonal ensemble


def theorem3_constants(d: int, epsilon: float):
    """``(c_d(eps), C_d(eps))``."""
    L = abs(2.0 * math.log(epsilon))
    c = a_const(d) * math.factorial(d - 1) / (d * L) ** (d - 1)
    C = 3.0 ** (d - 1) * a_prime_const(d) * math.factorial(d) * d / L ** (d - 1)
    return c, C


def _in_J(al: np.ndarray, epsilon: float, delta: float) -> np.ndarray:
    """Membership in the integration domain, rows of ``al`` are ``alpha_1..alpha_{d-1}``."""
    inc = np.all(np.diff(al, axis=1) > 0, axis=1) if al.shape[1] > 1 else np.ones(al.shape[0], bool)
    box = np.all((al >= epsilon) & (al <= 1.0 / epsilon), axis=1)
    inv = 1.0 / np.prod(al, axis=1)
    top = np.maximum(delta**-0.5, al[:, -1]) < inv
    return inc & box & top


@dataclass(frozen=True)
class Theorem3Result:
    bounds: BoundPair
    exact_zero: bool
    s_d: IntegrationResult
    S_d: IntegrationResult
    envelope: BoundPair
    constants: tuple


def j2_volume(epsilon: float, delta: float) -> float:
    """Length of the one-dimensional domain for ``d = 2``.

    The domain is ``eps <= alpha_1 < 1/c`` with ``c = max(delta^-1/2, 1)``,
    so its length is ``max(0, 1/c - eps)``.
    """
    c = max(delta**-0.5, 1.0, epsilon)
    return max(0.0, 1.0 / c - epsilon)


def theorem3_bounds(d: int, epsilon: float, delta: float, *, mc_n: int = 200_000, seed: SeedLike = 0, rel_tol: float = 1e-10) -> Theorem3Result:
    """Bounds on the probability of a short vector under the log-uniform ensemble.

    Returns the pair ``(c_d(eps) s_d, C_d(eps) S_d)`` together with the
    closed-form envelope ``s_d >= ...`` / ``S_d <= ...``.  When
    ``delta <= eps^(2(d-1))`` the probability is exactly zero.  ``s_d`` and
    ``S_d`` are one-dimensional quadratures for ``d = 2`` and Monte-Carlo
    integrals with a log-uniform proposal otherwise.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    c, C = theorem3_constants(d, epsilon)
    Lg = abs(2.0 * math.log(epsilon))
    rd = math.sqrt(delta)
    m = min(rd, epsilon)
    env_lo = m ** (d - 1) * Lg ** (d - 2) / math.factorial(d - 2) * (m - epsilon ** (d - 1))
    env_hi = delta ** (d / 2.0) * math.log(rd / epsilon ** (d - 1)) * Lg ** (d - 2) / math.factorial(d - 2)
    envelope = BoundPair(env_lo, max(env_hi, 0.0), "closed-form lower envelope of s_d", "closed-form upper envelope of S_d")
    zero = IntegrationResult(0.0, 0.0, 0, True)
    if delta <= epsilon ** (2 * (d - 1)):
        return Theorem3Result(
            BoundPair(0.0, 0.0, "exact zero: delta <= eps^(2(d-1))", "exact zero: delta <= eps^(2(d-1))"),
            True, zero, zero, envelope, (c, C),
        )
    if d == 2:
        hi = min(rd, 1.0, 1.0 / epsilon)
        if hi <= epsilon:
            s_res = S_res = zero
        else:
            s_res = integrate_1d(lambda x: np.minimum(rd, 1.0 / x), epsilon, hi, rel_tol, vectorized=True)
            S_int = integrate_1d(lambda x: 1.0 / x, epsilon, hi, rel_tol, vectorized=True)
            S_res = IntegrationResult(delta * S_int.value, delta * S_int.error_estimate, S_int.evaluations, S_int.converged)
    else:
        le = math.log(epsilon)

        def sampler(rng, k):
            x = np.exp(rng.uniform(le, -le, (k, d - 1)))
            dens = np.prod(1.0 / (x * Lg), axis=1)
            return x, dens

        def f_small(x):
            return _in_J(x, epsilon, delta) * np.prod(np.minimum(rd, 1.0 / x), axis=1)

        def f_big(x):
            return _in_J(x, epsilon, delta) * delta ** (d / 2.0) * np.prod(1.0 / x, axis=1)

        s_res = integrate_mc(f_small, sampler, mc_n, seed)
        S_res = integrate_mc(f_big, sampler, mc_n, seed)
    bp = BoundPair(
        min(1.0, c * s_res.value), min(1.0, C * S_res.value),
        "c_d(eps) s_d", "C_d(eps) S_d", c * s_res.error_estimate, C * S_res.error_estimate,
    )
    return Theorem3Result(bp, False, s_res, S_res, envelope, (c, C))


def tau_epsilon_mc(d: int, epsilon: float, delta: float, n: int = 10**5, seed: SeedLike = 0) -> SphericalMeasure:
    """Monte-Carlo frequency of a nonzero ``x`` with ``x^T P^T Delta^-2 P x <= delta``.

    ``Delta`` follows the log-uniform ensemble and ``P`` the Haar law.
    """
    rng = _rng(seed)
    Dl = nu_epsilon_sample(NuEpsilonParams(d, epsilon), rng, n)
    P = haar_orthogonal(d, rng, n)
    forms = np.einsum("kji,kj,kjl->kil", P, Dl**-2.0, P)
    hits = _lattice_hits(forms, delta)
    p = float(np.mean(hits))
    return SphericalMeasure(p, "monte-carlo", math.sqrt(p * (1.0 - p) / n), True)
