"""Channel-manifold geometry and lower bounds for the integer-forcing problem.

A channel with ``d`` users is represented by an upper triangular ``H`` with
``det(gamma I + H^T H) = c0``.  Normalizing,
``Sigma = c0^(-1/d) (gamma I + H^T H)`` is a unit-determinant form whose
lattice minimum controls the effective SNR.  ``M(Sigma) >= gamma c0^(-1/d)``
always holds.  The probability that ``M(Sigma) > delta`` under the
normalized surface measure of the constraint set is bounded from below by
integrating the surface density over the part of the Cholesky chart where
every diagonal entry of ``Sigma``'s factor stays above ``sqrt(delta)``.

For ``d = 2`` the chart is ``L = [[a, b], [0, 1/a]]``, and ``H`` follows in
closed form from ``(a, b)``.

Two measures are offered throughout.  ``'surface'`` is the Riemannian area
of the constraint set, with density ``J * Gamma`` in chart coordinates.
``'chart'`` is plain Lebesgue measure in the coordinates ``(h_11, h_12)``,
which is ``J`` alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .lattice_core import cholesky, has_short_vector, spectral_decompose
from .quadrature import IntegrationResult, integrate_1d, integrate_mc
from .sampling import SeedLike, _rng, manifold_sample_d2

__all__ = [
    "ChannelParams",
    "ManifoldPoint",
    "OffImageError",
    "QRReduction",
    "qr_reduce",
    "h_from_l",
    "l_from_h",
    "j_tilde",
    "g_value",
    "g_gradient",
    "partial_dd",
    "gamma_density",
    "chart_a_range",
    "theta_d2",
    "h_entries_d2",
    "chart_density_d2",
    "chi_d2",
    "kappa_d",
    "m2_lower_bound",
    "theorem5_lower_bound",
    "generic_lower_bound_d2",
    "delta_s",
    "s_star",
    "snr_table",
    "SNR_TABLE",
    "SNR_DELTA_TABLE",
    "m2_monte_carlo",
    "frobenius_window",
    "spectrum_window",
]

MEASURES = ("surface", "chart")


@dataclass(frozen=True)
class ChannelParams:
    """Channel ensemble parameters.

    ``gamma = 1/SNR`` and ``c0 = gamma^m e^(C0)``.  Build from raw channel
    data with :meth:`from_channel` or give ``gamma`` and ``c0`` directly.
    """

    gamma: float
    c0: float
    d: int = 2
    source: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not self.c0 > self.gamma**self.d:
            raise ValueError(f"need c0 > gamma^d for a nonempty manifold (c0={self.c0}, gamma^d={self.gamma**self.d})")

    @classmethod
    def from_channel(cls, m: int, n: int, C0: float, snr: float, units: str = "paper") -> "ChannelParams":
        """From ``m`` users, ``n`` receivers, capacity ``C0`` and linear ``SNR``.

        ``units='paper'`` and ``'nats'`` use ``e^(C0)`` as is.  ``'bits'``
        converts first, using ``e^(C0 ln 2)``.
        """
        if units not in ("paper", "nats", "bits"):
            raise ValueError("units must be one of paper, nats, bits")
        if not snr > 0:
            raise ValueError("SNR must be positive")
        d = min(m, n)
        gamma = 1.0 / snr
        nats = C0 * math.log(2.0) if units == "bits" else C0
        c0 = gamma**m * math.exp(nats)
        return cls(gamma, c0, d, {"m": m, "n": n, "C0": C0, "snr": snr, "units": units})

    @property
    def delta_star(self) -> float:
        return self.gamma / self.c0 ** (1.0 / self.d)

    @property
    def key(self):
        return (float(self.gamma), float(self.c0), int(self.d))


PAPER_PARAMS = ChannelParams.from_channel(2, 2, 30.0, 5.0, "paper")


class OffImageError(ValueError):
    """The triangular factor has no preimage on the manifold (negative radicand)."""

    def __init__(self, i: int, j: int, radicand: float):
        self.i, self.j, self.radicand = i, j, radicand
        super().__init__(f"point is off the chart image: radicand for h[{i},{j}] is {radicand:.6g}")


@dataclass
class ManifoldPoint:
    """Upper triangular ``H`` on the constraint set, optionally with chart data."""

    H: np.ndarray
    params: ChannelParams
    L: Optional[np.ndarray] = None

    def residual(self) -> float:
        """``|det(gamma I + H^T H) / c0 - 1|``.

        The determinant is taken as ``prod(gamma + s_i^2)`` over the singular
        values of ``H``, which avoids the cancellation of a generic
        determinant when the entries of ``H`` are large.
        """
        s = np.linalg.svd(self.H, compute_uv=False)
        logdet = float(np.sum(np.log(self.params.gamma + s * s)))
        return abs(math.expm1(logdet - math.log(self.params.c0)))

    @property
    def chart(self):
        if self.L is None or self.params.d != 2:
            return None
        return float(self.L[0, 0]), float(self.L[0, 1])


@dataclass(frozen=True)
class QRReduction:
    T: np.ndarray
    full_rank: bool


def qr_reduce(H_rect, *, rank_tol: float = 1e-12) -> QRReduction:
    """Triangular ``T`` (nonnegative diagonal) with ``H = Q [T; 0]``.

    ``T^T T = H^T H``, so ``det(gamma I + T^T T)`` is unchanged.  The
    ``full_rank`` flag is False when some diagonal entry vanishes (up to
    ``rank_tol`` relative to the largest column norm), in which case the
    point lies outside the full-rank part of the manifold.
    """
    A = np.atleast_2d(np.asarray(H_rect, dtype=float))
    n, m = A.shape
    if n < m:
        raise ValueError("need at least as many rows as columns")
    _, R = np.linalg.qr(A, mode="reduced")
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    T = s[:, None] * R
    scale = max(np.max(np.linalg.norm(A, axis=0)), 1e-300)
    dg = np.diag(T)
    T[np.abs(T) < 1e-300] = 0.0
    full = bool(np.all(dg > rank_tol * scale))
    return QRReduction(np.triu(T), full)


def h_from_l(L, params: ChannelParams) -> ManifoldPoint:
    """Channel triangle ``H`` with ``H^T H = c0^(1/d) L^T L - gamma I``.

    Computed row by row: diagonal entries as square roots of the running
    radicand, off-diagonal entries by division by the diagonal.

    Raises
    ------
    OffImageError
        When a radicand is not positive.
    """
    L = np.asarray(L, dtype=float)
    d = L.shape[0]
    if d != params.d:
        raise ValueError("dimension mismatch")
    s = params.c0 ** (1.0 / d)
    S = s * (L.T @ L)
    H = np.zeros_like(L)
    for i in range(d):
        r = S[i, i] - params.gamma - H[:i, i] @ H[:i, i]
        if not r > 0:
            raise OffImageError(i, i, float(r))
        H[i, i] = math.sqrt(r)
        for j in range(i + 1, d):
            H[i, j] = (S[i, j] - H[:i, i] @ H[:i, j]) / H[i, i]
    return ManifoldPoint(H, params, L.copy())


def l_from_h(H, params: ChannelParams) -> np.ndarray:
    """Unit-determinant Cholesky factor of ``c0^(-1/d) (gamma I + H^T H)``."""
    H = np.asarray(H, dtype=float)
    d = H.shape[0]
    return cholesky(params.c0 ** (-1.0 / d) * (params.gamma * np.eye(d) + H.T @ H))


def j_tilde(L, H, params: ChannelParams) -> float:
    """``c0^((d-1)(d+2)/(2d)) prod_{i<d} (l_ii/h_ii)^(d-i+1)``."""
    d = params.d
    L = np.asarray(L, dtype=float)
    H = np.asarray(H, dtype=float)
    r = np.diag(L)[:-1] / np.diag(H)[:-1]
    return float(params.c0 ** ((d - 1) * (d + 2) / (2.0 * d)) * np.prod(r ** np.arange(d, 1, -1)))


def g_value(T, params: ChannelParams) -> float:
    """``c0^-1 det(gamma I + T^T T)``."""
    T = np.asarray(T, dtype=float)
    d = T.shape[0]
    return float(np.linalg.det(params.gamma * np.eye(d) + T.T @ T) / params.c0)


def g_gradient(T, params: ChannelParams) -> np.ndarray:
    """Gradient of :func:`g_value` with respect to the entries ``t_ij``, ``i <= j``.

    The differential of the determinant is ``tr(adj(A) dA)`` with
    ``A = gamma I + T^T T``, giving ``dg/dt_ij = (2/c0) (T adj(A))_ij``.
    Returned as a full matrix with zeros below the diagonal.
    """
    T = np.asarray(T, dtype=float)
    d = T.shape[0]
    A = params.gamma * np.eye(d) + T.T @ T
    adj = np.linalg.det(A) * np.linalg.inv(A)
    G = 2.0 / params.c0 * (T @ adj)
    return np.triu(G)


def partial_dd(T, params: ChannelParams) -> float:
    """``dg/dt_dd = (2/c0) t_dd det(gamma I_{d-1} + T'^T T')`` with ``T'`` the leading block."""
    T = np.asarray(T, dtype=float)
    d = T.shape[0]
    Tp = T[: d - 1, : d - 1]
    return float(2.0 / params.c0 * T[d - 1, d - 1] * np.linalg.det(params.gamma * np.eye(d - 1) + Tp.T @ Tp))


def gamma_density(H, params: ChannelParams) -> float:
    """Area factor ``|grad g| / |dg/dt_dd|`` of the graph chart solved for ``h_dd``.

    Always at least 1.
    """
    H = np.asarray(H.H if isinstance(H, ManifoldPoint) else H, dtype=float)
    d = H.shape[0]
    if not H[d - 1, d - 1] > 0:
        raise ValueError("the last diagonal entry must be positive")
    G = g_gradient(H, params)
    iu = np.triu_indices(d)
    return float(np.linalg.norm(G[iu]) / abs(G[d - 1, d - 1]))


# --------------------------------------------------------------------------
# d = 2 closed forms in the (a, b) chart


def chart_a_range(gamma: float, c0: float):
    """``(sqrt(delta*), 1/sqrt(delta*))`` with ``delta* = gamma / sqrt(c0)``."""
    ds = gamma / math.sqrt(c0)
    return math.sqrt(ds), 1.0 / math.sqrt(ds)


def theta_d2(a, gamma: float, c0: float):
    """Half-width ``theta(a)`` of the admissible ``b`` interval.

    ``theta^2 = (q/a^2 - gamma)(q a^2 - gamma) / (gamma q)`` with
    ``q = sqrt(c0)``; zero outside the ``a`` range.
    """
    q = math.sqrt(c0)
    a = np.asarray(a, dtype=float)
    t2 = (q / a**2 - gamma) * (q * a**2 - gamma) / (gamma * q)
    return np.sqrt(np.maximum(t2, 0.0))


def h_entries_d2(a, b, gamma: float, c0: float):
    """``(u, v, w) = (h_11, h_12, h_22)`` for the chart point ``(a, b)``.

    ``u = sqrt(q a^2 - gamma)``, ``v = q a b / u`` and
    ``w = sqrt(gamma q (theta^2 - b^2)) / u``, with ``q = sqrt(c0)``.
    """
    q = math.sqrt(c0)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u = np.sqrt(q * a * a - gamma)
    v = q * a * b / u
    th2 = theta_d2(a, gamma, c0) ** 2
    w = np.sqrt(gamma * q * np.maximum(th2 - b * b, 0.0)) / u
    return u, v, w


def _grad_norm_d2(u, v, w, gamma, c0):
    gu = 2.0 / c0 * u * (w * w + gamma)
    gv = 2.0 / c0 * gamma * v
    gw = 2.0 / c0 * w * (u * u + gamma)
    return np.sqrt(gu * gu + gv * gv + gw * gw), gw


def chart_density_d2(a, b, gamma: float, c0: float, *, measure: str = "surface"):
    """Density of the chosen manifold measure in the ``(a, b)`` chart."""
    if measure not in MEASURES:
        raise ValueError("measure must be 'surface' or 'chart'")
    a = np.asarray(a, dtype=float)
    u, v, w = h_entries_d2(a, b, gamma, c0)
    J = c0 * a * a / (u * u)
    if measure == "chart":
        return J
    gn, gw = _grad_norm_d2(u, v, w, gamma, c0)
    return J * gn / gw


def chi_d2(a, b, params: ChannelParams, kappa: Optional[float] = None):
    """``chi(a, b) = c0^2 a^2 |grad g| / (2 kappa (u^2 + gamma))``.

    With this function the surface density in the chart factorizes as
    ``J Gamma / kappa = chi / (sqrt(gamma q) u sqrt(theta^2 - b^2))``.
    The factor in front is ``(gamma q)^(-1/2)``, with ``q = sqrt(c0)``.
    """
    g, c0 = params.gamma, params.c0
    if kappa is None:
        kappa = kappa_d(params).value
    u, v, w = h_entries_d2(a, b, g, c0)
    gn, _ = _grad_norm_d2(u, v, w, g, c0)
    return c0**2 * np.asarray(a) ** 2 * gn / (2.0 * kappa * (u * u + g))


def _inner_b(a: float, gamma: float, c0: float, measure: str, rel_tol: float) -> float:
    th = float(theta_d2(a, gamma, c0))
    if th <= 0.0:
        return 0.0
    # b = theta sin(phi) removes the 1/sqrt(theta^2 - b^2) endpoint behaviour.
    # With w = w1 cos(phi) the factor cos(phi) is cancelled by hand so that
    # the integrand stays finite at phi = +-pi/2.
    q = math.sqrt(c0)
    u = math.sqrt(q * a * a - gamma)
    J = c0 * a * a / (u * u)
    w1 = math.sqrt(gamma * q) * th / u

    def h(phi):
        cp = np.cos(phi)
        if measure == "chart":
            return J * th * cp
        b = th * np.sin(phi)
        v = q * a * b / u
        gn, _ = _grad_norm_d2(u, v, w1 * np.abs(cp), gamma, c0)
        gw1 = 2.0 / c0 * w1 * (u * u + gamma)
        return J * th * gn / gw1

    return integrate_1d(h, -0.5 * math.pi, 0.5 * math.pi, rel_tol, vectorized=True).value


def _chart_integral_d2(a_lo: float, a_hi: float, params: ChannelParams, measure: str, rel_tol: float) -> IntegrationResult:
    g, c0 = params.gamma, params.c0
    lo, hi = chart_a_range(g, c0)
    inner_tol = rel_tol / 2
    f = lambda a: _inner_b(a, g, c0, measure, inner_tol)  # noqa: E731
    pieces = []
    # the integrand behaves like (a - lo)^(-1/2) at the lower end of the chart
    split = [x for x in (1.0,) if a_lo < x < a_hi]
    edges = [a_lo] + split + [a_hi]
    for x0, x1 in zip(edges[:-1], edges[1:]):
        sing = "left" if abs(x0 - lo) <= 1e-12 * lo else None
        pieces.append(integrate_1d(f, x0, x1, rel_tol, singular=sing))
    return IntegrationResult(sum(p.value for p in pieces), sum(p.error_estimate for p in pieces),
                             sum(p.evaluations for p in pieces), all(p.converged for p in pieces))


@dataclass(frozen=True)
class KappaResult:
    value: float
    error_estimate: float
    method: str
    measure: str
    converged: bool
    other: Optional[float] = None


def _kappa_method_a(params: ChannelParams, measure: str, rel_tol: float) -> IntegrationResult:
    """Integral over the ``(h_11, h_12)`` half-disc ``u^2 + v^2 < c0/gamma - gamma``, ``u > 0``.

    Polar coordinates ``u = r cos(psi)``, ``v = r sin(psi)``; the radial
    integrand has a ``1/sqrt(R - r)`` edge coming from ``1/h_22``.
    """
    g, c0 = params.gamma, params.c0
    R2 = c0 / g - g
    R = math.sqrt(R2)
    if measure == "chart":
        return IntegrationResult(0.5 * math.pi * R2, 0.0, 0, True)

    def radial(psi):
        cp, sp = math.cos(psi), math.sin(psi)

        def h(r):
            u = r * cp
            v = r * sp
            w = np.sqrt(np.maximum(g * (R2 - r * r), 0.0) / (u * u + g))
            gn, gw = _grad_norm_d2(u, v, w, g, c0)
            return r * gn / gw

        return integrate_1d(h, 0.0, R, rel_tol / 2, vectorized=True, singular="right").value

    return integrate_1d(radial, -0.5 * math.pi, 0.5 * math.pi, rel_tol)


@lru_cache(maxsize=64)
def _kappa_cached(key, measure: str, method: str, rel_tol: float):
    params = ChannelParams(*key)
    if params.d != 2:
        raise ValueError("deterministic kappa is implemented for d = 2")
    if method == "a":
        r = _kappa_method_a(params, measure, rel_tol)
    elif method == "b":
        lo, hi = chart_a_range(params.gamma, params.c0)
        r = _chart_integral_d2(lo, hi, params, measure, rel_tol)
    else:
        raise ValueError("method must be 'a' or 'b'")
    return r


def kappa_d(params: ChannelParams, method: str = "b", rel_tol: float = 1e-10, *, measure: str = "surface") -> KappaResult:
    """Total manifold measure for ``d = 2``.

    ``method='a'`` integrates over the ``(h_11, h_12)`` chart and
    ``method='b'`` over the Cholesky ``(a, b)`` chart with density
    ``J Gamma``.  ``method='both'`` runs both and raises if they disagree
    beyond ``100 * rel_tol`` relative.  Results are memoized per
    ``(gamma, c0, d, tol, measure)``.
    """
    if measure not in MEASURES:
        raise ValueError("measure must be 'surface' or 'chart'")
    if method == "both":
        ra = _kappa_cached(params.key, measure, "a", rel_tol)
        rb = _kappa_cached(params.key, measure, "b", rel_tol)
        rel = abs(ra.value - rb.value) / abs(rb.value)
        if rel > max(100 * rel_tol, (ra.error_estimate + rb.error_estimate) / abs(rb.value)) and rel > 1e-8:
            raise ArithmeticError(f"kappa formulas disagree: A={ra.value:.12g}, B={rb.value:.12g} (rel {rel:.2e})")
        return KappaResult(rb.value, max(rb.error_estimate, abs(ra.value - rb.value)), "both", measure,
                           ra.converged and rb.converged, ra.value)
    r = _kappa_cached(params.key, measure, method, rel_tol)
    return KappaResult(r.value, r.error_estimate, method, measure, r.converged)


@dataclass(frozen=True)
class LowerBound:
    value: float
    error_estimate: float
    label: str
    converged: bool = True
    details: dict = field(default_factory=dict)


def m2_lower_bound(delta: float, params: ChannelParams, *, measure: str = "surface", rel_tol: float = 1e-9) -> LowerBound:
    """Lower bound on ``P(M(Sigma) > delta)`` for ``d = 2``.

    Equal to 1 when ``delta <= delta*``.  Otherwise it is the normalized
    integral of the chart density over ``sqrt(delta) < a < 1/sqrt(delta)``,
    ``|b| < theta(a)``.
    """
    if params.d != 2:
        raise ValueError("m2_lower_bound is the d = 2 evaluator")
    if not delta < 1:
        raise ValueError("delta must be < 1")
    if delta <= params.delta_star:
        return LowerBound(1.0, 0.0, "delta <= delta*: exactly 1")
    kap = kappa_d(params, "b", rel_tol / 10, measure=measure)
    rd = math.sqrt(delta)
    num = _chart_integral_d2(rd, 1.0 / rd, params, measure, rel_tol)
    val = num.value / kap.value
    err = val * (num.error_estimate / abs(num.value) + kap.error_estimate / kap.value)
    return LowerBound(min(1.0, val), err, f"normalized {measure} integral over N*[delta]",
                      num.converged and kap.converged, {"kappa": kap.value, "numerator": num.value})


# --------------------------------------------------------------------------
# general-d route (matrix formulas only)


def _point_density(L: np.ndarray, params: ChannelParams, measure: str) -> float:
    """Chart density at ``L``, or 0 off the image."""
    try:
        pt = h_from_l(L, params)
    except OffImageError:
        return 0.0
    J = j_tilde(L, pt.H, params)
    if measure == "chart":
        return J
    return J * gamma_density(pt.H, params)


def _h22_radicand(a: float, b: float, params: ChannelParams) -> float:
    L = np.array([[a, b], [0.0, 1.0 / a]])
    s = math.sqrt(params.c0)
    S = s * (L.T @ L)
    r11 = S[0, 0] - params.gamma
    if r11 <= 0:
        return -1.0
    h12 = S[0, 1] / math.sqrt(r11)
    return S[1, 1] - params.gamma - h12 * h12


def _generic_d2(delta: Optional[float], params: ChannelParams, measure: str, rel_tol: float) -> IntegrationResult:
    """Chart integral for ``d = 2`` using only the matrix routines.

    The admissible ``b`` interval for each ``a`` is found by root finding
    on the last radicand, the range of ``a`` by root finding on the first
    radicand and on the last one at ``b = 0``.
    """
    g = params.gamma
    s = math.sqrt(params.c0)
    # smallest a: the first radicand vanishes
    a_min = brentq(lambda a: s * a * a - g, 0.0, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    # largest a with a nonempty b interval: last radicand at b = 0 vanishes
    a_max = brentq(lambda a: _h22_radicand(a, 0.0, params), 1.0, 1e3 / a_min, xtol=1e-14, rtol=1e-15)
    if delta is not None:
        lo, hi = max(a_min, math.sqrt(delta)), min(a_max, 1.0 / math.sqrt(delta))
    else:
        lo, hi = a_min, a_max
    B = math.sqrt(params.c0 ** -0.5 * (g + (params.c0 - g * g) / g))

    def inner(a):
        r0 = _h22_radicand(a, 0.0, params)
        if r0 <= 0:
            return 0.0
        bmax = brentq(lambda b: _h22_radicand(a, b, params), 0.0, B + 1.0, xtol=1e-15, rtol=1e-15)

        def integrand(b):
            return _point_density(np.array([[a, b], [0.0, 1.0 / a]]), params, measure)

        return integrate_1d(integrand, -bmax, bmax, rel_tol / 2, singular="both", max_intervals=400).value

    sing = "left" if lo <= a_min * (1 + 1e-12) else None
    pieces = []
    edges = [lo] + [x for x in (1.0,) if lo < x < hi] + [hi]
    for k, (x0, x1) in enumerate(zip(edges[:-1], edges[1:])):
        pieces.append(integrate_1d(inner, x0, x1, rel_tol, singular=sing if k == 0 else None))
    return IntegrationResult(sum(p.value for p in pieces), sum(p.error_estimate for p in pieces),
                             sum(p.evaluations for p in pieces), all(p.converged for p in pieces))


def generic_lower_bound_d2(delta: float, params: ChannelParams, *, measure: str = "surface",
                           rel_tol: float = 1e-7) -> LowerBound:
    """:func:`m2_lower_bound` recomputed from the matrix routines alone.

    Serves as an independent check of the closed forms.  The last radicand
    is formed by cancellation, so this route only reaches full accuracy
    when ``sqrt(c0) / gamma`` is moderate (say below ``1e4``).
    """
    if delta <= params.delta_star:
        return LowerBound(1.0, 0.0, "delta <= delta*: exactly 1")
    num = _generic_d2(delta, params, measure, rel_tol)
    den = _generic_d2(None, params, measure, rel_tol)
    val = num.value / den.value
    err = val * (num.error_estimate / max(num.value, 1e-300) + den.error_estimate / den.value)
    return LowerBound(val, err, "generic chart quadrature", num.converged and den.converged,
                      {"kappa": den.value, "numerator": num.value})


def _delta_box_member(beta_p: np.ndarray, delta: float) -> bool:
    rd = math.sqrt(delta)
    return bool(np.all(beta_p > rd) and np.prod(beta_p) < 1.0 / rd)


def theorem5_lower_bound(delta: float, params: ChannelParams, *, mc_n: int = 20000, seed: SeedLike = 0,
                         measure: str = "surface", rel_tol: float = 1e-8) -> LowerBound:
    """Lower bound on ``P(M(Sigma) > delta)`` from the chart integral, any ``d``.

    ``d = 2`` is delegated to :func:`m2_lower_bound`.  For ``d >= 3`` the
    chart is sampled over a box
    of ``(beta', u)`` with log-uniform diagonal and uniform off-diagonal
    coordinates.  The estimate is the ratio of the box integral restricted
    to the region to the unrestricted one, with a delta-method standard
    error.
    """
    if measure not in MEASURES:
        raise ValueError("measure must be 'surface' or 'chart'")
    if not delta < 1:
        raise ValueError("delta must be < 1")
    d = params.d
    if delta <= params.delta_star:
        return LowerBound(1.0, 0.0, "delta <= delta*: exactly 1")
    if d == 2:
        return m2_lower_bound(delta, params, measure=measure, rel_tol=rel_tol)
    g, c0 = params.gamma, params.c0
    B = math.sqrt(c0 ** (-1.0 / d) * (g + (c0 - g**d) / g ** (d - 1)))
    bmin = math.sqrt(params.delta_star)
    p = d * (d - 1) // 2
    iu = np.triu_indices(d, 1)
    rng = _rng(seed)
    lb_lo, lb_hi = math.log(bmin), math.log(B)
    logs = rng.uniform(lb_lo, lb_hi, (mc_n, d - 1))
    beta = np.exp(logs)
    U = rng.uniform(-B, B, (mc_n, p))
    vol = (lb_hi - lb_lo) ** (d - 1) * (2 * B) ** p
    w = np.zeros(mc_n)
    inside = np.zeros(mc_n, dtype=bool)
    rejected = 0
    for k in range(mc_n):
        L = np.zeros((d, d))
        L[np.arange(d - 1), np.arange(d - 1)] = beta[k]
        L[d - 1, d - 1] = 1.0 / np.prod(beta[k])
        L[iu] = U[k]
        dens = _point_density(L, params, measure)
        if dens == 0.0:
            rejected += 1
            continue
        w[k] = dens * vol * np.prod(beta[k])  # proposal density is 1/(vol prod beta)
        inside[k] = _delta_box_member(beta[k], delta)
    tot = w.sum()
    if tot <= 0:
        return LowerBound(0.0, 0.0, "empty sample of the chart", False, {"rejected": rejected})
    num = np.where(inside, w, 0.0)
    ratio = num.sum() / tot
    # delta method for a ratio of means
    z = num - ratio * w
    se = math.sqrt(np.sum(z * z)) / tot
    return LowerBound(float(ratio), float(se), "chart Monte Carlo ratio", True,
                      {"rejected": rejected, "kappa": float(tot / mc_n), "n": mc_n})


# --------------------------------------------------------------------------
# effective SNR table


def delta_s(s, params: ChannelParams):
    """``4 d^2 s gamma^d c0^(-1/d)``."""
    d = params.d
    return 4.0 * d * d * np.asarray(s, dtype=float) * params.gamma**d * params.c0 ** (-1.0 / d)


def s_star(params: ChannelParams) -> float:
    """Value of ``s`` at which ``delta_s = delta*``."""
    d = params.d
    return 1.0 / (4.0 * d * d * params.gamma ** (d - 1))


SNR_TABLE = {0.3125: 1.0, 1.0: 0.672723, 1.5: 0.560289, 2.0: 0.489859, 5.0: 0.314961, 10.0: 0.223899, 30.0: 0.12972}
SNR_DELTA_TABLE = {1.0: "9.79e-7", 30.0: "2.94e-5"}


@dataclass(frozen=True)
class SnrTableRow:
    s: float
    delta_s: float
    lower_bound: float
    error_estimate: float = 0.0
    reference: Optional[float] = None
    delta_reference: Optional[str] = None
    status: str = "n/a"


def snr_table(s_list: Sequence[float], params: ChannelParams, *, measure: str = "surface", rel_tol: float = 1e-9,
              mc_n: int = 20000, seed: SeedLike = 0, check_tol: float = 1e-3) -> list:
    """Rows ``(s, delta_s, bound)``.

    When the parameters equal the reference channel ``gamma = 0.2``,
    ``c0 = e^30/25``, stored reference values are attached and compared.
    Bounds must agree to ``check_tol`` relative and ``delta_s`` to 3
    significant digits.
    """
    rows = []
    is_ref = abs(params.gamma - PAPER_PARAMS.gamma) < 1e-15 and abs(params.c0 / PAPER_PARAMS.c0 - 1) < 1e-12 and params.d == 2
    for s in s_list:
        ds = float(delta_s(s, params))
        if params.d == 2:
            lb = m2_lower_bound(min(ds, 1 - 1e-15), params, measure=measure, rel_tol=rel_tol) if ds < 1 else LowerBound(0.0, 0.0, "delta >= 1")
        else:
            lb = theorem5_lower_bound(ds, params, mc_n=mc_n, seed=seed, measure=measure)
        ref = SNR_TABLE.get(float(s)) if is_ref else None
        dref = SNR_DELTA_TABLE.get(float(s)) if is_ref else None
        status = "n/a"
        if ref is not None:
            ok = abs(lb.value - ref) <= check_tol * abs(ref)
            if dref is not None:
                ok = ok and float(f"{ds:.2e}") == float(dref)
            status = "PASS" if ok else "FAIL"
        rows.append(SnrTableRow(float(s), ds, lb.value, lb.error_estimate, ref, dref, status))
    return rows


# --------------------------------------------------------------------------
# Monte-Carlo oracle and window checks


@dataclass(frozen=True)
class MCEstimate:
    value: float
    error_estimate: float
    n: int
    rejected: int
    kappa_estimate: float
    kappa_error: float


def m2_monte_carlo(delta: float, params: ChannelParams, n: int = 10**5, seed: SeedLike = 0, *, measure: str = "surface") -> MCEstimate:
    """Weighted-sample estimate of ``P(M(Sigma) > delta)`` for ``d = 2``.

    Every weighted manifold point is tested exactly for a nonzero vector of
    value at most ``delta``.  The estimate is self-normalized, and its error
    comes from the delta method.
    """
    smp = manifold_sample_d2(params.gamma, params.c0, n, seed, measure=measure)
    hits = np.empty(n, dtype=bool)
    for k in range(n):
        a, b = smp.a[k], smp.b[k]
        L = np.array([[a, b], [0.0, 1.0 / a]])
        hits[k] = not has_short_vector(None, delta, factor=L)
    w = smp.weights
    tot = w.sum()
    num = np.where(hits, w, 0.0)
    r = num.sum() / tot
    z = num - r * w
    se = math.sqrt(np.sum(z * z)) / tot
    return MCEstimate(float(r), float(se), n, smp.rejected, float(w.mean()), float(w.std(ddof=1) / math.sqrt(n)))


def frobenius_window(params: ChannelParams):
    """Range of ``|H|_F^2`` on the manifold: ``[c0^(1/d) - gamma, (c0 - gamma^d)/gamma^(d-1)]``."""
    d, g, c0 = params.d, params.gamma, params.c0
    return c0 ** (1.0 / d) - g, (c0 - g**d) / g ** (d - 1)


def spectrum_window(params: ChannelParams, m: Optional[int] = None):
    """Interval ``[0, gamma (c0 gamma^-m - 1)]`` containing the spectrum of ``H^T H``."""
    m = params.d if m is None else m
    return 0.0, params.gamma * (params.c0 * params.gamma ** (-m) - 1.0)


def spectrum_of(H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    return spectral_decompose(H.T @ H)[1]
