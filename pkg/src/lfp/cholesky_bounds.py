"""Density-based bounds through the Cholesky change of variables.

Writing ``Q = L^T L`` with ``L`` upper triangular, the first diagonal entry
of ``L`` is the length of the first basis vector of the lattice ``L Z^d``.
If every diagonal entry exceeds ``sqrt(delta)`` no nonzero vector can be that
short, and a short first basis vector is itself a witness.  Integrating the
pushed-forward density of the diagonal therefore brackets the probability of
``M(Q) <= delta`` for any density on forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .lattice_core import cholesky, has_short_vector
from .quadrature import IntegrationResult, integrate_1d, integrate_mc
from .sampling import SeedLike, _rng, wishart_sample
from .spectral_bounds import BoundPair

__all__ = [
    "DensityOnForms",
    "WishartParams",
    "jacobian_cholesky",
    "jacobian_psi",
    "phi_chol",
    "phi_chol_unit",
    "G_f",
    "g_f",
    "theorem4_bounds",
    "wishart_density",
    "wishart_J1_J2",
    "multivariate_gamma",
    "gaussian_bump",
    "density_from_spec",
    "event_frequency",
    "WISHART_TABLE",
    "wishart_table",
]


@dataclass
class DensityOnForms:
    """A probability density on positive definite forms.

    ``evaluate`` takes a stack of matrices ``(..., d, d)`` and returns the
    density values; points outside the support must map to 0.  ``support``
    is ``'cone'`` (all positive definite forms, Lebesgue measure on the
    upper triangle) or ``'unit-det'`` (determinant one, Lebesgue measure on
    the upper triangle without the last diagonal entry).  ``sampler``, when
    present, draws ``(n, d, d)`` arrays from the same law and is used for
    proposal fitting and Monte-Carlo cross-checks.
    """

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    support: str = "cone"
    name: str = ""
    sampler: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.support not in ("cone", "unit-det"):
            raise ValueError("support must be 'cone' or 'unit-det'")

    def __call__(self, Q):
        return self.evaluate(np.asarray(Q, dtype=float))


@dataclass(frozen=True)
class WishartParams:
    d: int
    n: int
    V: np.ndarray = None

    def __post_init__(self):
        V = np.eye(self.d) if self.V is None else np.atleast_2d(np.asarray(self.V, dtype=float))
        object.__setattr__(self, "V", V)
        if V.shape != (self.d, self.d):
            raise ValueError("V must be d x d")
        if self.n < self.d:
            raise ValueError(f"Wishart density needs n >= d (got n={self.n}, d={self.d})")
        cholesky(V)


# --------------------------------------------------------------------------
# Jacobians and coordinate maps


def jacobian_cholesky(L) -> float:
    """``2^d prod_i l_ii^(d-i+1)``, the Jacobian of ``L -> L^T L``."""
    L = np.asarray(L, dtype=float)
    d = L.shape[0]
    diag = np.diag(L)
    return float(2.0**d * np.prod(diag ** np.arange(d, 0, -1)))


def jacobian_psi(H, gamma: float, c: float, *, tol: float = 1e-9) -> float:
    """Jacobian of ``H -> c^(-1/d) (gamma I + H^T H)`` on the constraint set.

    Coordinates are the entries of ``H`` other than ``h_dd``, mapped to the
    entries of the image other than its last diagonal entry.  The value is
    ``2^(d-1) c^(-(d-1)(d+2)/(2d)) prod_{i<d} h_ii^(d-i+1)``.

    Raises
    ------
    ValueError
        If ``det(gamma I + H^T H)`` differs from ``c`` by more than ``tol``
        relative.
    """
    H = np.asarray(H, dtype=float)
    d = H.shape[0]
    det = np.linalg.det(gamma * np.eye(d) + H.T @ H)
    if abs(det - c) > tol * abs(c):
        raise ValueError(f"H is off the manifold: det(gamma I + H^T H) = {det:.12g}, expected {c:.12g}")
    diag = np.diag(H)[:-1]
    expo = np.arange(d, 1, -1)
    return float(2.0 ** (d - 1) * c ** (-(d - 1) * (d + 2) / (2.0 * d)) * np.prod(diag**expo))


def _upper_from(beta, u, d: int) -> np.ndarray:
    """Batch of upper triangular matrices from diagonal ``beta`` and row-major off-diagonals ``u``."""
    beta = np.asarray(beta, dtype=float)
    u = np.asarray(u, dtype=float)
    shape = np.broadcast_shapes(beta.shape[:-1], u.shape[:-1])
    L = np.zeros(shape + (d, d))
    idx = np.arange(d)
    L[..., idx, idx] = np.broadcast_to(beta, shape + (d,))
    iu = np.triu_indices(d, 1)
    if iu[0].size:
        L[..., iu[0], iu[1]] = np.broadcast_to(u, shape + (iu[0].size,))
    return L


def phi_chol(beta, u) -> np.ndarray:
    """``L^T L`` for ``L`` with diagonal ``beta`` and off-diagonal entries ``u``."""
    beta = np.asarray(beta, dtype=float)
    d = beta.shape[-1]
    L = _upper_from(beta, u, d)
    return np.swapaxes(L, -1, -2) @ L


def phi_chol_unit(beta_p, u) -> np.ndarray:
    """Determinant-one variant: the last diagonal entry is ``1/prod(beta_p)``."""
    beta_p = np.asarray(beta_p, dtype=float)
    last = 1.0 / np.prod(beta_p, axis=-1, keepdims=True)
    return phi_chol(np.concatenate([beta_p, last], axis=-1), u)


def _batch_upper_cholesky(Q: np.ndarray):
    """Upper factors for a stack of matrices plus a mask of positive definite ones."""
    Q = np.asarray(Q, dtype=float)
    flat = Q.reshape((-1,) + Q.shape[-2:])
    ok = np.zeros(flat.shape[0], dtype=bool)
    L = np.zeros_like(flat)
    if flat.shape[0] == 0:
        return L.reshape(Q.shape), ok.reshape(Q.shape[:-2])
    scale = np.max(np.abs(flat), axis=(-2, -1))
    sym = np.max(np.abs(flat - np.swapaxes(flat, -1, -2)), axis=(-2, -1)) <= 1e-10 * scale
    try:
        if np.all(sym):
            L = np.swapaxes(np.linalg.cholesky(flat), -1, -2)
            ok[:] = np.all(np.isfinite(L), axis=(-2, -1))
            L[~ok] = 0.0
            return L.reshape(Q.shape), ok.reshape(Q.shape[:-2])
    except np.linalg.LinAlgError:
        pass
    cand = np.flatnonzero(sym)
    if cand.size:
        ev = np.linalg.eigvalsh(flat[cand])
        cand = cand[ev[:, 0] > 0]
    for k in cand:
        try:
            L[k] = np.linalg.cholesky(flat[k]).T
            ok[k] = True
        except np.linalg.LinAlgError:
            pass
    return L.reshape(Q.shape), ok.reshape(Q.shape[:-2])


# --------------------------------------------------------------------------
# densities


def multivariate_gamma(d: int, a: float) -> float:
    """``Gamma_d(a) = pi^(d(d-1)/4) prod_{j=1}^d Gamma(a + (1-j)/2)``."""
    return math.exp(0.25 * d * (d - 1) * math.log(math.pi) + sum(gammaln(a + (1 - j) / 2.0) for j in range(1, d + 1)))


def wishart_density(params: WishartParams) -> DensityOnForms:
    """Wishart density ``W_d(V, n)`` on the cone of positive definite forms.

    ``f(Q) = |Q|^((n-d-1)/2) exp(-tr(V^-1 Q)/2) / (2^(nd/2) |V|^(n/2) Gamma_d(n/2))``
    and 0 outside the cone.
    """
    d, n, V = params.d, params.n, params.V
    Vinv = np.linalg.inv(V)
    logc = -(0.5 * n * d * math.log(2.0) + 0.5 * n * np.linalg.slogdet(V)[1]
             + math.log(multivariate_gamma(d, 0.5 * n)))

    def evaluate(Q):
        Q = np.asarray(Q, dtype=float)
        _, ok = _batch_upper_cholesky(Q)
        out = np.zeros(Q.shape[:-2])
        if np.any(ok):
            Qo = Q[ok]
            logdet = np.linalg.slogdet(Qo)[1]
            tr = np.einsum("ij,kji->k", Vinv, Qo)
            out[ok] = np.exp(logc + 0.5 * (n - d - 1) * logdet - 0.5 * tr)
        return out

    def sampler(rng, m):
        return wishart_sample(V, n, rng, m)

    return DensityOnForms(d, evaluate, "cone", f"wishart(d={d}, n={n})", sampler, {"d": d, "n": n, "V": V.tolist()})


def gaussian_bump(d: int, components: Sequence[dict], *, support: str = "cone") -> DensityOnForms:
    """Mixture density built in Cholesky coordinates.

    Each component gives independent log-normal diagonal entries
    (``log_mean``, ``log_sd``, arrays of length ``d`` or ``d-1`` for the
    ``unit-det`` support) and independent normal off-diagonal entries
    (``u_mean``, ``u_sd``), plus a mixture ``weight``.  The density on
    forms is that law divided by the Jacobian of the Cholesky map, so it is
    normalized by construction and can be sampled exactly.
    """
    nb = d if support == "cone" else d - 1
    p = d * (d - 1) // 2
    comps = []
    for c in components:
        lm = np.broadcast_to(np.asarray(c.get("log_mean", 0.0), dtype=float), (nb,)).copy()
        ls = np.broadcast_to(np.asarray(c.get("log_sd", 0.5), dtype=float), (nb,)).copy()
        um = np.broadcast_to(np.asarray(c.get("u_mean", 0.0), dtype=float), (p,)).copy()
        us = np.broadcast_to(np.asarray(c.get("u_sd", 1.0), dtype=float), (p,)).copy()
        if np.any(ls <= 0) or np.any(us <= 0):
            raise ValueError("bump standard deviations must be positive")
        comps.append((float(c.get("weight", 1.0)), lm, ls, um, us))
    wsum = sum(c[0] for c in comps)
    if not wsum > 0:
        raise ValueError("mixture weights must sum to a positive number")
    comps = [(w / wsum, lm, ls, um, us) for w, lm, ls, um, us in comps]
    iu = np.triu_indices(d, 1)
    expo = np.arange(d, 0, -1)[:nb]
    jac_pow = d if support == "cone" else d - 1

    def coord_density(beta, u):
        lb = np.log(beta)
        tot = 0.0
        for w, lm, ls, um, us in comps:
            zb = (lb - lm) / ls
            zu = (u - um) / us
            logp = (-0.5 * np.sum(zb**2, axis=-1) - np.sum(np.log(ls) + lb, axis=-1)
                    - 0.5 * np.sum(zu**2, axis=-1) - np.sum(np.log(us), axis=-1)
                    - 0.5 * (nb + p) * math.log(2 * math.pi))
            tot = tot + w * np.exp(logp)
        return tot

    def evaluate(Q):
        Q = np.asarray(Q, dtype=float)
        L, ok = _batch_upper_cholesky(Q)
        out = np.zeros(Q.shape[:-2])
        if support == "unit-det":
            det = np.linalg.det(Q)
            ok = ok & (np.abs(det - 1.0) < 1e-9)
        if np.any(ok):
            Lo = L[ok]
            beta = np.diagonal(Lo, axis1=-2, axis2=-1)[:, :nb]
            u = Lo[:, iu[0], iu[1]]
            jac = 2.0**jac_pow * np.prod(beta**expo, axis=-1)
            out[ok] = coord_density(beta, u) / jac
        return out

    def sampler(rng, m):
        ws = np.array([c[0] for c in comps])
        pick = rng.choice(len(comps), size=m, p=ws)
        beta = np.empty((m, nb))
        u = np.empty((m, p))
        for k, (_, lm, ls, um, us) in enumerate(comps):
            sel = pick == k
            cnt = int(sel.sum())
            beta[sel] = np.exp(lm + ls * rng.standard_normal((cnt, nb)))
            u[sel] = um + us * rng.standard_normal((cnt, p))
        if support == "cone":
            return phi_chol(beta, u)
        return phi_chol_unit(beta, u)

    return DensityOnForms(d, evaluate, support, f"gaussian-bump(d={d}, k={len(comps)})", sampler,
                          {"components": [dict(c) for c in components]})


def density_from_spec(spec: dict) -> DensityOnForms:
    """Build a density from a small JSON-style description.

    ``{"family": "wishart", "d": 2, "n": 2, "V": [[1, 0], [0, 1]]}`` or
    ``{"family": "gaussian-bump", "d": 2, "support": "cone", "components": [...]}``.
    """
    fam = spec.get("family")
    if fam == "wishart":
        d = int(spec.get("d", 2))
        return wishart_density(WishartParams(d, int(spec.get("n", d)), spec.get("V")))
    if fam == "gaussian-bump":
        d = int(spec.get("d", 2))
        comps = spec.get("components") or [{}]
        return gaussian_bump(d, comps, support=spec.get("support", "cone"))
    raise ValueError(f"unknown density family {fam!r} (expected 'wishart' or 'gaussian-bump')")


# --------------------------------------------------------------------------
# pushed-forward diagonal densities


def _tan_u_integral(fun_u: Callable[[np.ndarray], np.ndarray], rel_tol: float) -> IntegrationResult:
    """``int_R fun_u(u) du`` through ``u = tan(v)``, adaptive."""
    def h(v):
        t = np.tan(v)
        return fun_u(t) / np.cos(v) ** 2

    left = integrate_1d(h, -0.5 * math.pi, 0.0, rel_tol, vectorized=True)
    right = integrate_1d(h, 0.0, 0.5 * math.pi, rel_tol, vectorized=True)
    return IntegrationResult(left.value + right.value, left.error_estimate + right.error_estimate,
                             left.evaluations + right.evaluations, left.converged and right.converged)


def _tan_u_integral_batch(fun_u: Callable[[np.ndarray], np.ndarray], m: int, rel_tol: float, max_panels: int = 4096):
    """Row-wise ``int_R fun_u(u)[k] du`` for ``m`` integrands at once.

    ``fun_u`` maps a ``(K,)`` array of ``u`` nodes to an ``(m, K)`` array.
    After ``u = tan(v)`` a composite 15-point Kronrod rule on equal panels is
    refined by doubling until the embedded Gauss estimate agrees to
    ``rel_tol`` on every row.  Returns ``(values, errors, converged)``.
    """
    from .quadrature import _GW, _KW, _NODES, ABS_FLOOR

    panels = 32
    while True:
        edges = np.linspace(-0.5 * math.pi, 0.5 * math.pi, panels + 1)
        c = 0.5 * (edges[:-1] + edges[1:])
        hw = 0.5 * (edges[1] - edges[0])
        v = (c[:, None] + hw * _NODES[None, :]).ravel()
        t = np.tan(v)
        vals = np.asarray(fun_u(t), dtype=float).reshape(m, panels, 15) / (np.cos(v) ** 2).reshape(1, panels, 15)
        K = hw * np.einsum("kpn,n->k", vals, _KW)
        G = hw * np.einsum("kpn,n->k", vals, _GW)
        err = np.abs(K - G)
        ok = err <= rel_tol * np.maximum(np.abs(K), ABS_FLOOR)
        if np.all(ok) or panels >= max_panels:
            return K, err, bool(np.all(ok))
        panels *= 2


def _fit_u_proposal(f: DensityOnForms, p: int, seed: SeedLike):
    """Mean and spread of the off-diagonal Cholesky entries, from a pilot sample."""
    if f.sampler is None or p == 0:
        return np.zeros(p), np.full(p, 1.5)
    rng = _rng(seed)
    Q = f.sampler(rng, 2000)
    L, ok = _batch_upper_cholesky(Q)
    iu = np.triu_indices(f.dim, 1)
    U = L[ok][:, iu[0], iu[1]]
    return U.mean(axis=0), 1.25 * U.std(axis=0) + 1e-3


def G_f(f: DensityOnForms, beta, *, mc_n: int = 20000, seed: SeedLike = 0, rel_tol: float = 1e-10) -> IntegrationResult:
    """Density of the Cholesky diagonal at ``beta``.

    ``G_f(beta) = J(beta) int_{R^p} f(phi(beta, u)) du`` with ``J`` the
    Cholesky Jacobian (``2^d prod beta_i^(d-i+1)``, or its determinant-one
    counterpart).  The ``u`` integral is a quadrature after ``u = tan(v)``
    when ``p = 1`` and a Gaussian-proposal Monte-Carlo integral for larger
    ``p``.
    """
    d = f.dim
    beta = np.asarray(beta, dtype=float).ravel()
    unit = f.support == "unit-det"
    nb = d - 1 if unit else d
    if beta.size != nb:
        raise ValueError(f"beta must have {nb} entries")
    if np.any(beta <= 0):
        return IntegrationResult(0.0, 0.0, 0, True)
    expo = np.arange(d, 0, -1)[:nb]
    jac = 2.0**nb * float(np.prod(beta**expo))
    build = phi_chol_unit if unit else phi_chol
    p = d * (d - 1) // 2
    if p == 0:
        val = jac * float(f(build(beta, np.zeros(0))))
        return IntegrationResult(val, 0.0, 1, True)
    if p == 1:
        res = _tan_u_integral(lambda u: f(build(beta[None, :], u[:, None])), rel_tol)
        return IntegrationResult(jac * res.value, jac * res.error_estimate, res.evaluations, res.converged)
    mu, sd = _fit_u_proposal(f, p, seed)

    def sampler(rng, m):
        z = rng.standard_normal((m, p))
        u = mu + sd * z
        dens = np.exp(-0.5 * np.sum(z**2, axis=1) - np.sum(np.log(sd)) - 0.5 * p * math.log(2 * math.pi))
        return u, dens

    res = integrate_mc(lambda u: f(build(np.broadcast_to(beta, (u.shape[0], nb)), u)), sampler, mc_n, seed)
    return IntegrationResult(jac * res.value, jac * res.error_estimate, res.evaluations, res.converged)


def _G_batch_d2(f: DensityOnForms, beta: np.ndarray, rel_tol: float):
    """``G_f`` for ``d = 2`` at a stack of diagonal vectors ``beta`` (shape ``(m, nb)``)."""
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    m = beta.shape[0]
    unit = f.support == "unit-det"
    build = phi_chol_unit if unit else phi_chol
    expo = np.arange(2, 0, -1)[: beta.shape[1]]
    jac = 2.0 ** beta.shape[1] * np.prod(beta**expo, axis=1)

    def fun(u):
        B = np.broadcast_to(beta[:, None, :], (m, u.size, beta.shape[1]))
        U = np.broadcast_to(u[None, :, None], (m, u.size, 1))
        return f(build(B, U))

    val, err, conv = _tan_u_integral_batch(fun, m, rel_tol)
    return jac * val, jac * err, conv


def g_f(f: DensityOnForms, beta1: float, *, rel_tol: float = 1e-9) -> IntegrationResult:
    """Marginal density of the first Cholesky diagonal entry (``d = 2`` only).

    For the cone support this integrates ``G_f(beta1, .)`` over
    ``(0, inf)``; for the determinant-one support with ``d = 2`` there is
    nothing left to integrate.
    """
    if f.dim != 2:
        raise ValueError("deterministic g_f is implemented for d = 2")
    if f.support == "unit-det":
        return G_f(f, [beta1], rel_tol=rel_tol)
    inner_tol = rel_tol / 2

    def h(b2):
        B = np.column_stack([np.full_like(b2, beta1), b2])
        return _G_batch_d2(f, B, inner_tol)[0]

    return integrate_1d(h, 0.0, math.inf, rel_tol, vectorized=True)


@dataclass(frozen=True)
class Theorem4Result:
    bounds: BoundPair
    raw_lower: float
    raw_upper: float
    converged: bool


def _clamp(x):
    return min(1.0, max(0.0, x))


def theorem4_bounds(f: DensityOnForms, delta: float, *, rel_tol: float = 1e-8, mc_n: int = 200_000, seed: SeedLike = 0) -> Theorem4Result:
    """Bracket ``P_f(M(Q) <= delta)`` by integrals of the diagonal density.

    Cone support: lower ``1 - int_{beta_1 > sqrt(delta)} G_f`` and upper
    ``1 - int_{(sqrt(delta), inf)^d} G_f``.  Determinant-one support: the
    upper side integrates over ``beta_i > sqrt(delta)`` with
    ``prod beta_i < 1/sqrt(delta)`` (the last diagonal entry must also
    exceed ``sqrt(delta)``).  Results are clamped to ``[0, 1]``; the raw
    values are kept in the result.

    ``d = 2`` uses nested deterministic quadrature.  For ``d >= 3``, the
    integrals are taken jointly over ``(beta, u)`` by Monte Carlo with the
    density's own sampler as proposal when available, i.e. as frequencies
    of the events ``l_11 > sqrt(delta)`` and ``min_i l_ii > sqrt(delta)``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    d = f.dim
    rd = math.sqrt(delta)
    unit = f.support == "unit-det"
    if d == 2:
        inner = rel_tol / 3
        if unit:
            def G1(b):
                return _G_batch_d2(f, b[:, None], inner)[0]

            lo_int = integrate_1d(G1, rd, math.inf, rel_tol, vectorized=True)
            up_int = integrate_1d(G1, rd, 1.0 / rd, rel_tol, vectorized=True)
        else:
            def band(b1, start):
                def h(b2):
                    B = np.column_stack([np.full_like(b2, b1), b2])
                    return _G_batch_d2(f, B, inner / 2)[0]
                return integrate_1d(h, start, math.inf, inner, vectorized=True).value

            lo_int = integrate_1d(lambda b1: band(b1, 0.0), rd, math.inf, rel_tol)
            up_int = integrate_1d(lambda b1: band(b1, rd), rd, math.inf, rel_tol)
        lo_raw, up_raw = 1.0 - lo_int.value, 1.0 - up_int.value
        bp = BoundPair(_clamp(lo_raw), _clamp(up_raw), "1 - int_{beta_1 > sqrt(delta)} G", "1 - int_{I(delta)} G",
                       lo_int.error_estimate, up_int.error_estimate)
        return Theorem4Result(bp, lo_raw, up_raw, lo_int.converged and up_int.converged)
    if f.sampler is None:
        raise ValueError("d >= 3 needs a density with a sampler")
    rng = _rng(seed)
    Q = f.sampler(rng, mc_n)
    L, ok = _batch_upper_cholesky(Q)
    diag = np.diagonal(L, axis1=-2, axis2=-1)
    first = ok & (diag[:, 0] > rd)
    allbig = ok & np.all(diag > rd, axis=1)
    pl, pu = float(first.mean()), float(allbig.mean())
    el, eu = math.sqrt(pl * (1 - pl) / mc_n), math.sqrt(pu * (1 - pu) / mc_n)
    lo_raw, up_raw = 1.0 - pl, 1.0 - pu
    bp = BoundPair(_clamp(lo_raw), _clamp(up_raw), "1 - P(l_11 > sqrt(delta)) (MC)", "1 - P(min l_ii > sqrt(delta)) (MC)", el, eu)
    return Theorem4Result(bp, lo_raw, up_raw, True)


# --------------------------------------------------------------------------
# the Wishart W_2(I, 2) example


def wishart_J1_J2(delta: float, rel_tol: float = 1e-12) -> BoundPair:
    """Closed-form bracket for ``W_2(I_2, 2)``.

    ``J1 = 1 - exp(-delta/2)``;
    ``J2 = 1 - exp(-delta/2) sqrt(2/pi) int_{sqrt(delta)}^inf exp(-b^2/2) db``.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    J1 = -math.expm1(-0.5 * delta)
    tail = integrate_1d(lambda b: np.exp(-0.5 * b * b), math.sqrt(delta), math.inf, rel_tol, vectorized=True)
    J2 = 1.0 - math.exp(-0.5 * delta) * math.sqrt(2.0 / math.pi) * tail.value
    return BoundPair(J1, J2, "J1 = 1 - exp(-delta/2)", "J2 (Gaussian tail quadrature)", 0.0, tail.error_estimate)


# printed reference values, kept as strings so that the printed precision is known
WISHART_TABLE = {
    0.2: ("0.095", "0.41"),
    0.1: ("0.049", "0.28"),
    0.01: ("4.99e-3", "8.42e-2"),
    0.001: ("5.0e-4", "2.6e-2"),
}


def _sig_digits(text: str) -> int:
    mant = text.lower().split("e")[0].replace("-", "").replace(".", "").lstrip("0")
    return max(len(mant), 1)


def round_like(value: float, printed: str) -> float:
    """Round ``value`` to as many significant digits as ``printed`` shows."""
    if value == 0:
        return 0.0
    n = _sig_digits(printed)
    return float(f"{value:.{n - 1}e}")


def wishart_table(deltas: Sequence[float] = (0.2, 0.1, 0.01, 0.001)):
    """Rows ``(delta, J1, J2, J1_ref, J2_ref, status)`` for the W_2(I, 2) bracket."""
    rows = []
    for dl in deltas:
        bp = wishart_J1_J2(dl)
        ref = WISHART_TABLE.get(float(dl))
        if ref is None:
            status = "n/a"
        else:
            ok = round_like(bp.lower, ref[0]) == float(ref[0]) and round_like(bp.upper, ref[1]) == float(ref[1])
            status = "PASS" if ok else "FAIL"
        rows.append({"delta": dl, "J1": bp.lower, "J2": bp.upper,
                     "J1_ref": ref[0] if ref else None, "J2_ref": ref[1] if ref else None, "status": status})
    return rows


def event_frequency(samples: np.ndarray, delta: float):
    """Fraction of forms in ``samples`` with a nonzero vector of value ``<= delta``.

    Returns ``(p, standard_error)``.
    """
    hits = np.fromiter((has_short_vector(Q, delta) for Q in samples), dtype=bool, count=samples.shape[0])
    p = float(hits.mean())
    return p, math.sqrt(p * (1.0 - p) / samples.shape[0])
