import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.special import multigammaln

from lfp.cholesky_bounds import (
    DensityOnForms,
    G_f,
    WishartParams,
    density_from_spec,
    event_frequency,
    g_f,
    gaussian_bump,
    jacobian_cholesky,
    jacobian_psi,
    multivariate_gamma,
    phi_chol,
    phi_chol_unit,
    round_like,
    theorem4_bounds,
    wishart_J1_J2,
    wishart_density,
    wishart_table,
)
from lfp.lattice_core import has_short_vector, lattice_minimum
from lfp.quadrature import integrate_1d
from lfp.sampling import make_generator, wishart_sample


def upper_entries(A):
    return A[np.triu_indices(A.shape[0])]


def fd_jacobian(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((fun(x + e) - fun(x - e)) / (2 * h))
    return np.column_stack(cols)


# ---------------------------------------------------------------- Jacobians

def test_jacobian_cholesky_values():
    assert jacobian_cholesky(np.eye(2)) == 4.0
    assert jacobian_cholesky(np.diag([2.0, 3.0])) == 48.0


@pytest.mark.parametrize("d", [2, 3, 4])
def test_jacobian_cholesky_finite_differences(d):
    gen = make_generator(50, d)
    iu = np.triu_indices(d)
    for _ in range(100 // 3 + 1):
        L = np.triu(gen.normal(0, 0.6, (d, d)), 1) + np.diag(gen.uniform(0.5, 2.0, d))

        def fun(x):
            M = np.zeros((d, d))
            M[iu] = x
            return upper_entries(M.T @ M)

        J = fd_jacobian(fun, L[iu])
        assert abs(np.linalg.det(J)) == pytest.approx(jacobian_cholesky(L), rel=1e-6)


def test_jacobian_psi_example():
    # h_11 = 1, gamma = 1, c = 4: pick h_12 = 0 and solve h_22 from the constraint
    g, c = 1.0, 4.0
    h22 = math.sqrt(c / (g + 1.0) - g)
    H = np.array([[1.0, 0.0], [0.0, h22]])
    assert jacobian_psi(H, g, c) == pytest.approx(0.5)


def test_jacobian_psi_rejects_off_manifold():
    with pytest.raises(ValueError):
        jacobian_psi(np.eye(2), 1.0, 5.0)


def _solve_last(H, g, c):
    d = H.shape[0]
    Hp = H[: d - 1, : d - 1]
    A = g * np.eye(d - 1) + Hp.T @ Hp
    col = H[: d - 1, d - 1]
    # det(g I + H^T H) = det(A) * (g + h_dd^2 + |col|^2 - col^T Hp A^-1 Hp^T col)
    Hc = Hp.T @ col
    rest = g + col @ col - Hc @ np.linalg.solve(A, Hc)
    return math.sqrt(c / np.linalg.det(A) - rest)


@pytest.mark.parametrize("d", [2, 3])
def test_jacobian_psi_finite_differences(d):
    gen = make_generator(51, d)
    g = 0.7
    iu = np.triu_indices(d)
    keep = [k for k in range(len(iu[0])) if not (iu[0][k] == d - 1 and iu[1][k] == d - 1)]
    for _ in range(10):
        H = np.triu(gen.normal(0, 0.6, (d, d)), 1) + np.diag(gen.uniform(0.5, 1.5, d))
        c = float(np.linalg.det(g * np.eye(d) + H.T @ H))

        def fun(x):
            M = np.zeros((d, d))
            M[iu[0][keep], iu[1][keep]] = x
            M[d - 1, d - 1] = _solve_last(M, g, c)
            S = c ** (-1.0 / d) * (g * np.eye(d) + M.T @ M)
            return upper_entries(S)[keep]

        J = fd_jacobian(fun, H[iu[0][keep], iu[1][keep]])
        assert abs(np.linalg.det(J)) == pytest.approx(jacobian_psi(H, g, c), rel=1e-5)


@pytest.mark.parametrize("d", [2, 3])
def test_unit_det_chart_jacobian(d):
    """With gamma = 0 and c = 1 the constrained Jacobian is the one of the unit-determinant chart."""
    gen = make_generator(52, d)
    p = d * (d - 1) // 2
    iu = np.triu_indices(d)
    keep = [k for k in range(len(iu[0])) if not (iu[0][k] == d - 1 and iu[1][k] == d - 1)]
    for _ in range(10):
        bp = gen.uniform(0.6, 1.6, d - 1)
        u = gen.normal(0, 0.5, p)

        def fun(x):
            return upper_entries(phi_chol_unit(x[: d - 1], x[d - 1:]))[keep]

        J = fd_jacobian(fun, np.r_[bp, u])
        L = np.linalg.cholesky(phi_chol_unit(bp, u)).T
        assert abs(np.linalg.det(J)) == pytest.approx(jacobian_psi(L, 0.0, 1.0), rel=1e-5)


def test_phi_chol_roundtrip():
    beta = np.array([2.0, 1.0])
    Q = phi_chol(beta, np.array([1.0]))
    np.testing.assert_allclose(Q, [[4.0, 2.0], [2.0, 2.0]])
    assert np.linalg.det(phi_chol_unit(np.array([1.7, 0.4]), np.array([0.3, -1.0, 2.0]))) == pytest.approx(1.0)


# ---------------------------------------------------------------- densities

def test_multivariate_gamma():
    assert multivariate_gamma(2, 1.0) == pytest.approx(math.pi)
    for d, a in [(3, 2.5), (4, 3.1), (1, 0.7)]:
        assert math.log(multivariate_gamma(d, a)) == pytest.approx(multigammaln(a, d), rel=1e-13)


def test_wishart_density_against_scipy():
    V = np.array([[1.5, 0.3], [0.3, 0.8]])
    f = wishart_density(WishartParams(2, 4, V))
    W = wishart_sample(V, 4, 1, 20)
    ref = stats.wishart(df=4, scale=V).pdf(np.moveaxis(W, 0, -1))
    np.testing.assert_allclose(f(W), ref, rtol=1e-12)


def test_wishart_d1_is_chi_squared_density():
    f = wishart_density(WishartParams(1, 3))
    x = np.linspace(0.1, 8.0, 20)
    np.testing.assert_allclose(f(x[:, None, None]), stats.chi2(3).pdf(x), rtol=1e-12)


def test_wishart_density_zero_off_cone():
    f = wishart_density(WishartParams(2, 2))
    assert f(np.array([[1.0, 2.0], [2.0, 1.0]])) == 0.0


def test_wishart_normalization_by_importance():
    # density / proposal under a different Wishart
    f = wishart_density(WishartParams(2, 3))
    q = wishart_density(WishartParams(2, 4, 0.8 * np.eye(2)))
    W = wishart_sample(0.8 * np.eye(2), 4, 2, 10**5)
    r = f(W) / q(W)
    assert abs(r.mean() - 1.0) <= 3 * r.std() / math.sqrt(r.size)


def test_wishart_params_validation():
    with pytest.raises(ValueError):
        WishartParams(3, 2)


def test_bump_density_normalization_mc():
    f = gaussian_bump(2, [{"log_mean": [0.2, -0.1], "log_sd": 0.3, "u_mean": 0.5, "u_sd": 0.4}])
    # importance check against a Wishart proposal
    q = wishart_density(WishartParams(2, 4, 0.4 * np.eye(2)))
    W = wishart_sample(0.4 * np.eye(2), 4, 3, 2 * 10**5)
    r = f(W) / q(W)
    assert abs(r.mean() - 1.0) <= max(3 * r.std() / math.sqrt(r.size), 0.01)


def test_density_from_spec():
    assert density_from_spec({"family": "wishart", "d": 2, "n": 3}).dim == 2
    assert density_from_spec({"family": "gaussian-bump", "d": 3, "support": "unit-det"}).support == "unit-det"
    with pytest.raises(ValueError):
        density_from_spec({"family": "beta"})


# ---------------------------------------------------------------- diagonal densities

W22 = wishart_density(WishartParams(2, 2))


@pytest.mark.parametrize("b1,b2", [(0.3, 0.7), (1.0, 1.0), (2.1, 0.4), (0.05, 3.0)])
def test_wishart_G_closed_form(b1, b2):
    ref = math.sqrt(2 / math.pi) * b1 * math.exp(-(b1 * b1 + b2 * b2) / 2)
    assert G_f(W22, [b1, b2]).value == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("b1", [0.1, 0.5, 1.0, 2.0, 3.5])
def test_wishart_g_closed_form(b1):
    assert g_f(W22, b1).value == pytest.approx(b1 * math.exp(-b1 * b1 / 2), rel=1e-8)


def test_wishart_G_normalization():
    r = integrate_1d(lambda b1: g_f(W22, b1, rel_tol=1e-10).value, 0.0, math.inf, 1e-9)
    assert r.value == pytest.approx(1.0, abs=1e-6)


def test_G_off_image_is_zero():
    f = DensityOnForms(2, lambda Q: np.zeros(np.asarray(Q).shape[:-2]))
    assert G_f(f, [1.0, 1.0]).value == 0.0
    assert G_f(W22, [-1.0, 1.0]).value == 0.0


def _lognormal_pdf(x, lm, ls):
    return stats.lognorm(s=ls, scale=math.exp(lm)).pdf(x)


@pytest.mark.parametrize("support", ["cone", "unit-det"])
def test_bump_G_is_lognormal_marginal_d2(support):
    lm = [0.1, -0.3] if support == "cone" else [0.1]
    f = gaussian_bump(2, [{"log_mean": lm, "log_sd": 0.5, "u_mean": 0.2, "u_sd": 0.9}], support=support)
    beta = [0.8, 1.3][: len(lm)]
    ref = np.prod([_lognormal_pdf(b, m, 0.5) for b, m in zip(beta, lm)])
    assert G_f(f, beta).value == pytest.approx(ref, rel=1e-8)


def test_bump_G_d3_monte_carlo():
    f = gaussian_bump(3, [{"log_mean": 0.0, "log_sd": 0.4, "u_mean": 0.1, "u_sd": 0.5}])
    beta = [1.1, 0.9, 1.2]
    r = G_f(f, beta, mc_n=40000, seed=4)
    ref = np.prod([_lognormal_pdf(b, 0.0, 0.4) for b in beta])
    assert abs(r.value - ref) <= 3 * r.error_estimate + 1e-12


@pytest.mark.parametrize("support", ["cone", "unit-det"])
def test_bump_normalization_d2(support):
    nb = 2 if support == "cone" else 1
    f = gaussian_bump(2, [{"log_mean": 0.2, "log_sd": 0.35, "u_sd": 0.6, "weight": 2},
                          {"log_mean": -0.4, "log_sd": 0.2, "u_mean": 1.0}], support=support)
    if nb == 1:
        tot = integrate_1d(lambda b: G_f(f, [b]).value, 0.0, math.inf, 1e-9).value
    else:
        tot = integrate_1d(lambda b1: g_f(f, b1).value, 0.0, math.inf, 1e-8).value
    assert tot == pytest.approx(1.0, abs=1e-4)


# ---------------------------------------------------------------- diagonal-coordinate bounds

@pytest.mark.parametrize("delta", [0.2, 0.1, 0.01, 0.001])
def test_wishart_theorem4_matches_closed_forms(delta):
    r = theorem4_bounds(W22, delta, rel_tol=1e-7)
    ref = wishart_J1_J2(delta)
    assert r.bounds.lower == pytest.approx(ref.lower, rel=1e-5)
    assert r.bounds.upper == pytest.approx(ref.upper, rel=1e-5)


def test_wishart_J_values():
    assert wishart_J1_J2(0.0).lower == 0.0
    b = wishart_J1_J2(0.1)
    assert round_like(b.lower, "0.049") == 0.049 and round_like(b.upper, "0.28") == 0.28


def test_wishart_table_rows():
    rows = wishart_table()
    assert [r["status"] for r in rows] == ["PASS"] * 4
    assert wishart_table([0.3])[0]["status"] == "n/a"


def test_wishart_bracket_monte_carlo():
    W = wishart_sample(np.eye(2), 2, 5, 40000)
    for delta in (0.2, 0.01):
        p, se = event_frequency(W, delta)
        assert wishart_J1_J2(delta).contains(p, se)


def _random_bump(gen, d, support):
    nb = d if support == "cone" else d - 1
    k = int(gen.integers(1, 3))
    return gaussian_bump(d, [{"log_mean": gen.normal(0, 0.4, nb).tolist(), "log_sd": float(gen.uniform(0.2, 0.7)),
                              "u_mean": float(gen.normal(0, 0.5)), "u_sd": float(gen.uniform(0.3, 1.2)),
                              "weight": float(gen.uniform(0.2, 1.0))} for _ in range(k)], support=support)


def test_lower_below_upper_random_densities():
    gen = make_generator(60)
    for k in range(100):
        if k < 4:
            d, sup = 2, "cone"
        elif k < 52:
            d, sup = 2, "unit-det"
        else:
            d, sup = 3, ("cone", "unit-det")[k % 2]
        f = _random_bump(gen, d, sup)
        delta = float(gen.uniform(0.05, 0.9))
        r = theorem4_bounds(f, delta, rel_tol=1e-6, mc_n=5000, seed=k)
        assert r.bounds.lower <= r.bounds.upper + 3 * (r.bounds.lower_error + r.bounds.upper_error) + 1e-12


@pytest.mark.parametrize("d,support", [(2, "cone"), (2, "unit-det"), (3, "cone"), (3, "unit-det")])
def test_theorem4_contains_frequency(d, support):
    gen = make_generator(61, d)
    f = _random_bump(gen, d, support)
    delta = 0.3
    r = theorem4_bounds(f, delta, rel_tol=1e-6, mc_n=40000, seed=1)
    Q = f.sampler(make_generator(62, d), 40000)
    p, se = event_frequency(Q, delta)
    assert r.bounds.contains(p, se)


def test_diagonal_above_threshold_excludes_short_vectors():
    gen = make_generator(63)
    rd = math.sqrt(0.3)
    for k in range(2000):
        d = 2 + k % 3
        L = np.triu(gen.normal(0, 1.0, (d, d)), 1) + np.diag(rd * (1 + gen.uniform(1e-6, 2.0, d)))
        assert not has_short_vector(L.T @ L, 0.3)


def test_theorem4_validation():
    with pytest.raises(ValueError):
        theorem4_bounds(W22, 1.5)
