import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy.integrate import solve_ivp

from semiperturb.errors import DimensionError, DivergenceError, DomainError
from semiperturb.numerics import mat_exp, solve_resolvent
from semiperturb.scenarios import delay_functional, is_metzler
from semiperturb.semigroups import (
    SemigroupHandle,
    build_delay_generator,
    check_consistency,
    check_growth_bound,
    check_resolvent_convergence,
    check_semigroup_law,
    estimate_bound,
    evaluate,
    gauss_semigroup,
    gauss_weierstrass_matrix,
    interior_mask,
    lattice_space,
    log_norm,
    matrix_semigroup,
    weak_resolvent,
)
from semiperturb.spaces import Element, GridSpace, orthant, cone_samples

from conftest import random_metzler


# -- handles and evaluation ---------------------------------------------------------

def test_handle_validation():
    sp = GridSpace(np.ones(2))
    with pytest.raises(DomainError):
        SemigroupHandle("fft", sp, np.eye(2))
    with pytest.raises(DomainError):
        SemigroupHandle("matrix-exp", sp)
    with pytest.raises(DimensionError):
        SemigroupHandle("matrix-exp", sp, np.eye(3))
    with pytest.raises(DomainError):
        SemigroupHandle("matrix-exp", sp, np.eye(2), M=0.5)
    with pytest.raises(DomainError):
        SemigroupHandle("gauss-kernel", sp)


def test_evaluate_identity_at_zero_for_every_backend():
    sp = GridSpace(np.ones(3))
    lat = lattice_space(1, 4.0, 17)
    handles = [
        matrix_semigroup(np.ones((3, 3)), sp),
        gauss_semigroup(lat, 4.0),
        matrix_semigroup(build_delay_generator([[-1.0]], np.full((1, 4), 0.25), 4),
                         GridSpace(np.ones(5)), backend="delay-block"),
    ]
    for S in handles:
        assert_array_equal(evaluate(S, 0.0), np.eye(S.n))
        with pytest.raises(DomainError):
            S(-1.0)


def test_matrix_backend_is_mat_exp(rng):
    A = rng.normal(size=(3, 3))
    S = matrix_semigroup(A, GridSpace(np.ones(3)))
    assert_array_equal(S(0.7), mat_exp(A, 0.7))


def test_memo_is_a_pure_cache(rng):
    A = rng.normal(size=(4, 4))
    sp = GridSpace(np.ones(4))
    plain, cached = matrix_semigroup(A, sp), matrix_semigroup(A, sp, memo=True)
    for t in (0.3, 0.3, 1.1, 0.3):
        assert_array_equal(plain(t), cached(t))
    assert not cached(0.3).flags.writeable


@pytest.mark.parametrize("p", (1.0, 2.0, np.inf))
def test_log_norm_bounds_the_semigroup(p, rng):
    A = rng.normal(size=(4, 4))
    sp = GridSpace(rng.uniform(0.3, 2.0, 4), p)
    mu = log_norm(A, sp)
    for t in (0.1, 0.5, 1.0, 3.0):
        assert sp.operator_norm(mat_exp(A, t)) <= np.exp(mu * t) * (1 + 1e-6)


@pytest.mark.parametrize("p", (1.0, 2.0, 3.0, np.inf))
def test_handles_satisfy_their_growth_bound(p, rng):
    A = random_metzler(rng, 4, shift=-1.0)
    S = matrix_semigroup(A, GridSpace(rng.uniform(0.3, 2.0, 4), p))
    assert check_growth_bound(S, np.linspace(0, 4, 9)).passed


# -- semigroup law --------------------------------------------------------------

def test_semigroup_law_matrix_backend(rng):
    S = matrix_semigroup(rng.normal(size=(5, 5)), GridSpace(np.ones(5)))
    rep = check_semigroup_law(S, [0.0, 0.2, 0.7, 1.3])
    assert rep.passed and rep.residual <= 1e-10


def test_semigroup_law_zero_times():
    S = matrix_semigroup(np.diag([1.0, -3.0]), GridSpace(np.ones(2)))
    assert check_semigroup_law(S, [0.0]).residual == 0.0


def test_semigroup_law_delay_backend():
    m = 20
    A = build_delay_generator([[-1.0]], delay_functional(1.0, 1, m), m)
    S = matrix_semigroup(A, GridSpace(np.r_[1.0, np.full(m, 1.0 / m)]), backend="delay-block")
    rep = check_semigroup_law(S, [0.0, 0.25, 0.5, 1.0], tol=1e-8)
    assert rep.passed


def test_semigroup_law_gauss_backend_on_interior():
    lat = lattice_space(1, 8.0, 321)
    S = gauss_semigroup(lat, 8.0)
    rep = check_semigroup_law(S, [0.02, 0.05, 0.1], tol=1e-4)
    assert rep.passed, rep.residual


# -- bounds ----------------------------------------------------------------------

def test_estimate_bound_examples():
    sp = GridSpace(np.ones(2), np.inf)
    grid = np.linspace(0.0, 3.0, 7)
    M, om = estimate_bound(matrix_semigroup(np.zeros((2, 2)), sp), grid)
    assert M == 1.0 and abs(om) < 1e-12
    M, om = estimate_bound(matrix_semigroup([[-0.7]], GridSpace([1.0])), grid)
    assert M == 1.0 and om == pytest.approx(-0.7, abs=1e-9)
    M, om = estimate_bound(matrix_semigroup(np.diag([-1.0, -2.0]), sp), grid)
    assert om == pytest.approx(-1.0, abs=1e-9)


def test_estimate_bound_holds_on_grid(rng):
    A = rng.normal(size=(4, 4))
    S = matrix_semigroup(A, GridSpace(np.ones(4)))
    grid = np.linspace(0.0, 2.0, 9)
    M, om = estimate_bound(S, grid)
    assert M >= 1.0
    for t in grid:
        assert S.space.operator_norm(S(t)) <= M * np.exp(om * t) * (1 + 1e-6)


# -- Gauss-Weierstrass ------------------------------------------------------------

def test_kernel_closed_form_entry():
    lat = lattice_space(1, 4.0, 33)
    K = gauss_weierstrass_matrix(1.0, lat, 4.0)
    h = lat.weights[0]
    assert_allclose(np.diag(K), h * 0.28209479177387814, rtol=1e-14)
    assert_allclose(np.diag(K), h / np.sqrt(4 * np.pi), rtol=1e-15)


def test_kernel_2d_closed_form():
    lat = lattice_space(2, 2.0, 9)
    t = 0.3
    K = gauss_weierstrass_matrix(t, lat, 2.0)
    i, j = 0, 40
    r2 = np.sum((lat.coords[i] - lat.coords[j]) ** 2)
    assert_allclose(K[i, j], lat.weights[j] * np.exp(-r2 / (4 * t)) / (4 * np.pi * t), rtol=1e-14)


def test_kernel_identity_and_errors():
    lat = lattice_space(1, 2.0, 9)
    assert_array_equal(gauss_weierstrass_matrix(0.0, lat, 2.0), np.eye(9))
    with pytest.raises(DomainError):
        gauss_weierstrass_matrix(-1.0, lat, 2.0)
    with pytest.raises(DomainError):
        gauss_weierstrass_matrix(1.0, GridSpace(np.ones(3)), 2.0)


def test_kernel_mass_in_interior():
    # total mass lost past the window is erfc(margin / (2 sqrt t)): 8 sqrt(t) keeps it < 1e-7
    lat = lattice_space(1, 8.0, 321)
    for t in (0.01, 0.05, 0.1):
        K = gauss_weierstrass_matrix(t, lat, 8.0)
        mask = interior_mask(lat, 8.0, 8.0 * np.sqrt(t))
        assert_allclose(K[mask].sum(axis=1), 1.0, atol=1e-6)


def test_kernel_is_positive():
    lat = lattice_space(2, 3.0, 13)
    assert gauss_weierstrass_matrix(0.2, lat, 3.0).min() >= 0.0


def test_gauss_consistency_across_exponents():
    lat = lattice_space(1, 4.0, 33)
    S2, Sinf = gauss_semigroup(lat, 4.0), gauss_semigroup(lat.with_exponent(np.inf), 4.0)
    samples = cone_samples(orthant(lat), 40, seed=3)
    rep = check_consistency(S2, Sinf, samples, [0.0, 0.05, 0.5])
    assert rep.residual == 0.0


def test_gauss_weak_resolvent_is_nonnegative():
    lat = lattice_space(1, 4.0, 33)
    R = weak_resolvent(gauss_semigroup(lat, 4.0), 4.0)
    assert R.operator.min() >= 0.0
    assert R.error < 1e-5


# -- weak resolvent and its convergence --------------------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_weak_resolvent_matches_direct_solve(seed):
    rng = np.random.default_rng(seed)
    n = 2 + seed % 4
    A = random_metzler(rng, n, shift=-1.0)
    S = matrix_semigroup(A, GridSpace(rng.uniform(0.5, 1.0, n)))
    for offset in (1.0, 10.0):
        lam = S.omega + offset
        wr = weak_resolvent(S, lam)
        assert np.abs(wr.operator - solve_resolvent(A, lam)).max() <= wr.error + 1e-12


def test_weak_resolvent_zero_generator():
    S = matrix_semigroup(np.zeros((3, 3)), GridSpace(np.ones(3)))
    assert_allclose(weak_resolvent(S, 1.0).operator, np.eye(3), atol=1e-14)


def test_weak_resolvent_divergence():
    S = matrix_semigroup([[1.0]], GridSpace([1.0]))
    with pytest.raises(DivergenceError):
        weak_resolvent(S, 0.5)


def test_resolvent_convergence_zero_generator():
    sp = GridSpace(np.ones(2))
    S = matrix_semigroup(np.zeros((2, 2)), sp)
    res = check_resolvent_convergence(S, Element(sp, [1, 2]), Element(sp, [3, -1]), [1, 2, 4])
    assert max(res.errors) < 1e-13 and res.passed


def test_resolvent_convergence_scalar():
    sp = GridSpace([1.0])
    S = matrix_semigroup([[-1.0]], sp)
    res = check_resolvent_convergence(S, Element(sp, [1.0]), Element(sp, [1.0]), [2, 4, 8, 16],
                                      tol=0.1)
    assert_allclose(res.errors, [1 / 3, 1 / 5, 1 / 9, 1 / 17], rtol=1e-12)
    assert res.passed


def test_resolvent_convergence_rejects_unsorted():
    sp = GridSpace([1.0])
    S = matrix_semigroup([[-1.0]], sp)
    with pytest.raises(DomainError):
        check_resolvent_convergence(S, sp.basis(0), sp.basis(0), [2, 1])


# -- consistency -------------------------------------------------------------------

def test_consistency_detects_different_semigroups(rng):
    sp = GridSpace(np.ones(3))
    A = random_metzler(rng, 3)
    S1, S2 = matrix_semigroup(A, sp), matrix_semigroup(A + 0.1 * np.eye(3), sp)
    samples = cone_samples(orthant(sp))
    assert check_consistency(S1, S1.on(sp.with_exponent(1.0)), samples, [0.5, 1.0]).residual == 0
    assert not check_consistency(S1, S2, samples, [0.5, 1.0]).passed
    with pytest.raises(DimensionError):
        check_consistency(S1, matrix_semigroup(np.eye(2), GridSpace(np.ones(2))), samples, [1.0])


# -- delay generator ---------------------------------------------------------------

def test_delay_generator_structure():
    m = 4
    phi = np.full((1, m), 0.25)
    G = build_delay_generator([[-2.0]], phi, m)
    assert G.shape == (5, 5)
    assert G[0, 0] == -2.0
    assert_array_equal(G[0, 1:], phi[0])
    # last history cell is fed by the head variable
    assert G[m, 0] == m and G[m, m] == -m
    assert G[1, 2] == m and G[1, 1] == -m
    with pytest.raises(DimensionError):
        build_delay_generator([[-1.0]], np.ones((1, 3)), m)
    with pytest.raises(DomainError):
        build_delay_generator([[-1.0]], np.ones((1, 1)), 1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), m=st.integers(2, 12))
def test_delay_generator_metzler(seed, n, m):
    rng = np.random.default_rng(seed)
    A0 = random_metzler(rng, n)
    assert is_metzler(build_delay_generator(A0, np.zeros((n, n * m)), m))
    assert is_metzler(build_delay_generator(A0, rng.uniform(0, 1, (n, n * m)), m))


def test_delay_without_coupling_keeps_head_and_transports_history():
    m = 4
    G = build_delay_generator([[0.0]], np.zeros((1, m)), m)
    x0 = np.r_[1.0, 0.0, 0.0, 0.0, 0.0]
    t = 0.6
    state = mat_exp(G, t) @ x0
    assert state[0] == pytest.approx(1.0, abs=1e-15)
    # reference: integrate the same linear ODE with a high-order solver
    ref = solve_ivp(lambda _, y: G @ y, (0, t), x0, rtol=1e-12, atol=1e-14).y[:, -1]
    assert_allclose(state, ref, atol=1e-9)


def test_delay_constant_history_is_equilibrium():
    m = 10
    G = build_delay_generator([[0.0]], np.zeros((1, m)), m)
    u = np.full(m + 1, 2.5)
    for t in (0.3, 1.0, 4.0):
        assert_allclose(mat_exp(G, t) @ u, u, rtol=1e-13)


def test_delay_head_derivative_reads_oldest_history():
    # x'(t) = x(t - 1) with history 1 on [-1, 0]: method of steps gives x(t) = 1 + t on [0, 1]
    m = 200
    phi = np.zeros((1, m))
    phi[0, 0] = 1.0
    G = build_delay_generator([[0.0]], phi, m)
    u0 = np.ones(m + 1)
    for t in (0.05, 0.1, 0.2):
        assert mat_exp(G, t)[0] @ u0 == pytest.approx(1.0 + t, abs=1e-10)
