import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from semiperturb.errors import DimensionError, DomainError, PairingError
from semiperturb.spaces import (
    Cone,
    Element,
    GridSpace,
    cone_contains,
    cone_samples,
    dual_pair,
    induced_norm,
    intersection_norm,
    orthant,
    p_norm,
    sum_norm,
)

EXPONENTS = (1.0, 1.5, 2.0, 3.0, np.inf)


def grid_search_sum_norm(v, spX, spY, step=1e-3, radius=2.0):
    """Brute-force ``min ||x||_X + ||v - x||_Y`` over ``x`` in ``[-radius, radius]^2``."""
    axis = np.arange(-radius, radius + step / 2, step)

    def norms(x0, x1, space):
        a0, a1 = np.abs(x0), np.abs(x1)
        if np.isinf(space.p):
            return np.maximum(a0, a1)
        w = space.weights
        return (w[0] * a0**space.p + w[1] * a1**space.p) ** (1.0 / space.p)

    best = np.inf
    x1 = axis
    for x0 in axis:
        vals = norms(x0, x1, spX) + norms(v[0] - x0, v[1] - x1, spY)
        best = min(best, vals.min())
    return best


# -- GridSpace / Element -----------------------------------------------------------

def test_gridspace_validation():
    with pytest.raises(DomainError):
        GridSpace([1.0, 0.0])
    with pytest.raises(DomainError):
        GridSpace([1.0], p=0.5)
    with pytest.raises(DimensionError):
        GridSpace([1.0, 1.0], coords=[0.0, 1.0, 2.0])


def test_conjugate_exponents():
    assert GridSpace([1.0], 1.0).conjugate == np.inf
    assert GridSpace([1.0], np.inf).conjugate == 1.0
    assert GridSpace([1.0], 3.0).conjugate == 1.5
    assert GridSpace([1.0], 4.0).dual().p == pytest.approx(4.0 / 3.0)


def test_element_validation():
    sp = GridSpace([1.0, 1.0])
    with pytest.raises(DimensionError):
        Element(sp, [1.0])
    with pytest.raises(DomainError):
        Element(sp, [1.0, np.inf])


def test_p_norm_examples():
    assert p_norm(Element(GridSpace([1.0, 1.0]), [0.0, 0.0])) == 0.0
    assert p_norm(Element(GridSpace([1.0, 1.0], 2.0), [3.0, 4.0])) == 5.0
    assert p_norm(Element(GridSpace([0.5, 0.5], 1.0), [2.0, 2.0])) == 2.0
    # the sup norm ignores the weights
    assert p_norm(Element(GridSpace([0.1, 9.0], np.inf), [-3.0, 2.0])) == 3.0


@pytest.mark.parametrize("p", EXPONENTS)
def test_norm_homogeneous_and_subadditive(p, rng):
    w = rng.uniform(0.1, 2.0, size=7)
    sp = GridSpace(w, p)
    for _ in range(1000):
        u, v = rng.normal(size=(2, 7))
        assert sp.norm(u + v) <= sp.norm(u) + sp.norm(v) + 1e-12
    c = -3.7
    assert_allclose(sp.norm(c * u), abs(c) * sp.norm(u), rtol=1e-14)


@pytest.mark.parametrize("p", EXPONENTS)
def test_holder(p, rng):
    w = rng.uniform(0.1, 2.0, size=6)
    sp = GridSpace(w, p)
    dual = sp.dual()
    for _ in range(300):
        u, v = rng.normal(size=(2, 6))
        assert dual_pair(Element(sp, u), Element(dual, v)) <= sp.norm(u) * dual.norm(v) + 1e-10


def test_dual_pair_examples():
    sp = GridSpace([1.0, 2.0])
    assert dual_pair(Element(sp, [1, 1]), Element(sp, [1, 1])) == 3.0
    assert dual_pair(Element(sp, [4, 5]), Element(sp, [0, 0])) == 0.0
    assert dual_pair(sp.basis(0), sp.basis(1)) == 0.0


def test_dual_pair_agrees_across_exponents(rng):
    w = rng.uniform(0.5, 1.0, 5)
    u, v = rng.normal(size=(2, 5))
    vals = {dual_pair(Element(GridSpace(w, p), u), Element(GridSpace(w, q), v))
            for p in EXPONENTS for q in EXPONENTS}
    assert len(vals) == 1


def test_dual_pair_rejects_other_weights():
    with pytest.raises(PairingError):
        dual_pair(Element(GridSpace([1.0, 1.0]), [1, 1]), Element(GridSpace([1.0, 2.0]), [1, 1]))


def test_adjoint_is_pairing_adjoint(rng):
    sp = GridSpace(rng.uniform(0.2, 3.0, 4))
    A = rng.normal(size=(4, 4))
    u, v = rng.normal(size=(2, 4))
    lhs = dual_pair(Element(sp, A @ u), Element(sp, v))
    rhs = dual_pair(Element(sp, u), Element(sp, sp.adjoint(A) @ v))
    assert_allclose(lhs, rhs, rtol=1e-12)


def _extreme_points(p, n):
    if p == 1.0:
        return np.eye(n)
    if np.isinf(p):
        return np.array(np.meshgrid(*[[-1.0, 1.0]] * n)).reshape(n, -1).T
    raise ValueError(p)


@pytest.mark.parametrize("p", (1.0, np.inf))
def test_induced_norm_exact_at_extreme_points(p, rng):
    w = rng.uniform(0.2, 2.0, 4)
    A = rng.normal(size=(4, 4))
    sp = GridSpace(w, p)
    # the unit ball of weighted l1 / l-inf is the hull of scaled basis / sign vectors
    brute = max(sp.norm(A @ x) / sp.norm(x) for x in _extreme_points(p, 4))
    assert_allclose(induced_norm(A, w, p), brute, rtol=1e-14)


def test_induced_norm_l2_matches_weighted_svd(rng):
    w = rng.uniform(0.2, 2.0, 5)
    A = rng.normal(size=(5, 5))
    sw = np.sqrt(w)
    svd = np.linalg.svd(sw[:, None] * A / sw[None, :], compute_uv=False)[0]
    assert_allclose(induced_norm(A, w, 2.0), svd, rtol=1e-6)


def test_induced_norm_interpolation_bound(rng):
    w = rng.uniform(0.2, 2.0, 4)
    A = rng.normal(size=(4, 4))
    nrm = induced_norm(A, w, 3.0)
    sp = GridSpace(w, 3.0)
    for x in rng.normal(size=(500, 4)):
        assert sp.norm(A @ x) <= nrm * sp.norm(x) * (1 + 1e-12)


# -- intersection and sum norms ----------------------------------------------------

def test_intersection_norm_examples():
    X, Y = GridSpace([1.0, 1.0], 1.0), GridSpace([1.0, 1.0], np.inf)
    assert intersection_norm(Element(X, [1, 1]), X, Y) == 2.0
    assert intersection_norm(Element(X, [0, 0]), X, Y) == 0.0
    assert intersection_norm(Element(X, [3, 4]), X, X) == 7.0


def test_sum_norm_trivial_cases(rng):
    X = GridSpace(rng.uniform(0.5, 1.0, 3), 2.0)
    assert sum_norm(Element(X, np.zeros(3)), X, X) == 0.0
    v = rng.normal(size=3)
    assert_allclose(sum_norm(Element(X, v), X, X), X.norm(v), rtol=1e-8)


SUM_NORM_BATTERY = [
    (([1.0, 1.0], 1.0), ([1.0, 1.0], np.inf), [1.0, 0.0]),
    (([1.0, 1.0], 1.0), ([1.0, 1.0], np.inf), [0.7, -0.4]),
    (([1.0, 0.1], 1.0), ([0.1, 1.0], 1.0), [1.0, 1.0]),
    (([4.0, 0.25], 2.0), ([0.25, 4.0], 2.0), [0.6, -0.9]),
    (([1.0, 1.0], 2.0), ([1.0, 1.0], np.inf), [0.3, 0.8]),
    (([0.5, 2.0], 1.5), ([0.5, 2.0], 3.0), [-0.5, 0.5]),
]


@pytest.mark.parametrize("X_def, Y_def, v", SUM_NORM_BATTERY)
def test_sum_norm_matches_grid_search(X_def, Y_def, v):
    X, Y = GridSpace(*X_def), GridSpace(*Y_def)
    oracle = grid_search_sum_norm(np.array(v), X, Y)
    value = sum_norm(Element(X, v), X, Y)
    assert abs(value - oracle) <= 1e-3


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1),
       p=st.sampled_from(EXPONENTS), q=st.sampled_from(EXPONENTS))
def test_sum_norm_below_intersection_norm(seed, p, q):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.2, 2.0, 4)
    X, Y = GridSpace(w, p), GridSpace(w, q)
    v = Element(X, rng.normal(size=4))
    s = sum_norm(v, X, Y)
    assert s <= min(X.norm(v.values), Y.norm(v.values)) + 1e-8
    assert s <= intersection_norm(v, X, Y) + 1e-8
    assert s >= 0.0


def test_sum_norm_dimension_mismatch():
    with pytest.raises(DimensionError):
        sum_norm(Element(GridSpace([1.0, 1.0]), [1, 1]), GridSpace([1.0]), GridSpace([1.0]))


# -- cones -----------------------------------------------------------------------

def test_orthant_membership_examples():
    c = orthant(GridSpace([1.0, 1.0]))
    assert cone_contains(c, Element(c.space, [0.0, 0.0]))
    assert cone_contains(c, Element(c.space, [1.0, 2.0]))
    assert not cone_contains(c, Element(c.space, [1.0, -1.0]))


def test_cone_validation():
    sp = GridSpace([1.0, 1.0])
    with pytest.raises(DimensionError):
        Cone(sp, np.ones((2, 3)))
    with pytest.raises(DomainError):
        Cone(sp, [[1.0, 0.0], [0.0, 0.0]])


def test_cone_samples_are_deterministic_and_start_with_generators():
    c = orthant(GridSpace([1.0, 1.0]))
    a = cone_samples(c, 4, seed=7)
    b = cone_samples(c, 4, seed=7)
    assert len(a) == 4
    assert_allclose(a[0].values, [1, 0])
    assert_allclose(a[1].values, [0, 1])
    for x, y in zip(a, b):
        assert np.array_equal(x.values, y.values)
    assert [e.values.tolist() for e in cone_samples(c)] == [[1, 0], [0, 1]]
    with pytest.raises(DomainError):
        cone_samples(c, 1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 5), n=st.integers(2, 5))
def test_cone_samples_are_members(seed, k, n):
    rng = np.random.default_rng(seed)
    gens = np.abs(rng.normal(size=(k, n))) + 0.01 * rng.normal(size=(k, n))
    c = Cone(GridSpace(np.ones(n)), gens)
    for e in cone_samples(c, k + 10, seed):
        assert cone_contains(c, e)


def test_polyhedral_cone_rejects_outside_point():
    # the cone spanned by (1, 0) and (1, 1)
    c = Cone(GridSpace([1.0, 1.0]), [[1.0, 0.0], [1.0, 1.0]])
    assert cone_contains(c, [2.0, 1.0])
    assert not cone_contains(c, [0.0, 1.0])
