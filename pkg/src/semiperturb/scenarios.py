"""Builders for complete perturbation scenarios.

A :class:`Scenario` bundles the spaces ``X, Y, Z, E`` (one node set, four exponents),
the semigroups ``S, S_Y, T, T_Z``, the perturbation ``B: Z -> Y`` and the test cones
``K`` (in ``X cap Z``) and ``L`` (in the dual coordinates). Every builder runs the
hypothesis battery of :func:`semiperturb.verifier.hypothesis_battery` and stores it
on the scenario.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError, DominationError, PositivityError
from .numerics import as_matrix
from .semigroups import (
    SemigroupHandle,
    build_delay_generator,
    check_growth_bound,
    gauss_semigroup,
    lattice_difference,
    lattice_laplacian,
    lattice_space,
    log_norm,
    matrix_semigroup,
)
from .spaces import Cone, Element, GridSpace, orthant

DEFAULT_T_GRID = (0.1, 0.5, 1.0, 2.0)
DEFAULT_LAMBDA_OFFSETS = (1.0, 2.0, 5.0, 10.0)


@dataclass(eq=False)
class Scenario:
    label: str
    X: GridSpace
    Y: GridSpace
    Z: GridSpace
    E: GridSpace
    S: SemigroupHandle
    S_Y: SemigroupHandle
    T: SemigroupHandle
    T_Z: SemigroupHandle
    B: np.ndarray
    K: Cone
    L: Cone
    M: float = 1.0
    omega: float = 0.0
    tol: float = 1e-8
    params: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    hypothesis: list = field(default_factory=list)

    @property
    def n(self):
        return self.X.n

    @property
    def hypothesis_passed(self):
        return all(r.passed for r in self.hypothesis)

    def lambda_grid(self, offsets=DEFAULT_LAMBDA_OFFSETS):
        return [self.omega + o for o in offsets]


def is_metzler(A, tol=0.0):
    A = np.asarray(A, dtype=float)
    off = A - np.diag(np.diag(A))
    return bool(np.all(off >= -tol))


def _require_metzler(A, name):
    if not is_metzler(A):
        raise PositivityError(f"{name} has a negative off-diagonal entry (not Metzler)")


def _finish(scn, t_grid=DEFAULT_T_GRID, lambda_grid=None):
    from .verifier import hypothesis_battery

    # lam (lam - A)^{-1} is a positive multiple of the resolvent only for lam > 0
    lams = [max(scn.omega, 0.0) + o for o in DEFAULT_LAMBDA_OFFSETS] if lambda_grid is None else lambda_grid
    scn.hypothesis = hypothesis_battery(scn, t_grid, lams)
    return scn


def scenario_matrix(A_S, A_T, B, weights=None, p=2.0, label="matrix", tol=1e-8):
    """Matrix semigroups ``exp(tA_S)``, ``exp(tA_T)`` and perturbation ``B`` on one
    weighted lp space (``X = Y = Z``, ``E`` conjugate), with orthant cones."""
    A_S = as_matrix(A_S, "A_S")
    A_T = as_matrix(A_T, "A_T")
    B = as_matrix(B, "B")
    n = A_S.shape[0]
    if A_S.shape != (n, n) or A_T.shape != (n, n) or B.shape != (n, n):
        raise DimensionError("A_S, A_T and B must be square of equal size")
    X = GridSpace(np.ones(n) if weights is None else weights, p, "X")
    Y, Z, E = X.with_exponent(p, "Y"), X.with_exponent(p, "Z"), X.dual("E")
    S = matrix_semigroup(A_S, X)
    T = matrix_semigroup(A_T, X)
    scn = Scenario(
        label=label, X=X, Y=Y, Z=Z, E=E,
        S=S, S_Y=S.on(Y), T=T, T_Z=T.on(Z), B=B,
        K=orthant(X, "K"), L=orthant(E, "L"),
        M=1.0, omega=max(S.omega, T.omega), tol=tol,
    )
    return _finish(scn)


# -- randomized Metzler instances --------------------------------------------

def scenario_metzler_random(n, seed, gap=0.5):
    """Random Metzler pair ``(A_S, A_T)`` with nonnegative ``B`` on weighted l2.

    ``A_S`` has off-diagonal entries in [0, 1] and diagonal shifted by
    ``-(row sums of A_S and B) - 1 - gap``. With probability 1/2 (drawn from the
    seed) the instance satisfies ``A_T <= A_S + B`` entrywise
    (``A_T = A_S + B - P`` with ``P >= 0`` strictly positive); otherwise a single
    entry violates it by ``delta`` in [0.1, 1]. Either way every row sum of ``A_S``
    and ``A_T`` is at most ``-gap``, so both semigroups decay at rate ``gap`` in the
    max norm. ``meta["constructed_true"]`` records the branch.
    """
    n = int(n)
    if not 2 <= n <= 8:
        raise DomainError(f"n must be in [2, 8], got {n}")
    if gap < 0:
        raise DomainError("gap must be nonnegative")
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0.5, 1.0, size=n)
    off = rng.uniform(0.0, 1.0, size=(n, n))
    np.fill_diagonal(off, 0.0)
    B = rng.uniform(0.0, 0.5, size=(n, n))
    A_S = off - np.diag(off.sum(axis=1) + B.sum(axis=1) + 1.0 + gap)
    truth = bool(rng.random() < 0.5)
    upper = A_S + B
    if truth:
        P = rng.uniform(0.1, 0.9, size=(n, n)) * upper
        np.fill_diagonal(P, rng.uniform(0.1, 0.5, size=n))
        A_T = upper - P
        witness = None
    else:
        j, i = (int(k) for k in rng.integers(0, n, size=2))
        delta = float(rng.uniform(0.1, 1.0))
        A_T = upper.copy()
        A_T[j, i] += delta
        witness = {"row": j, "col": i, "delta": delta}

    X = GridSpace(weights, 2.0, "X")
    Y, Z, E = X.with_exponent(2.0, "Y"), X.with_exponent(2.0, "Z"), X.with_exponent(2.0, "E")
    # ||x||_{2,w} <= sqrt(sum w) ||x||_inf and ||x||_inf <= ||x||_{2,w} / sqrt(min w)
    M = float(np.sqrt(weights.sum() / weights.min()))
    om_S = log_norm(A_S, X.with_exponent(np.inf))
    om_T = log_norm(A_T, X.with_exponent(np.inf))
    S = matrix_semigroup(A_S, X, M=M, omega=om_S)
    T = matrix_semigroup(A_T, X, M=M, omega=om_T)
    scn = Scenario(
        label=f"metzler_random(n={n}, seed={seed}, gap={gap})",
        X=X, Y=Y, Z=Z, E=E,
        S=S, S_Y=S.on(Y), T=T, T_Z=T.on(Z), B=B,
        K=orthant(X, "K"), L=orthant(E, "L"),
        M=M, omega=max(om_S, om_T), tol=1e-8,
        params={"n": n, "seed": seed, "gap": gap},
        meta={"constructed_true": truth, "witness": witness},
    )
    return _finish(scn)


# -- heat equation with drift -------------------------------------------------

def scenario_heat_drift(d=1, extent=4.0, nodes=33, b=1.0, t_ref=0.1):
    """Gauss-Weierstrass semigroup ``S`` against the drift semigroup ``T``.

    ``T`` is generated by ``Lap_h - sum_j b_j D_j^-`` (centred Laplacian, upwind
    backward differences for a nonnegative drift field), which is Metzler. ``B`` is
    ``b_max sum_j D_j^+`` with forward differences. ``X`` is l2-type, ``Y`` and ``Z``
    are sup-type, ``E`` is l1-type; ``K`` and ``L`` are the nonnegative cones.
    ``S`` and ``T`` act on the same lattice; their generators differ by the drift only
    up to the discretisation of the kernel semigroup.
    """
    d = int(d)
    if d not in (1, 2):
        raise DomainError("d must be 1 or 2")
    if nodes < 16:
        raise DomainError("need at least 16 nodes per axis")
    X = lattice_space(d, extent, nodes, 2.0, "X")
    N = X.n
    b = np.asarray(b, dtype=float)
    if b.ndim == 0:
        b = np.full((d, N), float(b))
    elif b.ndim == 1:
        if d != 1:
            b = np.tile(b, (d, 1)) if b.size == N else np.repeat(b[:, None], N, axis=1)
        else:
            b = b[None, :]
    if b.shape != (d, N):
        raise DimensionError(f"b must broadcast to shape {(d, N)}")
    if np.any(b < 0) or not np.all(np.isfinite(b)):
        raise DomainError("drift values must be finite and nonnegative")
    b_max = float(b.max())

    lap = lattice_laplacian(X)
    A_T = lap.copy()
    B = np.zeros((N, N))
    for j in range(d):
        A_T -= b[j][:, None] * lattice_difference(X, j, "backward")
        B += b_max * lattice_difference(X, j, "forward")

    Y = X.with_exponent(np.inf, "Y")
    Z = X.with_exponent(np.inf, "Z")
    E = X.with_exponent(1.0, "E")
    S = gauss_semigroup(X, extent, M=1.0, omega=0.0)
    T = matrix_semigroup(A_T, X)
    T_Z = matrix_semigroup(A_T, Z)
    scn = Scenario(
        label=f"heat_drift(d={d}, extent={extent}, nodes={nodes}, b_max={b_max})",
        X=X, Y=Y, Z=Z, E=E,
        S=S, S_Y=S.on(Y), T=T, T_Z=T_Z, B=B,
        K=orthant(X, "K"), L=orthant(E, "L"),
        M=1.0, omega=max(0.0, T.omega, T_Z.omega), tol=1e-4,
        params={"d": d, "extent": extent, "nodes": nodes, "t_ref": t_ref},
        meta={"b_max": b_max, "drift": b},
    )
    return _finish(scn, t_grid=(t_ref / 10.0, t_ref))


# -- rank-one perturbations ---------------------------------------------------

def random_positive_pair(n, seed, omega=-0.5):
    """Weights and Metzler ``(A_S, A_T)`` with ``A_S 1 <= omega 1`` and ``w^T A_T <= omega w^T``.

    These are the sup-norm bound of ``S`` and the weighted l1 bound of ``T`` with
    ``M = 1``; with ``f = g' = 1`` they make the corollary's extra assumption hold
    for ``(M, omega) = (1, max(omega, ...))`` exactly.
    """
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.5, 1.0, size=n)
    off_S = rng.uniform(0.0, 1.0, size=(n, n))
    off_T = rng.uniform(0.0, 1.0, size=(n, n))
    np.fill_diagonal(off_S, 0.0)
    np.fill_diagonal(off_T, 0.0)
    A_S = off_S + np.diag(omega - off_S.sum(axis=1) - rng.uniform(0.0, 0.5, size=n))
    col = (w[:, None] * off_T).sum(axis=0) / w
    A_T = off_T + np.diag(omega - col - rng.uniform(0.0, 0.5, size=n))
    return w, A_S, A_T


def scenario_rank_one_Linfty(weights, A_S, A_T):
    """``B u = (sum_i w_i u_i) * 1`` from l1 into l-inf, between positive semigroups.

    ``X`` is l2-type, ``Y`` is sup-type, ``Z = E`` are l1-type. The growth bound
    recorded on the scenario is the larger of the l-inf bound of ``S`` (the dual of
    the l1 bound of its adjoint) and the l1 bound of ``T``, both with ``M = 1``.
    """
    A_S = as_matrix(A_S, "A_S")
    A_T = as_matrix(A_T, "A_T")
    w = np.asarray(weights, dtype=float)
    if A_S.shape != (w.size, w.size) or A_T.shape != A_S.shape:
        raise DimensionError("A_S, A_T must be square with one row per weight")
    _require_metzler(A_S, "A_S")
    _require_metzler(A_T, "A_T")
    X = GridSpace(w, 2.0, "X")
    Y = X.with_exponent(np.inf, "Y")
    Z = X.with_exponent(1.0, "Z")
    E = X.with_exponent(1.0, "E")
    B = np.outer(np.ones(w.size), w)
    S_Y = matrix_semigroup(A_S, Y)
    T_Z = matrix_semigroup(A_T, Z)
    scn = Scenario(
        label=f"rank_one_Linfty(n={w.size})",
        X=X, Y=Y, Z=Z, E=E,
        S=matrix_semigroup(A_S, X), S_Y=S_Y, T=matrix_semigroup(A_T, X), T_Z=T_Z, B=B,
        K=orthant(X, "K"), L=orthant(E, "L"),
        M=1.0, omega=max(S_Y.omega, T_Z.omega), tol=1e-8,
        params={"n": int(w.size)},
        meta={"f": np.ones(w.size), "gprime": np.ones(w.size)},
    )
    return _finish(scn)


def scenario_rank_one_Lp(p, q, f, gprime, A_S, A_T, weights=None):
    """``B u = (sum_i w_i u_i g'_i) f`` from lq into lp.

    ``X`` is l2-type, ``Y`` lp-type, ``Z`` lq-type and ``E`` is lp'-type. ``f`` and
    ``gprime`` may be :class:`Element` (their space supplies the weights) or arrays.
    """
    if not (1 <= p < np.inf and 1 <= q < np.inf):
        raise DomainError("need 1 <= p, q < inf")
    if weights is None:
        weights = f.space.weights if isinstance(f, Element) else np.ones(np.size(f))
    w = np.asarray(weights, dtype=float)
    fv = np.asarray(f.values if isinstance(f, Element) else f, dtype=float).ravel()
    gv = np.asarray(gprime.values if isinstance(gprime, Element) else gprime, dtype=float).ravel()
    if fv.size != w.size or gv.size != w.size:
        raise DimensionError("f and gprime must have one value per node")
    if np.any(fv < 0) or np.any(gv < 0):
        raise DomainError("f and gprime must be nonnegative")
    A_S = as_matrix(A_S, "A_S")
    A_T = as_matrix(A_T, "A_T")
    _require_metzler(A_S, "A_S")
    _require_metzler(A_T, "A_T")
    X = GridSpace(w, 2.0, "X")
    Y = X.with_exponent(p, "Y")
    Z = X.with_exponent(q, "Z")
    E = Y.dual("E")
    B = np.outer(fv, w * gv)
    S_Y = matrix_semigroup(A_S, Y)
    T_Z = matrix_semigroup(A_T, Z)
    scn = Scenario(
        label=f"rank_one_Lp(p={p}, q={q}, n={w.size})",
        X=X, Y=Y, Z=Z, E=E,
        S=matrix_semigroup(A_S, X), S_Y=S_Y, T=matrix_semigroup(A_T, X), T_Z=T_Z, B=B,
        K=orthant(X, "K"), L=orthant(E, "L"),
        M=1.0, omega=max(S_Y.omega, T_Z.omega), tol=1e-8,
        params={"p": p, "q": q, "n": int(w.size)},
        meta={"f": fv, "gprime": gv},
    )
    return _finish(scn)


# -- delay equations ----------------------------------------------------------

def history_nodes(m):
    """History sample points ``theta_k = -1 + k/m``, ``k = 0..m-1``."""
    return -1.0 + np.arange(m) / m


def history_quadrature(m):
    """Trapezoid weights on ``theta_0..theta_{m-1}`` and the endpoint 0.

    The endpoint weight ``h/2`` is folded into the last cell (``f(0) ~ f_{m-1}``)
    so the rule acts on history values only; the weights are positive and sum to 1.
    """
    h = 1.0 / m
    c = np.full(m, h)
    c[0] = 0.5 * h
    c[-1] += 0.5 * h
    return c


def _density_values(density, m):
    if callable(density):
        return np.asarray([float(density(th)) for th in history_nodes(m)])
    v = np.asarray(density, dtype=float).ravel()
    if v.size == 1:
        return np.full(m, float(v[0]))
    if v.size != m:
        raise DimensionError(f"density needs {m} values (one per history node), got {v.size}")
    return v


def delay_functional(density, n, m):
    """``n x (n m)`` matrix of ``f -> int density(theta) f(theta) dtheta`` (scalar density)."""
    row = history_quadrature(m) * _density_values(density, m)
    return np.kron(row[None, :], np.eye(n))


def scenario_delay(A0, eta_density, rho, p=2.0, q=2.0, m=20):
    """Delay semigroup ``T`` (generator ``[[A0, Phi], [0, d]]``) against ``S`` (``Phi = 0``).

    ``Phi`` integrates the history against ``eta_density``; the dominating functional
    ``Psi`` uses ``rho`` with the same quadrature, so ``eta_density <= rho`` gives
    ``B_tilde <= B`` entrywise with ``B = [[0, Psi], [0, 0]]`` and
    ``B_tilde = [[0, Phi], [0, 0]]``. Densities are scalar, acting as multiples of the
    identity on the head space. ``X = Y`` use exponent ``p``, ``Z`` exponent ``q``;
    head coordinates have weight 1 and history coordinates weight ``1/m``.
    """
    A0 = as_matrix(A0, "A0")
    n = A0.shape[0]
    if A0.shape != (n, n):
        raise DimensionError("A0 must be square")
    m = int(m)
    if m < 4:
        raise DomainError("need at least 4 history cells")
    if not (1 <= p < np.inf and 1 <= q < np.inf):
        raise DomainError("need 1 <= p, q < inf")
    eta = _density_values(eta_density, m)
    rh = _density_values(rho, m)
    if np.any(rh < 0):
        raise DomainError("rho must be nonnegative (Psi has to be a positive functional)")
    if np.any(eta > rh):
        k = int(np.argmax(eta - rh))
        raise DominationError(
            f"eta_density exceeds rho at theta = {history_nodes(m)[k]:.6g}"
            f" ({eta[k]:.6g} > {rh[k]:.6g})"
        )
    Phi = delay_functional(eta, n, m)
    Psi = delay_functional(rh, n, m)
    A_S = build_delay_generator(A0, np.zeros_like(Phi), m, p)
    A_T = build_delay_generator(A0, Phi, m, p)
    N = A_S.shape[0]
    B = np.zeros((N, N))
    B[:n, n:] = Psi
    B_tilde = np.zeros((N, N))
    B_tilde[:n, n:] = Phi

    weights = np.concatenate([np.ones(n), np.full(n * m, 1.0 / m)])
    X = GridSpace(weights, p, "X")
    Y = X.with_exponent(p, "Y")
    Z = X.with_exponent(q, "Z")
    E = X.dual("E")
    S = matrix_semigroup(A_S, X, backend="delay-block")
    T = matrix_semigroup(A_T, X, backend="delay-block")
    T_Z = matrix_semigroup(A_T, Z, backend="delay-block")
    scn = Scenario(
        label=f"delay(n={n}, m={m}, p={p}, q={q})",
        X=X, Y=Y, Z=Z, E=E,
        S=S, S_Y=S.on(Y), T=T, T_Z=T_Z, B=B,
        K=orthant(X, "K"), L=orthant(E, "L"),
        M=1.0, omega=max(S.omega, T.omega, T_Z.omega), tol=1e-8,
        params={"n": n, "m": m, "p": p, "q": q},
        meta={"B_tilde": B_tilde, "eta": eta, "rho": rh, "A0": A0},
    )
    _finish(scn, t_grid=(0.25, 0.5, 1.0))
    # the exponential bound on the Z-side is only checked on a finite grid
    bound = check_growth_bound(T_Z, np.linspace(0.0, 4.0, 17))
    bound.name = "growth_bound_T_Z"
    scn.hypothesis.append(bound)
    return scn
