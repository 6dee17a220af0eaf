"""Weighted discrete Lp spaces on a shared node set, their pairings, and convex cones.

All spaces of one scenario share nodes and weights and differ only in the
exponent, so intersections, sums and the identification of pairings are literal
at the discrete level.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize, nnls

from .errors import ConvergenceError, DimensionError, DomainError, PairingError


@dataclass(frozen=True, eq=False)
class GridSpace:
    """Finite measure space ``(nodes, weights)`` with exponent ``p`` (``np.inf`` allowed).

    ``coords`` optionally carries node positions, shape ``(n, d)``.
    """

    weights: np.ndarray
    p: float = 2.0
    label: str = ""
    coords: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("weights must be finite and strictly positive")
        if not self.p >= 1:
            raise DomainError(f"exponent must be >= 1, got {self.p}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "p", float(self.p))
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            if c.shape[0] != w.size:
                raise DimensionError("coords must have one row per node")
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.weights.size

    @property
    def conjugate(self):
        """Conjugate exponent ``p'`` with ``1/p + 1/p' = 1``."""
        if self.p == 1.0:
            return np.inf
        if np.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    def with_exponent(self, p, label=None):
        """Same nodes and weights, different exponent."""
        return GridSpace(self.weights, p, self.label if label is None else label, self.coords)

    def dual(self, label=None):
        return self.with_exponent(self.conjugate, label)

    def shares_measure(self, other):
        return self.n == other.n and np.array_equal(self.weights, other.weights)

    def element(self, values):
        return Element(self, values)

    def basis(self, i):
        e = np.zeros(self.n)
        e[i] = 1.0
        return Element(self, e)

    def norm(self, values):
        return weighted_norm(values, self.weights, self.p)

    def operator_norm(self, A, tol=1e-8, max_iter=200):
        """Induced operator norm of ``A`` acting on this space."""
        return induced_norm(A, self.weights, self.p, tol=tol, max_iter=max_iter)

    def adjoint(self, A):
        """Adjoint of ``A`` with respect to the pairing ``sum_i w_i u_i v_i``."""
        w = self.weights
        return (np.asarray(A, dtype=float).T * w[None, :]) / w[:, None]

    def __repr__(self):
        return f"GridSpace(n={self.n}, p={self.p}, label={self.label!r})"


@dataclass(frozen=True, eq=False)
class Element:
    space: GridSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.space.n:
            raise DimensionError(f"expected {self.space.n} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise DomainError("element has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def weighted_norm(values, weights, p):
    u = np.abs(np.asarray(values, dtype=float))
    if np.isinf(p):
        # essential sup: weights are all positive so they do not enter
        return float(u.max()) if u.size else 0.0
    if p == 1.0:
        return float(np.dot(weights, u))
    if p == 2.0:
        return float(np.sqrt(np.dot(weights, u * u)))
    return float(np.dot(weights, u**p) ** (1.0 / p))


def induced_norm(A, weights, p, tol=1e-8, max_iter=200):
    """Operator norm of ``A`` on weighted lp.

    Exact for ``p`` in {1, inf}; power iteration for ``p = 2``; for other exponents the
    Riesz-Thorin bound ``||A||_1^{1/p} ||A||_inf^{1-1/p}`` (an upper bound).
    """
    A = np.asarray(A, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.isinf(p):
        return float(np.abs(A).sum(axis=1).max())
    if p == 1.0:
        return float(((w[:, None] * np.abs(A)).sum(axis=0) / w).max())
    if p == 2.0:
        sw = np.sqrt(w)
        C = sw[:, None] * A / sw[None, :]
        G = C.T @ C
        x = np.ones(G.shape[0]) / np.sqrt(G.shape[0])
        est = 0.0
        for _ in range(max_iter):
            y = G @ x
            ny = np.linalg.norm(y)
            if ny == 0.0:
                return 0.0
            x = y / ny
            if abs(ny - est) <= tol * ny:
                est = ny
                break
            est = ny
        return float(np.sqrt(est))
    n1 = induced_norm(A, w, 1.0)
    ninf = induced_norm(A, w, np.inf)
    return float(n1 ** (1.0 / p) * ninf ** (1.0 - 1.0 / p))


def p_norm(u: Element) -> float:
    """Weighted lp norm of ``u`` in its own space."""
    return u.space.norm(u.values)


def dual_pair(u: Element, v: Element) -> float:
    """The bilinear form ``sum_i w_i u_i v_i``.

    One form serves every space in the scale, which is what makes pairings on
    intersections agree; it therefore refuses spaces with different weights.
    """
    if not u.space.shares_measure(v.space):
        raise PairingError("elements live on spaces with different nodes/weights")
    return float(np.dot(u.space.weights, u.values * v.values))


def intersection_norm(u: Element, spX: GridSpace, spY: GridSpace) -> float:
    """Norm of ``X cap Y``: ``max(||u||_X, ||u||_Y)``."""
    if spX.n != spY.n or spX.n != u.space.n:
        raise DimensionError("spaces must share the dimension of u")
    return max(spX.norm(u.values), spY.norm(u.values))


def _norm_subgradient(x, weights, p):
    a = np.abs(x)
    if not np.any(a):
        return np.zeros_like(x)
    if np.isinf(p):
        g = np.zeros_like(x)
        i = int(np.argmax(a))
        g[i] = np.sign(x[i])
        return g
    if p == 1.0:
        return weights * np.sign(x)
    nrm = weighted_norm(x, weights, p)
    return weights * np.sign(x) * (a / nrm) ** (p - 1.0)


def sum_norm(v: Element, spX: GridSpace, spY: GridSpace, tol=1e-6, max_iter=500, window=50):
    """Norm of ``X + Y``: ``inf ||x||_X + ||v - x||_Y`` over splittings ``v = x + (v - x)``.

    Subgradient descent with diminishing steps from the better of the two trivial
    splittings (so the result never exceeds ``min(||v||_X, ||v||_Y)``), followed by a
    Nelder-Mead polish of the best iterate; plain subgradient steps stall at the kinks
    of the objective.

    Raises
    ------
    ConvergenceError
        If neither stage meets its stopping criterion within ``max_iter`` iterations
        (resp. the polish budget).
    """
    if spX.n != spY.n or spX.n != v.space.n:
        raise DimensionError("spaces must share the dimension of v")
    vv = v.values
    wX, wY = spX.weights, spY.weights

    def objective(x):
        return weighted_norm(x, wX, spX.p) + weighted_norm(vv - x, wY, spY.p)

    x = np.zeros_like(vv) if spY.norm(vv) <= spX.norm(vv) else vv.copy()
    best_x, best = x.copy(), objective(x)
    if best == 0.0:
        return 0.0
    step0 = 0.5 * np.abs(vv).max()
    history = [best]
    settled = False
    for k in range(max_iter):
        g = _norm_subgradient(x, wX, spX.p) - _norm_subgradient(vv - x, wY, spY.p)
        gn = np.linalg.norm(g)
        if gn == 0.0:
            settled = True
            break
        x = x - step0 / np.sqrt(k + 1.0) * g / gn
        val = objective(x)
        if val < best:
            best, best_x = val, x.copy()
        history.append(best)
        if k >= window and history[-window - 1] - best <= tol * (1.0 + best):
            settled = True
            break
    scale = max(np.abs(vv).max(), 1e-300)
    res = minimize(objective, best_x, method="Nelder-Mead",
                   options={"xatol": 1e-3 * tol * scale, "fatol": 1e-3 * tol,
                            "maxiter": 200 * vv.size * 10})
    if res.fun < best:
        best = float(res.fun)
    if not (settled or res.success):
        raise ConvergenceError("sum_norm did not converge", best)
    return float(best)


@dataclass(frozen=True, eq=False)
class Cone:
    """Finitely generated convex cone ``{G^T c : c >= 0}`` in ``space``."""

    space: GridSpace
    generators: np.ndarray
    tol: float = 1e-9
    name: str = ""
    positivity_detecting: bool = field(default=False)

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if G.shape[1] != self.space.n:
            raise DimensionError("generators must live in the ambient space")
        if np.any(np.all(G == 0.0, axis=1)):
            raise DomainError("cone generators must be nonzero")
        G.setflags(write=False)
        object.__setattr__(self, "generators", G)
        is_orthant = G.shape == (self.space.n, self.space.n) and np.array_equal(G, np.eye(G.shape[0]))
        object.__setattr__(self, "_orthant", is_orthant)

    @property
    def size(self):
        return self.generators.shape[0]


def orthant(space: GridSpace, name="orthant", tol=1e-9) -> Cone:
    """The nonnegative cone, generated by the standard basis."""
    return Cone(space, np.eye(space.n), tol=tol, name=name, positivity_detecting=True)


def cone_distance(c: Cone, values) -> float:
    """Euclidean distance from ``values`` to the cone (nonnegative least squares)."""
    values = np.asarray(values, dtype=float)
    if c._orthant:
        # the projection onto the orthant clips negative entries
        return float(np.linalg.norm(np.minimum(values, 0.0)))
    _, residual = nnls(c.generators.T, values)
    return float(residual)


def cone_contains(c: Cone, u) -> bool:
    """Nonnegative least-squares membership test with relative tolerance ``c.tol``."""
    values = u.values if isinstance(u, Element) else np.asarray(u, dtype=float)
    return cone_distance(c, values) <= c.tol * (1.0 + np.linalg.norm(values))


def cone_samples(c: Cone, count=None, seed=0):
    """Every generator followed by seeded random nonnegative combinations of them."""
    k = c.size
    count = k if count is None else int(count)
    if count < k:
        raise DomainError(f"count must be at least the number of generators ({k})")
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(0.0, 1.0, size=(count - k, k))
    rows = np.vstack([c.generators, coeffs @ c.generators])
    return [Element(c.space, r) for r in rows]
