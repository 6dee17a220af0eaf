"""Semigroup handles with three backends and the checks run on them.

Backends
--------
``matrix-exp``
    ``S(t) = exp(tA)`` for a dense generator ``A``.
``gauss-kernel``
    Convolution with the Gauss-Weierstrass kernel on a uniform lattice, with zero
    extension outside ``[-extent, extent]^d``. Its ``generator`` is the centred
    finite-difference Laplacian of the same lattice.
``delay-block``
    ``exp(tA)`` for a head/history block generator from :func:`build_delay_generator`.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionError, DivergenceError, DomainError
from .numerics import QuadratureSpec, as_matrix, laplace_quadrature, mat_exp
from .spaces import Element, GridSpace, dual_pair

BACKENDS = ("matrix-exp", "gauss-kernel", "delay-block")


def log_norm(A, space: GridSpace):
    """Logarithmic norm of ``A`` on ``space``: ``||exp(tA)|| <= exp(t mu)``.

    Exact for p in {1, 2, inf}; otherwise the max of the p=1 and p=inf values, which
    bounds the intermediate exponents by interpolation.
    """
    A = np.asarray(A, dtype=float)
    w = space.weights
    p = space.p
    off = np.abs(A - np.diag(np.diag(A)))
    if np.isinf(p):
        return float((np.diag(A) + off.sum(axis=1)).max())
    if p == 1.0:
        return float((np.diag(A) + (w[:, None] * off).sum(axis=0) / w).max())
    if p == 2.0:
        sw = np.sqrt(w)
        C = sw[:, None] * A / sw[None, :]
        return float(np.linalg.eigvalsh(0.5 * (C + C.T)).max())
    return max(log_norm(A, space.with_exponent(1.0)), log_norm(A, space.with_exponent(np.inf)))


@dataclass(frozen=True, eq=False)
class SemigroupHandle:
    """An evaluatable family ``t -> S(t)`` with growth bound ``||S(t)|| <= M e^{omega t}``.

    With ``memo=True`` evaluated matrices are cached per ``t`` (read-only arrays).
    """

    backend: str
    space: GridSpace
    generator: Optional[np.ndarray] = None
    M: float = 1.0
    omega: float = 0.0
    extent: Optional[float] = None
    memo: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise DomainError(f"unknown backend {self.backend!r}")
        if self.generator is not None:
            A = as_matrix(self.generator, "generator")
            if A.shape != (self.space.n, self.space.n):
                raise DimensionError("generator must match the space dimension")
            A.setflags(write=False)
            object.__setattr__(self, "generator", A)
        elif self.backend != "gauss-kernel":
            raise DomainError(f"{self.backend} backend needs a generator")
        if self.backend == "gauss-kernel" and (self.extent is None or self.space.coords is None):
            raise DomainError("gauss-kernel backend needs an extent and node coordinates")
        if not self.M >= 1.0:
            raise DomainError("M must be >= 1")

    @property
    def is_matrix(self):
        """True when ``S(t)`` is exactly ``exp(t generator)``."""
        return self.backend in ("matrix-exp", "delay-block")

    @property
    def n(self):
        return self.space.n

    def on(self, space: GridSpace):
        """The same family viewed on another space with the same nodes (a consistent copy)."""
        return SemigroupHandle(
            self.backend, space, self.generator, self.M, self.omega, self.extent, self.memo
        )

    def evaluate(self, t):
        return evaluate(self, t)

    __call__ = evaluate


def matrix_semigroup(A, space, M=1.0, omega=None, backend="matrix-exp", memo=False):
    """Handle for ``exp(tA)``; the default bound is ``M = 1`` with the logarithmic norm."""
    A = as_matrix(A, "generator")
    if omega is None:
        omega = log_norm(A, space)
    return SemigroupHandle(backend, space, A, M=M, omega=omega, memo=memo)


def gauss_semigroup(space, extent, M=1.0, omega=0.0, memo=False):
    return SemigroupHandle(
        "gauss-kernel", space, lattice_laplacian(space, extent), M=M, omega=omega,
        extent=float(extent), memo=memo,
    )


def evaluate(S: SemigroupHandle, t) -> np.ndarray:
    """Matrix of ``S(t)`` in the space's coordinates."""
    t = float(t)
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if S.memo and t in S._cache:
        return S._cache[t]
    if S.backend == "gauss-kernel":
        if t == 0.0:
            out = np.eye(S.n)
        else:
            # squared node distances do not depend on t; keep them with the handle
            r2 = S._cache.get("r2")
            if r2 is None:
                _check_lattice(S.space, S.extent)
                r2 = S._cache["r2"] = _squared_distances(S.space.coords)
            out = _kernel_matrix(t, r2, S.space.weights, S.space.coords.shape[1])
    else:
        out = mat_exp(S.generator, t)
    if S.memo:
        out = out.copy()
        out.setflags(write=False)
        S._cache[t] = out
    return out


# -- Gauss-Weierstrass lattice ------------------------------------------------

def lattice_space(d, extent, nodes, p=2.0, label=""):
    """Uniform lattice on ``[-extent, extent]^d`` with ``nodes`` points per axis.

    Weights are the cell volume ``h^d``; nodes are ordered with the last axis fastest.
    """
    if d not in (1, 2):
        raise DomainError("only d = 1 or d = 2 lattices are supported")
    if nodes < 2:
        raise DomainError("need at least two nodes per axis")
    axis = np.linspace(-extent, extent, nodes)
    h = axis[1] - axis[0]
    if d == 1:
        coords = axis[:, None]
    else:
        g0, g1 = np.meshgrid(axis, axis, indexing="ij")
        coords = np.column_stack([g0.ravel(), g1.ravel()])
    return GridSpace(np.full(coords.shape[0], h**d), p, label, coords)


def lattice_spacing(space: GridSpace):
    d = space.coords.shape[1]
    return float(space.weights[0] ** (1.0 / d))


def gauss_weierstrass_matrix(t, grid: GridSpace, extent) -> np.ndarray:
    r"""Discrete convolution with :math:`k_t(x) = (4\pi t)^{-d/2} e^{-|x|^2/(4t)}`.

    Entry ``(i, j)`` is ``w_j k_t(x_i - x_j)``; functions are extended by zero
    outside the window. ``t = 0`` gives the identity.
    """
    t = float(t)
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    _check_lattice(grid, extent)
    x = grid.coords
    if t == 0.0:
        return np.eye(grid.n)
    return _kernel_matrix(t, _squared_distances(x), grid.weights, x.shape[1])


def _check_lattice(grid, extent):
    if grid.coords is None:
        raise DomainError("grid has no node coordinates")
    if np.any(np.abs(grid.coords) > extent * (1 + 1e-12)):
        raise DomainError("grid nodes lie outside [-extent, extent]^d")


def _squared_distances(x):
    return ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=-1)


def _kernel_matrix(t, r2, weights, d):
    k = (4.0 * np.pi * t) ** (-d / 2.0) * np.exp(-r2 / (4.0 * t))
    return k * weights[None, :]


def _second_difference(nodes, h):
    D = (np.eye(nodes, k=1) + np.eye(nodes, k=-1) - 2.0 * np.eye(nodes)) / h**2
    return D


def lattice_laplacian(space: GridSpace, extent=None):
    """Centred 3-point (d=1) or 5-point (d=2) Laplacian with zero boundary values."""
    d = space.coords.shape[1]
    h = lattice_spacing(space)
    nodes = int(round(space.n ** (1.0 / d)))
    D = _second_difference(nodes, h)
    if d == 1:
        return D
    eye = np.eye(nodes)
    return np.kron(D, eye) + np.kron(eye, D)


def lattice_difference(space: GridSpace, axis, kind):
    """First difference along ``axis``: ``kind`` is ``"forward"`` or ``"backward"``."""
    d = space.coords.shape[1]
    h = lattice_spacing(space)
    nodes = int(round(space.n ** (1.0 / d)))
    if kind == "forward":
        D1 = (np.eye(nodes, k=1) - np.eye(nodes)) / h
    elif kind == "backward":
        D1 = (np.eye(nodes) - np.eye(nodes, k=-1)) / h
    else:
        raise DomainError(f"unknown difference kind {kind!r}")
    if d == 1:
        return D1
    eye = np.eye(nodes)
    return np.kron(D1, eye) if axis == 0 else np.kron(eye, D1)


def interior_mask(space: GridSpace, extent, margin):
    """Nodes at distance at least ``margin`` from the boundary of the window."""
    return np.all(np.abs(space.coords) <= extent - margin + 1e-12, axis=1)


# -- delay equations ----------------------------------------------------------

def build_delay_generator(A0, phi_weights, m, p=2.0):
    """Block generator ``[[A0, Phi], [0, d/dtheta]]`` on head x history cells.

    State layout is ``[x, f_0, ..., f_{m-1}]`` with ``f_k`` the history at
    ``theta_k = -1 + k/m`` (each block has the size of ``x``). The derivative is an
    upwind difference ``f_k' = m (f_{k+1} - f_k)`` with ``f_m := x``, so the cell
    nearest 0 is fed by the head (the boundary condition ``f(0) = x``) and data are
    shifted towards ``theta = -1``. The discretisation does not depend on ``p``.
    """
    A0 = as_matrix(A0, "A0")
    n = A0.shape[0]
    if A0.shape != (n, n):
        raise DimensionError("A0 must be square")
    m = int(m)
    if m < 2:
        raise DomainError("need at least two history cells")
    if not p >= 1:
        raise DomainError("p must be >= 1")
    phi = as_matrix(phi_weights, "phi_weights")
    if phi.shape != (n, n * m):
        raise DimensionError(f"phi_weights must have shape {(n, n * m)}, got {phi.shape}")
    N = n * (m + 1)
    G = np.zeros((N, N))
    G[:n, :n] = A0
    G[:n, n:] = phi
    eye = np.eye(n)
    for k in range(m):
        row = n * (k + 1)
        G[row:row + n, row:row + n] = -m * eye
        nxt = n * (k + 2) if k < m - 1 else 0
        G[row:row + n, nxt:nxt + n] = m * eye
    return G


# -- checks -------------------------------------------------------------------

@dataclass
class CheckReport:
    """Outcome of a numerical check: a residual compared against a tolerance."""

    name: str
    residual: float
    tol: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "residual": self.residual,
            "tol": self.tol,
            "passed": self.passed,
            "details": self.details,
        }


def _law_margin(S, times):
    t_max = 2.0 * max(times) if len(times) else 0.0
    return 4.0 * np.sqrt(t_max)


def check_semigroup_law(S: SemigroupHandle, times, tol=1e-10) -> CheckReport:
    """``max ||S(t)S(s) - S(t+s)||`` over pairs from ``times``.

    The gauss-kernel backend is measured on the block of nodes at distance at least
    ``4 sqrt(max(t+s))`` from the window boundary, where truncation is negligible.
    """
    times = [float(t) for t in times]
    if any(t < 0 for t in times):
        raise DomainError("times must be nonnegative")
    space = S.space
    if S.backend == "gauss-kernel":
        mask = interior_mask(space, S.extent, _law_margin(S, times))
        sub = GridSpace(space.weights[mask], space.p) if mask.any() else None
    else:
        mask, sub = None, space
    worst = 0.0
    where = None
    for i, t in enumerate(times):
        for s in times[i:]:
            diff = S(t) @ S(s) - S(t + s)
            if mask is not None:
                if sub is None:
                    continue
                diff = diff[np.ix_(mask, mask)]
            r = sub.operator_norm(diff)
            if r > worst:
                worst, where = r, (t, s)
    return CheckReport("semigroup_law", worst, tol, worst <= tol, {"argmax": where})


def estimate_bound(S: SemigroupHandle, t_grid):
    """Fit ``ln||S(t)|| <= ln M + omega t`` on ``t_grid``.

    Least-squares line through ``(t, ln||S(t)||)``, shifted up by the largest residual
    so the bound holds at every grid point. ``M`` is inflated by 5% unless the fit is
    already within rounding of ``M = 1``; ``M >= 1`` always.
    """
    ts = np.asarray([float(t) for t in t_grid])
    if ts.size == 0 or np.any(ts < 0):
        raise DomainError("t_grid must be nonempty and nonnegative")
    logs = np.array([np.log(max(S.space.operator_norm(S(t)), 1e-300)) for t in ts])
    if np.ptp(ts) == 0.0:
        omega, c = 0.0, float(logs.max())
    else:
        omega, c = np.polyfit(ts, logs, 1)
    resid = logs - (c + omega * ts)
    M_fit = float(np.exp(c + max(resid.max(), 0.0)))
    M = 1.0 if M_fit <= 1.0 + 1e-9 else 1.05 * M_fit
    return M, float(omega)


def check_growth_bound(S: SemigroupHandle, t_grid, rel=1e-6) -> CheckReport:
    """``||S(t)|| <= M e^{omega t} (1 + rel)`` on ``t_grid``; residual is the worst ratio - 1."""
    worst, at = -np.inf, None
    for t in t_grid:
        ratio = S.space.operator_norm(S(t)) / (S.M * np.exp(S.omega * float(t)))
        if ratio - 1.0 > worst:
            worst, at = ratio - 1.0, float(t)
    return CheckReport("growth_bound", float(worst), rel, bool(worst <= rel), {"argmax_t": at})


class WeakResolvent(NamedTuple):
    lam: float
    operator: np.ndarray
    error: float


def weak_resolvent(S: SemigroupHandle, lam, spec: QuadratureSpec = QuadratureSpec()):
    r"""Entrywise Laplace transform :math:`\int_0^\infty e^{-\lambda t} S(t)\,dt`.

    The pairing used to define it is ``dual_pair``, whose weights cancel entrywise,
    so the operator is simply the transform of the matrix family.
    """
    if not lam > S.omega:
        raise DivergenceError(f"lambda = {lam} must exceed omega = {S.omega}")
    res = laplace_quadrature(
        S.evaluate, lam, M=S.M, omega=S.omega, spec=spec,
        singular_origin=S.backend == "gauss-kernel",
    )
    return WeakResolvent(float(lam), np.asarray(res.value), res.error)


class ResolventConvergence(NamedTuple):
    errors: list
    passed: bool


def check_resolvent_convergence(S: SemigroupHandle, y: Element, e: Element, lambdas, tol=1e-2,
                                spec: QuadratureSpec = QuadratureSpec()):
    """Errors ``|<lam R(lam) y, e> - <y, e>|`` along an increasing ``lambdas`` sequence.

    Passes when the last error is at most ``tol`` and the sequence never grows by
    more than 10% from one step to the next.
    """
    lambdas = [float(l) for l in lambdas]
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise DomainError("lambdas must be strictly increasing")
    target = dual_pair(y, e)
    errors = []
    for lam in lambdas:
        R = weak_resolvent(S, lam, spec).operator
        val = dual_pair(Element(y.space, lam * (R @ y.values)), e)
        errors.append(abs(val - target))
    monotone = all(b <= 1.1 * a for a, b in zip(errors, errors[1:]))
    return ResolventConvergence(errors, bool(monotone and errors[-1] <= tol))


def check_consistency(S_A: SemigroupHandle, S_B: SemigroupHandle, samples, times, tol=1e-12):
    """``max ||S_A(t)u - S_B(t)u||`` over samples and times, in the norm of ``S_A``'s space."""
    if S_A.n != S_B.n:
        raise DimensionError("semigroups act on different coordinate dimensions")
    worst = 0.0
    for t in times:
        D = S_A(t) - S_B(t)
        for u in samples:
            values = u.values if isinstance(u, Element) else np.asarray(u, dtype=float)
            worst = max(worst, S_A.space.norm(D @ values))
    return CheckReport("consistency", worst, tol, worst <= tol)
