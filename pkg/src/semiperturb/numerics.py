"""Dense matrix kernels: exponentials, resolvents, Duhamel integrals and Laplace quadrature.

Everything here works on small dense ``float64`` arrays and is a pure function of
its inputs.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
import scipy.linalg
from numpy.polynomial.legendre import leggauss

from .errors import DimensionError, DivergenceError, DomainError, SingularityError

# e^{-36.8} ~ 1.04e-16: the tail of a Laplace integral beyond T_max falls below this.
DEFAULT_TAIL = float(np.exp(-36.8))
SINGULAR_COND = 1e12


def as_matrix(a, name="matrix"):
    """Convert to a finite 2-d float64 array."""
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


def _square(a, name="A"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def mat_exp(A, t=1.0):
    """Return ``exp(t A)``.

    Scaling and squaring with a degree-13 Pade approximant (``scipy.linalg.expm``).
    ``t = 0`` returns the identity exactly.
    """
    A = _square(A)
    t = float(t)
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if t == 0.0:
        return np.eye(A.shape[0])
    return scipy.linalg.expm(t * A)


def solve_resolvent(A, lam):
    """Return ``(lam I - A)^{-1}`` by a direct solve.

    Raises
    ------
    SingularityError
        If the 2-norm condition number of ``lam I - A`` exceeds 1e12.
    """
    A = _square(A)
    shifted = float(lam) * np.eye(A.shape[0]) - A
    cond = np.linalg.cond(shifted)
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        raise SingularityError(lam, cond)
    return np.linalg.solve(shifted, np.eye(A.shape[0]))


def duhamel_block(A_S, B, A_T, t):
    r"""Evaluate :math:`\int_0^t e^{(t-s)A_S} B e^{sA_T}\,ds` exactly.

    The integral is the upper-right block of ``exp(t [[A_S, B], [0, A_T]])``
    (Van Loan's block identity), so the only error is that of the exponential.
    """
    A_S = _square(A_S, "A_S")
    A_T = _square(A_T, "A_T")
    B = as_matrix(B, "B")
    m, n = A_S.shape[0], A_T.shape[0]
    if B.shape != (m, n):
        raise DimensionError(f"B must have shape {(m, n)}, got {B.shape}")
    t = float(t)
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if t == 0.0:
        return np.zeros((m, n))
    big = np.zeros((m + n, m + n))
    big[:m, :m] = A_S
    big[:m, m:] = B
    big[m:, m:] = A_T
    return mat_exp(big, t)[:m, m:]


def gauss_legendre_panels(a, b, panels, points):
    """Nodes and weights of the composite Gauss-Legendre rule on ``[a, b]``."""
    if panels < 1 or points < 1:
        raise DomainError("panels and points must be positive")
    x, w = leggauss(points)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def composite_gauss_legendre(f, a, b, panels=64, points=8):
    """Integrate ``f`` over ``[a, b]``; ``f`` may return scalars or arrays."""
    nodes, weights = gauss_legendre_panels(a, b, panels, points)
    total = 0.0
    for s, w in zip(nodes, weights):
        total = total + w * np.asarray(f(s), dtype=float)
    return total


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre settings for Laplace integrals.

    ``tail_tol`` fixes the truncation point through
    ``M e^{-(lam - omega) T_max} <= tail_tol``; ``t_max`` overrides it.
    """

    panels: int = 32
    points: int = 8
    tail_tol: float = DEFAULT_TAIL
    t_max: Optional[float] = None
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if self.rule != "gauss-legendre":
            raise DomainError(f"unsupported quadrature rule {self.rule!r}")
        if self.panels < 1 or self.points < 1:
            raise DomainError("panels and points must be >= 1")
        if not self.tail_tol > 0:
            raise DomainError("tail_tol must be > 0")
        if self.t_max is not None and not self.t_max > 0:
            raise DomainError("t_max must be > 0")


class LaplaceResult(NamedTuple):
    value: object
    error: float
    t_max: float


def truncation_point(lam, M, omega, spec):
    if spec.t_max is not None:
        return float(spec.t_max)
    return max(1.0, (np.log(M) - np.log(spec.tail_tol)) / (lam - omega))


def laplace_quadrature(
    f: Callable[[float], object],
    lam: float,
    M: float = 1.0,
    omega: float = 0.0,
    spec: QuadratureSpec = QuadratureSpec(),
    singular_origin: bool = False,
) -> LaplaceResult:
    r"""Truncated Laplace transform :math:`\int_0^{T} e^{-\lambda t} f(t)\,dt`.

    ``f`` must satisfy ``|f(t)| <= M e^{omega t}``; that bound sets the truncation
    point and the tail term of the error estimate. Panels cover ``[0, t_tail]``, where
    ``t_tail <= T_max`` is the point at which the tail bound reaches ``spec.tail_tol``;
    a few extra panels cover ``[t_tail, T_max]``. The rule is evaluated with
    ``spec.panels`` and twice as many panels; the finer value is returned and the
    difference (plus the tail bound) is the error estimate. ``f`` may return arrays,
    in which case the transform is taken entrywise and the error is the max over
    entries.

    With ``singular_origin`` the integral is taken in ``tau = sqrt(t)``, which removes
    integrable ``t^{-1/2}`` singularities at the origin (heat kernels on a grid).
    """
    lam = float(lam)
    if not lam > omega:
        raise DivergenceError(f"lambda = {lam} must exceed the growth bound omega = {omega}")
    t_max = truncation_point(lam, M, omega, spec)
    # for large lam the integrand lives on [0, t_tail] << t_max: grade the panels there
    t_tail = min(t_max, (np.log(M) - np.log(spec.tail_tol)) / (lam - omega))

    def rule(panels):
        a, b, c = (np.sqrt(x) for x in (0.0, t_tail, t_max)) if singular_origin else (0.0, t_tail, t_max)
        x, w = gauss_legendre_panels(a, b, panels, spec.points)
        if c > b:
            x2, w2 = gauss_legendre_panels(b, c, max(panels // 8, 1), spec.points)
            x, w = np.concatenate([x, x2]), np.concatenate([w, w2])
        if singular_origin:
            t, w = x**2, w * 2.0 * x
        else:
            t = x
        total = 0.0
        for ti, wi in zip(t, w):
            total = total + wi * np.exp(-lam * ti) * np.asarray(f(ti), dtype=float)
        return total

    coarse = rule(spec.panels)
    fine = rule(2 * spec.panels)
    tail = M * np.exp(-(lam - omega) * t_max) / (lam - omega)
    err = float(np.max(np.abs(np.asarray(fine) - np.asarray(coarse)))) + tail
    return LaplaceResult(fine, err, t_max)
