"""Tested perturbation inequalities and the equivalence verdict.

For cone samples ``x`` (from ``K``) and ``v`` (from ``L``) each check computes a
slack, right-hand side minus left-hand side, so a statement holds on the samples
iff every slack is ``>= -tol``:

``a``  ``<S(t)x, v> + int_0^t <S_Y(t-s) B T_Z(s) x, v> ds - <T(t)x, v>``
``b``  ``<R_S x, v> + <R_{S_Y} B R_{T_Z} x, v> - <R_T x, v>`` at ``lam``
``c``  ``<x, A_S' v> + <Bx, v> - <A_T x, v>``

Pairings are the weighted form ``sum_i w_i x_i v_i`` shared by the whole scale.
Finitely generated cones are sampled through their generators (plus optional
random combinations); by bilinearity the generators already decide the statement.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergenceError, HypothesisError, InapplicableError, PrecisionError
from .numerics import (
    QuadratureSpec,
    composite_gauss_legendre,
    duhamel_block,
    solve_resolvent,
    gauss_legendre_panels,
)
from .semigroups import CheckReport, SemigroupHandle, check_consistency, weak_resolvent
from .spaces import cone_contains, cone_distance, cone_samples

STATEMENTS = ("a", "b", "c", "corollary-a", "corollary-b", "corollary-c", "extra", "strong")
MARGINAL_FACTOR = 10.0
DUHAMEL_PANELS = 64


def classify(min_slack, tol):
    """``"marginal"`` inside ``10 tol`` of zero, else ``"pass"``/``"fail"``."""
    if abs(min_slack) < MARGINAL_FACTOR * tol:
        return "marginal"
    return "pass" if min_slack >= -tol else "fail"


@dataclass
class StatementReport:
    """Slack values of one statement over a grid and two sample sets.

    ``slacks`` has shape ``(len(grid), n_x, n_v)``. ``grid`` holds times or lambdas
    (``[None]`` for grid-free statements). The argmin is taken in the order
    x-index, v-index, grid-index, so ties resolve to the lowest sample index first.
    """

    statement: str
    grid: list
    slacks: np.ndarray
    tol: float
    grid_kind: str = "t"
    error_estimate: float = 0.0

    def __post_init__(self):
        self.slacks = np.asarray(self.slacks, dtype=float)
        if self.slacks.ndim != 3 or self.slacks.shape[0] != len(self.grid):
            raise ValueError("slacks must have shape (grid, x, v)")

    @property
    def samples(self):
        return int(self.slacks.size)

    @property
    def min_slack(self):
        return float(self.slacks.min()) if self.slacks.size else 0.0

    @property
    def argmin(self):
        if not self.slacks.size:
            return None
        ordered = np.transpose(self.slacks, (1, 2, 0))
        ix, iv, ig = np.unravel_index(int(np.argmin(ordered)), ordered.shape)
        return int(ix), int(iv), self.grid[ig]

    @property
    def passed(self):
        return self.min_slack >= -self.tol

    @property
    def verdict(self):
        return classify(self.min_slack, self.tol)

    def rows(self):
        """``(statement, grid value, x index, v index, slack, verdict)`` for every slack."""
        G, nx, nv = self.slacks.shape
        for g in range(G):
            for i in range(nx):
                for j in range(nv):
                    s = float(self.slacks[g, i, j])
                    yield self.statement, self.grid[g], i, j, s, classify(s, self.tol)

    def summary(self):
        ix = self.argmin
        return {
            "statement": self.statement,
            "min_slack": self.min_slack,
            "argmin": None if ix is None else {"x_index": ix[0], "vprime_index": ix[1],
                                                self.grid_kind: ix[2]},
            "samples": self.samples,
            "tol": self.tol,
            "verdict": self.verdict,
            "error_estimate": self.error_estimate,
        }


@dataclass
class EquivalenceVerdict:
    reports: dict
    agreement: bool
    notes: list = field(default_factory=list)

    @property
    def verdicts(self):
        return {k: r.verdict for k, r in self.reports.items()}


# -- sampling and pairing helpers ----------------------------------------------

def _samples(cone, count=None, seed=0):
    return np.array([e.values for e in cone_samples(cone, count, seed)])


def _pairs(scn, Op, xs, vs):
    """Matrix of pairings ``<Op x_i, v_j>`` for rows ``x_i`` of ``xs`` and ``v_j`` of ``vs``."""
    w = scn.X.weights
    return (xs @ np.asarray(Op).T) @ (w[:, None] * vs.T)


def _grid_sample_sets(scn, x_count, v_count, seed):
    return _samples(scn.K, x_count, seed), _samples(scn.L, v_count, seed + 1)


# -- Duhamel term ------------------------------------------------------------

def duhamel_operator(S_Y: SemigroupHandle, B, T_Z: SemigroupHandle, t, panels=DUHAMEL_PANELS,
                     points=8):
    r"""Operator :math:`\int_0^t S_Y(t-s) B T_Z(s)\,ds` and an error estimate.

    Exact block exponential when both factors are matrix semigroups. Otherwise
    composite Gauss-Legendre in ``s`` with ``panels`` and ``panels/2`` panels, the
    difference serving as error estimate; for the kernel backend the substitution
    ``t - s = tau^2`` removes the ``(t-s)^{-1/2}`` singularity of the lattice kernel.
    """
    t = float(t)
    if t == 0.0:
        return np.zeros((S_Y.n, T_Z.n)), 0.0
    if S_Y.is_matrix and T_Z.is_matrix:
        return duhamel_block(S_Y.generator, B, T_Z.generator, t), 0.0

    def rule(p):
        if S_Y.backend == "gauss-kernel":
            tau, w = gauss_legendre_panels(0.0, np.sqrt(t), p, points)
            r, w = tau**2, 2.0 * tau * w
        else:
            r, w = gauss_legendre_panels(0.0, t, p, points)
        total = np.zeros((S_Y.n, T_Z.n))
        for ri, wi in zip(r, w):
            total += wi * (S_Y(ri) @ (B @ T_Z(t - ri)))
        return total

    fine = rule(panels)
    coarse = rule(max(panels // 2, 1))
    return fine, float(np.abs(fine - coarse).max())


# -- the three statements -------------------------------------------------------

def check_statement_a(scn, t_grid, tol=None, x_count=None, v_count=None, seed=0):
    """Duhamel (variation-of-constants) form, evaluated on ``t_grid``.

    Raises
    ------
    PrecisionError
        If the quadrature error of the Duhamel term, paired with the samples,
        exceeds ``tol / 10``.
    """
    tol = scn.tol if tol is None else tol
    xs, vs = _grid_sample_sets(scn, x_count, v_count, seed)
    B = np.asarray(scn.B)
    out, err_max = [], 0.0
    for t in t_grid:
        D, err = duhamel_operator(scn.S_Y, B, scn.T_Z, t)
        if err:
            paired_err = float(np.abs(_pairs(scn, np.full_like(D, err), np.abs(xs), np.abs(vs))).max())
            err_max = max(err_max, paired_err)
            if paired_err > tol / 10.0:
                raise PrecisionError(
                    f"Duhamel quadrature error {paired_err:.3e} at t = {t} exceeds tol/10 = {tol / 10:.1e}"
                )
        out.append(_pairs(scn, scn.S(t) + D - scn.T(t), xs, vs))
    return StatementReport("a", [float(t) for t in t_grid], np.array(out), tol, "t", err_max)


def _resolvent(S: SemigroupHandle, lam, spec):
    if S.is_matrix:
        return solve_resolvent(S.generator, lam), 0.0
    wr = weak_resolvent(S, lam, spec)
    return wr.operator, wr.error


def _growth(scn):
    return max(scn.S.omega, scn.S_Y.omega, scn.T.omega, scn.T_Z.omega)


def check_statement_b(scn, lambda_grid, tol=None, x_count=None, v_count=None, seed=0,
                      spec: QuadratureSpec = QuadratureSpec()):
    """Resolvent form on ``lambda_grid`` (each ``lam`` must exceed the growth bound + 0.5).

    Matrix semigroups use a direct solve; the kernel backend its weak Laplace
    transform, whose error estimate must stay below ``tol / 10``.
    """
    tol = scn.tol if tol is None else tol
    floor = _growth(scn) + 0.5
    for lam in lambda_grid:
        if not lam > floor:
            raise DivergenceError(f"lambda = {lam} is not above max(omega) + 0.5 = {floor}")
    xs, vs = _grid_sample_sets(scn, x_count, v_count, seed)
    B = np.asarray(scn.B)
    out, err_max = [], 0.0
    for lam in lambda_grid:
        R_S, e1 = _resolvent(scn.S, lam, spec)
        R_SY, e2 = _resolvent(scn.S_Y, lam, spec)
        R_T, _ = _resolvent(scn.T, lam, spec)
        R_TZ, _ = _resolvent(scn.T_Z, lam, spec)
        err = e1 + e2 * float(np.abs(B @ R_TZ).sum(axis=0).max())
        if err:
            paired = float(np.abs(_pairs(scn, np.full_like(R_S, err), np.abs(xs), np.abs(vs))).max())
            err_max = max(err_max, paired)
            if paired > tol / 10.0:
                raise PrecisionError(
                    f"weak resolvent error {paired:.3e} at lambda = {lam} exceeds tol/10"
                )
        out.append(_pairs(scn, R_S + R_SY @ B @ R_TZ - R_T, xs, vs))
    return StatementReport("b", [float(l) for l in lambda_grid], np.array(out), tol, "lambda",
                           err_max)


def _generator_slack(scn, C, xs, vs):
    """``<u, A_S' v> + C <Bu, v> - <A_T u, v>`` with ``A_S'`` the pairing adjoint."""
    A_S = scn.S.generator
    A_T = scn.T.generator
    w = scn.X.weights
    adj_v = vs @ scn.X.adjoint(A_S).T           # rows: A_S' v_j
    first = xs @ (w[:, None] * adj_v.T)         # <u_i, A_S' v_j>
    return first + C * _pairs(scn, scn.B, xs, vs) - _pairs(scn, A_T, xs, vs)


def check_statement_c(scn, tol=None, x_count=None, v_count=None, seed=0):
    """Generator form. On full orthants the generator pairs are all basis pairs, so
    the check is the weighted entrywise inequality ``A_T <= A_S + B``."""
    tol = scn.tol if tol is None else tol
    xs, vs = _grid_sample_sets(scn, x_count, v_count, seed)
    return StatementReport("c", [None], _generator_slack(scn, 1.0, xs, vs)[None], tol, "none")


def check_equivalence(scn, t_grid, lambda_grid, tol=None, **sampling):
    """Run ``a``, ``b``, ``c`` and compare their non-marginal verdicts."""
    if scn.hypothesis and not scn.hypothesis_passed:
        failed = [r.name for r in scn.hypothesis if not r.passed]
        raise HypothesisError(f"hypothesis battery failed: {failed}")
    reports = {
        "a": check_statement_a(scn, t_grid, tol, **sampling),
        "b": check_statement_b(scn, lambda_grid, tol, **sampling),
        "c": check_statement_c(scn, tol, **sampling),
    }
    decided = {k: r.verdict for k, r in reports.items() if r.verdict != "marginal"}
    agreement = len(set(decided.values())) <= 1
    notes = []
    if not agreement:
        for k, r in reports.items():
            notes.append(f"{k}: {r.verdict}, min slack {r.min_slack!r} at {r.argmin}")
    return EquivalenceVerdict(reports, agreement, notes)


# -- corollary -------------------------------------------------------------------

def check_extra_assumption(scn, M, omega, st_grid, tol=None, x_count=None, v_count=None, seed=0):
    """``M e^{omega t} <Bx, v> - <S_Y(t-s) B T_Z(s) x, v>`` over ``(s, t)`` pairs."""
    tol = scn.tol if tol is None else tol
    xs, vs = _grid_sample_sets(scn, x_count, v_count, seed)
    B = np.asarray(scn.B)
    base = _pairs(scn, B, xs, vs)
    out, grid = [], []
    for s, t in st_grid:
        s, t = float(s), float(t)
        if not 0.0 <= s <= t:
            raise ValueError(f"need 0 <= s <= t, got s={s}, t={t}")
        out.append(M * np.exp(omega * t) * base - _pairs(scn, scn.S_Y(t - s) @ B @ scn.T_Z(s), xs, vs))
        grid.append((s, t))
    return StatementReport("extra", grid, np.array(out), tol, "s_t")


def default_st_grid(t_grid):
    return [(f * t, t) for t in t_grid for f in (0.0, 0.25, 0.5, 0.75, 1.0)]


def check_corollary(scn, M, omega, C1, C2, C3, t_grid, lambda_grid, tol=None, extra=None,
                    x_count=None, v_count=None, seed=0):
    """Constant-tracking statements; returns the ``(a, b, c)`` reports.

    ``extra`` is a passing :func:`check_extra_assumption` report for ``(M, omega)``;
    when omitted it is computed on :func:`default_st_grid`.

    Raises
    ------
    HypothesisError
        If the extra assumption is not verified.
    """
    tol = scn.tol if tol is None else tol
    if extra is None:
        extra = check_extra_assumption(scn, M, omega, default_st_grid(t_grid), tol,
                                       x_count, v_count, seed)
    if not extra.passed:
        raise HypothesisError(
            f"extra assumption fails for M={M}, omega={omega}: min slack {extra.min_slack!r}"
        )
    xs, vs = _grid_sample_sets(scn, x_count, v_count, seed)
    Bx = _pairs(scn, scn.B, xs, vs)
    a = [
        _pairs(scn, scn.S(t) - scn.T(t), xs, vs) + C1 * t * np.exp(omega * t) * Bx
        for t in t_grid
    ]
    b = []
    for lam in lambda_grid:
        if not lam > omega:
            raise DivergenceError(f"lambda = {lam} must exceed omega = {omega}")
        R_S, _ = _resolvent(scn.S, lam, QuadratureSpec())
        R_T, _ = _resolvent(scn.T, lam, QuadratureSpec())
        b.append(_pairs(scn, R_S - R_T, xs, vs) + C2 / (lam - omega) ** 2 * Bx)
    c = _generator_slack(scn, C3, xs, vs)[None]
    return (
        StatementReport("corollary-a", [float(t) for t in t_grid], np.array(a), tol, "t"),
        StatementReport("corollary-b", [float(l) for l in lambda_grid], np.array(b), tol, "lambda"),
        StatementReport("corollary-c", [None], c, tol, "none"),
    )


def smallest_C3(scn, x_count=None, v_count=None, seed=0):
    """Least ``C3 >= 0`` making corollary-(c) hold on the samples (``inf`` if none does)."""
    xs, vs = _grid_sample_sets(scn, x_count, v_count, seed)
    base = _generator_slack(scn, 0.0, xs, vs)
    Bx = _pairs(scn, scn.B, xs, vs)
    need = base < 0
    if not need.any():
        return 0.0
    if np.any(need & (Bx <= 0)):
        return np.inf
    return float((-base[need] / Bx[need]).max())


# -- invariance, strong form, delay identity -----------------------------------------

def _invariance_family(cone, maps, samples):
    worst, worst_at = 0.0, None
    ok = True
    for label, Op in maps:
        for k, u in enumerate(samples):
            img = Op @ u
            if not cone_contains(cone, img):
                ok = False
            dist = cone_distance(cone, img) / (1.0 + np.linalg.norm(img))
            if dist > worst:
                worst, worst_at = dist, (label, k)
    return ok, worst, worst_at


def check_cone_invariance(scn, which, t_grid, lambda_grid, tol=None, spec=QuadratureSpec()):
    """Invariance of ``K`` under ``T(t)`` and ``lam (lam - A_T)^{-1}``, or of ``L`` under
    the pairing adjoints of ``S(t)`` and ``lam R_S(lam)``.

    Both families are reported (``details["semigroup"]``, ``details["resolvent"]``) so
    that their agreement can be inspected. Membership uses the cone's own tolerance.
    """
    tol = scn.tol if tol is None else tol
    if which == "K":
        cone, H = scn.K, scn.T
        semi = [(f"T({t})", H(t)) for t in t_grid]
        res = [(f"lam R_T({l})", l * _resolvent(H, l, spec)[0]) for l in lambda_grid]
    elif which == "L":
        cone, H = scn.L, scn.S
        adj = scn.X.adjoint
        semi = [(f"S({t})'", adj(H(t))) for t in t_grid]
        res = [(f"lam R_S({l})'", adj(l * _resolvent(H, l, spec)[0])) for l in lambda_grid]
    else:
        raise ValueError("which must be 'K' or 'L'")
    samples = _samples(cone)
    ok_s, w_s, at_s = _invariance_family(cone, semi, samples)
    ok_r, w_r, at_r = _invariance_family(cone, res, samples)
    return CheckReport(
        f"invariance_{which}", max(w_s, w_r), cone.tol, ok_s and ok_r,
        {
            "semigroup": {"passed": ok_s, "worst_distance": w_s, "at": at_s},
            "resolvent": {"passed": ok_r, "worst_distance": w_r, "at": at_r},
        },
    )


def hypothesis_battery(scn, t_grid, lambda_grid):
    """Consistency of ``S``/``S_Y`` and ``T``/``T_Z`` on cone samples, and invariance of
    ``K`` and ``L``."""
    xs = cone_samples(scn.K)
    times = [0.0] + list(t_grid)
    return [
        _named(check_consistency(scn.S, scn.S_Y, xs, times, 1e-12), "consistency_S_SY"),
        _named(check_consistency(scn.T, scn.T_Z, xs, times, 1e-12), "consistency_T_TZ"),
        check_cone_invariance(scn, "K", t_grid, lambda_grid),
        check_cone_invariance(scn, "L", t_grid, lambda_grid),
    ]


def _named(report, name):
    report.name = name
    return report


def check_strong_inequality(scn, t_grid, tol=None, x_count=None, seed=0):
    """Entrywise ``T(t)u <= S(t)u + int_0^t S(t-s) B T_Z(s) u ds`` for ``u`` in ``K``.

    The v-index of the report is the coordinate index.

    Raises
    ------
    InapplicableError
        If ``L`` cannot detect positivity (is not the full orthant).
    """
    if not scn.L.positivity_detecting:
        raise InapplicableError("L does not detect positivity; only the tested form applies")
    tol = scn.tol if tol is None else tol
    xs = _samples(scn.K, x_count, seed)
    out = []
    for t in t_grid:
        D, _ = duhamel_operator(scn.S_Y, np.asarray(scn.B), scn.T_Z, t)
        out.append(xs @ (scn.S(t) + D - scn.T(t)).T)
    return StatementReport("strong", [float(t) for t in t_grid], np.array(out), tol, "t")


def check_voc_identity(scn, t_grid, tol=1e-9):
    """``max_t ||T(t) - S(t) - int_0^t S(t-s) B_tilde T(s) ds||`` on a delay scenario."""
    if "B_tilde" not in scn.meta:
        raise InapplicableError("scenario has no B_tilde (not built by scenario_delay)")
    Bt = scn.meta["B_tilde"]
    worst, at = 0.0, None
    for t in t_grid:
        R = scn.T(t) - scn.S(t) - duhamel_block(scn.S.generator, Bt, scn.T.generator, t)
        r = scn.X.operator_norm(R)
        if r >= worst:
            worst, at = r, float(t)
    return CheckReport("voc_identity", worst, tol, worst <= tol, {"argmax_t": at})
