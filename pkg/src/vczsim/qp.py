"""Small dense strictly convex QPs with inequality constraints.

Solves  min_u 1/2 u'Hu + F'u  subject to  A u >= b  by a primal active-set
method (Cholesky-factored equality-constrained subproblems) and certifies
every answer through an explicit KKT residual. Problems here have at most a
handful of inputs and constraint rows, so dense cubic-cost steps and
subset enumeration fallbacks are cheap.

Infeasibility is certified by exhaustion: if the feasible polyhedron is
nonempty, the projection of the origin onto it is the least-norm point tied
to some linearly independent subset of tight rows, so checking the least-norm
candidate of every such subset either produces a feasible point or proves
the polyhedron empty.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

KKT_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
DEGENERATE = "degenerate"


class QpInputError(ValueError):
    """Rejected problem data: non-PD Hessian or mismatched dimensions."""


class QpCertificationError(RuntimeError):
    """Solver could not certify a KKT point (should not occur for valid data)."""


class GridInfeasibleError(RuntimeError):
    """No grid point satisfies the constraints (brute-force oracle)."""


@dataclass(frozen=True)
class QpProblem:
    """min 1/2 u'Hu + F'u  s.t.  A u >= b elementwise; H symmetric PD."""

    H: np.ndarray
    F: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        F = np.asarray(self.F, dtype=float).ravel()
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).ravel()
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 1:
            raise QpInputError(f"H must be square, got shape {H.shape}")
        m = H.shape[0]
        if not np.allclose(H, H.T, rtol=1e-10, atol=1e-12):
            raise QpInputError("H must be symmetric")
        try:
            np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            raise QpInputError("H must be positive definite") from None
        if F.shape != (m,):
            raise QpInputError(f"F must have length {m}, got {F.shape}")
        if A.size == 0:
            A = np.zeros((0, m))
        A = np.atleast_2d(A)
        if A.shape[1] != m:
            raise QpInputError(f"A must have {m} columns, got shape {A.shape}")
        if b.shape != (A.shape[0],):
            raise QpInputError(f"b must have length {A.shape[0]}, got {b.shape}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def objective(self, u: np.ndarray) -> float:
        u = np.asarray(u, dtype=float)
        return float(0.5 * u @ self.H @ u + self.F @ u)


@dataclass(frozen=True)
class QpSolution:
    """Certified minimizer; u_star/multipliers are None when infeasible."""

    u_star: np.ndarray | None
    active_set: tuple[int, ...]
    kkt_residual: float
    status: str
    multipliers: np.ndarray | None


def check_kkt(problem: QpProblem, candidate, multipliers) -> float:
    """Max violation over stationarity, primal/dual feasibility, slackness."""
    u = np.asarray(candidate, dtype=float).ravel()
    lam = np.asarray(multipliers, dtype=float).ravel()
    if u.shape != (problem.m,):
        raise QpInputError(f"candidate must have length {problem.m}")
    if lam.shape != (problem.d,):
        raise QpInputError(f"multipliers must have length {problem.d}")
    stationarity = float(np.linalg.norm(problem.H @ u + problem.F - problem.A.T @ lam))
    if problem.d == 0:
        return stationarity
    slack = problem.A @ u - problem.b
    primal = float(max(0.0, np.max(-slack)))
    dual = float(max(0.0, np.max(-lam)))
    complementarity = float(np.max(np.abs(lam * slack)))
    return max(stationarity, primal, dual, complementarity)


def _eqp(cho, F, A, b, working, v=None):
    """Equality-constrained subproblem on the working set via Schur complement."""
    if v is None:
        v = cho_solve(cho, F)
    if not working:
        return -v, np.zeros(0)
    Aw = A[working]
    Y = cho_solve(cho, Aw.T)
    S = Aw @ Y
    np.linalg.cholesky(S)  # raises LinAlgError on a rank-deficient working set
    lam = np.linalg.solve(S, b[working] + Aw @ v)
    return Y @ lam - v, lam


def _full_rank_subsets(A, max_size):
    d = A.shape[0]
    for size in range(0, max_size + 1):
        for subset in itertools.combinations(range(d), size):
            if size == 0:
                yield subset, None
                continue
            Aw = A[list(subset)]
            G = Aw @ Aw.T
            try:
                np.linalg.cholesky(G)
            except np.linalg.LinAlgError:
                continue
            yield subset, G


def _feasible_start(A, b, tol):
    """Least-norm candidate per independent tight subset; None iff empty polyhedron."""
    m = A.shape[1]
    for subset, G in _full_rank_subsets(A, m):
        if not subset:
            cand = np.zeros(m)
        else:
            Aw = A[list(subset)]
            mu = np.linalg.solve(G, b[list(subset)])
            cand = Aw.T @ mu
        if np.all(A @ cand >= b - tol):
            return cand
    return None


def _exhaustive(problem: QpProblem, kkt_tol: float) -> QpSolution | None:
    """Enumerate KKT candidates over independent constraint subsets."""
    A, b, F = problem.A, problem.b, problem.F
    cho = cho_factor(problem.H, lower=True)
    v = cho_solve(cho, F)
    best = None
    for subset, _ in _full_rank_subsets(A, problem.m):
        try:
            u, lam_w = _eqp(cho, F, A, b, list(subset), v)
        except np.linalg.LinAlgError:
            continue
        if subset and lam_w.min() < -0.5 * kkt_tol:
            continue
        if problem.d and np.min(A @ u - b) < -0.5 * kkt_tol:
            continue
        obj = problem.objective(u)
        if best is None or obj < best[0]:
            lam = np.zeros(problem.d)
            lam[list(subset)] = lam_w
            best = (obj, u, lam)
    if best is None:
        return None
    return _certify(problem, best[1], best[2], kkt_tol, allow_fallback=False)


def _certify(problem, u, lam, kkt_tol, allow_fallback=True) -> QpSolution:
    residual = check_kkt(problem, u, lam)
    if residual > kkt_tol:
        if allow_fallback:
            sol = _exhaustive(problem, kkt_tol)
            if sol is not None:
                return sol
        raise QpCertificationError(
            f"could not certify a KKT point (residual {residual:.3e} > {kkt_tol:.1e})"
        )
    if problem.d:
        slack = problem.A @ u - problem.b
        scale = np.maximum(1.0, np.abs(problem.b))
        tight = tuple(int(i) for i in np.flatnonzero(slack <= 1e-7 * scale))
    else:
        tight = ()
    status = OPTIMAL
    if len(tight) > 1 and np.linalg.matrix_rank(problem.A[list(tight)]) < len(tight):
        status = DEGENERATE
    return QpSolution(u, tight, residual, status, lam)


def solve_qp(problem: QpProblem, kkt_tol: float = KKT_TOL) -> QpSolution:
    """Primal active-set solve with a KKT certificate.

    Returns status ``optimal`` (certified minimizer), ``degenerate``
    (certified minimizer with linearly dependent tight rows), or
    ``infeasible`` (empty constraint polyhedron, by subset exhaustion).
    """
    H, F, A, b = problem.H, problem.F, problem.A, problem.b
    d = problem.d
    cho = cho_factor(H, lower=True)
    u_free = -cho_solve(cho, F)
    if d == 0:
        return _certify(problem, u_free, np.zeros(0), kkt_tol)
    if np.all(A @ u_free >= b - kkt_tol):
        return _certify(problem, u_free, np.zeros(d), kkt_tol)

    # Cheap feasible start: project the unconstrained minimum onto its most
    # violated halfspace; fall back to certified subset enumeration.
    u = None
    violation = b - A @ u_free
    worst = int(np.argmax(violation))
    gain = A[worst] @ A[worst]
    if gain > 0:
        cand = u_free + A[worst] * (violation[worst] / gain)
        if np.all(A @ cand >= b - 0.5 * kkt_tol):
            u = cand
    if u is None:
        u = _feasible_start(A, b, 0.5 * kkt_tol)
    if u is None:
        return QpSolution(None, (), math.inf, INFEASIBLE, None)

    working: list[int] = []
    row_norms = np.linalg.norm(A, axis=1)
    v_free = -u_free
    for _ in range(50 * (d + 2)):
        try:
            u_eq, lam_w = _eqp(cho, F, A, b, working, v_free)
        except np.linalg.LinAlgError:
            break  # numerically dependent working set: certified fallback below
        p = u_eq - u
        if np.linalg.norm(p) <= 1e-11 * max(1.0, np.linalg.norm(u_eq)):
            if not working or lam_w.min() >= -kkt_tol:
                lam = np.zeros(d)
                lam[working] = lam_w
                return _certify(problem, u_eq, lam, kkt_tol)
            working.pop(int(np.argmin(lam_w)))
            u = u_eq
            continue
        # Ratio test over rows outside the working set.
        Ap = A @ p
        slack = A @ u - b
        alpha = 1.0
        blocking = -1
        for i in range(d):
            if i in working or Ap[i] >= -1e-13 * max(1.0, row_norms[i]):
                continue
            ratio = max(0.0, slack[i] / -Ap[i])
            if ratio < alpha:
                alpha = ratio
                blocking = i
        u = u + alpha * p
        if blocking >= 0 and alpha < 1.0:
            working.append(blocking)
        elif alpha >= 1.0:
            u = u_eq  # full step: next pass checks multiplier signs
    sol = _exhaustive(problem, kkt_tol)
    if sol is None:
        raise QpCertificationError("active-set iteration limit with no certificate")
    return sol


def brute_force_qp(
    problem: QpProblem, box_half_width: float, grid_points_per_axis: int
) -> np.ndarray:
    """Grid-search oracle: best feasible point of a uniform grid on [-w, w]^m.

    Only sensible for m <= 3; the box must contain the analytic minimizer.
    """
    m = problem.m
    if m > 3:
        raise QpInputError(f"brute_force_qp supports m <= 3, got m = {m}")
    if box_half_width <= 0 or grid_points_per_axis < 2:
        raise QpInputError("need box_half_width > 0 and grid_points_per_axis >= 2")
    axis = np.linspace(-box_half_width, box_half_width, grid_points_per_axis)
    grids = np.meshgrid(*([axis] * m), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    if problem.d:
        slack = 1e-12 * np.maximum(1.0, np.abs(problem.b))
        feasible = np.all(pts @ problem.A.T >= problem.b - slack, axis=1)
        if not np.any(feasible):
            raise GridInfeasibleError("no feasible point on the grid")
        pts = pts[feasible]
    cost = 0.5 * np.einsum("ni,ij,nj->n", pts, problem.H, pts) + pts @ problem.F
    return pts[int(np.argmin(cost))].copy()
