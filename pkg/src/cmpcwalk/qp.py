"""Dense convex QP with linear equalities and per-variable box bounds::

    minimize    1/2 x^T H x + f^T x
    subject to  Aeq x = beq,  lb <= x <= ub

Solved by a primal active-set method. A feasible start comes from the
Euclidean projection of the warm start onto the feasible set; when that
projection fails to converge, a phase-1 LP decides feasibility and, if the
set is empty, returns a separating certificate.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from . import kernels

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"

_PROJ_ITERS = 60
_MULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QpProblem:
    H: np.ndarray
    f: np.ndarray
    Aeq: np.ndarray
    beq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        H = np.ascontiguousarray(self.H, dtype=float)
        n = H.shape[0]
        if H.shape != (n, n):
            raise ValueError(f"H must be square, got {H.shape}")
        f = np.ascontiguousarray(self.f, dtype=float).reshape(-1)
        Aeq = np.ascontiguousarray(self.Aeq, dtype=float).reshape(-1, n)
        beq = np.ascontiguousarray(self.beq, dtype=float).reshape(-1)
        lb = np.ascontiguousarray(self.lb, dtype=float).reshape(-1)
        ub = np.ascontiguousarray(self.ub, dtype=float).reshape(-1)
        if f.shape != (n,) or lb.shape != (n,) or ub.shape != (n,):
            raise ValueError("f, lb and ub must have length n")
        if beq.shape != (Aeq.shape[0],):
            raise ValueError("beq must have one entry per row of Aeq")
        if Aeq.shape[0] > n:
            raise ValueError("more equality rows than variables")
        if not np.all(lb <= ub):
            raise ValueError("lb must not exceed ub")
        scale = max(1.0, np.max(np.abs(H)) if H.size else 1.0)
        if np.max(np.abs(H - H.T), initial=0.0) > 1e-12 * scale:
            raise ValueError("H must be symmetric")
        for name, val in (("H", H), ("f", f), ("Aeq", Aeq), ("beq", beq), ("lb", lb), ("ub", ub)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.Aeq.shape[0]

    def objective(self, x) -> float:
        return float(0.5 * x @ self.H @ x + self.f @ x)


@dataclass(frozen=True, eq=False)
class QpSolution:
    x: np.ndarray
    status: str
    kkt_residual: float
    iterations: int
    eq_multipliers: Optional[np.ndarray] = None
    bound_multipliers: Optional[np.ndarray] = None
    certificate: Optional[np.ndarray] = None
    working_set: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def regularize(p: QpProblem, eps: float = 1e-10) -> QpProblem:
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps == 0:
        return p
    return replace(p, H=p.H + eps * np.eye(p.n))


def kkt_residual(p: QpProblem, x, lam, mu) -> float:
    """Largest violation among primal feasibility, stationarity, sign and
    complementarity of the bound multipliers ``mu`` (positive at ``lb``)."""
    prim = np.max(np.abs(p.Aeq @ x - p.beq), initial=0.0)
    box = max(np.max(p.lb - x, initial=0.0), np.max(x - p.ub, initial=0.0), 0.0)
    stat = np.max(np.abs(p.H @ x + p.f + p.Aeq.T @ lam - mu), initial=0.0)
    at_lb = np.where(mu > 0, mu * (x - p.lb), 0.0)
    at_ub = np.where(mu < 0, -mu * (p.ub - x), 0.0)
    comp = np.max(np.abs(at_lb + at_ub), initial=0.0)
    return float(max(prim, box, stat, comp))


def _phase1(p: QpProblem):
    """LP: minimise the l1 equality violation over the box.

    Returns ``(x, None)`` when feasible, ``(None, y)`` with a separating
    vector ``y`` otherwise.
    """
    n, m = p.n, p.m
    c = np.concatenate([np.zeros(n), np.ones(2 * m)])
    A = np.hstack([p.Aeq, np.eye(m), -np.eye(m)])
    bounds = [(lo, hi) for lo, hi in zip(p.lb, p.ub)] + [(0, None)] * (2 * m)
    res = linprog(c, A_eq=A, b_eq=p.beq, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    scale = 1.0 + np.max(np.abs(p.beq), initial=0.0)
    if res.status == 0 and res.fun <= 1e-9 * scale:
        return np.clip(res.x[:n], p.lb, p.ub), None
    y = np.asarray(res.eqlin.marginals) if res.status == 0 else np.zeros(m)
    return None, y


def separation_gap(p: QpProblem, y) -> float:
    """Positive when ``y`` certifies ``{Aeq x = beq} ∩ box`` is empty."""
    z = p.Aeq.T @ y
    lo = np.sum(np.minimum(z * p.lb, z * p.ub))
    hi = np.sum(np.maximum(z * p.lb, z * p.ub))
    target = y @ p.beq
    return float(max(lo - target, target - hi))


def _independent_working_set(Aeq, w):
    """Release held bounds until ``Aeq[:, free]`` has full row rank."""
    m = Aeq.shape[0]
    if m == 0:
        return w
    AF = Aeq[:, w == 0]
    r = 0
    basis = np.zeros((m, 0))
    if AF.shape[1]:
        u, s, _ = np.linalg.svd(AF)
        r = int(np.sum(s > 1e-10 * max(1.0, s[0])))
        basis = u[:, :r]
    if r == m:
        return w
    scale = max(1.0, np.max(np.abs(Aeq)))
    for i in np.nonzero(w != 0)[0]:
        col = Aeq[:, i]
        resid = col - basis @ (basis.T @ col)
        norm = np.linalg.norm(resid)
        if norm > 1e-9 * scale:
            w[i] = 0
            basis = np.column_stack([basis, resid / norm])
            if basis.shape[1] == m:
                break
    return w


def _feasibility_scale(p: QpProblem) -> float:
    box = np.concatenate([p.lb, p.ub])
    box = box[np.isfinite(box)]
    return (1.0 + np.max(np.abs(p.beq), initial=0.0)
            + np.max(np.abs(p.Aeq), initial=0.0) * (1.0 + np.max(np.abs(box), initial=0.0)))


def _start_from_working_set(p: QpProblem, x_ref, w):
    """Closest point to ``x_ref`` that holds ``w`` and meets the equalities,
    or None when it leaves the box."""
    x = x_ref.copy()
    x[w < 0] = p.lb[w < 0]
    x[w > 0] = p.ub[w > 0]
    free = w == 0
    if p.m:
        AF = p.Aeq[:, free]
        r = p.beq - p.Aeq @ x
        try:
            mu = np.linalg.solve(AF @ AF.T, r)
        except np.linalg.LinAlgError:
            return None
        x[free] += AF.T @ mu
    if np.all(x >= p.lb) and np.all(x <= p.ub):
        return x
    return None


class QpSolver:
    """Reusable solver; keeps no state between calls beyond its settings."""

    def __init__(self, max_changes_factor: int = 10, mult_tol: float = _MULT_TOL):
        self.max_changes_factor = max_changes_factor
        self.mult_tol = mult_tol

    def solve(self, p: QpProblem, x0=None, w0=None) -> QpSolution:
        """Solve ``p``; ``x0``/``w0`` warm-start the iterate and working set."""
        n = p.n
        x_ref = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
        x_ref = np.clip(x_ref, p.lb, p.ub)
        if w0 is not None:
            w = _independent_working_set(p.Aeq, np.array(w0, dtype=np.int64).reshape(n))
            x = _start_from_working_set(p, x_ref, w)
            if x is not None:
                return self._iterate(p, x, w)
        scale = _feasibility_scale(p)
        x, ok = kernels.project_feasible(p.Aeq, p.beq, p.lb, p.ub, x_ref, _PROJ_ITERS, 1e-13 * scale)
        if not ok:
            x_lp, y = _phase1(p)
            if x_lp is None:
                return QpSolution(x_ref, INFEASIBLE, float("inf"), 0, certificate=y)
            x, ok = kernels.project_feasible(p.Aeq, p.beq, p.lb, p.ub, x_lp, _PROJ_ITERS, 1e-13 * scale)
            if not ok:
                x = x_lp
        x = np.array(x, dtype=float)
        w = np.zeros(n, dtype=np.int64)
        w[x <= p.lb] = -1
        w[(x >= p.ub) & (w == 0)] = 1
        w = _independent_working_set(p.Aeq, w)
        return self._iterate(p, x, w)

    def _iterate(self, p, x, w):
        n = p.n
        status, changes, lam = kernels.active_set(p.H, p.f, p.Aeq, p.beq, p.lb, p.ub, x, w,
                                                  self.max_changes_factor * n, self.mult_tol)
        lam = np.asarray(lam)
        g = p.H @ x + p.f + p.Aeq.T @ lam
        mu = np.where(w != 0, g, 0.0)
        if status != kernels.QP_OPTIMAL:
            return QpSolution(x, MAX_ITER, kkt_residual(p, x, lam, mu), int(changes), lam, mu,
                              working_set=w)
        return QpSolution(x, OPTIMAL, kkt_residual(p, x, lam, mu), int(changes), lam, mu,
                          working_set=w)


def solve(p: QpProblem, x0=None, w0=None) -> QpSolution:
    return QpSolver().solve(p, x0, w0)
