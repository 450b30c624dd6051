"""Hot numeric loops.

Each kernel is written once as plain numpy/Python (``py_*``) and exported
under its public name either numba-compiled or as-is, depending on
``cmpcwalk._jit.USE_NUMBA``. Both variants are importable so tests and the
benchmark can compare them directly.
"""

import numpy as np

from ._jit import njit

QP_OPTIMAL = 0
QP_MAX_ITER = 2

# steps this small are roundoff along directions the working set pins
_STEP_EPS = 1e-13


def py_rk4_lip(c, c_dot, x_z, omega2, accel_nodes, h):
    """Classical RK4 for ``c'' = omega2 (c - x_z) - a_s(t)``.

    ``accel_nodes`` holds the surface acceleration at every half substep,
    ``a_s(t0 + j h / 2)`` for ``j = 0 .. 2 * nsub``.
    """
    nsub = (accel_nodes.shape[0] - 1) // 2
    half = 0.5 * h
    for k in range(nsub):
        a0 = accel_nodes[2 * k]
        am = accel_nodes[2 * k + 1]
        a1 = accel_nodes[2 * k + 2]
        k1c = c_dot
        k1v = omega2 * (c - x_z) - a0
        k2c = c_dot + half * k1v
        k2v = omega2 * (c + half * k1c - x_z) - am
        k3c = c_dot + half * k2v
        k3v = omega2 * (c + half * k2c - x_z) - am
        k4c = c_dot + h * k3v
        k4v = omega2 * (c + h * k3c - x_z) - a1
        c = c + h / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
        c_dot = c_dot + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return c, c_dot


def py_project_feasible(Aeq, beq, lb, ub, x_ref, max_iter, tol):
    """Euclidean projection of ``x_ref`` onto ``{Aeq x = beq, lb <= x <= ub}``.

    Semismooth Newton on the m-dimensional dual with an Armijo line search.
    Returns ``(x, converged)``; non-convergence means the set is empty or
    nearly so and the caller must decide feasibility another way.
    """
    m = Aeq.shape[0]
    lam = np.zeros(m)
    v = x_ref.copy()
    x = np.minimum(np.maximum(v, lb), ub)
    if m == 0:
        return x, True
    F = Aeq @ x - beq
    d_x = x - x_ref
    phi = lam @ F - 0.5 * (d_x @ d_x)
    for _ in range(max_iter):
        if np.max(np.abs(F)) <= tol:
            return x, True
        free = np.nonzero((v > lb) & (v < ub))[0]
        AF = Aeq[:, free]
        J = AF @ AF.T
        reg = 1e-12 * (1.0 + np.trace(J))
        for i in range(m):
            J[i, i] += reg
        d = np.linalg.solve(J, -F)
        slope = F @ d
        t = 1.0
        accepted = False
        lam_t = lam
        v_t = v
        x_t = x
        F_t = F
        phi_t = phi
        while t > 1e-14:
            lam_t = lam + t * d
            v_t = x_ref + Aeq.T @ lam_t
            x_t = np.minimum(np.maximum(v_t, lb), ub)
            F_t = Aeq @ x_t - beq
            d_t = x_t - x_ref
            phi_t = lam_t @ F_t - 0.5 * (d_t @ d_t)
            if phi_t <= phi + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        lam = lam_t
        v = v_t
        x = x_t
        F = F_t
        phi = phi_t
    return x, np.max(np.abs(F)) <= tol


def py_pins_equalities(AF, j):
    """True when dropping column ``j`` leaves ``AF`` rank-deficient."""
    M = AF @ AF.T
    col = AF[:, j]
    M_rest = M - np.outer(col, col)
    ev = np.linalg.eigvalsh(M_rest)
    return ev[0] <= 1e-12 * max(1.0, np.max(np.abs(np.linalg.eigvalsh(M))))


_pins_equalities = njit(py_pins_equalities)


def py_active_set(H, f, Aeq, beq, lb, ub, x, w, max_changes, tol):
    """Primal active-set iterations for a box + equality QP.

    ``x`` must satisfy the equalities and the box; ``w`` marks the working
    set (0 free, -1 held at ``lb``, +1 held at ``ub``) and must leave
    ``Aeq[:, free]`` with full row rank. Both are updated in place.

    Returns ``(status, changes, lam)`` with ``lam`` the equality
    multipliers for ``H x + f + Aeq^T lam - mu = 0``.
    """
    m = Aeq.shape[0]
    changes = 0
    lam = np.zeros(m)
    while True:
        free = np.nonzero(w == 0)[0]
        fixed = np.nonzero(w != 0)[0]
        nf = free.shape[0]
        xf_new = np.zeros(nf)
        if nf + m > 0:
            K = np.zeros((nf + m, nf + m))
            rhs = np.zeros(nf + m)
            HF = H[free]
            K[:nf, :nf] = HF[:, free]
            AF = Aeq[:, free]
            K[:nf, nf:] = AF.T
            K[nf:, :nf] = AF
            xB = x[fixed]
            rhs[:nf] = -f[free] - HF[:, fixed] @ xB
            rhs[nf:] = beq - Aeq[:, fixed] @ xB
            sol = np.linalg.solve(K, rhs)
            xf_new = sol[:nf]
            lam = sol[nf:]

        alpha = 1.0
        block = -1
        side = 0
        skip = np.zeros(nf, dtype=np.bool_)
        while True:
            alpha = 1.0
            block = -1
            side = 0
            bj = -1
            for jj in range(nf):
                if skip[jj]:
                    continue
                i = free[jj]
                p = xf_new[jj] - x[i]
                if abs(p) <= _STEP_EPS * (1.0 + abs(x[i])):
                    continue
                if p < 0.0:
                    lim = (lb[i] - x[i]) / p
                    if lim < alpha:
                        alpha = lim
                        block = i
                        side = -1
                        bj = jj
                elif p > 0.0:
                    lim = (ub[i] - x[i]) / p
                    if lim < alpha:
                        alpha = lim
                        block = i
                        side = 1
                        bj = jj
            if block < 0 or m == 0 or not _pins_equalities(Aeq[:, free], bj):
                break
            # roundoff step along a direction the equalities already fix
            skip[bj] = True

        if block < 0:
            for jj in range(nf):
                i = free[jj]
                x[i] = min(max(xf_new[jj], lb[i]), ub[i])
            g = H @ x + f + Aeq.T @ lam
            worst = -tol
            drop = -1
            for i in fixed:
                mu = g[i] if w[i] < 0 else -g[i]
                if mu < worst:
                    worst = mu
                    drop = i
            if drop < 0:
                return QP_OPTIMAL, changes, lam
            w[drop] = 0
        else:
            if alpha < 0.0:
                alpha = 0.0
            for jj in range(nf):
                i = free[jj]
                x[i] = min(max(x[i] + alpha * (xf_new[jj] - x[i]), lb[i]), ub[i])
            x[block] = lb[block] if side < 0 else ub[block]
            w[block] = side
        changes += 1
        if changes > max_changes:
            return QP_MAX_ITER, changes, lam
    return QP_MAX_ITER, changes, lam  # pragma: no cover


rk4_lip = njit(py_rk4_lip)
project_feasible = njit(py_project_feasible)
active_set = njit(py_active_set)
