"""Compiled kernels agree with their pure-Python definitions."""

import numpy as np
import pytest

from cmpcwalk import _jit, kernels, qp
from cmpcwalk.controller import MpcConfig, contingency_qp, horizon_problem
from cmpcwalk.lip import AxisState, LipParams

pytestmark = pytest.mark.skipif(not _jit.USE_NUMBA, reason="numba disabled or missing")


def test_rk4_equivalence():
    rng = np.random.default_rng(0)
    for _ in range(20):
        nodes = rng.normal(size=21)
        args = (rng.normal(), rng.normal(), rng.normal() * 0.1, 37.7, nodes, 0.001)
        a, b = kernels.py_rk4_lip(*args), kernels.rk4_lip(*args)
        assert np.allclose(a, b, rtol=1e-14, atol=1e-15)


def _problem():
    N = 100
    h = horizon_problem(AxisState(0.01, 0.1), -0.004, 0.004, np.full(N, -0.01), np.full(N, 0.05),
                        MpcConfig(), LipParams())
    return contingency_qp(h)


def test_projection_equivalence():
    p = _problem()
    x_ref = np.linspace(-0.05, 0.05, p.n)
    tol = 1e-13 * qp._feasibility_scale(p)
    xa, oka = kernels.py_project_feasible(p.Aeq, p.beq, p.lb, p.ub, x_ref, 60, tol)
    xb, okb = kernels.project_feasible(p.Aeq, p.beq, p.lb, p.ub, x_ref, 60, tol)
    assert oka and okb
    assert np.allclose(xa, xb, atol=1e-12)


def test_active_set_equivalence():
    p = _problem()
    tol = 1e-13 * qp._feasibility_scale(p)
    x0, ok = kernels.project_feasible(p.Aeq, p.beq, p.lb, p.ub, np.zeros(p.n), 60, tol)
    assert ok
    w0 = np.zeros(p.n, dtype=np.int64)
    w0[x0 <= p.lb] = -1
    w0[(x0 >= p.ub) & (w0 == 0)] = 1
    w0 = qp._independent_working_set(p.Aeq, w0)
    xa, wa = x0.copy(), w0.copy()
    xb, wb = x0.copy(), w0.copy()
    ra = kernels.py_active_set(p.H, p.f, p.Aeq, p.beq, p.lb, p.ub, xa, wa, 2000, 1e-10)
    rb = kernels.active_set(p.H, p.f, p.Aeq, p.beq, p.lb, p.ub, xb, wb, 2000, 1e-10)
    assert ra[0] == rb[0] == kernels.QP_OPTIMAL
    assert np.array_equal(wa, wb)
    assert np.allclose(xa, xb, atol=1e-10)
