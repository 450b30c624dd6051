import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmpcwalk import qp
from cmpcwalk.controller import (AxisController, MpcConfig, baseline_qp, build_baseline, build_cmpc,
                                 contingency_qp, decide, difference_matrix, horizon_problem,
                                 prefix_selector, stability_weights, tail_weight)
from cmpcwalk.lip import AxisState, LipParams
from cmpcwalk.surface import DisturbanceBounds, constant_kernel_integral, envelope_at

P = LipParams()
CFG = MpcConfig()
BX = DisturbanceBounds(-0.5, 0.5, -1.0, 1.0)
N = CFG.N


def _box(lo, hi, n=N):
    return np.full(n, lo), np.full(n, hi)


def test_config_validation():
    assert CFG.delta_t * CFG.N == CFG.T_c
    for bad in (dict(N=1), dict(n_shared=0), dict(n_shared=101), dict(T_c=0), dict(stability_tail="x")):
        with pytest.raises(ValueError):
            MpcConfig(**bad)


def test_stability_weights():
    A = stability_weights(CFG, P)
    assert np.all(A > 0) and np.all(np.diff(A) < 0)
    assert abs(A.sum() - (1 - math.exp(-P.omega * CFG.T_c))) <= 1e-12
    assert A[0] == pytest.approx(1 - math.exp(-P.omega * 0.01), rel=1e-15)
    assert A.sum() + tail_weight(CFG, P) == pytest.approx(1.0, abs=1e-15)
    assert tail_weight(MpcConfig(stability_tail="truncate"), P) == 0.0


def test_difference_and_selector():
    C = difference_matrix(4)
    assert np.array_equal(C, [[1, -1, 0, 0], [0, 1, -1, 0], [0, 0, 1, -1]])
    assert np.array_equal(prefix_selector(2, 4), np.eye(4)[:2])


def test_cmpc_dimensions():
    lo, hi = _box(-0.01, 0.01)
    p = build_cmpc(AxisState(0, 0), envelope_at(0, BX, 1.0), lo, hi, CFG, P)
    assert p.n == 200 and p.m == 3
    assert np.count_nonzero(p.Aeq[0]) == 2


def test_stationary_zero_cost():
    c = 0.005
    lo, hi = _box(-0.01, 0.01)
    h = horizon_problem(AxisState(c, 0.0), 0.0, 0.0, lo, hi, CFG, P)
    s = qp.solve(contingency_qp(h))
    assert s.optimal
    assert np.allclose(s.x, c, atol=1e-9)
    assert 0.5 * s.x @ (2 * np.kron(np.eye(2), h.C.T @ h.C)) @ s.x <= 1e-16


def test_decide_at_window_center():
    lo, hi = np.full(N, 0.04), np.full(N, 0.06)
    dec = decide(AxisState(0.05, 0.0), 0.0, lo, hi, CFG, P, DisturbanceBounds(-1e-300, 1e-300, -1.0, 1.0))
    assert dec.optimal
    # the 1e-10 Hessian regularization tilts the otherwise flat optimum by ~1e-9
    assert dec.x_z_applied == pytest.approx(0.05, abs=1e-8)


def test_scenario_rows_subtract():
    lo, hi = _box(-0.05, 0.05)
    env = envelope_at(0.1, BX, 1.0)
    ctrl = AxisController("cmpc", CFG, P, BX)
    dec = ctrl.decide(AxisState(0.0, 0.05), 0.1, lo, hi)
    assert dec.optimal and dec.b_up > dec.b_low
    row = horizon_problem(AxisState(0, 0), 0, 0, lo, hi, CFG, P).row
    assert row @ (dec.U_up - dec.U_low) == pytest.approx(dec.b_low - dec.b_up, abs=1e-10)
    assert env.a0 == 0.1


def test_baseline_constant_term():
    w = LipParams(l=9.81 / 6.14**2).omega
    b = constant_kernel_integral(0.1, 1.0, LipParams(l=9.81 / 6.14**2))
    assert b == pytest.approx(0.1 * (1 - math.exp(-w)) / w**2, abs=1e-15)
    assert b == pytest.approx(0.0026469, abs=1e-7)


def test_baseline_zero_accel_matches_stationary_cmpc():
    lo, hi = _box(-0.01, 0.03)
    s = AxisState(0.004, 0.03)
    base = qp.solve(build_baseline(s, 0.0, lo, hi, CFG, P))
    tiny = DisturbanceBounds(-1e-300, 1e-300, -1.0, 1.0)
    cm = qp.solve(build_cmpc(s, envelope_at(0.0, tiny, 1.0), lo, hi, CFG, P))
    assert base.optimal and cm.optimal
    assert np.allclose(cm.x[:N], base.x, atol=1e-9) and np.allclose(cm.x[N:], base.x, atol=1e-9)


def test_unreachable_xi_is_infeasible():
    lo, hi = _box(-0.01, 0.01)
    s = AxisState(0.2, 0.0)
    p = build_baseline(s, 0.0, lo, hi, CFG, P)
    # brute force: the stability row is maximised over the box at ub
    assert p.Aeq[0] @ p.ub < p.beq[0]
    sol = qp.solve(p)
    assert sol.status == qp.INFEASIBLE and qp.separation_gap(p, sol.certificate) > 0


@given(st.floats(-0.03, 0.03), st.floats(-0.15, 0.15), st.floats(-0.5, 0.5), st.sampled_from(["cmpc", "baseline"]))
def test_stability_rows_and_prefix(c, c_dot, a0, kind):
    lo, hi = _box(-0.06, 0.06)
    dec = decide(AxisState(c, c_dot), a0, lo, hi, CFG, P, BX, kind)
    if not dec.optimal:
        return
    row = horizon_problem(AxisState(c, c_dot), 0, 0, lo, hi, CFG, P).row
    assert abs(row @ dec.U_up + dec.b_up - dec.xi_u) <= 1e-7
    assert abs(row @ dec.U_low + dec.b_low - dec.xi_u) <= 1e-7
    assert abs(dec.U_up[0] - dec.U_low[0]) <= 1e-7
    assert np.all(dec.U_up >= lo - 1e-9) and np.all(dec.U_up <= hi + 1e-9)


def test_envelope_collapse_to_baseline():
    lo, hi = _box(-0.02, 0.04)
    s = AxisState(0.01, 0.05)
    small = BX.scaled(1e-6)
    cm = decide(s, 0.2e-6, lo, hi, CFG, P, small, "cmpc")
    base = decide(s, 0.2e-6, lo, hi, CFG, P, small, "baseline")
    assert abs(cm.x_z_applied - base.x_z_applied) <= 1e-5


def test_tail_insensitivity():
    s = AxisState(0.01, 0.05)
    lo, hi = _box(-0.02, 0.04)
    ref = decide(s, 0.1, lo, hi, CFG, P, BX)
    lo2, hi2 = lo.copy(), hi.copy()
    lo2[80:] -= 0.01
    hi2[80:] += 0.01
    pert = decide(s, 0.1, lo2, hi2, CFG, P, BX)
    assert abs(ref.x_z_applied - pert.x_z_applied) <= 1e-4


def test_scenario_symmetry():
    lo, hi = _box(-0.02, 0.04)
    s = AxisState(0.01, 0.05)
    a = qp.solve(contingency_qp(horizon_problem(s, -0.003, 0.004, lo, hi, CFG, P)))
    b = qp.solve(contingency_qp(horizon_problem(s, 0.004, -0.003, lo, hi, CFG, P)))
    assert np.allclose(a.x[:N], b.x[N:], atol=1e-12) and np.allclose(a.x[N:], b.x[:N], atol=1e-12)


def test_warm_start_matches_cold():
    lo, hi = _box(-0.02, 0.04)
    ctrl = AxisController("cmpc", CFG, P, BX)
    s = AxisState(0.0, 0.05)
    ctrl.decide(s, 0.0, lo, hi)
    warm = ctrl.decide(AxisState(0.0005, 0.05, 0.01), 0.01, lo, hi)
    cold = decide(AxisState(0.0005, 0.05, 0.01), 0.01, lo, hi, CFG, P, BX)
    assert abs(warm.x_z_applied - cold.x_z_applied) <= 1e-9


def test_horizon_table():
    lo, hi = _box(-0.02, 0.04)
    dec = decide(AxisState(0.0, 0.05), 0.0, lo, hi, CFG, P, BX)
    lines = dec.horizon_table(lo, hi).splitlines()
    assert lines[0] == "slice,u_low,u_up,box_min,box_max" and len(lines) == N + 1


def test_unknown_kind():
    with pytest.raises(ValueError):
        AxisController("lqr", CFG, P, BX)


def test_baseline_qp_single_row():
    lo, hi = _box(-0.02, 0.04)
    h = horizon_problem(AxisState(0.0, 0.05), 0.001, 0.001, lo, hi, CFG, P)
    assert baseline_qp(h).m == 1 and baseline_qp(h).n == N
