import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmpcwalk import qp
from cmpcwalk.controller import MpcConfig, contingency_qp, horizon_problem
from cmpcwalk.lip import AxisState, LipParams
from oracles import kkt_check, projected_gradient, random_qp_batch


def _box(n, lo, hi):
    return np.full(n, lo, dtype=float), np.full(n, hi, dtype=float)


def test_hand_example_zero_objective():
    lb, ub = _box(2, 0, 2)
    p = qp.QpProblem(2 * np.array([[1.0, -1], [-1, 1]]), np.zeros(2), [[1.0, 1]], [2.0], lb, ub)
    s = qp.solve(p)
    assert s.status == qp.OPTIMAL
    assert np.allclose(s.x, [1, 1], atol=1e-12, rtol=0)
    assert abs(p.objective(s.x)) <= 1e-24


def test_hand_example_symmetric():
    lb, ub = _box(2, 0, 1)
    s = qp.solve(qp.QpProblem(2 * np.eye(2), np.zeros(2), [[1.0, 1]], [1.0], lb, ub))
    assert s.status == qp.OPTIMAL
    assert np.allclose(s.x, [0.5, 0.5], atol=1e-12, rtol=0)


def test_hand_example_infeasible_with_certificate():
    lb, ub = _box(2, 0, 1)
    p = qp.QpProblem(2 * np.eye(2), np.zeros(2), [[1.0, 1]], [5.0], lb, ub)
    s = qp.solve(p)
    assert s.status == qp.INFEASIBLE
    assert s.certificate is not None and qp.separation_gap(p, s.certificate) > 0


@pytest.mark.parametrize("kwargs", [
    dict(H=np.ones((2, 3))),
    dict(H=np.array([[1.0, 2.0], [0.0, 1.0]])),
    dict(lb=np.array([1.0, 0.0]), ub=np.array([0.0, 1.0])),
    dict(Aeq=np.ones((3, 2)), beq=np.ones(3)),
])
def test_problem_validation(kwargs):
    args = dict(H=np.eye(2), f=np.zeros(2), Aeq=np.ones((1, 2)), beq=[1.0], lb=np.zeros(2), ub=np.ones(2))
    args.update(kwargs)
    with pytest.raises(ValueError):
        qp.QpProblem(**args)


def test_regularize():
    p = qp.QpProblem(np.zeros((1, 1)), [0.0], np.zeros((0, 1)), [], [-1.0], [1.0])
    assert qp.regularize(p, 0.0) is p
    assert qp.regularize(p, 1e-10).H[0, 0] == 1e-10
    with pytest.raises(ValueError):
        qp.regularize(p, -1.0)


def test_random_instances_match_oracle_and_certify():
    rng = np.random.default_rng(11)
    worst_dx = worst_kkt = 0.0
    for n in (2, 5, 8, 12):
        for m in range(0, min(3, n - 1) + 1):
            H, f, A, b, lb, ub = random_qp_batch(rng, 8, n, m)
            x_ref, _ = projected_gradient(H, f, A, b, lb, ub)
            for i in range(8):
                s = qp.solve(qp.QpProblem(H[i], f[i], A[i], b[i], lb[i], ub[i]))
                assert s.optimal
                worst_dx = max(worst_dx, np.max(np.abs(s.x - x_ref[i])))
                worst_kkt = max(worst_kkt, s.kkt_residual, kkt_check(H[i], f[i], A[i], b[i], lb[i], ub[i], s.x))
    assert worst_dx <= 1e-4
    assert worst_kkt <= 1e-7


@given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.integers(0, 3))
def test_infeasible_carries_certificate(seed, n, m):
    """Infeasible answers always carry a certificate; optimal ones are feasible."""
    m = min(m, n - 1)
    rng = np.random.default_rng(seed)
    H, f, A, b, lb, ub = random_qp_batch(rng, 1, n, m)
    b = b[0] + rng.normal(scale=3.0, size=m)  # may push the equalities out of the box
    p = qp.QpProblem(H[0], f[0], A[0], b, lb[0], ub[0])
    s = qp.solve(p)
    if s.status == qp.INFEASIBLE:
        assert qp.separation_gap(p, s.certificate) > 0
    else:
        assert s.optimal
        assert np.max(np.abs(p.Aeq @ s.x - p.beq), initial=0) <= 1e-8
        assert np.all(s.x >= p.lb - 1e-9) and np.all(s.x <= p.ub + 1e-9)
        assert s.kkt_residual <= 1e-7


def test_deterministic():
    rng = np.random.default_rng(5)
    H, f, A, b, lb, ub = random_qp_batch(rng, 1, 9, 2)
    p = qp.QpProblem(H[0], f[0], A[0], b[0], lb[0], ub[0])
    a, c = qp.solve(p), qp.solve(p)
    assert np.array_equal(a.x, c.x) and a.iterations == c.iterations


def test_warm_start_same_answer():
    rng = np.random.default_rng(8)
    H, f, A, b, lb, ub = random_qp_batch(rng, 1, 10, 2)
    p = qp.QpProblem(H[0], f[0], A[0], b[0], lb[0], ub[0])
    cold = qp.solve(p)
    warm = qp.solve(p, cold.x, cold.working_set)
    assert np.allclose(warm.x, cold.x, atol=1e-12)
    assert warm.iterations == 0


def test_iteration_cap_returns_max_iter():
    rng = np.random.default_rng(2)
    H, f, A, b, lb, ub = random_qp_batch(rng, 1, 12, 1)
    p = qp.QpProblem(H[0], 10 * f[0], A[0], b[0], lb[0], ub[0])
    s = qp.QpSolver(max_changes_factor=0).solve(p)
    assert s.status == qp.MAX_ITER


def _cmpc_instance(N=10, wide=True):
    cfg = MpcConfig(T_c=N * 0.01, N=N)
    # the narrow box forces the tail of the low scenario onto its upper bound
    box_min, box_max = (np.full(N, -0.5), np.full(N, 0.5)) if wide else (np.zeros(N), np.full(N, 0.0252))
    return horizon_problem(AxisState(0.01, 0.08), -0.002, 0.003, box_min, box_max, cfg, LipParams())


def test_regularization_drift_interior():
    """With no active bounds the eps = 0 problem is an exact KKT solve."""
    h = _cmpc_instance()
    p0 = contingency_qp(h, eps=0.0)
    n, m = p0.n, p0.m
    K = np.block([[p0.H, p0.Aeq.T], [p0.Aeq, np.zeros((m, m))]])
    exact = np.linalg.solve(K, np.concatenate([-p0.f, p0.beq]))[:n]
    assert np.all(exact > p0.lb) and np.all(exact < p0.ub)
    s = qp.solve(contingency_qp(h))
    assert s.optimal
    assert np.max(np.abs(s.x - exact)) <= 1e-6


def test_regularization_drift_active():
    h = _cmpc_instance(wide=False)
    s = qp.solve(contingency_qp(h))
    assert s.optimal and np.any(s.working_set != 0)
    p0 = contingency_qp(h, eps=0.0)
    # exact KKT on the free set with held bounds fixed
    free = s.working_set == 0
    x = np.where(s.working_set < 0, p0.lb, p0.ub)
    rhs = p0.beq - p0.Aeq[:, ~free] @ x[~free]
    Hf, Af = p0.H[np.ix_(free, free)], p0.Aeq[:, free]
    g = p0.H[np.ix_(free, ~free)] @ x[~free]
    m = Af.shape[0]
    K = np.block([[Hf, Af.T], [Af, np.zeros((m, m))]])
    x[free] = np.linalg.lstsq(K, np.concatenate([-g, rhs]), rcond=None)[0][:free.sum()]
    assert np.max(np.abs(s.x - x)) <= 1e-6
    assert kkt_check(p0.H, p0.f, p0.Aeq, p0.beq, p0.lb, p0.ub, s.x) <= 1e-7
