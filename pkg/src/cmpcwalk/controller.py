"""Per-axis horizon QPs: contingency MPC and the constant-acceleration baseline.

Decision variables are ZMP positions over ``N`` slices of length ``delta_t``.
The contingency problem stacks two trajectories ``[U_up; U_low]``, one per
worst-case envelope side, that must agree on their first ``n_shared``
slices. Both satisfy the stability row

    xi_u = A^T U + tail * U[N-1] + b

with ``A[i] = (1 - e^{-w dt}) e^{-w i dt}`` and ``b`` the surface term of
the chosen disturbance prediction. ``tail = e^{-w T_c}`` accounts for the
ZMP being held at ``U[N-1]`` past the horizon; ``stability_tail="truncate"``
drops it (``tail = 0``), which biases the closed loop toward the origin.
"""

from dataclasses import dataclass, field
import math
import time

import numpy as np

from . import qp as qpmod
from .lip import AxisState, LipParams, xi_from_state
from .surface import (DisturbanceBounds, SurfaceEnvelope, constant_kernel_integral, envelope_at,
                      kernel_integral)

REGULARIZATION = 1e-10


@dataclass(frozen=True)
class MpcConfig:
    T_c: float = 1.0
    N: int = 100
    n_shared: int = 1
    stability_tail: str = "hold"

    def __post_init__(self):
        if self.T_c <= 0 or self.N < 2:
            raise ValueError("need T_c > 0 and N >= 2")
        if not 1 <= self.n_shared <= self.N:
            raise ValueError("n_shared must lie in [1, N]")
        if self.stability_tail not in ("hold", "truncate"):
            raise ValueError("stability_tail must be 'hold' or 'truncate'")

    @property
    def delta_t(self) -> float:
        return self.T_c / self.N


def stability_weights(cfg: MpcConfig, p: LipParams) -> np.ndarray:
    q = math.exp(-p.omega * cfg.delta_t)
    return -math.expm1(-p.omega * cfg.delta_t) * q ** np.arange(cfg.N)


def tail_weight(cfg: MpcConfig, p: LipParams) -> float:
    return math.exp(-p.omega * cfg.T_c) if cfg.stability_tail == "hold" else 0.0


def difference_matrix(N: int) -> np.ndarray:
    C = np.zeros((N - 1, N))
    idx = np.arange(N - 1)
    C[idx, idx] = 1.0
    C[idx, idx + 1] = -1.0
    return C


def prefix_selector(n: int, N: int) -> np.ndarray:
    return np.eye(N)[:n]


@dataclass(frozen=True, eq=False)
class HorizonProblem:
    A_k: np.ndarray
    b_low: float
    b_up: float
    xi_u_now: float
    C: np.ndarray
    S: np.ndarray
    box_min: np.ndarray
    box_max: np.ndarray
    tail: float = 0.0

    @property
    def N(self) -> int:
        return self.A_k.size

    @property
    def row(self) -> np.ndarray:
        """Stability-row coefficients including the held tail."""
        r = self.A_k.copy()
        r[-1] += self.tail
        return r


def horizon_problem(state: AxisState, b_low: float, b_up: float, box_min, box_max,
                    cfg: MpcConfig, p: LipParams) -> HorizonProblem:
    box_min = np.asarray(box_min, dtype=float)
    box_max = np.asarray(box_max, dtype=float)
    if box_min.shape != (cfg.N,) or box_max.shape != (cfg.N,):
        raise ValueError(f"window must have {cfg.N} slices")
    return HorizonProblem(stability_weights(cfg, p), float(b_low), float(b_up),
                          xi_from_state(state, p).xi_u, difference_matrix(cfg.N),
                          prefix_selector(cfg.n_shared, cfg.N), box_min, box_max,
                          tail_weight(cfg, p))


def contingency_qp(h: HorizonProblem, eps: float = REGULARIZATION) -> qpmod.QpProblem:
    N = h.N
    n = h.S.shape[0]
    CtC = 2.0 * h.C.T @ h.C
    H = np.zeros((2 * N, 2 * N))
    H[:N, :N] = CtC
    H[N:, N:] = CtC
    Aeq = np.zeros((n + 2, 2 * N))
    Aeq[:n, :N] = h.S
    Aeq[:n, N:] = -h.S
    Aeq[n, :N] = h.row
    Aeq[n + 1, N:] = h.row
    beq = np.concatenate([np.zeros(n), [h.xi_u_now - h.b_up, h.xi_u_now - h.b_low]])
    lb = np.concatenate([h.box_min, h.box_min])
    ub = np.concatenate([h.box_max, h.box_max])
    return qpmod.regularize(qpmod.QpProblem(H, np.zeros(2 * N), Aeq, beq, lb, ub), eps)


def baseline_qp(h: HorizonProblem, eps: float = REGULARIZATION) -> qpmod.QpProblem:
    """Single trajectory; ``h.b_low == h.b_up`` holds the constant-acceleration term."""
    N = h.N
    H = 2.0 * h.C.T @ h.C
    return qpmod.regularize(qpmod.QpProblem(H, np.zeros(N), h.row[None, :],
                                            [h.xi_u_now - h.b_up], h.box_min, h.box_max), eps)


def build_cmpc(axis_state: AxisState, env: SurfaceEnvelope, box_min, box_max,
               cfg: MpcConfig, p: LipParams) -> qpmod.QpProblem:
    b_low = kernel_integral(env, "lower", p)
    b_up = kernel_integral(env, "upper", p)
    return contingency_qp(horizon_problem(axis_state, b_low, b_up, box_min, box_max, cfg, p))


def build_baseline(axis_state: AxisState, measured_accel: float, box_min, box_max,
                   cfg: MpcConfig, p: LipParams) -> qpmod.QpProblem:
    b = constant_kernel_integral(measured_accel, cfg.T_c, p)
    return baseline_qp(horizon_problem(axis_state, b, b, box_min, box_max, cfg, p))


@dataclass(frozen=True, eq=False)
class ControlDecision:
    x_z_applied: float
    U_low: np.ndarray
    U_up: np.ndarray
    status: str
    solve_time: float
    xi_u: float = float("nan")
    b_low: float = float("nan")
    b_up: float = float("nan")
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == qpmod.OPTIMAL

    def horizon_table(self, box_min, box_max) -> str:
        lines = ["slice,u_low,u_up,box_min,box_max"]
        for i, (lo, up, bmin, bmax) in enumerate(zip(self.U_low, self.U_up, box_min, box_max)):
            lines.append(f"{i},{lo:.9f},{up:.9f},{bmin:.6f},{bmax:.6f}")
        return "\n".join(lines) + "\n"


def _shift(u: np.ndarray) -> np.ndarray:
    return np.concatenate([u[1:], u[-1:]])


@dataclass
class AxisController:
    """Receding-horizon controller for one axis.

    ``kind`` is ``"cmpc"`` or ``"baseline"``. The previous solution, shifted
    by one slice, warm-starts the next solve.
    """

    kind: str
    cfg: MpcConfig
    lip: LipParams
    bounds: DisturbanceBounds
    solver: qpmod.QpSolver = field(default_factory=qpmod.QpSolver)
    _warm: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("cmpc", "baseline"):
            raise ValueError(f"unknown controller kind {self.kind!r}")

    def reset(self):
        self._warm = None

    def horizon(self, state: AxisState, measured_accel: float, box_min, box_max) -> HorizonProblem:
        if self.kind == "cmpc":
            env = envelope_at(measured_accel, self.bounds, self.cfg.T_c)
            b_low, b_up = kernel_integral(env, "lower", self.lip), kernel_integral(env, "upper", self.lip)
        else:
            b_low = b_up = constant_kernel_integral(measured_accel, self.cfg.T_c, self.lip)
        return horizon_problem(state, b_low, b_up, box_min, box_max, self.cfg, self.lip)

    def decide(self, state: AxisState, measured_accel: float, box_min, box_max) -> ControlDecision:
        h = self.horizon(state, measured_accel, box_min, box_max)
        N = self.cfg.N
        if self.kind == "cmpc":
            prob = contingency_qp(h)
            x0 = w0 = None
            if self._warm is not None:
                x, w = self._warm
                x0 = np.concatenate([_shift(x[:N]), _shift(x[N:])])
                w0 = np.concatenate([_shift(w[:N]), _shift(w[N:])])
        else:
            prob = baseline_qp(h)
            x0 = w0 = None
            if self._warm is not None:
                x0, w0 = (_shift(v) for v in self._warm)
        t0 = time.perf_counter()
        sol = self.solver.solve(prob, x0, w0)
        elapsed = time.perf_counter() - t0
        if not sol.optimal:
            self._warm = None
            nan = np.full(N, np.nan)
            return ControlDecision(float("nan"), nan, nan, sol.status, elapsed, h.xi_u_now, h.b_low,
                                   h.b_up, sol.iterations)
        self._warm = (sol.x, sol.working_set)
        if self.kind == "cmpc":
            U_up, U_low = sol.x[:N], sol.x[N:]
        else:
            U_up = U_low = sol.x
        return ControlDecision(float(U_up[0]), U_low.copy(), U_up.copy(), sol.status, elapsed,
                               h.xi_u_now, h.b_low, h.b_up, sol.iterations)


def decide(axis_state: AxisState, measured_accel: float, box_min, box_max, cfg: MpcConfig,
           p: LipParams, bounds: DisturbanceBounds, kind: str = "cmpc",
           solver: qpmod.QpSolver = None) -> ControlDecision:
    """One cold-started decision; see :class:`AxisController` for the stateful form."""
    ctrl = AxisController(kind, cfg, p, bounds, solver or qpmod.QpSolver())
    return ctrl.decide(axis_state, measured_accel, box_min, box_max)
