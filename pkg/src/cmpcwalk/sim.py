"""Closed-loop walking simulation and stability-margin sweeps."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import math
from typing import Callable, Optional

import numpy as np

from .controller import AxisController, MpcConfig, stability_weights
from .gait import GaitConfig, WindowLookup, build_plan
from .lip import SUBSTEPS, AxisState, LipParams, propagate, substep_times
from .surface import DisturbanceBounds, NoDisturbance, Sinusoid

AXES = ("x", "y")
TRACE_HEADER = ("t,x_c,y_c,dx_c,dy_c,x_z,y_z,as_x,as_y,xi_u_x,xi_u_y,phase,stance,"
                "status_x,status_y,solve_ms_x,solve_ms_y")


def default_bounds(axis: str) -> DisturbanceBounds:
    if axis == "x":
        return DisturbanceBounds(-0.5, 0.5, -1.0, 1.0)
    return DisturbanceBounds(-0.75, 0.75, -2.0, 2.0)


@dataclass(frozen=True)
class ScenarioConfig:
    lip: LipParams = LipParams()
    gait: GaitConfig = GaitConfig()
    mpc: MpcConfig = MpcConfig()
    bounds_x: DisturbanceBounds = field(default_factory=lambda: default_bounds("x"))
    bounds_y: DisturbanceBounds = field(default_factory=lambda: default_bounds("y"))
    disturbance_x: object = NoDisturbance()
    disturbance_y: object = NoDisturbance()
    controller: str = "cmpc"
    fall_com_threshold: float = 0.15
    initial_velocity: str = "steady"

    def __post_init__(self):
        if self.controller not in ("cmpc", "baseline"):
            raise ValueError(f"controller must be 'cmpc' or 'baseline', got {self.controller!r}")
        if self.initial_velocity not in ("steady", "rest"):
            raise ValueError("initial_velocity must be 'steady' or 'rest'")
        if self.fall_com_threshold <= 0:
            raise ValueError("fall_com_threshold must be positive")

    @property
    def dt(self) -> float:
        return self.mpc.delta_t

    def bounds(self, axis):
        return self.bounds_x if axis == "x" else self.bounds_y

    def disturbance(self, axis):
        return self.disturbance_x if axis == "x" else self.disturbance_y


@dataclass
class SimTrace:
    rows: list = field(default_factory=list)
    record_timing: bool = False

    def column(self, name: str) -> np.ndarray:
        idx = TRACE_HEADER.split(",").index(name)
        return np.array([r[idx] for r in self.rows])

    def to_csv(self) -> str:
        out = [TRACE_HEADER]
        for r in self.rows:
            nums = ",".join(repr(float(v)) for v in r[:11])
            ms = ",".join(f"{v:.4f}" if self.record_timing else "nan" for v in r[15:17])
            out.append(f"{nums},{r[11]},{r[12]},{r[13]},{r[14]},{ms}")
        return "\n".join(out) + "\n"


@dataclass
class SimResult:
    trace: SimTrace
    outcome: str
    fall_time: Optional[float] = None
    reason: str = ""
    max_prefix_gap: float = 0.0
    max_window_violation: float = 0.0

    @property
    def completed(self) -> bool:
        return self.outcome == "completed"


def initial_state(cfg: ScenarioConfig, lookup: WindowLookup, axis: str) -> AxisState:
    """COM at the origin; ``steady`` starts with the velocity whose ``xi_u``
    makes the window-center ZMP plan satisfy the stability row."""
    if cfg.initial_velocity == "rest":
        return AxisState(0.0, 0.0, 0.0)
    lo, hi = lookup.window(0.0, cfg.mpc.N, cfg.dt).axis(axis)
    xi_u = float(stability_weights(cfg.mpc, cfg.lip) @ (0.5 * (lo + hi)))
    return AxisState(0.0, cfg.lip.omega * xi_u, 0.0)


def run(cfg: ScenarioConfig, on_decision: Callable = None, record_timing: bool = False) -> SimResult:
    """Simulate the full footstep plan under ``cfg``.

    ``on_decision(t_k, axis, decision, box_min, box_max)`` is called after
    every solve when given.
    """
    plan = build_plan(cfg.gait)
    lookup = WindowLookup(plan)
    dt, N = cfg.dt, cfg.mpc.N
    n_steps = int(round(plan.duration / dt))
    states = {a: initial_state(cfg, lookup, a) for a in AXES}
    ctrls = {a: AxisController(cfg.controller, cfg.mpc, cfg.lip, cfg.bounds(a)) for a in AXES}
    trace = SimTrace(record_timing=record_timing)
    omega = cfg.lip.omega
    prefix_gap = 0.0
    violation = 0.0

    for k in range(n_steps):
        t_k = k * dt
        window = lookup.window(t_k, N, dt)
        ph = plan.phase_at(t_k)
        stance = ph.foot if ph.phase == "single" else "both"
        meas = {a: float(cfg.disturbance(a).sample(t_k)) for a in AXES}
        dec = {}
        for a in AXES:
            lo, hi = window.axis(a)
            dec[a] = ctrls[a].decide(states[a], meas[a], lo, hi)
            if on_decision is not None:
                on_decision(t_k, a, dec[a], lo, hi)
        sx, sy = states["x"], states["y"]
        row = [t_k, sx.c, sy.c, sx.c_dot, sy.c_dot, dec["x"].x_z_applied, dec["y"].x_z_applied,
               meas["x"], meas["y"], sx.c + sx.c_dot / omega, sy.c + sy.c_dot / omega,
               ph.phase, stance, dec["x"].status, dec["y"].status,
               dec["x"].solve_time * 1e3, dec["y"].solve_time * 1e3]
        trace.rows.append(row)
        failed = [a for a in AXES if not dec[a].optimal]
        if failed:
            reason = "; ".join(f"{a}: {dec[a].status}" for a in failed)
            return SimResult(trace, "fell", t_k, reason, prefix_gap, violation)
        for a in AXES:
            d = dec[a]
            prefix_gap = max(prefix_gap, float(np.max(np.abs(d.U_up[:cfg.mpc.n_shared]
                                                             - d.U_low[:cfg.mpc.n_shared]))))
            lo, hi = window.axis(a)
            violation = max(violation, lo[0] - d.x_z_applied, d.x_z_applied - hi[0])
            states[a] = propagate(states[a], d.x_z_applied, cfg.disturbance(a).sample, dt, cfg.lip)
        t_next = (k + 1) * dt
        center = plan.stance_center(t_next)
        for i, a in enumerate(AXES):
            dev = abs(states[a].c - center[i])
            if not math.isfinite(dev) or dev > cfg.fall_com_threshold:
                return SimResult(trace, "fell", t_next, f"{a}: COM deviation {dev:.3f} m",
                                 prefix_gap, violation)
    return SimResult(trace, "completed", None, "", prefix_gap, violation)


# -- margin sweeps ------------------------------------------------------------


def probe_config(base: ScenarioConfig, axis: str, mode: str, fixed: float, value: float,
                 onset: float = 0.0) -> ScenarioConfig:
    """Sinusoidal surface motion ``A sin(2 pi f t)`` on one axis, none on the other.

    ``amplitude`` mode: ``value`` is the acceleration amplitude (m/s^2) at
    frequency ``fixed`` (Hz). ``frequency`` mode: ``value`` is the frequency
    (Hz) at position amplitude ``fixed`` (m).
    """
    if mode == "amplitude":
        f, acc = fixed, value
    elif mode == "frequency":
        f, acc = value, fixed * (2 * math.pi * value) ** 2
    else:
        raise ValueError(f"mode must be 'amplitude' or 'frequency', got {mode!r}")
    sig = Sinusoid(acc, 2 * math.pi * f, onset) if acc > 0 else NoDisturbance()
    if axis == "x":
        return replace(base, disturbance_x=sig, disturbance_y=NoDisturbance())
    if axis == "y":
        return replace(base, disturbance_x=NoDisturbance(), disturbance_y=sig)
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def _probe(cfg: ScenarioConfig):
    res = run(cfg)
    return res.completed, res.fall_time, res.max_prefix_gap


@dataclass
class SweepResult:
    axis: str
    mode: str
    fixed: float
    controller: str
    margin: Optional[float]
    interval: tuple
    probes: list
    unbounded: str = ""
    monotone: bool = True
    max_prefix_gap: float = 0.0

    @property
    def width(self) -> float:
        return self.interval[1] - self.interval[0]

    def to_csv(self) -> str:
        out = ["probe,value,outcome,fall_time"]
        for i, value, passed, fall_time in self.probes:
            ft = "" if fall_time is None else repr(float(fall_time))
            out.append(f"{i},{value!r},{'completed' if passed else 'fell'},{ft}")
        return "\n".join(out) + "\n"


def _evaluate(configs, parallel: int):
    if parallel > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_probe, configs))
    return [_probe(c) for c in configs]


def sweep_margin(base: ScenarioConfig, axis: str, mode: str, fixed: float, lo: float, hi: float,
                 resolution: float = 0.01, parallel: int = 1, grid_points: int = 9,
                 onset: float = 0.0) -> SweepResult:
    """Largest passing probe value in ``[lo, hi]`` to within ``resolution``.

    A fixed coarse grid is evaluated first (in parallel when asked), then the
    bracket between the last pass and the first failure is bisected. The set
    of probes depends only on outcomes, never on ``parallel``.
    """
    if hi < lo or resolution <= 0:
        raise ValueError("need lo <= hi and resolution > 0")
    probes = []
    gaps = [0.0]

    def record(values, results):
        for v, (passed, ft, gap) in zip(values, results):
            probes.append((len(probes), float(v), bool(passed), ft))
            gaps.append(gap)

    make = lambda v: probe_config(base, axis, mode, fixed, v, onset)  # noqa: E731
    if hi == lo or grid_points < 2:
        values = [lo]
    else:
        values = list(np.linspace(lo, hi, grid_points))
    record(values, _evaluate([make(v) for v in values], parallel))
    result = lambda **kw: SweepResult(axis, mode, fixed, base.controller, probes=probes,  # noqa: E731
                                      max_prefix_gap=max(gaps), **kw)

    passed = [p[2] for p in probes]
    if not passed[0]:
        return result(margin=None, interval=(lo, lo), unbounded="below")
    if len(values) == 1:
        return result(margin=float(lo), interval=(lo, lo))
    if all(passed):
        return result(margin=float(values[-1]), interval=(values[-1], values[-1]), unbounded="above")
    first_fail = passed.index(False)
    monotone = not any(passed[first_fail:])
    a, b = float(values[first_fail - 1]), float(values[first_fail])
    while b - a > resolution:
        mid = 0.5 * (a + b)
        ok, ft, gap = _probe(make(mid))
        record([mid], [(ok, ft, gap)])
        if ok:
            a = mid
        else:
            b = mid
    return result(margin=a, interval=(a, b), monotone=monotone)
