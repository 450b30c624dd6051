"""Fixed footstep schedule and the admissible ZMP interval per axis."""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

_EPS_T = 1e-9


@dataclass(frozen=True)
class GaitConfig:
    s_x: float = 0.05
    s_y: float = 0.10
    d_x: float = 0.02
    d_y: float = 0.02
    T_cycle: float = 0.3
    stance_ratio: float = 2.0 / 3.0
    n_steps: int = 7

    def __post_init__(self):
        for name in ("s_x", "s_y", "d_x", "d_y", "T_cycle"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gait {name} must be positive")
        if not 0 < self.stance_ratio < 1:
            raise ValueError("stance_ratio must lie in (0, 1)")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    @property
    def t_single(self) -> float:
        return self.stance_ratio * self.T_cycle / 2

    @property
    def t_double(self) -> float:
        return (1 - self.stance_ratio) * self.T_cycle / 2


class Phase(NamedTuple):
    """One tile of the schedule.

    In double stance ``foot``/``center`` is the foot that bears the next
    single stance and ``other`` the trailing foot's center.
    """

    phase: str
    foot: str
    center: tuple
    t_start: float
    t_end: float
    other: Optional[tuple] = None

    def feet(self):
        out = [(self.foot, self.center)]
        if self.other is not None:
            out.append((_opposite(self.foot), self.other))
        return out


def _opposite(foot):
    return "right" if foot == "left" else "left"


@dataclass(frozen=True)
class FootstepPlan:
    phases: tuple
    d_x: float
    d_y: float

    @property
    def duration(self) -> float:
        return self.phases[-1].t_end

    def phase_at(self, t: float) -> Phase:
        """Phase active at ``t``; the final double stance holds past the end."""
        for ph in self.phases:
            if t < ph.t_end - _EPS_T:
                return ph
        return self.phases[-1]

    def stance_center(self, t: float) -> np.ndarray:
        """Stance-foot center, or the midpoint of both feet in double stance."""
        ph = self.phase_at(t)
        if ph.other is None:
            return np.array(ph.center)
        return 0.5 * (np.array(ph.center) + np.array(ph.other))

    def to_table(self) -> str:
        lines = ["t_start,t_end,phase,foot,center_x,center_y"]
        for ph in self.phases:
            for foot, (cx, cy) in ph.feet():
                lines.append(f"{ph.t_start:.6f},{ph.t_end:.6f},{ph.phase},{foot},{cx:.6f},{cy:.6f}")
        return "\n".join(lines) + "\n"


def build_plan(g: GaitConfig) -> FootstepPlan:
    """Right foot swings first; step ``k`` stands on the foot at ``x = k s_x``."""
    half_y = g.s_y / 2
    feet = {"left": (0.0, half_y), "right": (0.0, -half_y)}
    stance = "left"
    t = 0.0
    phases = [Phase("double", stance, feet[stance], 0.0, g.t_double, feet["right"])]
    t = g.t_double
    for k in range(g.n_steps):
        swing = _opposite(stance)
        phases.append(Phase("single", stance, feet[stance], t, t + g.t_single))
        t += g.t_single
        feet[swing] = ((k + 1) * g.s_x, feet[swing][1])
        phases.append(Phase("double", swing, feet[swing], t, t + g.t_double, feet[stance]))
        t += g.t_double
        stance = swing
    return FootstepPlan(tuple(phases), g.d_x, g.d_y)


def _phase_boxes(plan: FootstepPlan):
    """Per-phase admissible box ``(x_min, x_max, y_min, y_max)``."""
    hx, hy = plan.d_x / 2, plan.d_y / 2
    boxes = np.empty((len(plan.phases), 4))
    for i, ph in enumerate(plan.phases):
        xs = [c[0] for _, c in ph.feet()]
        ys = [c[1] for _, c in ph.feet()]
        boxes[i] = (min(xs) - hx, max(xs) + hx, min(ys) - hy, max(ys) + hy)
    return boxes


class ZmpWindow(NamedTuple):
    x_min: np.ndarray
    x_max: np.ndarray
    y_min: np.ndarray
    y_max: np.ndarray

    def axis(self, axis: str):
        return (self.x_min, self.x_max) if axis == "x" else (self.y_min, self.y_max)


class WindowLookup:
    """Vectorised ``zmp_bounds`` for repeated queries on one plan."""

    def __init__(self, plan: FootstepPlan):
        self.plan = plan
        self._ends = np.array([ph.t_end for ph in plan.phases])
        self._boxes = _phase_boxes(plan)

    def phase_index(self, t):
        idx = np.searchsorted(self._ends - _EPS_T, np.asarray(t, dtype=float), side="right")
        return np.minimum(idx, len(self._ends) - 1)

    def window(self, t_k: float, N: int, dt: float) -> ZmpWindow:
        times = t_k + np.arange(N) * dt
        b = self._boxes[self.phase_index(times)]
        return ZmpWindow(b[:, 0], b[:, 1], b[:, 2], b[:, 3])


def zmp_bounds(plan: FootstepPlan, g: GaitConfig, t_k: float, N: int, dt: float) -> ZmpWindow:
    """Admissible ZMP interval per axis for slices starting at ``t_k + i dt``."""
    return WindowLookup(plan).window(t_k, N, dt)
