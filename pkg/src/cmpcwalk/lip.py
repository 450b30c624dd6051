"""Linear inverted pendulum on a horizontally moving surface.

Per axis, in the surface frame::

    c'' = omega^2 (c - x_z) - a_s(t),   omega = sqrt(g / l)

The divergent/convergent coordinates ``xi_u = c + c'/omega`` and
``xi_s = c - c'/omega`` decouple the dynamics and are driven by the
effective ZMP ``x_z + a_s / omega^2``.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import kernels

GRAVITY = 9.81
SUBSTEPS = 10


@dataclass(frozen=True)
class LipParams:
    l: float = 0.26
    g: float = GRAVITY

    def __post_init__(self):
        if not (self.l > 0 and self.g > 0):
            raise ValueError(f"LIP parameters must be positive, got l={self.l}, g={self.g}")

    @property
    def omega(self) -> float:
        return math.sqrt(self.g / self.l)


@dataclass(frozen=True)
class AxisState:
    c: float
    c_dot: float
    t: float = 0.0


@dataclass(frozen=True)
class XiState:
    xi_u: float
    xi_s: float
    t: float = 0.0


def xi_from_state(s: AxisState, p: LipParams) -> XiState:
    w = p.omega
    return XiState(s.c + s.c_dot / w, s.c - s.c_dot / w, s.t)


def state_from_xi(x: XiState, p: LipParams) -> AxisState:
    return AxisState(0.5 * (x.xi_u + x.xi_s), 0.5 * p.omega * (x.xi_u - x.xi_s), x.t)


def effective_zmp(x_z, surf_accel, p: LipParams):
    return x_z + surf_accel / p.omega**2


def substep_times(t0: float, dt: float, substeps: int = SUBSTEPS) -> np.ndarray:
    """Half-substep sample times RK4 needs over ``[t0, t0 + dt]``."""
    return t0 + np.arange(2 * substeps + 1) * (0.5 * dt / substeps)


def propagate(s: AxisState, x_z: float, surf_accel_fn, dt: float, p: LipParams,
              substeps: int = SUBSTEPS) -> AxisState:
    """Advance one axis by ``dt`` with the ZMP held at ``x_z``.

    ``surf_accel_fn`` maps an array of times to surface accelerations; a
    scalar constant is also accepted.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    times = substep_times(s.t, dt, substeps)
    if callable(surf_accel_fn):
        nodes = np.asarray(surf_accel_fn(times), dtype=float)
        nodes = np.broadcast_to(nodes, times.shape).copy()
    else:
        nodes = np.full(times.shape, float(surf_accel_fn))
    c, c_dot = kernels.rk4_lip(float(s.c), float(s.c_dot), float(x_z), p.omega**2,
                               nodes, dt / substeps)
    return AxisState(float(c), float(c_dot), s.t + dt)


def closed_form(s: AxisState, x_z: float, surf_accel: float, tau: float, p: LipParams) -> AxisState:
    """Exact solution for constant ZMP and constant surface acceleration."""
    w = p.omega
    x_e = effective_zmp(x_z, surf_accel, p)
    ch, sh = math.cosh(w * tau), math.sinh(w * tau)
    c = x_e + (s.c - x_e) * ch + s.c_dot / w * sh
    c_dot = (s.c - x_e) * w * sh + s.c_dot * ch
    return AxisState(c, c_dot, s.t + tau)
