"""Surface-motion disturbances and worst-case acceleration envelopes."""

from dataclasses import dataclass, field
import math
from pathlib import Path

import numpy as np

from .lip import LipParams


@dataclass(frozen=True)
class DisturbanceBounds:
    a_min: float
    a_max: float
    j_min: float
    j_max: float

    def __post_init__(self):
        if not self.a_min < self.a_max:
            raise ValueError(f"need a_min < a_max, got {self.a_min} >= {self.a_max}")
        if not self.j_min < 0 < self.j_max:
            raise ValueError(f"need j_min < 0 < j_max, got [{self.j_min}, {self.j_max}]")

    def scaled(self, factor: float) -> "DisturbanceBounds":
        return DisturbanceBounds(self.a_min * factor, self.a_max * factor,
                                 self.j_min * factor, self.j_max * factor)


@dataclass(frozen=True)
class SurfaceEnvelope:
    """Extremal surface accelerations reachable from ``a0`` within ``T_c``."""

    a0: float
    T_l: float
    T_u: float
    bounds: DisturbanceBounds
    T_c: float

    def lower(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.where(tau < self.T_l, self.a0 + self.bounds.j_min * tau, self.bounds.a_min)

    def upper(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.where(tau < self.T_u, self.a0 + self.bounds.j_max * tau, self.bounds.a_max)

    def side(self, which: str):
        if which == "lower":
            return self.lower
        if which == "upper":
            return self.upper
        raise ValueError(f"envelope side must be 'lower' or 'upper', got {which!r}")


def envelope_at(a0: float, b: DisturbanceBounds, T_c: float) -> SurfaceEnvelope:
    if T_c <= 0:
        raise ValueError("T_c must be positive")
    a0 = min(max(float(a0), b.a_min), b.a_max)
    T_l = (b.a_min - a0) / b.j_min
    T_u = (b.a_max - a0) / b.j_max
    return SurfaceEnvelope(a0, T_l, T_u, b, T_c)


def _ramp_hold_integral(a0, slope, a_sat, T_ramp, T_c, w):
    """``(1/w) * int_0^T_c exp(-w tau) a(tau) dtau`` for a ramp that saturates."""
    T = min(T_ramp, T_c)
    x = w * T
    e = math.exp(-x)
    # int_0^T e^{-w tau} d tau and int_0^T tau e^{-w tau} d tau
    i0 = -math.expm1(-x) / w
    i1 = (-math.expm1(-x) - x * e) / (w * w)
    tail = (e - math.exp(-w * T_c)) / w if T < T_c else 0.0
    return (a0 * i0 + slope * i1 + a_sat * tail) / w


def kernel_integral(env: SurfaceEnvelope, which: str, p: LipParams) -> float:
    """Contribution of one envelope side to the truncated stability row.

    Returns ``omega * int_0^T_c exp(-omega tau) / omega^2 * a(tau) dtau``
    (metres), evaluated piecewise in closed form.
    """
    b = env.bounds
    if which == "lower":
        return _ramp_hold_integral(env.a0, b.j_min, b.a_min, env.T_l, env.T_c, p.omega)
    if which == "upper":
        return _ramp_hold_integral(env.a0, b.j_max, b.a_max, env.T_u, env.T_c, p.omega)
    raise ValueError(f"envelope side must be 'lower' or 'upper', got {which!r}")


def constant_kernel_integral(accel: float, T_c: float, p: LipParams) -> float:
    """Same integral for an acceleration held constant over the horizon."""
    w = p.omega
    return accel * -math.expm1(-w * T_c) / (w * w)


# -- disturbance signals ------------------------------------------------------


@dataclass(frozen=True)
class NoDisturbance:
    kind = "none"

    def sample(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class Sinusoid:
    """``-amplitude * sin(omega (t - onset) + phase)`` after ``onset``, zero before."""

    amplitude: float
    omega: float
    onset: float = 0.0
    phase: float = 0.0
    kind = "sine"

    def sample(self, t):
        t = np.asarray(t, dtype=float)
        active = t >= self.onset
        return np.where(active, -self.amplitude * np.sin(self.omega * (t - self.onset) + self.phase), 0.0)


@dataclass(frozen=True)
class BoundedRandom:
    """Random acceleration with bounded jerk and bounded magnitude.

    Every ``hold`` seconds a jerk is drawn uniformly from ``[j_min, j_max]``;
    it is integrated on a ``dt`` grid, clipped to ``[a_min, a_max]`` and
    linearly interpolated between grid points. Zero before ``onset``, where
    the signal starts from ``a_start``.
    """

    bounds: DisturbanceBounds
    seed: int = 0
    onset: float = 0.0
    a_start: float = 0.0
    dt: float = 0.01
    hold: float = 0.01
    duration: float = 5.0
    kind = "random"
    _samples: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = self.bounds
        n = int(math.ceil(self.duration / self.dt)) + 1
        per = max(1, int(round(self.hold / self.dt)))
        rng = np.random.default_rng(self.seed)
        jerks = rng.uniform(b.j_min, b.j_max, size=(n + per - 1) // per)
        a = np.empty(n)
        a[0] = min(max(self.a_start, b.a_min), b.a_max)
        for k in range(1, n):
            a[k] = min(max(a[k - 1] + jerks[(k - 1) // per] * self.dt, b.a_min), b.a_max)
        a.setflags(write=False)
        object.__setattr__(self, "_samples", a)

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    def sample(self, t):
        t = np.asarray(t, dtype=float)
        grid = self.onset + np.arange(self._samples.size) * self.dt
        out = np.interp(t, grid, self._samples)
        return np.where(t >= self.onset, out, 0.0)


@dataclass(frozen=True)
class Scripted:
    """Zero-order-hold replay of a ``t_seconds, accel_m_s2`` table."""

    times: tuple
    values: tuple
    source: str = ""
    kind = "file"

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("scripted disturbance needs matching, non-empty columns")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("scripted disturbance times must be strictly increasing")

    @classmethod
    def from_file(cls, path) -> "Scripted":
        times, values = [], []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p for p in line.replace(",", " ").split() if p]
            try:
                t, a = (float(p) for p in parts)
            except ValueError:
                if not times and lineno == 1:
                    continue  # header row
                raise ValueError(f"{path}:{lineno}: expected 't_seconds, accel_m_s2', got {line!r}")
            times.append(t)
            values.append(a)
        return cls(tuple(times), tuple(values), str(path))

    def sample(self, t):
        t = np.asarray(t, dtype=float)
        times = np.asarray(self.times)
        if np.any(t > times[-1]):
            raise ValueError(f"scripted disturbance queried beyond table end t={times[-1]}")
        idx = np.searchsorted(times, t, side="right") - 1
        vals = np.asarray(self.values)[np.clip(idx, 0, None)]
        return np.where(idx >= 0, vals, 0.0)


def sample_acceleration(sig, t):
    """Surface acceleration of ``sig`` at time(s) ``t``; scalar in, scalar out."""
    out = sig.sample(t)
    return float(out) if np.ndim(out) == 0 else out
