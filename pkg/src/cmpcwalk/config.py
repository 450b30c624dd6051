"""Flat ``key = value`` scenario files.

Values are SI. Length keys also accept a ``_cm`` suffix (``l_cm = 26``).
Missing keys fall back to the defaults of :class:`ScenarioConfig`; unknown
keys are rejected. Disturbance keys exist per axis (``disturbance_x``,
``sine_amp_y``, ...); ``disturbance``, ``seed`` and ``onset`` set both axes
at once (``seed`` gives ``seed_x = 2 seed`` and ``seed_y = 2 seed + 1`` so
that consecutive seeds never share a random stream).
"""

from dataclasses import replace

from .controller import MpcConfig
from .gait import GaitConfig
from .lip import LipParams
from .sim import ScenarioConfig, default_bounds
from .surface import BoundedRandom, DisturbanceBounds, NoDisturbance, Scripted, Sinusoid

SINE_DEFAULTS = {"x": (0.04, 6.28), "y": (0.22, 10.47)}
ONSET_DEFAULTS = {"none": 0.0, "sine": 0.4, "random": 0.3, "file": 0.0}
DISTURBANCE_KINDS = ("none", "sine", "random", "file")
CONTROLLER_ALIASES = {"cmpc": "cmpc", "baseline": "baseline", "ismpc": "baseline"}

_FLOAT_KEYS = {
    "l", "g", "s_x", "s_y", "d_x", "d_y", "t_cycle", "stance_ratio", "t_c",
    "fall_com_threshold",
    "a_min_x", "a_max_x", "j_min_x", "j_max_x", "a_min_y", "a_max_y", "j_min_y", "j_max_y",
    "sine_amp_x", "sine_omega_x", "sine_phase_x", "sine_amp_y", "sine_omega_y", "sine_phase_y",
    "onset_x", "onset_y", "hold_x", "hold_y", "onset",
}
_INT_KEYS = {"n_steps", "n_slices", "n_shared", "seed_x", "seed_y", "seed"}
_STR_KEYS = {"controller", "initial_velocity", "stability_tail", "disturbance_x", "disturbance_y",
             "disturbance", "file_x", "file_y"}
_CM_KEYS = {"l", "s_x", "s_y", "d_x", "d_y", "fall_com_threshold"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | {k + "_cm" for k in _CM_KEYS}


class ConfigError(ValueError):
    pass


def parse_text(text: str, source: str = "<config>") -> dict:
    """Parse into a dict of canonical SI keys."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        scale = 1.0
        if key.endswith("_cm"):
            key, scale = key[:-3], 0.01
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(val) * scale
            elif key in _INT_KEYS:
                values[key] = int(val)
            else:
                values[key] = val
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {val!r} for key {key!r}") from None
    return values


def _signal(values: dict, axis: str, bounds: DisturbanceBounds):
    kind = values.get(f"disturbance_{axis}", values.get("disturbance", "none"))
    if kind not in DISTURBANCE_KINDS:
        raise ConfigError(f"disturbance_{axis}: expected one of {DISTURBANCE_KINDS}, got {kind!r}")
    onset = values.get(f"onset_{axis}", values.get("onset", ONSET_DEFAULTS[kind]))
    if kind == "none":
        return NoDisturbance()
    if kind == "sine":
        amp, omega = SINE_DEFAULTS[axis]
        return Sinusoid(values.get(f"sine_amp_{axis}", amp), values.get(f"sine_omega_{axis}", omega),
                        onset, values.get(f"sine_phase_{axis}", 0.0))
    if kind == "random":
        seed = values.get(f"seed_{axis}", 2 * values.get("seed", 0) + (0 if axis == "x" else 1))
        return BoundedRandom(bounds, seed, onset, hold=values.get(f"hold_{axis}", 0.01))
    path = values.get(f"file_{axis}")
    if not path:
        raise ConfigError(f"disturbance_{axis} = file needs file_{axis}")
    try:
        return Scripted.from_file(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"file_{axis}: {exc}") from None


def build_config(values: dict) -> ScenarioConfig:
    try:
        lip = LipParams(values.get("l", 0.26), values.get("g", 9.81))
        g0 = GaitConfig()
        gait = GaitConfig(values.get("s_x", g0.s_x), values.get("s_y", g0.s_y), values.get("d_x", g0.d_x),
                          values.get("d_y", g0.d_y), values.get("t_cycle", g0.T_cycle),
                          values.get("stance_ratio", g0.stance_ratio), values.get("n_steps", g0.n_steps))
        mpc = MpcConfig(values.get("t_c", 1.0), values.get("n_slices", 100), values.get("n_shared", 1),
                        values.get("stability_tail", "hold"))
        bounds = {}
        for axis in ("x", "y"):
            d = default_bounds(axis)
            bounds[axis] = DisturbanceBounds(values.get(f"a_min_{axis}", d.a_min),
                                             values.get(f"a_max_{axis}", d.a_max),
                                             values.get(f"j_min_{axis}", d.j_min),
                                             values.get(f"j_max_{axis}", d.j_max))
        controller = values.get("controller", "cmpc")
        if controller not in CONTROLLER_ALIASES:
            raise ConfigError(f"controller: expected cmpc or ismpc, got {controller!r}")
        return ScenarioConfig(lip, gait, mpc, bounds["x"], bounds["y"],
                              _signal(values, "x", bounds["x"]), _signal(values, "y", bounds["y"]),
                              CONTROLLER_ALIASES[controller], values.get("fall_com_threshold", 0.15),
                              values.get("initial_velocity", "steady"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load(path) -> ScenarioConfig:
    with open(path) as fh:
        return build_config(parse_text(fh.read(), str(path)))


def _signal_lines(sig, axis):
    lines = [f"disturbance_{axis} = {sig.kind}"]
    if isinstance(sig, Sinusoid):
        lines += [f"sine_amp_{axis} = {sig.amplitude!r}", f"sine_omega_{axis} = {sig.omega!r}",
                  f"sine_phase_{axis} = {sig.phase!r}", f"onset_{axis} = {sig.onset!r}"]
    elif isinstance(sig, BoundedRandom):
        lines += [f"seed_{axis} = {sig.seed}", f"onset_{axis} = {sig.onset!r}", f"hold_{axis} = {sig.hold!r}"]
    elif isinstance(sig, Scripted):
        lines += [f"file_{axis} = {sig.source}"]
    return lines


def dump(cfg: ScenarioConfig) -> str:
    """Render ``cfg`` so that ``build_config(parse_text(dump(cfg)))`` equals it."""
    lines = [
        f"l = {cfg.lip.l!r}", f"g = {cfg.lip.g!r}",
        f"s_x = {cfg.gait.s_x!r}", f"s_y = {cfg.gait.s_y!r}",
        f"d_x = {cfg.gait.d_x!r}", f"d_y = {cfg.gait.d_y!r}",
        f"t_cycle = {cfg.gait.T_cycle!r}", f"stance_ratio = {cfg.gait.stance_ratio!r}",
        f"n_steps = {cfg.gait.n_steps}",
        f"t_c = {cfg.mpc.T_c!r}", f"n_slices = {cfg.mpc.N}", f"n_shared = {cfg.mpc.n_shared}",
        f"stability_tail = {cfg.mpc.stability_tail}",
    ]
    for axis in ("x", "y"):
        b = cfg.bounds(axis)
        lines += [f"a_min_{axis} = {b.a_min!r}", f"a_max_{axis} = {b.a_max!r}",
                  f"j_min_{axis} = {b.j_min!r}", f"j_max_{axis} = {b.j_max!r}"]
    for axis in ("x", "y"):
        lines += _signal_lines(cfg.disturbance(axis), axis)
    lines += [f"controller = {cfg.controller}", f"fall_com_threshold = {cfg.fall_com_threshold!r}",
              f"initial_velocity = {cfg.initial_velocity}"]
    return "\n".join(lines) + "\n"


def with_disturbance(cfg: ScenarioConfig, kind: str, seed: int = None, files=(None, None)) -> ScenarioConfig:
    """Replace both axes' disturbances with ``kind`` at its default settings."""
    values = {"disturbance": kind}
    if seed is not None:
        values["seed"] = seed
    for axis, path in zip(("x", "y"), files):
        if path:
            values[f"file_{axis}"] = path
    return replace(cfg, disturbance_x=_signal(values, "x", cfg.bounds_x),
                   disturbance_y=_signal(values, "y", cfg.bounds_y))
