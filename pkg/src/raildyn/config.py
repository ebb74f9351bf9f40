"""Scenario configuration: ``key = value`` files with sections.

Track values are written in the units of the reference property table
(cm², cm⁴, GPa, MN/m, kN·s/m) and converted to SI on load::

    [track]
    A_r_cm2 = 76.70
    k_s_MN_per_m = 90

    [pulse]
    kind = rect
    p0_tonnes = 10
    t_d = 0.01
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .loading import STANDARD_GRAVITY, pulse_kind, tonnes_to_newtons
from .solvers import method_name
from .track_model import TrackProperties

# config key -> (TrackProperties field, factor to SI)
TRACK_UNITS = {
    "rho_r": ("rho_r", 1.0),
    "A_r_cm2": ("A_r", 1e-4),
    "E_r_GPa": ("E_r", 1e9),
    "I_r_cm4": ("I_r", 1e-8),
    "m_T": ("m_T", 1.0),
    "k_s_MN_per_m": ("k_s", 1e6),
    "c_s_kNs_per_m": ("c_s", 1e3),
    "k_b_MN_per_m": ("k_b", 1e6),
    "c_b_kNs_per_m": ("c_b", 1e3),
    "zeta1": ("zeta1", 1.0),
    "zeta2": ("zeta2", 1.0),
    "L": ("L", 1.0),
}
DEFAULT_OUT = "raildyn_out"


def track_to_table_units(props: TrackProperties) -> dict:
    """Inverse of the config conversion, for manifest echoes."""
    return {key: getattr(props, name) / factor for key, (name, factor) in TRACK_UNITS.items()}


@dataclass(frozen=True)
class ScenarioConfig:
    track: TrackProperties = field(default_factory=TrackProperties)
    n_sections: int = 1
    pulse_kind: str = "rectangular"
    P0: float = tonnes_to_newtons(10.0)
    t_d: float = 0.01
    omega: float | None = None
    method: str = "state_space"
    dt: float | None = None
    duration: float | None = None
    undamped: bool = False
    load_dof: int | None = None
    out_dir: Path = Path(DEFAULT_OUT)
    dofs: str = "load,sleeper"
    peak_window: str = "pulse"
    table_sleepers: tuple[int, int] = (13, 19)
    threshold: float = 1.5
    calibrate_hz: float | None = None
    calibrate_mode: int = 2

    def __post_init__(self):
        if int(self.n_sections) != self.n_sections or self.n_sections < 1:
            raise ConfigError(f"must be a positive integer, got {self.n_sections!r}", "model.n_sections")
        if not self.P0 > 0:
            raise ConfigError(f"must be positive, got {self.P0!r}", "pulse.P0")
        if not self.t_d > 0:
            raise ConfigError(f"must be positive, got {self.t_d!r}", "pulse.t_d")
        for name in ("dt", "duration", "omega"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"must be positive, got {value!r}", f"solver.{name}")
        if self.peak_window not in ("pulse", "full"):
            raise ConfigError(f"must be 'pulse' or 'full', got {self.peak_window!r}", "outputs.peak_window")
        lo, hi = self.table_sleepers
        if not 1 <= lo <= hi:
            raise ConfigError(f"bad sleeper range {lo}-{hi}", "outputs.sleepers")
        object.__setattr__(self, "pulse_kind", pulse_kind(self.pulse_kind))
        object.__setattr__(self, "method", method_name(self.method))

    @property
    def effective_track(self) -> TrackProperties:
        return self.track.undamped() if self.undamped else self.track

    def with_overrides(self, **changes) -> "ScenarioConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def _float(section, key, path):
    raw = section.get(key)
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {raw!r}", path) from None


def _int(section, key, path):
    value = _float(section, key, path)
    if value != int(value):
        raise ConfigError(f"expected an integer, got {section.get(key)!r}", path)
    return int(value)


def _bool(section, key, path):
    try:
        return section.getboolean(key)
    except ValueError:
        raise ConfigError(f"expected true/false, got {section.get(key)!r}", path) from None


def _parse_track(section) -> TrackProperties:
    values = {}
    for key in section:
        path = f"track.{key}"
        if key == "zeta":
            values["zeta1"] = values["zeta2"] = _float(section, key, path)
        elif key in TRACK_UNITS:
            name, factor = TRACK_UNITS[key]
            values[name] = _float(section, key, path) * factor
        else:
            raise ConfigError("unknown key", path)
    try:
        return TrackProperties(**values)
    except ConfigError as exc:
        key = next(k for k, (name, _) in TRACK_UNITS.items() if name == exc.field)
        raise ConfigError(str(exc).split(": ", 1)[-1], f"track.{key}") from None


def parse_config(text: str, default_out: Path | None = None) -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None

    known = {"track", "model", "pulse", "solver", "outputs", "calibration"}
    for name in parser.sections():
        if name not in known:
            raise ConfigError("unknown section", name)

    kwargs = {} if default_out is None else {"out_dir": Path(default_out)}
    if parser.has_section("track"):
        kwargs["track"] = _parse_track(parser["track"])
    model = parser["model"] if parser.has_section("model") else {}
    if "n_sections" in model:
        kwargs["n_sections"] = _int(model, "n_sections", "model.n_sections")

    if parser.has_section("pulse"):
        pulse = parser["pulse"]
        g = _float(pulse, "g", "pulse.g") if "g" in pulse else STANDARD_GRAVITY
        for key in pulse:
            path = f"pulse.{key}"
            if key == "kind":
                kwargs["pulse_kind"] = pulse[key]
            elif key == "p0_tonnes":
                kwargs["P0"] = tonnes_to_newtons(_float(pulse, key, path), g)
            elif key == "p0_newtons":
                kwargs["P0"] = _float(pulse, key, path)
            elif key in ("t_d", "omega"):
                kwargs[key] = _float(pulse, key, path)
            elif key == "load_dof":
                kwargs["load_dof"] = _int(pulse, key, path)
            elif key != "g":
                raise ConfigError("unknown key", path)

    if parser.has_section("solver"):
        solver = parser["solver"]
        for key in solver:
            path = f"solver.{key}"
            if key == "method":
                kwargs["method"] = solver[key]
            elif key in ("dt", "duration"):
                kwargs[key] = _float(solver, key, path)
            elif key == "undamped":
                kwargs["undamped"] = _bool(solver, key, path)
            else:
                raise ConfigError("unknown key", path)

    if parser.has_section("outputs"):
        outputs = parser["outputs"]
        for key in outputs:
            path = f"outputs.{key}"
            if key == "directory":
                kwargs["out_dir"] = Path(outputs[key])
            elif key in ("dofs", "peak_window"):
                kwargs[key] = outputs[key].strip()
            elif key == "sleepers":
                kwargs["table_sleepers"] = parse_range(outputs[key], path)
            elif key == "threshold":
                kwargs["threshold"] = _float(outputs, key, path)
            else:
                raise ConfigError("unknown key", path)

    if parser.has_section("calibration"):
        cal = parser["calibration"]
        for key in cal:
            path = f"calibration.{key}"
            if key == "target_hz":
                kwargs["calibrate_hz"] = _float(cal, key, path)
            elif key == "mode":
                kwargs["calibrate_mode"] = _int(cal, key, path)
            else:
                raise ConfigError("unknown key", path)
    return ScenarioConfig(**kwargs)


def parse_range(text: str, path: str = "range") -> tuple[int, int]:
    try:
        lo, _, hi = text.partition("-")
        return int(lo), int(hi or lo)
    except ValueError:
        raise ConfigError(f"expected 'first-last', got {text!r}", path) from None


def default_out_dir() -> Path:
    return Path(os.environ.get("RAILDYN_OUT", DEFAULT_OUT))


def load_config(path: str | os.PathLike | None) -> ScenarioConfig:
    """Read a config file; the output directory defaults to ``$RAILDYN_OUT``."""
    if path is None:
        return ScenarioConfig(out_dir=default_out_dir())
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from None
    return parse_config(text, default_out_dir())
