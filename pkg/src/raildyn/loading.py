"""Wheel pulses and their placement on the track."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, LoadPlacementError
from .track_model import AssembledSystem, build_dof_map, dof_labels

STANDARD_GRAVITY = 9.81
PULSE_KINDS = ("rectangular", "half_sine")
_ALIASES = {"rect": "rectangular", "rectangular": "rectangular", "sine": "half_sine",
            "half_sine": "half_sine", "half-sine": "half_sine", "sinusoidal": "half_sine"}


def tonnes_to_newtons(tonnes: float, g: float = STANDARD_GRAVITY) -> float:
    """Tonnes-force to newtons (1 T = 1000 kgf)."""
    return tonnes * 1000.0 * g


def pulse_kind(name: str) -> str:
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown pulse kind {name!r}; use rect or sine", "pulse") from None


@dataclass(frozen=True)
class PulseLoad:
    """Single pulse of amplitude ``P0`` lasting ``t_d``.

    ``omega`` defaults to ``pi / t_d`` so the half-sine is one positive lobe.
    """

    kind: Literal["rectangular", "half_sine"]
    P0: float
    t_d: float
    omega: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", pulse_kind(self.kind))
        if not self.P0 > 0:
            raise ConfigError(f"must be positive, got {self.P0!r}", "P0")
        if not self.t_d > 0:
            raise ConfigError(f"must be positive, got {self.t_d!r}", "t_d")
        if self.omega is None:
            object.__setattr__(self, "omega", np.pi / self.t_d)
        elif not self.omega > 0:
            raise ConfigError(f"must be positive, got {self.omega!r}", "omega")

    def scaled(self, factor: float) -> "PulseLoad":
        return PulseLoad(self.kind, self.P0 * factor, self.t_d, self.omega)

    def value(self, t):
        """Force at time ``t`` (scalar or array); the pulse includes ``t == t_d``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "rectangular":
            shape = np.ones_like(t)
        else:
            shape = np.sin(self.omega * t)
        out = np.where((t >= 0) & (t <= self.t_d), self.P0 * shape, 0.0)
        return out if out.ndim else float(out)

    def value_after(self, t):
        """Right-hand limit of the force at ``t`` (differs from ``value`` only at ``t_d``)."""
        t = np.asarray(t, dtype=float)
        out = np.where(t >= self.t_d, 0.0, self.value(t))
        return out if out.ndim else float(out)

    @property
    def impulse(self) -> float:
        if self.kind == "rectangular":
            return self.P0 * self.t_d
        return self.P0 * (1 - np.cos(self.omega * self.t_d)) / self.omega


def pulse_value(pulse: PulseLoad, t):
    return pulse.value(t)


def _nearest_vertical(labels, index):
    candidates = [i + 1 for i, lab in enumerate(labels) if lab.kind == "u"]
    return min(candidates, key=lambda j: (abs(j - index), j))


def load_dof_index(n_sections: int, dof_map: np.ndarray | None = None) -> int:
    """1-based global index of the central rail translation receiving the load."""
    if dof_map is None:
        dof_map = build_dof_map(n_sections)
    N = n_sections
    if N == 2:
        index = 5
    elif N % 2 == 0:
        index = 5 * N // 2 + 1
    else:
        index = 5 * (N + 1) // 2 - 1
    labels = dof_labels(dof_map)
    if labels[index - 1].kind != "u":
        nearest = _nearest_vertical(labels, index)
        raise LoadPlacementError(
            f"load index {index} for N={N} is {labels[index - 1]}, not a vertical rail DOF; "
            f"nearest vertical rail DOF is {nearest} ({labels[nearest - 1]})",
            index,
            nearest,
        )
    return index


@dataclass(frozen=True)
class PointLoad:
    """A unit spatial pattern at one DOF driven by a pulse signal."""

    pattern: np.ndarray
    dof: int
    pulse: PulseLoad

    def at(self, t):
        return np.multiply.outer(np.asarray(self.pulse.value(t)), self.pattern)


def load_vector(system: AssembledSystem, pulse: PulseLoad, dof: int | None = None) -> PointLoad:
    """Point load at ``dof`` (1-based); defaults to the central rail DOF."""
    if dof is None:
        dof = load_dof_index(system.n_sections, system.dof_map)
    elif not 1 <= dof <= system.n_dof:
        raise ConfigError(f"must be in 1..{system.n_dof}, got {dof!r}", "load_dof")
    pattern = np.zeros(system.n_dof)
    pattern[dof - 1] = 1.0
    return PointLoad(pattern=pattern, dof=dof, pulse=pulse)
