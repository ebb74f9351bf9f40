"""Ballast forces, per-sleeper load repartition and peak summaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import ConfigError
from .solvers import ResponseHistory
from .track_model import TrackProperties, dof_labels

#: below this percentage a repartition cell is rendered as "-"
REPORT_THRESHOLD = 1.5
TABLE_WINDOW = range(13, 20)
CASES = (
    ("undamped", "half_sine"),
    ("damped", "half_sine"),
    ("undamped", "rectangular"),
    ("damped", "rectangular"),
)


def sleeper_dofs(dof_map: np.ndarray) -> np.ndarray:
    """0-based global DOF of sleepers 1..N+1, left to right."""
    return np.concatenate(([dof_map[0, 6]], dof_map[:, 7]))


def sleeper_multiplicity(dof_map: np.ndarray) -> np.ndarray:
    """Number of sections whose ballast spring acts on each sleeper (1 at the ends, 2 inside)."""
    counts = np.bincount(dof_map[:, 6:].ravel(), minlength=int(dof_map.max()) + 1)
    return counts[sleeper_dofs(dof_map)]


@dataclass(frozen=True)
class SubstructureLoads:
    """Ballast reaction of each sleeper.

    ``forces`` is the force in one ballast spring/damper, ``k_b u_T + c_b u_T'``.
    Sections are summed during assembly, so an interior sleeper sits on two
    such elements (one per adjacent section); ``reactions`` is the total
    force it pushes into the ground and is what balances the applied load.

    ``percent`` is the peak element force as a percentage of ``P0``; these
    are per-sleeper peaks, so they do not sum to 100. ``impulse_share`` is
    the alternative normalized distribution of ``int |F| dt``.
    """

    times: np.ndarray
    forces: np.ndarray
    peak: np.ndarray
    peak_time: np.ndarray
    percent: np.ndarray
    impulse_share: np.ndarray
    P0: float
    multiplicity: np.ndarray

    @property
    def reactions(self) -> np.ndarray:
        return self.forces * self.multiplicity

    @property
    def sleepers(self) -> np.ndarray:
        return np.arange(1, self.forces.shape[1] + 1)

    def percent_of(self, sleeper: int) -> float:
        return float(self.percent[sleeper - 1])


def substructure_forces(
    history: ResponseHistory,
    props: TrackProperties,
    dof_map: np.ndarray,
    P0: float | None = None,
    window: float | None = None,
) -> SubstructureLoads:
    """Ballast element forces ``k_b u_T + c_b u_T'`` under every sleeper.

    Peaks are taken over ``0 <= t <= window`` (whole history when None).
    ``props`` must be the track the history was computed with.
    """
    if history.V is None or history.V.shape != history.U.shape:
        raise ConfigError("history carries no velocity samples", "history.V")
    if P0 is None:
        P0 = history.meta["pulse"]["P0"]
    idx = sleeper_dofs(dof_map)
    forces = props.k_b * history.U[:, idx] + props.c_b * history.V[:, idx]
    t = history.times
    mask = np.ones(len(t), dtype=bool) if window is None else t <= window * (1 + 1e-12)
    sel = np.abs(forces[mask])
    peak = sel.max(axis=0)
    peak_time = t[mask][sel.argmax(axis=0)]
    if mask.sum() > 1:
        impulse = trapezoid(sel, t[mask], axis=0)
    else:
        impulse = np.zeros(len(idx))
    total = impulse.sum()
    share = 100 * impulse / total if total > 0 else np.zeros_like(impulse)
    return SubstructureLoads(t, forces, peak, peak_time, 100 * peak / P0, share, P0, sleeper_multiplicity(dof_map))


class RepartitionRow(NamedTuple):
    sleeper: int
    values: tuple


def repartition_table(
    loads: Mapping[tuple[str, str], SubstructureLoads],
    sleepers: Sequence[int] = TABLE_WINDOW,
    cases: Sequence[tuple[str, str]] = CASES,
) -> list[RepartitionRow]:
    """Rows ``(sleeper, percentages...)`` in the column order of ``cases``."""
    missing = [c for c in cases if c not in loads]
    if missing:
        raise ConfigError(f"missing cases {missing}", "loads")
    return [RepartitionRow(s, tuple(loads[c].percent_of(s) for c in cases)) for s in sleepers]


def format_percent(value: float, threshold: float = REPORT_THRESHOLD) -> str:
    return "-" if value < threshold else f"{value:.2f}%"


def central_sleeper(n_sections: int) -> int:
    """Sleeper at the middle of the track (the loaded one for even N)."""
    return n_sections // 2 + 1


class Peak(NamedTuple):
    dof: int  # 1-based
    label: str
    value: float
    time: float


def peak_summary(history: ResponseHistory, dof_map: np.ndarray | None = None) -> list[Peak]:
    """Peak |displacement| (or |rotation|) and its time for every DOF."""
    U = history.U
    if U.size == 0:
        raise ConfigError("empty history", "history")
    k = np.abs(U).argmax(axis=0)
    labels = dof_labels(dof_map) if dof_map is not None else [f"q{i + 1}" for i in range(U.shape[1])]
    t = history.times
    return [Peak(i + 1, str(labels[i]), float(abs(U[k[i], i])), float(t[k[i]])) for i in range(U.shape[1])]
