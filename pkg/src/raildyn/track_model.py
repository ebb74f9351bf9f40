"""Finite-element model of a ballasted track.

An elementary section is two Euler-Bernoulli rail elements (three rail
nodes, each with a vertical translation and a rotation) resting on two
sleepers through railpads, with each sleeper on a ballast spring/damper.
Local DOF order of a section::

    [u1, th1, u2, th2, u3, th3, uT1, uT2]

A track of N sections shares (u3, th3, uT2) of section j-1 with
(u1, th1, uT1) of section j, giving 5N + 3 global DOFs.

The integer coefficient patterns are built by plain arithmetic so they can
be evaluated with a symbolic ``L`` (e.g. a sympy Symbol) as well as floats.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple, Sequence

import numpy as np

from .eigen import modal_decompose
from .errors import CalibrationError, ConfigError

logger = logging.getLogger(__name__)

#: 0-based positions of [th1, u2, th2, th3] inside the 6-DOF rail vector.
REDUCED_DOFS = (1, 2, 3, 5)
#: 0-based local indices that receive fresh global numbers for sections j > 1.
FRESH_LOCAL = (2, 3, 4, 5, 7)
LOCAL_NAMES = ("u1", "th1", "u2", "th2", "u3", "th3", "uT1", "uT2")


@dataclass(frozen=True)
class TrackProperties:
    """Physical track parameters in SI units.

    Defaults reproduce the reference track: UIC-60-like rail, concrete
    sleeper, stiff railpad and a 5 % modal damping ratio for the rail. ``L`` is
    the rail *element* length; sleepers sit every two elements, so the
    sleeper spacing is ``2 L`` (0.6 m by default).
    """

    rho_r: float = 7850.0
    A_r: float = 76.70e-4
    E_r: float = 210e9
    I_r: float = 3038.6e-8
    m_T: float = 90.84
    k_s: float = 90e6
    c_s: float = 30e3
    k_b: float = 25.5e6
    c_b: float = 40e3
    zeta1: float = 0.05
    zeta2: float = 0.05
    L: float = 0.3

    def __post_init__(self):
        for name in ("rho_r", "A_r", "E_r", "I_r", "m_T", "k_s", "k_b", "L"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"must be strictly positive, got {value!r}", name)
        for name in ("c_s", "c_b"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"must be non-negative, got {value!r}", name)
        for name in ("zeta1", "zeta2"):
            value = getattr(self, name)
            if not 0 <= value < 1:
                raise ConfigError(f"must lie in [0, 1), got {value!r}", name)

    def undamped(self) -> "TrackProperties":
        """Same track with every damper and damping ratio removed."""
        return replace(self, c_s=0.0, c_b=0.0, zeta1=0.0, zeta2=0.0)

    def with_length(self, L: float) -> "TrackProperties":
        return replace(self, L=L)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def mass_scale(self) -> float:
        return self.rho_r * self.A_r * self.L / 420.0

    @property
    def stiffness_scale(self) -> float:
        return self.E_r * self.I_r / self.L**3


# --------------------------------------------------------------------------
# coefficient patterns
# --------------------------------------------------------------------------

def beam_mass_pattern(L):
    """Consistent-mass pattern of one 2-node beam element, times rho*A*L/420."""
    return [
        [156, 22 * L, 54, -13 * L],
        [22 * L, 4 * L**2, 13 * L, -3 * L**2],
        [54, 13 * L, 156, -22 * L],
        [-13 * L, -3 * L**2, -22 * L, 4 * L**2],
    ]


def beam_stiffness_pattern(L):
    """Bending stiffness pattern of one 2-node beam element, times E*I/L**3."""
    return [
        [12, 6 * L, -12, 6 * L],
        [6 * L, 4 * L**2, -6 * L, 2 * L**2],
        [-12, -6 * L, 12, -6 * L],
        [6 * L, 2 * L**2, -6 * L, 4 * L**2],
    ]


def _two_elements(element):
    out = [[0] * 6 for _ in range(6)]
    for offset in (0, 2):
        for r in range(4):
            for c in range(4):
                out[offset + r][offset + c] = out[offset + r][offset + c] + element[r][c]
    return out


def rail_mass_pattern(L):
    return _two_elements(beam_mass_pattern(L))


def rail_stiffness_pattern(L):
    return _two_elements(beam_stiffness_pattern(L))


def reduce_pattern(pattern):
    """Keep rows/columns [th1, u2, th2, th3] of a 6x6 pattern."""
    return [[pattern[r][c] for c in REDUCED_DOFS] for r in REDUCED_DOFS]


# --------------------------------------------------------------------------
# element and section matrices
# --------------------------------------------------------------------------

def rail_mass_matrix(props: TrackProperties) -> np.ndarray:
    return props.mass_scale * np.array(rail_mass_pattern(props.L), dtype=float)


def rail_stiffness_matrix(props: TrackProperties) -> np.ndarray:
    return props.stiffness_scale * np.array(rail_stiffness_pattern(props.L), dtype=float)


def reduced_rail_matrices(M: np.ndarray, K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop the railpad-supported translations u1, u3 from the rail matrices."""
    idx = np.ix_(REDUCED_DOFS, REDUCED_DOFS)
    return M[idx].copy(), K[idx].copy()


def rayleigh_coefficients(omega1: float, omega2: float, zeta1: float, zeta2: float) -> tuple[float, float]:
    """Mass and stiffness factors ``(a0, a1)`` of Rayleigh damping.

    Solves ``zeta_i = a0 / (2 omega_i) + a1 omega_i / 2`` for the two target
    circular frequencies.
    """
    if not (np.isfinite(omega1) and np.isfinite(omega2)) or omega1 <= 0 or omega2 <= 0:
        raise ConfigError(f"frequencies must be positive, got {omega1!r}, {omega2!r}")
    if omega1 == omega2:
        raise ConfigError("identical target frequencies make the Rayleigh system singular")
    factor = 2.0 * omega1 * omega2 / (omega2**2 - omega1**2)
    a0 = factor * (omega2 * zeta1 - omega1 * zeta2)
    a1 = factor * (-zeta1 / omega2 + zeta2 / omega1)
    return a0, a1


def rail_rayleigh_frequencies(props: TrackProperties) -> tuple[float, float]:
    """Two lowest circular frequencies of the rail with u1 and u3 held."""
    Mstar, Kstar = reduced_rail_matrices(rail_mass_matrix(props), rail_stiffness_matrix(props))
    omega_sq = modal_decompose(Mstar, Kstar).omega_sq
    return float(np.sqrt(omega_sq[0])), float(np.sqrt(omega_sq[1]))


def rail_damping_matrix(Mstar: np.ndarray, Kstar: np.ndarray, a0: float, a1: float) -> np.ndarray:
    """Rayleigh damping on [th1, u2, th2, th3], embedded in the 6-DOF rail basis."""
    C = np.zeros((6, 6))
    C[np.ix_(REDUCED_DOFS, REDUCED_DOFS)] = a0 * Mstar + a1 * Kstar
    return C


@dataclass(frozen=True)
class ElementMatrices:
    M: np.ndarray
    K: np.ndarray
    C: np.ndarray


def rail_matrices(props: TrackProperties) -> ElementMatrices:
    M = rail_mass_matrix(props)
    K = rail_stiffness_matrix(props)
    Mstar, Kstar = reduced_rail_matrices(M, K)
    if props.zeta1 == 0 and props.zeta2 == 0:
        a0 = a1 = 0.0
    else:
        w1, w2 = rail_rayleigh_frequencies(props)
        a0, a1 = rayleigh_coefficients(w1, w2, props.zeta1, props.zeta2)
        if a0 < 0 or a1 < 0:
            raise ConfigError(
                f"damping ratios give a0 = {a0:.4g}, a1 = {a1:.4g}; a negative factor makes the rail damping "
                "non-dissipative", "zeta2",
            )
    return ElementMatrices(M=M, K=K, C=rail_damping_matrix(Mstar, Kstar, a0, a1))


@dataclass(frozen=True)
class SectionMatrices:
    M: np.ndarray
    C: np.ndarray
    K: np.ndarray


def _add_link(A: np.ndarray, i: int, j: int, value: float) -> None:
    A[i, i] += value
    A[j, j] += value
    A[i, j] -= value
    A[j, i] -= value


def section_matrices(props: TrackProperties) -> SectionMatrices:
    """8x8 matrices of one elementary section (rail + railpads + sleepers + ballast)."""
    rail = rail_matrices(props)
    M = np.zeros((8, 8))
    C = np.zeros((8, 8))
    K = np.zeros((8, 8))
    M[:6, :6] = rail.M
    C[:6, :6] = rail.C
    K[:6, :6] = rail.K
    for rail_dof, sleeper_dof in ((0, 6), (4, 7)):
        M[sleeper_dof, sleeper_dof] += props.m_T
        _add_link(K, rail_dof, sleeper_dof, props.k_s)
        _add_link(C, rail_dof, sleeper_dof, props.c_s)
        K[sleeper_dof, sleeper_dof] += props.k_b
        C[sleeper_dof, sleeper_dof] += props.c_b
    return SectionMatrices(M=M, C=C, K=K)


# --------------------------------------------------------------------------
# global assembly
# --------------------------------------------------------------------------

class DofLabel(NamedTuple):
    """``kind`` is 'u' (rail translation), 'theta' (rail rotation) or 'uT' (sleeper)."""

    kind: str
    number: int

    def __str__(self):
        return f"{self.kind}{self.number}"


def build_dof_map(n_sections: int) -> np.ndarray:
    """(N, 8) array of 0-based global indices for each section's local DOFs."""
    if int(n_sections) != n_sections or n_sections < 1:
        raise ConfigError(f"must be a positive integer, got {n_sections!r}", "n_sections")
    dof_map = np.empty((n_sections, 8), dtype=int)
    dof_map[0] = np.arange(8)
    next_free = 8
    for j in range(1, n_sections):
        prev = dof_map[j - 1]
        dof_map[j, 0], dof_map[j, 1], dof_map[j, 6] = prev[4], prev[5], prev[7]
        for k in FRESH_LOCAL:
            dof_map[j, k] = next_free
            next_free += 1
    return dof_map


def dof_labels(dof_map: np.ndarray) -> list[DofLabel]:
    n_dof = int(dof_map.max()) + 1
    labels: list[DofLabel | None] = [None] * n_dof
    for j, row in enumerate(dof_map):
        for k, g in enumerate(row):
            if k < 6:
                kind = "u" if k % 2 == 0 else "theta"
                label = DofLabel(kind, 2 * j + k // 2 + 1)
            else:
                label = DofLabel("uT", j + 1 + (k - 6))
            labels[g] = label
    return labels


@dataclass(frozen=True)
class AssembledSystem:
    props: TrackProperties
    n_sections: int
    M: np.ndarray
    C: np.ndarray
    K: np.ndarray
    dof_map: np.ndarray
    labels: list = field(repr=False)

    @property
    def n_dof(self) -> int:
        return self.M.shape[0]

    @property
    def is_undamped(self) -> bool:
        return not np.any(self.C)

    def label(self, index: int) -> DofLabel:
        """Label of a 1-based global DOF index."""
        return self.labels[index - 1]

    def sleeper_dofs(self) -> np.ndarray:
        """0-based global index of each sleeper, numbered from the left end."""
        return np.concatenate(([self.dof_map[0, 6]], self.dof_map[:, 7]))

    def rail_dofs(self, kind: str = "u") -> np.ndarray:
        return np.array([i for i, lab in enumerate(self.labels) if lab.kind == kind])


def assemble_track(props: TrackProperties, n_sections: int, order: Sequence[int] | None = None) -> AssembledSystem:
    """Global M, C, K of an N-section track with free ends.

    ``order`` only changes the summation order of section contributions.
    """
    dof_map = build_dof_map(n_sections)
    n_dof = 5 * n_sections + 3
    section = section_matrices(props)
    M = np.zeros((n_dof, n_dof))
    C = np.zeros((n_dof, n_dof))
    K = np.zeros((n_dof, n_dof))
    for j in order if order is not None else range(n_sections):
        idx = np.ix_(dof_map[j], dof_map[j])
        M[idx] += section.M
        C[idx] += section.C
        K[idx] += section.K
    return AssembledSystem(props, n_sections, M, C, K, dof_map, dof_labels(dof_map))


# --------------------------------------------------------------------------
# element-length calibration
# --------------------------------------------------------------------------

def section_frequencies(props: TrackProperties) -> np.ndarray:
    """Natural frequencies (Hz, ascending) of one undamped elementary section."""
    section = section_matrices(props)
    omega_sq = modal_decompose(section.M, section.K).omega_sq
    return np.sqrt(omega_sq) / (2 * np.pi)


@dataclass(frozen=True)
class CalibrationResult:
    L: float
    frequencies_hz: np.ndarray
    mode: int
    target_hz: float
    sweep: list[tuple[float, float]]


def frequency_sweep(props: TrackProperties, bracket=(0.05, 1.2), step=0.05, mode=2) -> list[tuple[float, float]]:
    lo, hi = bracket
    count = int(round((hi - lo) / step))
    lengths = np.linspace(lo, hi, count + 1)
    return [(float(L), float(section_frequencies(props.with_length(L))[mode - 1])) for L in lengths]


def calibrate_element_length(
    props: TrackProperties,
    target_hz: float,
    tol: float = 1e-3,
    bracket: tuple[float, float] = (0.05, 1.2),
    mode: int = 2,
) -> CalibrationResult:
    """Bisect on ``L`` until the section's ``mode``-th frequency hits ``target_hz``.

    ``mode`` is 1-based. The default 2 targets the upper member of the
    in-phase rail/sleeper pair. ``props.L`` is ignored.
    """
    if not target_hz > 0:
        raise ConfigError(f"must be positive, got {target_hz!r}", "target_hz")
    if not 1 <= mode <= 8:
        raise ConfigError(f"must be in 1..8, got {mode!r}", "mode")

    def mismatch(L):
        return section_frequencies(props.with_length(L))[mode - 1] - target_hz

    sweep = frequency_sweep(props, bracket, mode=mode)
    for L, f in sweep:
        logger.info("calibration sweep L=%.3f m  f%d=%.4f Hz", L, mode, f)

    lo, hi = bracket
    g_lo, g_hi = mismatch(lo), mismatch(hi)
    if g_lo * g_hi > 0:
        raise CalibrationError(
            f"mode {mode} frequency does not cross {target_hz} Hz on L in [{lo}, {hi}] m "
            f"(f({lo}) = {g_lo + target_hz:.4f} Hz, f({hi}) = {g_hi + target_hz:.4f} Hz)",
            sweep,
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = mismatch(mid)
        if abs(g_mid) < tol or hi - lo < 1e-12:
            break
        if g_lo * g_mid <= 0:
            hi = mid
        else:
            lo, g_lo = mid, g_mid
    freqs = section_frequencies(props.with_length(mid))
    return CalibrationResult(L=mid, frequencies_hz=freqs, mode=mode, target_hz=target_hz, sweep=sweep)
