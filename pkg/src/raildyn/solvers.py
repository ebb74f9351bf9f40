"""Transient response of the track to a single wheel pulse.

Three independent routes:

* ``modal_undamped``: Duhamel closed forms per undamped mode;
* ``state_space``: closed forms per complex mode of the first-order system,
  valid for non-proportional damping;
* ``newmark``: average-acceleration Newmark integration, used as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .eigen import ModalBasis, StateBasis, build_state_matrix, modal_decompose, state_decompose
from .errors import ConfigError, NumericalError
from .loading import PointLoad, PulseLoad, load_vector
from .track_model import AssembledSystem

RESONANCE_TOL = 1e-8
ZERO_FREQUENCY = 1e-6
IMAG_RTOL = 1e-8
METHODS = ("modal_undamped", "state_space", "newmark")
_METHOD_ALIASES = {"modal": "modal_undamped", "state": "state_space"}


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k dt`` with ``t_d`` landing exactly on a node."""

    dt: float
    n_steps: int
    t_d: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"must be positive, got {self.dt!r}", "dt")
        if self.n_steps < 1:
            raise ConfigError(f"must be at least 1, got {self.n_steps!r}", "n_steps")
        k = self.t_d / self.dt
        if abs(k - round(k)) > 1e-9 * max(k, 1.0):
            raise ConfigError(f"t_d = {self.t_d} is not a multiple of dt = {self.dt}", "dt")

    @classmethod
    def for_pulse(cls, t_d: float, dt: float | None = None, duration: float | None = None) -> "TimeGrid":
        """Default grid: ``dt = t_d / 100`` over ``10 t_d``; ``dt`` is snapped so ``t_d`` is a node."""
        if dt is None:
            dt = t_d / 100
        if duration is None:
            duration = 10 * t_d
        if not dt > 0 or not duration > 0:
            raise ConfigError("dt and duration must be positive")
        k = max(1, round(t_d / dt))
        dt = t_d / k
        n_steps = max(1, math.ceil(duration / dt - 1e-9))
        return cls(dt=dt, n_steps=n_steps, t_d=t_d)

    @property
    def times(self) -> np.ndarray:
        t = np.arange(self.n_steps + 1) * self.dt
        if self.pulse_index <= self.n_steps:
            t[self.pulse_index] = self.t_d
        return t

    @property
    def pulse_index(self) -> int:
        return int(round(self.t_d / self.dt))


@dataclass(frozen=True)
class ResponseHistory:
    grid: TimeGrid
    U: np.ndarray
    V: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


# --------------------------------------------------------------------------
# Duhamel closed forms for one undamped mode z'' + w_i^2 z = q P(t)
# --------------------------------------------------------------------------

def _free(z_d, v_d, w_i, s):
    if w_i < ZERO_FREQUENCY:
        return z_d + v_d * s, np.full_like(s, v_d)
    c, sn = np.cos(w_i * s), np.sin(w_i * s)
    return z_d * c + v_d / w_i * sn, -z_d * w_i * sn + v_d * c


def duhamel_half_sine(w_i: float, q: float, P0: float, w: float, t_d: float, t: np.ndarray):
    """Modal displacement and velocity under ``P0 sin(w t)`` on ``[0, t_d]``."""
    t = np.asarray(t, dtype=float)

    def forced(t):
        if w_i < ZERO_FREQUENCY:
            return q * P0 * (t / w - np.sin(w * t) / w**2), q * P0 * (1 - np.cos(w * t)) / w
        beta = w / w_i
        if abs(1 - beta**2) < RESONANCE_TOL:
            amp = q * P0 / (2 * w_i**2)
            return (amp * (np.sin(w_i * t) - w_i * t * np.cos(w_i * t)),
                    0.5 * q * P0 * t * np.sin(w_i * t))
        amp = q * P0 / w_i**2 / (1 - beta**2)
        return (amp * (np.sin(w * t) - beta * np.sin(w_i * t)),
                amp * (w * np.cos(w * t) - beta * w_i * np.cos(w_i * t)))

    z, v = forced(np.minimum(t, t_d))
    after = t > t_d
    if np.any(after):
        z_d, v_d = forced(np.float64(t_d))
        z[after], v[after] = _free(z_d, v_d, w_i, t[after] - t_d)
    return z, v


def duhamel_rectangular(w_i: float, q: float, P0: float, t_d: float, t: np.ndarray):
    """Modal displacement and velocity under a constant ``P0`` on ``[0, t_d]``."""
    t = np.asarray(t, dtype=float)
    if w_i < ZERO_FREQUENCY:
        tf = np.minimum(t, t_d)
        z, v = q * P0 * tf**2 / 2, q * P0 * tf
        after = t > t_d
        z[after], v[after] = _free(q * P0 * t_d**2 / 2, q * P0 * t_d, w_i, t[after] - t_d)
        return z, v
    amp = q * P0 / w_i**2
    z = amp * (1 - np.cos(w_i * t))
    v = amp * w_i * np.sin(w_i * t)
    after = t > t_d
    s = t[after] - t_d
    z[after] = amp * (np.cos(w_i * s) - np.cos(w_i * t[after]))
    v[after] = amp * w_i * (np.sin(w_i * t[after]) - np.sin(w_i * s))
    return z, v


def undamped_modal_response(basis: ModalBasis, load: PointLoad, grid: TimeGrid) -> ResponseHistory:
    pulse = load.pulse
    t = grid.times
    q = basis.Phi.T @ load.pattern
    Z = np.empty((len(t), len(q)))
    Zd = np.empty_like(Z)
    for i, (w_i, q_i) in enumerate(zip(basis.omega, q)):
        if pulse.kind == "rectangular":
            Z[:, i], Zd[:, i] = duhamel_rectangular(w_i, q_i, pulse.P0, pulse.t_d, t)
        else:
            Z[:, i], Zd[:, i] = duhamel_half_sine(w_i, q_i, pulse.P0, pulse.omega, pulse.t_d, t)
    return ResponseHistory(grid, Z @ basis.Phi.T, Zd @ basis.Phi.T, {"method": "modal_undamped"})


# --------------------------------------------------------------------------
# first-order closed forms for x' = a x + b P(t)
# --------------------------------------------------------------------------

def first_order_half_sine(a: np.ndarray, b: np.ndarray, P0: float, w: float, t: np.ndarray) -> np.ndarray:
    """Forced-phase solution (zero start) for every mode; shape ``(len(t), len(a))``."""
    a = np.asarray(a, dtype=complex)[None, :]
    b = np.asarray(b, dtype=complex)[None, :]
    t = np.asarray(t, dtype=float)[:, None]
    denom = a**2 + w**2
    resonant = np.abs(denom) < RESONANCE_TOL * w**2
    safe = np.where(resonant, 1.0, denom)
    x = (b * P0 * w / safe * np.exp(a * t)
         - a * b * P0 / safe * np.sin(w * t)
         - b * P0 * w / safe * np.cos(w * t))
    if np.any(resonant):
        # a = +-i w: the exponential and the forcing share a frequency
        sgn = np.sign(a.imag)
        lim = np.where(
            sgn > 0,
            np.exp(a * t) / 2j * (t - (1 - np.exp(-2j * w * t)) / (2j * w)),
            np.exp(a * t) / 2j * ((np.exp(2j * w * t) - 1) / (2j * w) - t),
        )
        x = np.where(resonant, b * P0 * lim, x)
    return x


def first_order_rectangular(a: np.ndarray, b: np.ndarray, P0: float, t: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)[None, :]
    b = np.asarray(b, dtype=complex)[None, :]
    t = np.asarray(t, dtype=float)[:, None]
    tiny = np.abs(a) < 1e-12
    safe = np.where(tiny, 1.0, a)
    return np.where(tiny, b * P0 * t, b * P0 / safe * np.expm1(a * t))


def damped_state_response(basis: StateBasis, load: PointLoad, grid: TimeGrid) -> ResponseHistory:
    pulse = load.pulse
    t = grid.times
    a = basis.lam
    b = basis.force_map @ load.pattern
    t_forced = np.minimum(t, pulse.t_d)
    if pulse.kind == "rectangular":
        X = first_order_rectangular(a, b, pulse.P0, t_forced)
    else:
        X = first_order_half_sine(a, b, pulse.P0, pulse.omega, t_forced)
    X = X * np.exp(np.multiply.outer(np.maximum(t - pulse.t_d, 0.0), a))

    n = basis.n_dof
    Y = X @ basis.Psi.T
    UV = np.hstack([Y[:, :n] @ basis.Phi.T, Y[:, n:] @ basis.Phi.T])
    scale = np.abs(UV).max()
    if scale > 0 and np.abs(UV.imag).max() > IMAG_RTOL * scale:
        raise NumericalError(
            f"reconstructed response keeps an imaginary part of {np.abs(UV.imag).max() / scale:.2e} (relative)"
        )
    UV = UV.real
    return ResponseHistory(grid, UV[:, :n].copy(), UV[:, n:].copy(), {"method": "state_space"})


# --------------------------------------------------------------------------
# Newmark oracle
# --------------------------------------------------------------------------

def newmark_integrate(
    M, C, K, load: PointLoad, grid: TimeGrid, beta: float = 0.25, gamma: float = 0.5,
    check_resolution: bool = True,
) -> ResponseHistory:
    """Implicit Newmark integration from rest.

    The acceleration is re-equilibrated at the start of the step that
    follows ``t_d`` so the force jump of a rectangular pulse is taken exactly.
    """
    M, C, K = (np.asarray(A, dtype=float) for A in (M, C, K))
    dt = grid.dt
    if check_resolution:
        omega_max = math.sqrt(scipy.linalg.eigh(K, M, eigvals_only=True)[-1])
        if omega_max > 0 and dt > 2 * math.pi / omega_max / 20:
            raise ConfigError(
                f"dt = {dt:.3e} s does not resolve the highest mode "
                f"(T_min / 20 = {2 * math.pi / omega_max / 20:.3e} s); pass check_resolution=False to override",
                "dt",
            )
    t = grid.times
    n = M.shape[0]
    a0 = 1 / (beta * dt**2)
    a1 = gamma / (beta * dt)
    a2 = 1 / (beta * dt)
    a3 = 1 / (2 * beta) - 1
    a4 = gamma / beta - 1
    a5 = dt / 2 * (gamma / beta - 2)
    try:
        K_eff = scipy.linalg.lu_factor(K + a0 * M + a1 * C)
        M_fac = scipy.linalg.cho_factor(M)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Newmark factorization failed: {exc}") from exc

    pattern = load.pattern
    pulse = load.pulse
    U = np.zeros((len(t), n))
    V = np.zeros((len(t), n))
    u = np.zeros(n)
    v = np.zeros(n)
    k_d = grid.pulse_index
    left = pulse.value(np.minimum(t, pulse.t_d))
    left[k_d + 1:] = 0.0
    right = left.copy()
    if k_d < len(t):
        right[k_d] = 0.0
    acc = scipy.linalg.cho_solve(M_fac, right[0] * pattern)
    for k in range(grid.n_steps):
        if right[k] != left[k]:
            acc = scipy.linalg.cho_solve(M_fac, right[k] * pattern - C @ v - K @ u)
        f_end = left[k + 1] * pattern
        rhs = f_end + M @ (a0 * u + a2 * v + a3 * acc) + C @ (a1 * u + a4 * v + a5 * acc)
        u_new = scipy.linalg.lu_solve(K_eff, rhs)
        acc_new = a0 * (u_new - u) - a2 * v - a3 * acc
        v = v + dt * ((1 - gamma) * acc + gamma * acc_new)
        u, acc = u_new, acc_new
        U[k + 1], V[k + 1] = u, v
    return ResponseHistory(grid, U, V, {"method": "newmark"})


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def method_name(method: str) -> str:
    method = _METHOD_ALIASES.get(method, method)
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from modal, state, newmark", "method")
    return method


def solve(
    system: AssembledSystem,
    pulse: PulseLoad,
    method: str = "state_space",
    grid: TimeGrid | None = None,
    load_dof: int | None = None,
    force_undamped: bool = False,
    check_resolution: bool = True,
) -> ResponseHistory:
    """Response of ``system`` to ``pulse`` applied at ``load_dof`` (1-based, default central)."""
    method = method_name(method)
    if grid is None:
        grid = TimeGrid.for_pulse(pulse.t_d)
    if not math.isclose(grid.t_d, pulse.t_d, rel_tol=1e-12):
        raise ConfigError(f"grid was built for t_d = {grid.t_d}, pulse has {pulse.t_d}", "grid")
    load = load_vector(system, pulse, load_dof)

    if method == "modal_undamped":
        if not system.is_undamped and not force_undamped:
            raise ConfigError(
                "modal superposition ignores damping; use the undamped track or force_undamped=True",
                "method",
            )
        history = undamped_modal_response(modal_decompose(system.M, system.K), load, grid)
    elif method == "state_space":
        modal = modal_decompose(system.M, system.K)
        D, template = build_state_matrix(modal.Phi, system.C, modal.omega_sq)
        history = damped_state_response(state_decompose(D, template, modal.Phi), load, grid)
    else:
        history = newmark_integrate(system.M, system.C, system.K, load, grid, check_resolution=check_resolution)

    history.meta.update(
        method=method,
        n_sections=system.n_sections,
        load_dof=load.dof,
        pulse={"kind": pulse.kind, "P0": pulse.P0, "t_d": pulse.t_d, "omega": pulse.omega},
        damped=not system.is_undamped,
    )
    return history


def relative_linf(a: np.ndarray, reference: np.ndarray) -> float:
    """``max|a - ref| / max|ref|`` over the whole array."""
    scale = np.abs(reference).max()
    diff = np.abs(np.asarray(a) - np.asarray(reference)).max()
    return float(diff / scale) if scale > 0 else float(diff)
