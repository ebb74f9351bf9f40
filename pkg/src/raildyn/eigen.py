"""Real modal and complex state-space eigendecompositions.

The state-space route works in the undamped modal coordinates ``Z``
(``U = Phi Z``), where the equations of motion read::

    Z'' + (Phi^T C Phi) Z' + diag(omega^2) Z = Phi^T F

With ``Y = [Z; Z']``, ``A = [[Phi^T C Phi, I], [I, 0]]`` and
``B = [[diag(omega^2), 0], [0, -I]]`` this becomes ``A Y' = -B Y + [Phi^T F; 0]``,
so the state matrix is ``D = -A^{-1} B``. The minus sign is what makes the
trajectories decay; without it every damped mode would grow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, DefectiveMatrixError, NumericalError

SYMMETRY_RTOL = 1e-10
CLAMP_RTOL = 1e-8
DEFECTIVE_RTOL = 1e-10
INVERSE_TOL = 1e-8


@dataclass(frozen=True)
class ModalBasis:
    omega_sq: np.ndarray
    Phi: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        return np.sqrt(self.omega_sq)

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.omega / (2 * np.pi)


@dataclass(frozen=True)
class StateBasis:
    lam: np.ndarray
    Psi: np.ndarray
    Psi_inv: np.ndarray
    force_map: np.ndarray
    Phi: np.ndarray

    @property
    def n_dof(self) -> int:
        return self.Phi.shape[0]


def _check_symmetric(name, A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"must be square, got shape {A.shape}", name)
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    if np.abs(A - A.T).max() > SYMMETRY_RTOL * scale:
        raise ConfigError("must be symmetric", name)
    return A


def modal_decompose(M, K) -> ModalBasis:
    """Mass-normalized solution of ``K phi = omega^2 M phi``, ascending."""
    M = _check_symmetric("M", M)
    K = _check_symmetric("K", K)
    if M.shape != K.shape:
        raise ConfigError(f"M {M.shape} and K {K.shape} differ in shape")
    try:
        omega_sq, Phi = scipy.linalg.eigh(K, M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"generalized eigenproblem failed ({exc}); cond(M) = {np.linalg.cond(M):.3e}"
        ) from exc
    floor = -CLAMP_RTOL * max(np.abs(omega_sq).max(), np.finfo(float).tiny)
    if omega_sq.min() < floor:
        raise NumericalError(f"K is indefinite: smallest eigenvalue {omega_sq.min():.3e}")
    omega_sq = np.clip(omega_sq, 0.0, None)
    return ModalBasis(omega_sq=omega_sq, Phi=Phi)


def build_state_matrix(Phi, C, omega_sq, load_pattern=None):
    """First-order system in modal coordinates.

    Returns ``(D, template)`` where ``template`` (2n x n_phys) sends a physical
    load vector ``F`` to the state forcing ``A^{-1} [Phi^T F; 0]``. When
    ``load_pattern`` is given the template is applied to it and a vector is
    returned instead.
    """
    Phi = np.asarray(Phi, dtype=float)
    n = Phi.shape[1]
    modal_damping = Phi.T @ np.asarray(C, dtype=float) @ Phi
    eye = np.eye(n)
    zero = np.zeros((n, n))
    A = np.block([[modal_damping, eye], [eye, zero]])
    B = np.block([[np.diag(omega_sq), zero], [zero, -eye]])
    try:
        A_inv_B = np.linalg.solve(A, B)
        template = np.linalg.solve(A, np.vstack([Phi.T, np.zeros((n, Phi.shape[0]))]))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"state coupling matrix is singular: {exc}") from exc
    D = -A_inv_B
    if load_pattern is not None:
        template = template @ np.asarray(load_pattern, dtype=float)
    return D, template


def _ordering(lam: np.ndarray) -> np.ndarray:
    # ascending |lambda|, conjugates with positive imaginary part first
    return np.lexsort((-np.sign(lam.imag), np.round(np.abs(lam), 12)))


def state_decompose(D, template, Phi=None) -> StateBasis:
    """Complex eigendecomposition ``D Psi = Psi diag(lam)`` and the modal force map."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ConfigError(f"must be square, got shape {D.shape}", "D")
    lam, Psi = np.linalg.eig(D)
    order = _ordering(lam)
    lam, Psi = lam[order], Psi[:, order]
    sv = np.linalg.svd(Psi, compute_uv=False)
    if sv[-1] < DEFECTIVE_RTOL * sv[0]:
        raise DefectiveMatrixError(
            f"state matrix is defective: smallest eigenvector singular value {sv[-1]:.3e}", sv[-1]
        )
    Psi_inv = np.linalg.inv(Psi)
    residual = np.abs(Psi @ Psi_inv - np.eye(len(lam))).max()
    if residual > INVERSE_TOL:
        raise NumericalError(f"eigenvector inverse inaccurate: |Psi Psi^-1 - I| = {residual:.3e}")
    if Phi is None:
        Phi = np.eye(D.shape[0] // 2)
    return StateBasis(lam=lam, Psi=Psi, Psi_inv=Psi_inv, force_map=Psi_inv @ template, Phi=np.asarray(Phi))


def state_basis(M, C, K) -> StateBasis:
    """Convenience: modal decomposition followed by the state decomposition."""
    modal = modal_decompose(M, K)
    D, template = build_state_matrix(modal.Phi, C, modal.omega_sq)
    return state_decompose(D, template, modal.Phi)
