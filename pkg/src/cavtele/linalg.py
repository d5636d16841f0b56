"""Dense joint-state layer for two atom-cavity systems.

Basis ordering is ``(j_A, n_A, j_B, n_B)`` with atomic levels ``j in {0, 1, 2}``
and photon numbers ``n in {0..n_max}``; the linear index is
``((j_A*(n_max+1) + n_A)*3 + j_B)*(n_max+1) + n_B``, i.e. a Kronecker product
atom_A x cavity_A x atom_B x cavity_B.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.linalg

N_LEVELS = 3
SIDES = ("A", "B")

# eigenvector conditioning above which expm_apply switches to scipy's Pade scheme
_COND_LIMIT = 1e8


def local_dim(n_max: int = 1) -> int:
    return N_LEVELS * (n_max + 1)


def joint_dim(n_max: int = 1) -> int:
    return local_dim(n_max) ** 2


def _check_n_max(n_max):
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")


def basis_index(j_A: int, n_A: int, j_B: int, n_B: int, n_max: int = 1) -> int:
    m = n_max + 1
    for j in (j_A, j_B):
        if j not in (0, 1, 2):
            raise ValueError(f"atomic level must be 0, 1 or 2, got {j!r}")
    for n in (n_A, n_B):
        if not 0 <= n <= n_max:
            raise ValueError(f"photon number {n!r} outside 0..{n_max}")
    return ((j_A * m + n_A) * N_LEVELS + j_B) * m + n_B


def basis_state(j_A: int, n_A: int, j_B: int, n_B: int, n_max: int = 1) -> np.ndarray:
    psi = np.zeros(joint_dim(n_max), dtype=complex)
    psi[basis_index(j_A, n_A, j_B, n_B, n_max)] = 1.0
    return psi


def local_index(j: int, n: int, n_max: int = 1) -> int:
    return j * (n_max + 1) + n


def local_state(j: int, n: int, n_max: int = 1) -> np.ndarray:
    psi = np.zeros(local_dim(n_max), dtype=complex)
    psi[local_index(j, n, n_max)] = 1.0
    return psi


def product_state(psi_A: np.ndarray, psi_B: np.ndarray) -> np.ndarray:
    return np.kron(psi_A, psi_B)


@lru_cache(maxsize=None)
def _atom_flip(i: int, j: int) -> np.ndarray:
    if i not in (0, 1, 2) or j not in (0, 1, 2):
        raise ValueError(f"atomic levels must be 0, 1 or 2, got ({i!r}, {j!r})")
    op = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    op[i, j] = 1.0
    return op


@lru_cache(maxsize=None)
def _mode_annihilation(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex)


def local_flip(i: int, j: int, n_max: int = 1) -> np.ndarray:
    """sigma_ij on a single atom-cavity system."""
    return np.kron(_atom_flip(i, j), np.eye(n_max + 1))


def local_annihilation(n_max: int = 1) -> np.ndarray:
    return np.kron(np.eye(N_LEVELS), _mode_annihilation(n_max))


def embed(op_local: np.ndarray, side: str, n_max: int = 1) -> np.ndarray:
    """Lift a single-system operator to the joint space on the given side."""
    eye = np.eye(local_dim(n_max))
    if side == "A":
        return np.kron(op_local, eye)
    if side == "B":
        return np.kron(eye, op_local)
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def build_flip(i: int, j: int, side: str, n_max: int = 1) -> np.ndarray:
    """Atomic flip operator |i><j| acting on one side's atom."""
    _check_n_max(n_max)
    return embed(local_flip(i, j, n_max), side, n_max)


def build_annihilation(side: str, n_max: int = 1) -> np.ndarray:
    """Cavity annihilation operator on one side, truncated at n_max photons."""
    _check_n_max(n_max)
    return embed(local_annihilation(n_max), side, n_max)


class Propagator:
    """Cached exponential exp(-i H t) of a fixed, possibly non-Hermitian, matrix.

    The matrix is diagonalized once; each ``apply`` costs one elementwise
    exponential and two matrix-vector products. Defective or badly
    conditioned matrices fall back to ``scipy.linalg.expm`` per call.
    """

    def __init__(self, H: np.ndarray):
        H = np.asarray(H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ValueError("Hamiltonian has non-finite entries")
        self.H = H
        self.dim = H.shape[0]
        evals, evecs = np.linalg.eig(H)
        cond = np.linalg.cond(evecs)
        self.diagonalized = bool(np.isfinite(cond) and cond < _COND_LIMIT)
        if self.diagonalized:
            self.eigvals = evals
            self.eigvecs = evecs
            self.inv_eigvecs = np.linalg.inv(evecs)
        else:
            self.eigvals = self.eigvecs = self.inv_eigvecs = None

    def coefficients(self, psi: np.ndarray) -> np.ndarray:
        return self.inv_eigvecs @ psi

    def from_coefficients(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        return self.eigvecs @ (np.exp(-1j * self.eigvals * t) * coeffs)

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        if t < 0:
            raise ValueError(f"evolution time must be non-negative, got {t!r}")
        psi = np.asarray(psi, dtype=complex)
        if t == 0:
            return psi.copy()
        if self.diagonalized:
            return self.from_coefficients(self.coefficients(psi), t)
        return scipy.linalg.expm(-1j * t * self.H) @ psi

    def matrix(self, t: float) -> np.ndarray:
        if self.diagonalized:
            return (self.eigvecs * np.exp(-1j * self.eigvals * t)) @ self.inv_eigvecs
        return scipy.linalg.expm(-1j * t * self.H)


def expm_apply(H: np.ndarray, t: float, psi: np.ndarray) -> np.ndarray:
    """Return exp(-i H t) psi for a small dense matrix H."""
    return Propagator(H).apply(t, psi)


def norm2(psi: np.ndarray) -> float:
    return float(np.vdot(psi, psi).real)


def reduced_atom_B(psi: np.ndarray, n_max: int = 1) -> np.ndarray:
    """3x3 reduced density matrix of Bob's atom for a joint state vector."""
    m = n_max + 1
    t = np.asarray(psi).reshape(N_LEVELS, m, N_LEVELS, m)
    return np.einsum("ajbn,ajcn->bc", t, t.conj())


def photon_count_above(psi: np.ndarray, total: int, n_max: int = 1) -> float:
    """Squared norm carried by basis states with n_A + n_B > total."""
    m = n_max + 1
    n = np.arange(m)
    mask = (n[None, :, None, None] + n[None, None, None, :]) > total
    mask = np.broadcast_to(mask, (N_LEVELS, m, N_LEVELS, m))
    t = np.abs(np.asarray(psi).reshape(N_LEVELS, m, N_LEVELS, m)) ** 2
    return float(t[mask].sum())
