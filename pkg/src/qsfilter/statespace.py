"""States, Pauli calculus and entropy for small (dim 2 and 4) systems.

States are plain numpy arrays: vectors of shape ``(dim,)``, operators and
density matrices of shape ``(dim, dim)``, polarization (Bloch) vectors of
shape ``(3,)``.  Validators raise ``ValueError`` on contract violations; all
functions return fresh arrays and never mutate their inputs.
"""

from __future__ import annotations

import math

import numpy as np

HERM_ATOL = 1e-12
UNITARY_ATOL = 1e-12
EIG_FLOOR = 1e-10
NORM_ATOL = 1e-9
BLOCH_ATOL = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
ID4 = np.eye(4, dtype=complex)


def pauli(l) -> np.ndarray:
    """Spin operator l_x*sigma_x + l_y*sigma_y + l_z*sigma_z."""
    l = np.asarray(l, dtype=float)
    if l.shape != (3,) or not np.all(np.isfinite(l)):
        raise ValueError("pauli expects a finite real 3-vector")
    return l[0] * SIGMA_X + l[1] * SIGMA_Y + l[2] * SIGMA_Z


def dag(a: np.ndarray) -> np.ndarray:
    return np.conjugate(a.T)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def expectation(a: np.ndarray, rho: np.ndarray) -> complex:
    """Tr(A rho)."""
    if a.shape != rho.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {rho.shape}")
    return complex(np.trace(a @ rho))


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, np.conjugate(psi))


def is_hermitian(a: np.ndarray, atol: float = HERM_ATOL) -> bool:
    return bool(np.max(np.abs(a - dag(a))) <= atol)


def is_unitary(a: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    return bool(np.max(np.abs(dag(a) @ a - np.eye(a.shape[0]))) <= atol)


def check_density_matrix(rho: np.ndarray, normalized: bool = True,
                         eig_floor: float = EIG_FLOOR) -> np.ndarray:
    """Validate Hermiticity, positivity and (optionally) unit trace."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not is_hermitian(rho):
        raise ValueError("density matrix is not Hermitian to 1e-12")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -eig_floor:
        raise ValueError(f"density matrix has eigenvalue {evals.min():.3e} < -{eig_floor:.0e}")
    tr = np.trace(rho).real
    if normalized and abs(tr - 1.0) > NORM_ATOL:
        raise ValueError(f"density matrix trace {tr} is not 1")
    if not normalized and tr <= 0:
        raise ValueError("unnormalized density matrix must have positive trace")
    return rho


def bloch_to_density(r) -> np.ndarray:
    """rho = (I + sigma(r)) / 2 for |r| <= 1."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError("Bloch vector must be a real 3-vector")
    if np.linalg.norm(r) > 1.0 + BLOCH_ATOL:
        raise ValueError(f"|r| = {np.linalg.norm(r)} exceeds the unit ball")
    return 0.5 * (ID2 + pauli(r))


def density_to_bloch(rho: np.ndarray) -> np.ndarray:
    """Components Tr(sigma_a rho); inverse of bloch_to_density on qubits."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("density_to_bloch expects a 2x2 matrix")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > NORM_ATOL:
        raise ValueError(f"expected unit trace, got {tr}")
    return np.array([np.trace(SIGMA_X @ rho).real,
                     np.trace(SIGMA_Y @ rho).real,
                     np.trace(SIGMA_Z @ rho).real])


def shannon_entropy(probs, base: float = 2.0) -> float:
    """Entropy of a probability vector; zero weights are skipped."""
    total = 0.0
    for p in probs:
        p = float(p)
        if p > 0.0:
            total -= p * math.log(p)
    return total / math.log(base)


def von_neumann_entropy(rho: np.ndarray, base: float = 2.0) -> float:
    """Spectral entropy of a normalized density matrix, in base-`base` units.

    Eigenvalues in [-EIG_FLOOR, 0) are clamped to zero; anything more
    negative is a positivity violation and raises.
    """
    rho = check_density_matrix(rho, normalized=True)
    evals = np.linalg.eigvalsh(rho)
    evals = np.where((evals < 0.0) & (evals >= -EIG_FLOOR), 0.0, evals)
    return shannon_entropy(evals, base=base)


def purity(rho: np.ndarray) -> float:
    return float(np.trace(rho @ rho).real)
