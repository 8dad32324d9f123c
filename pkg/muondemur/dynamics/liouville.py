"""
Constant generators of the density-matrix evolution.

Time is in us and Hamiltonians in MHz, so every exponent carries 2π. Density matrices
are vectorized column-wise: element (a, b) of a 4x4 matrix sits at index a + 4 b.
"""
from functools import lru_cache
from logging import debug
from typing import Optional

import numpy as np
import scipy.linalg

from muondemur.dynamics.relaxation import RelaxationModel, apply_relaxation_basis
from muondemur.spinsys.hamiltonian import rotating_frame_hamiltonian
from muondemur.spinsys.levels import level_diagram
from muondemur.spinsys.operators import ID, OperatorMatrix
from muondemur.spinsys.system import SpinSystem

TWO_PI = 2.0 * np.pi

# eigenvector matrices worse than this are not trusted for exp(L t)
MAX_EIGENVECTOR_CONDITION = 1e8


def vec(matrix: np.ndarray) -> np.ndarray:
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector: np.ndarray) -> np.ndarray:
    """Accepts (16,) or (n, 16) and returns (4, 4) or (n, 4, 4)."""
    vector = np.asarray(vector)
    if vector.ndim == 1:
        return vector.reshape(4, 4, order="F")
    return vector.reshape(-1, 4, 4).transpose(0, 2, 1)


def hamiltonian_superoperator(hamiltonian: OperatorMatrix) -> np.ndarray:
    """:return: -i 2π (1 ⊗ H - Hᵀ ⊗ 1), the commutator part of the Liouvillian"""
    return -1j * TWO_PI * (np.kron(ID, hamiltonian) - np.kron(hamiltonian.T, ID))


class Generator:
    """
    exp of one constant generator, applied to a density matrix at many delays.

    Without damping the 4x4 Hamiltonian is diagonalized and evolution is unitary.
    With damping the 16x16 Liouvillian is diagonalized, falling back to matrix
    exponentials when its eigenvectors are ill-conditioned.
    """

    def __init__(self, hamiltonian: OperatorMatrix, damping: Optional[np.ndarray] = None):
        self.hamiltonian = np.asarray(hamiltonian, dtype=complex)
        self.damping = damping
        self.is_unitary = damping is None or not np.any(damping)

        if self.is_unitary:
            self.energies, self.vectors = scipy.linalg.eigh(self.hamiltonian)
            return

        self.liouvillian = hamiltonian_superoperator(self.hamiltonian) + damping
        eigenvalues, eigenvectors = scipy.linalg.eig(self.liouvillian)
        condition = np.linalg.cond(eigenvectors)
        if condition > MAX_EIGENVECTOR_CONDITION:
            debug(f"Liouvillian eigenvectors have condition {condition:.3g}, using expm")
            self.eigenvalues = None
            self.eigenvectors = None
        else:
            self.eigenvalues = eigenvalues
            self.eigenvectors = eigenvectors

    def evolve(self, rho: np.ndarray, taus_us) -> np.ndarray:
        """:return: states after each delay in taus_us, shape (n, 4, 4)"""
        taus = np.atleast_1d(np.asarray(taus_us, dtype=float))

        if self.is_unitary:
            phases = np.exp(-1j * TWO_PI * np.outer(taus, self.energies))
            in_eigenbasis = self.vectors.conj().T @ rho @ self.vectors
            evolved = in_eigenbasis[None, :, :] * (
                phases[:, :, None] * phases[:, None, :].conj()
            )
            return self.vectors[None, :, :] @ evolved @ self.vectors.conj().T[None, :, :]

        if self.eigenvalues is not None:
            coefficients = np.linalg.solve(self.eigenvectors, vec(rho))
            weights = np.exp(np.outer(taus, self.eigenvalues)) * coefficients[None, :]
            return unvec(weights @ self.eigenvectors.T)

        propagators = scipy.linalg.expm(taus[:, None, None] * self.liouvillian[None, :, :])
        return unvec(propagators @ vec(rho))

    def step(self, rho: np.ndarray, tau_us: float) -> np.ndarray:
        return self.evolve(rho, [tau_us])[0]


@lru_cache(maxsize=4096)
def rotating_generator(
    sys: SpinSystem,
    B0: float,
    nu_uw: float,
    nu1: float,
    phase: float,
    sense: int,
    offset: float,
    relax: Optional[RelaxationModel],
) -> Generator:
    """
    Cached per process. Sweeps that revisit the same drive parameters reuse the
    diagonalization; parallel workers each hold their own cache.
    """
    hamiltonian = rotating_frame_hamiltonian(
        sys, B0, nu_uw, nu1=nu1, phase=phase, sense=sense, offset=offset
    )
    return Generator(hamiltonian, damping_superoperator(sys, B0, relax))


@lru_cache(maxsize=512)
def damping_superoperator(
    sys: SpinSystem, B0: float, relax: Optional[RelaxationModel]
) -> Optional[np.ndarray]:
    if relax is None or relax.is_trivial:
        return None
    return apply_relaxation_basis(relax, level_diagram(sys, B0))
