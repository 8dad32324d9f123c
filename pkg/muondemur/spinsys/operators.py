"""
Product operators of one electron spin and one muon spin, both spin 1/2.

Basis order is |m_S, m_I> = |++>, |+->, |-+>, |-->, i.e. kron(electron, muon).
All matrices are plain numpy arrays; ``OperatorMatrix`` is only a type alias.
"""
import numpy as np
from numpy.typing import NDArray

OperatorMatrix = NDArray[np.complex128]

_ID2 = np.eye(2, dtype=complex)
_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex) / 2

ID = np.eye(4, dtype=complex)

SX = np.kron(_SIGMA_X, _ID2)
SY = np.kron(_SIGMA_Y, _ID2)
SZ = np.kron(_SIGMA_Z, _ID2)

IX = np.kron(_ID2, _SIGMA_X)
IY = np.kron(_ID2, _SIGMA_Y)
IZ = np.kron(_ID2, _SIGMA_Z)

MUON_OPERATORS = {"x": IX, "y": IY, "z": IZ}


def ket(m_s: int, m_i: int) -> NDArray[np.complex128]:
    """
    :param m_s: +1 or -1 for m_S = +1/2 or -1/2
    :param m_i: +1 or -1 for m_I = +1/2 or -1/2
    :return: product basis column vector
    """
    index = (0 if m_s > 0 else 2) + (0 if m_i > 0 else 1)
    vector = np.zeros(4, dtype=complex)
    vector[index] = 1.0
    return vector


def is_hermitian(matrix: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(np.linalg.norm(matrix), 1.0)
    return np.linalg.norm(matrix - matrix.conj().T) <= rtol * scale


def check_hermitian(matrix: np.ndarray, rtol: float = 1e-12):
    matrix = np.asarray(matrix)
    if matrix.shape != (4, 4):
        raise InvalidArgumentException(
            f"Expected a 4x4 operator, got shape {matrix.shape}"
        )
    if not np.all(np.isfinite(matrix)):
        raise InvalidArgumentException("Operator contains non-finite entries")
    if not is_hermitian(matrix, rtol):
        raise ContractViolationException(
            f"Operator is not Hermitian within {rtol:g} relative"
        )


def check_density_matrix(rho: np.ndarray, atol: float = 1e-10):
    check_hermitian(rho, rtol=atol)
    trace = np.trace(rho).real
    if abs(trace - 1.0) > atol:
        raise ContractViolationException(f"Density matrix trace is {trace!r}, not 1")
    smallest = np.linalg.eigvalsh(rho).min()
    if smallest < -atol:
        raise ContractViolationException(
            f"Density matrix has a negative eigenvalue {smallest!r}"
        )


def expectation(rho: np.ndarray, operator: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ operator)))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


class InvalidArgumentException(ValueError):
    pass


class ContractViolationException(ValueError):
    pass
