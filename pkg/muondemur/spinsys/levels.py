import math
from dataclasses import dataclass
from itertools import combinations
from logging import debug
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from muondemur.spinsys.hamiltonian import build_static_hamiltonian
from muondemur.spinsys.operators import (
    IX,
    IZ,
    SX,
    SZ,
    InvalidArgumentException,
    OperatorMatrix,
    check_hermitian,
    ket,
)
from muondemur.spinsys.system import SpinSystem

LABELS = (1, 2, 3, 4)
PAIRS = tuple(combinations(LABELS, 2))

# tie-breaker inside degenerate eigenspaces; the S_z weight only matters when
# I_z alone leaves a degeneracy (e.g. a multiple of the identity)
_DEGENERACY_OPERATOR = IZ + SZ / 3.0

_MIN_TRACKING_OVERLAP = 0.5


@dataclass(frozen=True)
class LevelDiagram:
    field_mT: float
    energies: np.ndarray
    eigenvectors: np.ndarray
    labels: Tuple[int, ...] = LABELS

    def energy(self, label: int) -> float:
        return float(self.energies[label - 1])

    def vector(self, label: int) -> np.ndarray:
        return self.eigenvectors[:, label - 1]

    def reconstruct(self) -> OperatorMatrix:
        vectors = self.eigenvectors
        return vectors @ np.diag(self.energies) @ vectors.conj().T

    def to_eigenbasis(self, operator: np.ndarray) -> np.ndarray:
        return self.eigenvectors.conj().T @ operator @ self.eigenvectors

    def from_eigenbasis(self, operator: np.ndarray) -> np.ndarray:
        return self.eigenvectors @ operator @ self.eigenvectors.conj().T


class Transition(NamedTuple):
    i: int
    j: int
    nu_MHz: float
    gamma_MHz_per_mT: float


@dataclass(frozen=True)
class TransitionTable:
    field_mT: float
    transitions: Tuple[Transition, ...]

    def get(self, i: int, j: int) -> Transition:
        i, j = min(i, j), max(i, j)
        for transition in self.transitions:
            if transition.i == i and transition.j == j:
                return transition
        raise InvalidArgumentException(f"No transition between levels {i} and {j}")

    def nu(self, i: int, j: int) -> float:
        return self.get(i, j).nu_MHz

    def gamma(self, i: int, j: int) -> float:
        return self.get(i, j).gamma_MHz_per_mT

    def rabi_frequency(self, i: int, j: int, B1: float) -> float:
        """:return: on-resonance Rabi frequency gamma_ij * B1 / 2 for a linear amplitude B1"""
        return self.gamma(i, j) * B1 / 2.0

    def drive_field_for_rabi(self, i: int, j: int, nu_rabi: float) -> float:
        gamma = self.gamma(i, j)
        if gamma <= 0:
            raise InvalidArgumentException(
                f"Transition {i}-{j} is not driven by a transverse field at {self.field_mT} mT"
            )
        return 2.0 * nu_rabi / gamma


def reference_basis(sys: SpinSystem) -> np.ndarray:
    """
    :return: columns labelled 1..4. Isotropic: |++>, triplet T0, singlet S, |-->.
             Axial: the high-field product states |++>, |+->, |-+>, |-->.
    """
    if not sys.is_isotropic:
        return np.eye(4, dtype=complex)

    t0 = (ket(1, -1) + ket(-1, 1)) / math.sqrt(2)
    singlet = (ket(1, -1) - ket(-1, 1)) / math.sqrt(2)
    return np.column_stack([ket(1, 1), t0, singlet, ket(-1, -1)])


def diagonalize(
    H: OperatorMatrix,
    reference: Optional[np.ndarray] = None,
    previous: Optional[LevelDiagram] = None,
    field_mT: float = float("nan"),
    degeneracy_tol: float = 1e-9,
) -> LevelDiagram:
    """
    :param reference: columns that define labels 1..4 by maximal overlap
                      (product basis when omitted)
    :param previous: diagram of the previous sweep step; when given, labels follow
                     the eigenvectors continuously
    """
    check_hermitian(H)

    energies, vectors = scipy.linalg.eigh(H)
    vectors = _resolve_degeneracies(energies, vectors, degeneracy_tol)
    vectors = _fix_phases(vectors)

    if reference is None:
        reference = np.eye(4, dtype=complex)

    order = None
    if previous is not None:
        order, worst = _assign(previous.eigenvectors, vectors)
        if worst <= _MIN_TRACKING_OVERLAP:
            debug(
                f"Level tracking overlap {worst:.3f} at {field_mT} mT, falling back to reference labels"
            )
            order = None
    if order is None:
        order, _ = _assign(reference, vectors)

    return LevelDiagram(
        field_mT=field_mT,
        energies=energies[order],
        eigenvectors=vectors[:, order],
    )


def level_diagram(
    sys: SpinSystem, B0: float, previous: Optional[LevelDiagram] = None
) -> LevelDiagram:
    return diagonalize(
        build_static_hamiltonian(sys, B0),
        reference=reference_basis(sys),
        previous=previous,
        field_mT=B0,
    )


def moment_operator(sys: SpinSystem) -> OperatorMatrix:
    """:return: transverse magnetic coupling gamma_e S_x - gamma_mu I_x in MHz/mT"""
    return sys.gamma_e_MHz_per_mT * SX - sys.gamma_mu_MHz_per_mT * IX


def transition_table(
    sys: SpinSystem, B0: float, diagram: Optional[LevelDiagram] = None
) -> TransitionTable:
    if diagram is None:
        diagram = level_diagram(sys, B0)

    moments = diagram.to_eigenbasis(moment_operator(sys))
    transitions = []
    for i, j in PAIRS:
        transitions.append(
            Transition(
                i=i,
                j=j,
                nu_MHz=abs(diagram.energy(i) - diagram.energy(j)),
                gamma_MHz_per_mT=2.0 * abs(moments[i - 1, j - 1]),
            )
        )
    return TransitionTable(field_mT=B0, transitions=tuple(transitions))


def breit_rabi_sweep(
    sys: SpinSystem, B0_list: Sequence[float]
) -> List[Tuple[LevelDiagram, TransitionTable]]:
    if len(B0_list) == 0:
        raise InvalidArgumentException("Field list of a sweep must not be empty")

    results = []
    previous = None
    for B0 in B0_list:
        diagram = level_diagram(sys, float(B0), previous=previous)
        results.append((diagram, transition_table(sys, float(B0), diagram)))
        previous = diagram
    return results


def muon_sector_frequencies(sys: SpinSystem, B0: float) -> Tuple[float, float]:
    """
    Closed form for the axial system.

    :return: (nu_12, nu_34) magnitudes in MHz
    """
    nu_i = sys.nu_I(B0)
    half_perp = sys.A_perp / 2.0
    nu12 = math.hypot(nu_i - sys.A_par / 2.0, half_perp)
    nu34 = math.hypot(nu_i + sys.A_par / 2.0, half_perp)
    return nu12, nu34


def secular_energies(sys: SpinSystem, B0: float) -> np.ndarray:
    """:return: product-basis energies of the axial system with A_perp = 0"""
    energies = []
    for m_s in (0.5, -0.5):
        for m_i in (0.5, -0.5):
            energies.append(
                sys.nu_S(B0) * m_s - sys.nu_I(B0) * m_i + sys.A_par * m_s * m_i
            )
    return np.array(energies)


def _resolve_degeneracies(
    energies: np.ndarray, vectors: np.ndarray, tol: float
) -> np.ndarray:
    vectors = vectors.copy()
    scale = max(1.0, float(np.max(np.abs(energies))))

    start = 0
    while start < len(energies):
        stop = start + 1
        while stop < len(energies) and energies[stop] - energies[start] <= tol * scale:
            stop += 1
        if stop - start > 1:
            block = vectors[:, start:stop]
            projected = block.conj().T @ _DEGENERACY_OPERATOR @ block
            _, rotation = scipy.linalg.eigh(projected)
            vectors[:, start:stop] = block @ rotation
        start = stop

    return vectors


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    vectors = vectors.copy()
    for column in range(vectors.shape[1]):
        pivot = vectors[np.argmax(np.abs(vectors[:, column])), column]
        vectors[:, column] *= np.conj(pivot) / abs(pivot)
    return vectors


def _assign(targets: np.ndarray, vectors: np.ndarray) -> Tuple[np.ndarray, float]:
    overlaps = np.abs(targets.conj().T @ vectors) ** 2
    rows, columns = linear_sum_assignment(overlaps, maximize=True)
    order = columns[np.argsort(rows)]
    worst = float(np.min(overlaps[np.arange(4), order]))
    return order, worst
