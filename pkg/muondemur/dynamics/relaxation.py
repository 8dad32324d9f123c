import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from muondemur.spinsys.levels import PAIRS, LevelDiagram
from muondemur.spinsys.operators import InvalidArgumentException


@dataclass(frozen=True)
class RelaxationModel:
    """
    Phenomenological damping in the static-Hamiltonian eigenbasis.

    rates holds ((i, j), rate) entries in 1/us for the coherence |i><j|, i < j.
    rate_T1 equilibrates the populations towards the maximally mixed state.
    """

    rates: Tuple[Tuple[Tuple[int, int], float], ...] = ()
    rate_T1: float = 0.0

    def __post_init__(self):
        normalized = {}
        for pair, rate in self.rates:
            i, j = sorted(int(label) for label in pair)
            if (i, j) not in PAIRS:
                raise InvalidArgumentException(
                    f"Relaxation pair {pair!r} is not one of {list(PAIRS)}"
                )
            if not math.isfinite(rate) or rate < 0:
                raise InvalidArgumentException(
                    f"Relaxation rate for {i}-{j} must be finite and >= 0, got {rate!r}"
                )
            normalized[(i, j)] = float(rate)
        if not math.isfinite(self.rate_T1) or self.rate_T1 < 0:
            raise InvalidArgumentException(
                f"rate_T1 must be finite and >= 0, got {self.rate_T1!r}"
            )
        object.__setattr__(self, "rates", tuple(sorted(normalized.items())))

    @classmethod
    def from_mapping(
        cls, rates: Optional[Mapping] = None, rate_T1: float = 0.0
    ) -> "RelaxationModel":
        """
        :param rates: keys are (i, j) tuples or strings like "12" or "1-2"
        """
        entries = []
        for key, rate in (rates or {}).items():
            entries.append((_parse_pair(key), float(rate)))
        return cls(rates=tuple(entries), rate_T1=float(rate_T1))

    @classmethod
    def transition_specific(
        cls, electron: float = 0.0, muon_12: float = 0.0, muon_34: float = 0.0
    ) -> "RelaxationModel":
        """Electron rate on the four electron-flip coherences, separate rates on 12 and 34."""
        return cls.from_mapping(
            {
                (1, 3): electron,
                (2, 4): electron,
                (1, 4): electron,
                (2, 3): electron,
                (1, 2): muon_12,
                (3, 4): muon_34,
            }
        )

    @property
    def rate_map(self) -> Dict[Tuple[int, int], float]:
        return dict(self.rates)

    def rate(self, i: int, j: int) -> float:
        return self.rate_map.get((min(i, j), max(i, j)), 0.0)

    @property
    def is_trivial(self) -> bool:
        return self.rate_T1 == 0 and all(rate == 0 for _, rate in self.rates)

    def as_dict(self) -> dict:
        return {
            "rates_per_us": {f"{i}{j}": rate for (i, j), rate in self.rates},
            "rate_T1_per_us": self.rate_T1,
        }


def apply_relaxation_basis(relax: RelaxationModel, diagram: LevelDiagram) -> np.ndarray:
    """
    :return: 16x16 damping superoperator acting on column-stacked density matrices
             in the product basis, time in us
    """
    in_eigenbasis = np.zeros((16, 16), dtype=complex)

    for (i, j), rate in relax.rates:
        # element (a, b) sits at index a + 4 b
        a, b = i - 1, j - 1
        in_eigenbasis[a + 4 * b, a + 4 * b] -= rate
        in_eigenbasis[b + 4 * a, b + 4 * a] -= rate

    if relax.rate_T1:
        populations = [5 * a for a in range(4)]
        for row in populations:
            for column in populations:
                in_eigenbasis[row, column] += relax.rate_T1 / 4.0
            in_eigenbasis[row, row] -= relax.rate_T1
        # coherences decay at least at half the population rate
        for a in range(4):
            for b in range(4):
                if a != b:
                    in_eigenbasis[a + 4 * b, a + 4 * b] -= relax.rate_T1 / 2.0

    vectors = diagram.eigenvectors
    change = np.kron(vectors.conj(), vectors)
    return change @ in_eigenbasis @ change.conj().T


def _parse_pair(key) -> Tuple[int, int]:
    if isinstance(key, (tuple, list)) and len(key) == 2:
        return int(key[0]), int(key[1])
    text = str(key).replace("-", "").replace(",", "").replace(" ", "")
    if len(text) != 2 or not text.isdigit():
        raise InvalidArgumentException(
            f"Cannot read relaxation pair {key!r}, use e.g. '12' or '1-2'"
        )
    return int(text[0]), int(text[1])
