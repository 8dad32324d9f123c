import enum
import math
from dataclasses import dataclass, replace

from muondemur.spinsys.constants import (
    BOHR_MHZ_PER_T,
    GAMMA_MU_MHZ_PER_T,
    G_FREE_ELECTRON,
)
from muondemur.spinsys.operators import InvalidArgumentException


class Hyperfine(str, enum.Enum):
    ISOTROPIC = "isotropic"
    AXIAL = "axial"


@dataclass(frozen=True)
class SpinSystem:
    """
    Constants of one electron-muon pair.

    For the isotropic hyperfine interaction A_par holds A_iso and A_perp must be 0.
    For the axial one A_par is the secular and A_perp the pseudo-secular component.
    All hyperfine values are linear frequencies in MHz.
    """

    A_par: float
    A_perp: float = 0.0
    hyperfine: Hyperfine = Hyperfine.AXIAL
    g_e: float = G_FREE_ELECTRON
    gamma_mu: float = GAMMA_MU_MHZ_PER_T
    bohr_MHz_per_T: float = BOHR_MHZ_PER_T

    def __post_init__(self):
        object.__setattr__(self, "hyperfine", Hyperfine(self.hyperfine))

        for name in ("A_par", "A_perp", "g_e", "gamma_mu", "bohr_MHz_per_T"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgumentException(f"SpinSystem.{name} must be finite")
        if self.g_e <= 0:
            raise InvalidArgumentException("SpinSystem.g_e must be positive")
        if self.gamma_mu <= 0:
            raise InvalidArgumentException("SpinSystem.gamma_mu must be positive")
        if self.A_perp < 0:
            raise InvalidArgumentException("SpinSystem.A_perp must not be negative")
        if self.hyperfine is Hyperfine.ISOTROPIC and self.A_perp != 0:
            raise InvalidArgumentException(
                "An isotropic hyperfine interaction has no A_perp component"
            )

    @classmethod
    def isotropic(cls, A_iso: float, **kwargs) -> "SpinSystem":
        return cls(A_par=A_iso, A_perp=0.0, hyperfine=Hyperfine.ISOTROPIC, **kwargs)

    @classmethod
    def axial(cls, A_par: float, A_perp: float, **kwargs) -> "SpinSystem":
        return cls(A_par=A_par, A_perp=A_perp, hyperfine=Hyperfine.AXIAL, **kwargs)

    @property
    def is_isotropic(self) -> bool:
        return self.hyperfine is Hyperfine.ISOTROPIC

    @property
    def gamma_e_MHz_per_mT(self) -> float:
        return self.g_e * self.bohr_MHz_per_T / 1000.0

    @property
    def gamma_mu_MHz_per_mT(self) -> float:
        return self.gamma_mu / 1000.0

    def nu_S(self, B0: float) -> float:
        """:return: electron Zeeman frequency in MHz at B0 given in mT"""
        return self.gamma_e_MHz_per_mT * B0

    def nu_I(self, B0: float) -> float:
        """:return: magnitude of the muon Zeeman frequency in MHz at B0 given in mT"""
        return self.gamma_mu_MHz_per_mT * B0

    def drive_strength(self, B1: float) -> float:
        """
        :param B1: linearly polarized microwave amplitude in mT
        :return: electron drive strength nu_1 = gamma_e * B1 / 2 in MHz
        """
        return self.gamma_e_MHz_per_mT * B1 / 2.0

    def drive_field(self, nu1: float) -> float:
        """:return: B1 in mT for an electron drive strength nu_1 in MHz"""
        return 2.0 * nu1 / self.gamma_e_MHz_per_mT

    def with_g_e(self, g_e: float) -> "SpinSystem":
        return replace(self, g_e=g_e)

    def as_dict(self) -> dict:
        return {
            "hyperfine": self.hyperfine.value,
            "A_par_MHz": self.A_par,
            "A_perp_MHz": self.A_perp,
            "g_e": self.g_e,
            "gamma_mu_MHz_per_T": self.gamma_mu,
        }


def require_field(B0: float):
    if not math.isfinite(B0):
        raise InvalidArgumentException(f"Field must be finite, got {B0!r}")
    if B0 < 0:
        raise InvalidArgumentException(f"Field must not be negative, got {B0!r} mT")
