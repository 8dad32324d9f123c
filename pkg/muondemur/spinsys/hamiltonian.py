import math

import numpy as np

from muondemur.spinsys.operators import (
    IX,
    IY,
    IZ,
    SX,
    SY,
    SZ,
    InvalidArgumentException,
    OperatorMatrix,
)
from muondemur.spinsys.system import SpinSystem, require_field


def build_static_hamiltonian(sys: SpinSystem, B0: float) -> OperatorMatrix:
    """
    :return: H0/h in MHz. The electron Zeeman term enters as +nu_S S_z,
             the muon one as -nu_I I_z.
    """
    require_field(B0)

    hamiltonian = sys.nu_S(B0) * SZ - sys.nu_I(B0) * IZ
    if sys.is_isotropic:
        hamiltonian = hamiltonian + sys.A_par * (SX @ IX + SY @ IY + SZ @ IZ)
    else:
        hamiltonian = hamiltonian + sys.A_par * (SZ @ IZ) + sys.A_perp * (SZ @ IX)
    return hamiltonian


def frame_generator(sys: SpinSystem) -> OperatorMatrix:
    """
    :return: the operator F of the rotating frame exp(i 2π nu_uw t F). It commutes with
             the static Hamiltonian: S_z for the axial hyperfine, S_z + I_z for the
             isotropic one.
    """
    if sys.is_isotropic:
        return SZ + IZ
    return SZ


def drive_operator(phase: float, sense: int = 1) -> OperatorMatrix:
    """:return: cos(phase) S_x + sense * sin(phase) S_y"""
    return math.cos(phase) * SX + sense * math.sin(phase) * SY


def muon_drive_ratio(sys: SpinSystem) -> float:
    """:return: gamma_mu / gamma_e, the muon share of the B1 coupling"""
    return sys.gamma_mu_MHz_per_mT / sys.gamma_e_MHz_per_mT


def rotating_frame_hamiltonian(
    sys: SpinSystem,
    B0: float,
    nu_uw: float,
    nu1: float = 0.0,
    phase: float = 0.0,
    sense: int = 1,
    offset: float = 0.0,
) -> OperatorMatrix:
    """
    Rotating-wave Hamiltonian in MHz.

    :param nu1: electron drive strength gamma_e * B1 / 2. For the isotropic hyperfine
                the frame also co-rotates the muon, so its -gamma_mu B1 coupling is kept.
    :param sense: +1 when the frame follows the co-rotating drive component,
                  -1 for the counter-rotating one
    :param offset: extra electron resonance offset, added as offset * S_z
    """
    if sense not in (1, -1):
        raise InvalidArgumentException(f"sense must be +1 or -1, got {sense!r}")
    if not math.isfinite(nu_uw) or not math.isfinite(nu1):
        raise InvalidArgumentException("Drive parameters must be finite")

    hamiltonian = build_static_hamiltonian(sys, B0)
    hamiltonian = hamiltonian - sense * nu_uw * frame_generator(sys)
    if offset:
        hamiltonian = hamiltonian + offset * SZ
    if nu1:
        hamiltonian = hamiltonian + nu1 * drive_operator(phase, sense)
        if sys.is_isotropic:
            muon = math.cos(phase) * IX + sense * math.sin(phase) * IY
            hamiltonian = hamiltonian - nu1 * muon_drive_ratio(sys) * muon
    return hamiltonian


def lab_frame_hamiltonians(
    sys: SpinSystem,
    B0: float,
    nu_uw: float,
    nu1: float,
    phase: float,
    times_us: np.ndarray,
    offset: float = 0.0,
) -> np.ndarray:
    """
    :return: stack of H(t) = H0 + 2 nu_1 cos(2π nu_uw t + phase) (S_x - r I_x), shape (n, 4, 4),
             with r = gamma_mu / gamma_e.
             nu_uw, nu1 and phase may also be arrays matching times_us.
    """
    static = build_static_hamiltonian(sys, B0)
    if offset:
        static = static + offset * SZ
    amplitude = 2.0 * nu1 * np.cos(2.0 * np.pi * nu_uw * times_us + phase)
    coupling = SX - muon_drive_ratio(sys) * IX
    return static[None, :, :] + amplitude[:, None, None] * coupling[None, :, :]
