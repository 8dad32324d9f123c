"""
Tilted interaction frames of a driven electron-muon pair with axial hyperfine coupling.

Three successive frame changes diagonalize the rotating-frame Hamiltonian: U1 removes
the pseudo-secular hyperfine term, U2 the single-quantum drive and U3, after truncation
to one multi-quantum coherence, the remaining zero- or double-quantum drive. All
frequencies are linear, in MHz, and the electron drive strength nu1 is the coefficient
of S_x in the rotating frame.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from muondemur.dynamics.liouville import Generator
from muondemur.dynamics.pulses import Geometry
from muondemur.dynamics.propagate import initial_state
from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.spinsys.hamiltonian import rotating_frame_hamiltonian
from muondemur.spinsys.operators import IX, IY, IZ, SY, SZ, InvalidArgumentException
from muondemur.spinsys.system import SpinSystem, require_field

DEFAULT_EXCLUSION_MT = 0.05

# truncation is trusted while nu1 sin(eta) stays below this fraction of |omega_+|
TRUNCATION_LIMIT = 0.1

# product-basis index pairs of the kept coherence in the doubly-tilted frame
_BRANCH_ELEMENTS = {"zq": (1, 2), "dq": (0, 3)}


@dataclass(frozen=True)
class TiltedFrameAngles:
    xi: float
    eta: float
    theta13: float
    theta24: float
    theta: float
    chi_zq: float
    chi_dq: float
    on_resonance: Tuple[str, ...] = ()


@dataclass(frozen=True)
class TiltedFrequencies:
    """Intermediate frequencies of the tilted frames, all in MHz."""

    Omega_S: float
    omega12: float
    omega34: float
    omega_plus: float
    omega_minus: float
    Omega_dt: float
    omega_minus_dt: float
    zq_drive: float
    delta_13: float
    delta_24: float
    delta_zq: float
    delta_dq: float


@dataclass(frozen=True)
class DemurPoint:
    B0: float
    nu12_tr: float
    nu34_tr: float
    beyond_zq: bool
    beyond_dq: bool
    substituted: bool
    near_discontinuity: bool
    truncation_valid: bool

    def as_row(self) -> dict:
        flags = []
        if self.near_discontinuity:
            flags.append("discontinuity")
        if self.substituted:
            flags.append("substituted")
        if not self.truncation_valid:
            flags.append("truncation")
        return {
            "B0_mT": self.B0,
            "nu12_MHz": self.nu12_tr,
            "nu34_MHz": self.nu34_tr,
            "flags": "|".join(flags),
        }


@dataclass(frozen=True)
class TFTrace:
    trace: AsymmetryTrace
    truncation_valid: bool


def tilted_frame(
    sys: SpinSystem, B0: float, nu_uw: float, nu1: float, offset: float = 0.0
) -> Tuple[TiltedFrameAngles, TiltedFrequencies]:
    _require_axial(sys)
    require_field(B0)
    if not math.isfinite(nu1) or nu1 < 0:
        raise InvalidArgumentException(f"nu1 must be finite and >= 0, got {nu1!r}")

    resonant = []
    a_plus = -sys.nu_I(B0) + sys.A_par / 2.0
    a_minus = -sys.nu_I(B0) - sys.A_par / 2.0
    b = sys.A_perp / 2.0

    phi_plus = _arctan_ratio(-b, a_plus, "muon+", resonant)
    phi_minus = _arctan_ratio(b, a_minus, "muon-", resonant)
    xi = (phi_plus + phi_minus) / 2.0
    eta = (phi_plus - phi_minus) / 2.0

    omega12 = a_plus * math.cos(phi_plus) - b * math.sin(phi_plus)
    omega34 = a_minus * math.cos(phi_minus) + b * math.sin(phi_minus)
    omega_plus = omega12 + omega34
    omega_minus = omega12 - omega34

    Omega_S = sys.nu_S(B0) - nu_uw + offset
    single_quantum = nu1 * math.cos(eta)
    delta_13 = Omega_S + omega_minus / 2.0
    delta_24 = Omega_S - omega_minus / 2.0
    theta13 = _arctan_ratio(-single_quantum, delta_13, "13", resonant)
    theta24 = _arctan_ratio(-single_quantum, delta_24, "24", resonant)
    theta = (theta13 - theta24) / 2.0

    omega13_dt = delta_13 * math.cos(theta13) - single_quantum * math.sin(theta13)
    omega24_dt = delta_24 * math.cos(theta24) - single_quantum * math.sin(theta24)
    Omega_dt = (omega13_dt + omega24_dt) / 2.0
    omega_minus_dt = omega13_dt - omega24_dt

    zq_drive = nu1 * math.sin(eta) * math.cos(theta)
    delta_zq = Omega_dt - omega_plus / 2.0
    delta_dq = -Omega_dt - omega_plus / 2.0
    chi_zq = _arctan_ratio(zq_drive, delta_zq, "zq", resonant)
    chi_dq = _arctan_ratio(zq_drive, delta_dq, "dq", resonant)

    angles = TiltedFrameAngles(
        xi=xi,
        eta=eta,
        theta13=theta13,
        theta24=theta24,
        theta=theta,
        chi_zq=chi_zq,
        chi_dq=chi_dq,
        on_resonance=tuple(resonant),
    )
    frequencies = TiltedFrequencies(
        Omega_S=Omega_S,
        omega12=omega12,
        omega34=omega34,
        omega_plus=omega_plus,
        omega_minus=omega_minus,
        Omega_dt=Omega_dt,
        omega_minus_dt=omega_minus_dt,
        zq_drive=zq_drive,
        delta_13=delta_13,
        delta_24=delta_24,
        delta_zq=delta_zq,
        delta_dq=delta_dq,
    )
    return angles, frequencies


def tilted_angles(
    sys: SpinSystem, B0: float, nu_uw: float, nu1: float, offset: float = 0.0
) -> TiltedFrameAngles:
    return tilted_frame(sys, B0, nu_uw, nu1, offset)[0]


def first_frame(angles: TiltedFrameAngles) -> np.ndarray:
    return scipy.linalg.expm(-1j * (angles.xi * IY + angles.eta * 2.0 * SZ @ IY))


def second_frame(angles: TiltedFrameAngles) -> np.ndarray:
    generator = (angles.theta13 + angles.theta24) / 2.0 * SY + (
        angles.theta13 - angles.theta24
    ) * SY @ IZ
    return scipy.linalg.expm(-1j * generator)


def first_frame_residual(sys: SpinSystem, B0: float, nu_uw: float) -> float:
    """:return: off-diagonal norm of U1 H0 U1† relative to the norm of H0"""
    hamiltonian = rotating_frame_hamiltonian(sys, B0, nu_uw)
    frame = first_frame(tilted_angles(sys, B0, nu_uw, 0.0))
    tilted = frame @ hamiltonian @ frame.conj().T
    off_diagonal = tilted - np.diag(np.diag(tilted))
    return float(np.linalg.norm(off_diagonal) / max(np.linalg.norm(hamiltonian), 1e-300))


def triple_frame_frequencies(
    angles: TiltedFrameAngles, frequencies: TiltedFrequencies, sign: int
) -> Tuple[float, float]:
    """
    :param sign: +1 for the zero-quantum, -1 for the double-quantum branch
    :return: (Omega_S_tr, omega_I_tr)
    """
    chi = angles.chi_zq if sign > 0 else angles.chi_dq
    cos_half = math.cos(chi / 2.0) ** 2
    sin_half = math.sin(chi / 2.0) ** 2
    mixing = frequencies.zq_drive / 2.0 * math.sin(chi)
    half_plus = frequencies.omega_plus / 2.0
    Omega_tr = sign * frequencies.Omega_dt * cos_half + half_plus * sin_half + mixing
    omega_I_tr = sign * frequencies.Omega_dt * sin_half + half_plus * cos_half - mixing
    return Omega_tr, omega_I_tr


def demur_eigenfrequencies(
    sys: SpinSystem,
    B0: float,
    nu_uw: float,
    nu1: float,
    exclusion_mT: float = DEFAULT_EXCLUSION_MT,
    follow_crossings: bool = True,
    offset: float = 0.0,
) -> DemurPoint:
    """
    Driven muon frequencies nu12 and nu34 (magnitudes, MHz) from the triply-tilted frame.

    :param follow_crossings: beyond the zero- or double-quantum resonance, as seen from
                             the low-field side, replace the muon term of that branch by
                             its electron term, following the level through the crossing.
                             Without drive the branches do not mix and nothing is replaced.
    """
    angles, frequencies = tilted_frame(sys, B0, nu_uw, nu1, offset)

    Omega_zq, omega_I_zq = triple_frame_frequencies(angles, frequencies, +1)
    Omega_dq, omega_I_dq = triple_frame_frequencies(angles, frequencies, -1)

    beyond_zq = frequencies.delta_zq > 0
    beyond_dq = frequencies.delta_dq < 0
    substituted = False
    if follow_crossings and frequencies.zq_drive != 0:
        if beyond_zq:
            omega_I_zq, substituted = Omega_zq, True
        if beyond_dq:
            omega_I_dq, substituted = Omega_dq, True

    muon = omega_I_zq + omega_I_dq - frequencies.omega_plus / 2.0
    nu12 = muon + frequencies.omega_minus_dt / 2.0
    nu34 = muon - frequencies.omega_minus_dt / 2.0

    return DemurPoint(
        B0=float(B0),
        nu12_tr=abs(nu12),
        nu34_tr=abs(nu34),
        beyond_zq=bool(beyond_zq),
        beyond_dq=bool(beyond_dq),
        substituted=substituted,
        near_discontinuity=_near_discontinuity(sys, B0, nu_uw, nu1, offset, exclusion_mT)
        or bool(angles.on_resonance),
        truncation_valid=truncation_valid(angles, frequencies, nu1),
    )


def demur_sweep(
    sys: SpinSystem,
    B0_list: Sequence[float],
    nu_uw: float,
    nu1: float,
    exclusion_mT: float = DEFAULT_EXCLUSION_MT,
    follow_crossings: bool = True,
) -> List[DemurPoint]:
    if len(B0_list) == 0:
        raise InvalidArgumentException("Field list of a sweep must not be empty")
    return [
        demur_eigenfrequencies(sys, float(B0), nu_uw, nu1, exclusion_mT, follow_crossings)
        for B0 in B0_list
    ]


def crossing_fields(
    sys: SpinSystem,
    nu_uw: float,
    nu1: float,
    B_min: float,
    B_max: float,
    n_grid: int = 2001,
    offset: float = 0.0,
) -> Dict[str, List[float]]:
    """
    :return: fields in mT where the single-quantum (13, 24) or the multi-quantum
             (zq, dq) denominators vanish; the multi-quantum ones are where chi = ±π/2
    """
    grid = np.linspace(B_min, B_max, n_grid)
    crossings = {}
    for name in ("13", "24", "zq", "dq"):

        def denominator(B0, name=name):
            return _denominators(tilted_frame(sys, B0, nu_uw, nu1, offset)[1])[name]

        values = np.array([denominator(B0) for B0 in grid])
        scale = max(float(np.max(np.abs(values))), 1.0)
        roots = []
        for left, right, value_left, value_right in zip(grid, grid[1:], values, values[1:]):
            if value_left == 0:
                roots.append(float(left))
            elif value_left * value_right < 0:
                root = brentq(denominator, left, right, xtol=1e-10)
                # sign flips at discontinuities of the doubly-tilted offset are not zeros
                if abs(denominator(root)) < 1e-6 * scale:
                    roots.append(float(root))
        crossings[name] = roots
    return crossings


def truncation_valid(angles: TiltedFrameAngles, frequencies: TiltedFrequencies, nu1: float) -> bool:
    return nu1 * abs(math.sin(angles.eta)) <= TRUNCATION_LIMIT * abs(frequencies.omega_plus)


def analytic_tf_trace(
    sys: SpinSystem,
    B0: float,
    nu_uw: float,
    nu1: float,
    t_grid,
    branch: str = "zq",
    offset: float = 0.0,
) -> TFTrace:
    """
    TF muon polarization 2<I_x>(t) under a constant drive, evolved with the truncated
    doubly-tilted Hamiltonian that keeps only the coherence of one branch.

    :param t_grid: times in ns
    :param branch: "zq" or "dq"
    """
    if branch not in _BRANCH_ELEMENTS:
        raise InvalidArgumentException(f"Unknown branch {branch!r}, expected zq or dq")

    angles, frequencies = tilted_frame(sys, B0, nu_uw, nu1, offset)
    frame = second_frame(angles) @ first_frame(angles)
    hamiltonian = rotating_frame_hamiltonian(sys, B0, nu_uw, nu1=nu1, offset=offset)
    tilted = frame @ hamiltonian @ frame.conj().T

    truncated = np.diag(np.diag(tilted))
    row, column = _BRANCH_ELEMENTS[branch]
    truncated[row, column] = tilted[row, column]
    truncated[column, row] = tilted[column, row]

    times = np.asarray(t_grid, dtype=float)
    rho0 = frame @ initial_state(Geometry.TF) @ frame.conj().T
    observable = frame @ (2.0 * IX) @ frame.conj().T
    states = Generator(truncated).evolve(rho0, times / 1000.0)
    values = np.einsum("nab,ba->n", states, observable).real

    return TFTrace(
        trace=AsymmetryTrace(times, values),
        truncation_valid=truncation_valid(angles, frequencies, nu1),
    )


def _denominators(frequencies: TiltedFrequencies) -> Dict[str, float]:
    return {
        "13": frequencies.delta_13,
        "24": frequencies.delta_24,
        "zq": frequencies.delta_zq,
        "dq": frequencies.delta_dq,
    }


def _near_discontinuity(sys, B0, nu_uw, nu1, offset, exclusion_mT) -> bool:
    if exclusion_mT <= 0:
        return False
    low = _denominators(tilted_frame(sys, max(B0 - exclusion_mT, 0.0), nu_uw, nu1, offset)[1])
    high = _denominators(tilted_frame(sys, B0 + exclusion_mT, nu_uw, nu1, offset)[1])
    return any(low[name] * high[name] <= 0 for name in low)


def _arctan_ratio(numerator: float, denominator: float, name: str, resonant: list) -> float:
    if denominator == 0:
        if numerator == 0:
            return 0.0
        resonant.append(name)
        return math.copysign(math.pi / 2.0, numerator)
    return math.atan(numerator / denominator)


def _require_axial(sys: SpinSystem):
    if sys.is_isotropic:
        raise InvalidArgumentException(
            "Tilted frames need an axial hyperfine interaction,"
            " use SpinSystem.axial(A, 0.0) for a purely secular coupling"
        )


class MinimizationBracketException(Exception):
    def __init__(self, message: str, sweep: Optional[List[Tuple[float, float]]] = None):
        self.sweep = sweep or []
        dump = "\n".join(f"  {x:.6f} mT -> {y:.6f} MHz" for x, y in self.sweep)
        super().__init__(f"{message}\n{dump}" if dump else message)
