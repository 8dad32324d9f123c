import enum
import math
from dataclasses import dataclass
from logging import debug
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg

from muondemur.dynamics.liouville import (
    TWO_PI,
    damping_superoperator,
    hamiltonian_superoperator,
    rotating_generator,
    unvec,
    vec,
)
from muondemur.dynamics.pulses import Geometry, PulseSequence
from muondemur.dynamics.relaxation import RelaxationModel
from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.spinsys.hamiltonian import (
    frame_generator,
    lab_frame_hamiltonians,
    rotating_frame_hamiltonian,
)
from muondemur.spinsys.levels import PAIRS, level_diagram
from muondemur.spinsys.operators import (
    ID,
    MUON_OPERATORS,
    SX,
    InvalidArgumentException,
    check_density_matrix,
)
from muondemur.spinsys.system import SpinSystem, require_field

# lab-frame integration needs at least this many steps per microwave period
LAB_STEPS_PER_PERIOD = 20

LAB_CHUNK = 8192

_FREQUENCY_MERGE_MHZ = 1e-9


class Frame(str, enum.Enum):
    ROTATING = "rotating"
    LAB = "lab"

    @classmethod
    def parse(cls, value) -> "Frame":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidArgumentException(
                f"Unknown frame {value!r}, expected one of: rotating, lab"
            )


@dataclass(frozen=True)
class Propagation:
    """
    trace holds the polarization along the observed axis of the geometry.
    observables holds the polarization 2<I_a> for a in x, y, z on the same grid.
    final_state is the lab-frame density matrix at t_end.
    """

    trace: AsymmetryTrace
    observables: Dict[str, np.ndarray]
    final_state: np.ndarray
    frame: Frame
    sense: int
    nu_uw: float


class SpectralLine(NamedTuple):
    nu: float
    amplitude: float
    phase: float


@dataclass(frozen=True)
class SpectralLines:
    """value(t) = constant + sum of amplitude * cos(2π nu t + phase), t in us."""

    constant: float
    lines: Tuple[SpectralLine, ...]

    def evaluate(self, times_ns) -> np.ndarray:
        times_us = np.asarray(times_ns, dtype=float) / 1000.0
        values = np.full(times_us.shape, self.constant)
        for line in self.lines:
            values = values + line.amplitude * np.cos(TWO_PI * line.nu * times_us + line.phase)
        return values

    def dominant(self, count: int = 1, band: Tuple[float, float] = (0.0, math.inf)):
        inside = [line for line in self.lines if band[0] <= line.nu <= band[1]]
        return sorted(inside, key=lambda line: -line.amplitude)[:count]


@dataclass(frozen=True)
class Mode:
    """One Liouvillian eigenmode as seen by an observable: amplitude * exp(-rate t) cos(2π nu t + phase)."""

    nu: float
    rate: float
    amplitude: float
    phase: float


def initial_state(geometry, polarization: float = 1.0) -> np.ndarray:
    """
    :return: muon polarized along z (LF) or x (TF), electron unpolarized
    """
    geometry = Geometry.parse(geometry)
    if not 0.0 <= polarization <= 1.0:
        raise InvalidArgumentException(
            f"Initial polarization must lie in [0, 1], got {polarization!r}"
        )
    axis = "z" if geometry is Geometry.LF else "x"
    return ID / 4.0 + polarization / 2.0 * MUON_OPERATORS[axis]


def observed_axis(geometry) -> str:
    return "z" if Geometry.parse(geometry) is Geometry.LF else "x"


def rotating_sense(sys: SpinSystem, B0: float, nu_uw: float) -> int:
    """
    :return: +1 when the frame should follow the co-rotating drive component, -1 for
             the counter-rotating one. Decided by the electron-flip transition whose
             frame-resonance condition lies closest to nu_uw.
    """
    diagram = level_diagram(sys, B0)
    generator = diagram.to_eigenbasis(frame_generator(sys)).diagonal().real
    flips = diagram.to_eigenbasis(SX)

    best = None
    for i, j in PAIRS:
        a, b = i - 1, j - 1
        delta = generator[a] - generator[b]
        if abs(flips[a, b]) <= 1e-6 or abs(delta) < 0.5:
            continue
        ratio = (diagram.energies[a] - diagram.energies[b]) / delta
        distance = abs(abs(ratio) - nu_uw)
        if best is None or distance < best[0]:
            best = (distance, ratio, (i, j))

    if best is None:
        return 1
    debug(f"Rotating sense follows transition {best[2]} at {B0} mT")
    return 1 if best[1] >= 0 else -1


def propagate(
    rho0: np.ndarray,
    sys: SpinSystem,
    B0: float,
    seq: PulseSequence,
    relax: Optional[RelaxationModel] = None,
    frame="rotating",
    dt: float = 1.0,
    oversample: int = 1,
    ramp_ns: float = 0.0,
    offset: float = 0.0,
    sense: Optional[int] = None,
    nu_uw: Optional[float] = None,
    phase_step_deg: Optional[float] = None,
) -> Propagation:
    """
    Piecewise-constant evolution of rho0 through seq.

    :param dt: output grid step in ns; the grid starts at 0 and ends at or below t_end
    :param oversample: each output value is the mean of this many samples spread over
                       [t, t + dt); in the lab frame dt / oversample is the integration step
    :param offset: extra electron resonance offset in MHz
    :param sense: rotating sense, chosen from the level structure when omitted
    :param nu_uw: frame frequency; defaults to the drive frequency of seq
    """
    frame = Frame.parse(frame)
    require_field(B0)
    check_density_matrix(rho0, atol=1e-9)
    if not math.isfinite(dt) or dt <= 0:
        raise InvalidArgumentException(f"dt must be positive, got {dt!r}")
    if int(oversample) != oversample or oversample < 1:
        raise InvalidArgumentException(f"oversample must be a positive integer, got {oversample!r}")
    oversample = int(oversample)

    seq = seq.quantized(phase_step_deg)
    pieces = seq.pieces(ramp_ns)
    times = np.arange(int(math.floor(seq.t_end / dt + 1e-9)) + 1) * dt
    samples = (times[:, None] + np.arange(oversample)[None, :] * dt / oversample).ravel()

    if frame is Frame.ROTATING:
        if nu_uw is None:
            nu_uw = seq.drive_frequency() or 0.0
        if sense is None:
            sense = rotating_sense(sys, B0, nu_uw) if nu_uw > 0 else 1
        states, final_state = _propagate_rotating(
            rho0, sys, B0, pieces, relax, samples, seq.t_end, nu_uw, sense, offset
        )
    else:
        nu_uw = max(seq.drive_frequencies, default=0.0)
        sense = 1
        states, final_state = _propagate_lab(
            rho0, sys, B0, pieces, relax, samples, seq.t_end, dt / oversample, offset
        )

    observables = {}
    for axis, operator in MUON_OPERATORS.items():
        if frame is Frame.ROTATING:
            values = _frame_expectations(states, operator, sys, nu_uw, sense, samples)
        else:
            values = np.einsum("nab,ba->n", states, operator).real
        observables[axis] = 2.0 * values.reshape(len(times), oversample).mean(axis=1)

    trace = AsymmetryTrace(times, observables[observed_axis(seq.geometry)])
    return Propagation(
        trace=trace,
        observables=observables,
        final_state=final_state,
        frame=frame,
        sense=sense,
        nu_uw=float(nu_uw),
    )


def spectral_lines(
    sys: SpinSystem,
    B0: float,
    nu_uw: float,
    nu1: float,
    geometry="LF",
    phase: float = 0.0,
    sense: Optional[int] = None,
    offset: float = 0.0,
    rho0: Optional[np.ndarray] = None,
    axis: Optional[str] = None,
) -> SpectralLines:
    """
    Exact decomposition of the lab-frame muon polarization under a constant
    rotating-frame drive switched on at t = 0.
    """
    if sense is None:
        sense = rotating_sense(sys, B0, nu_uw) if nu_uw > 0 else 1
    if rho0 is None:
        rho0 = initial_state(geometry)
    operator = 2.0 * MUON_OPERATORS[axis or observed_axis(geometry)]

    hamiltonian = rotating_frame_hamiltonian(
        sys, B0, nu_uw, nu1=nu1, phase=phase, sense=sense, offset=offset
    )
    energies, vectors = scipy.linalg.eigh(hamiltonian)
    rho = vectors.conj().T @ rho0 @ vectors

    terms = []
    for shift, component in _frame_components(operator, sys):
        observable = vectors.conj().T @ component @ vectors
        # <O>(t) = sum_ab rho_ab O_ba exp(i 2π (E_b - E_a + s nu d) t)
        coefficients = rho * observable.T
        frequencies = energies[None, :] - energies[:, None] + sense * nu_uw * shift
        terms.extend(zip(frequencies.ravel(), coefficients.ravel()))

    return _collect_lines(terms)


def liouvillian_modes(
    sys: SpinSystem,
    B0: float,
    nu_uw: float,
    nu1: float,
    relax: Optional[RelaxationModel],
    geometry="LF",
    phase: float = 0.0,
    sense: Optional[int] = None,
    offset: float = 0.0,
    rho0: Optional[np.ndarray] = None,
    axis: Optional[str] = None,
    min_amplitude: float = 1e-9,
) -> Tuple[Mode, ...]:
    """:return: eigenmodes of the damped evolution with their weight in the observed polarization"""
    if sense is None:
        sense = rotating_sense(sys, B0, nu_uw) if nu_uw > 0 else 1
    if rho0 is None:
        rho0 = initial_state(geometry)
    operator = 2.0 * MUON_OPERATORS[axis or observed_axis(geometry)]

    hamiltonian = rotating_frame_hamiltonian(
        sys, B0, nu_uw, nu1=nu1, phase=phase, sense=sense, offset=offset
    )
    liouvillian = hamiltonian_superoperator(hamiltonian)
    damping = damping_superoperator(sys, B0, relax)
    if damping is not None:
        liouvillian = liouvillian + damping

    eigenvalues, eigenvectors = scipy.linalg.eig(liouvillian)
    coefficients = np.linalg.solve(eigenvectors, vec(rho0))

    modes = []
    for shift, component in _frame_components(operator, sys):
        weights = coefficients * (vec(component.T) @ eigenvectors)
        for eigenvalue, weight in zip(eigenvalues, weights):
            nu = eigenvalue.imag / TWO_PI + sense * nu_uw * shift
            rate = -eigenvalue.real
            if abs(weight) < min_amplitude or nu < -_FREQUENCY_MERGE_MHZ:
                continue
            if abs(nu) <= _FREQUENCY_MERGE_MHZ:
                modes.append(Mode(0.0, rate, float(weight.real), 0.0))
            else:
                modes.append(Mode(nu, rate, 2.0 * abs(weight), float(np.angle(weight))))

    return tuple(sorted(modes, key=lambda mode: (mode.nu, mode.rate)))


def _propagate_rotating(rho0, sys, B0, pieces, relax, samples, t_end, nu_uw, sense, offset):
    states = np.empty((len(samples), 4, 4), dtype=complex)
    rho = np.asarray(rho0, dtype=complex)

    for index, piece in enumerate(pieces):
        generator = rotating_generator(
            sys,
            float(B0),
            float(nu_uw),
            sys.drive_strength(piece.B1),
            float(piece.phase),
            int(sense),
            float(offset),
            relax,
        )
        last = index == len(pieces) - 1
        inside = (samples >= piece.t_start) & ((samples < piece.t_stop) | last)
        if np.any(inside):
            states[inside] = generator.evolve(rho, (samples[inside] - piece.t_start) / 1000.0)
        rho = generator.step(rho, (piece.t_stop - piece.t_start) / 1000.0)

    debug(f"Rotating-frame generator cache: {rotating_generator.cache_info()}")
    final_state = _to_lab(rho, sys, nu_uw, sense, t_end / 1000.0)
    return states, final_state


def _propagate_lab(rho0, sys, B0, pieces, relax, samples, t_end, step_ns, offset):
    drive_frequencies = [piece.freq for piece in pieces if piece.B1 > 0]
    if drive_frequencies:
        fastest = max(drive_frequencies)
        limit_ns = 1000.0 / (LAB_STEPS_PER_PERIOD * fastest)
        if step_ns > limit_ns * (1 + 1e-9):
            raise FrameRefusedException(
                f"Lab-frame step of {step_ns:g} ns is too coarse for a {fastest:g} MHz drive,"
                f" it must not exceed {limit_ns:g} ns (raise oversample or lower dt)"
            )

    starts = np.array([piece.t_start for piece in pieces])
    damping = damping_superoperator(sys, B0, relax)
    n_samples = len(samples)

    # sample n sits at n * step_ns
    states = np.empty((n_samples, 4, 4), dtype=complex)
    rho = np.asarray(rho0, dtype=complex)
    n_steps = int(round(t_end / step_ns))
    total = max(n_samples, n_steps + 1)
    final_state = rho if n_steps == 0 else None

    for chunk_start in range(0, total - 1, LAB_CHUNK):
        chunk = np.arange(chunk_start, min(chunk_start + LAB_CHUNK, total - 1))
        midpoints = (chunk + 0.5) * step_ns
        owner = np.clip(np.searchsorted(starts, midpoints, side="right") - 1, 0, len(pieces) - 1)
        nu1 = np.array([sys.drive_strength(pieces[k].B1) for k in owner])
        phase = np.array([pieces[k].phase for k in owner])
        freq = np.array([pieces[k].freq for k in owner])
        hamiltonians = lab_frame_hamiltonians(
            sys, B0, freq, nu1, phase, midpoints / 1000.0, offset=offset
        )
        propagators = _step_propagators(hamiltonians, damping, step_ns / 1000.0)

        for position, n in enumerate(chunk):
            if n < n_samples:
                states[n] = rho
            if n == n_steps:
                final_state = rho
            if damping is None:
                rho = propagators[position] @ rho @ propagators[position].conj().T
            else:
                rho = unvec(propagators[position] @ vec(rho))

    if total - 1 < n_samples:
        states[total - 1] = rho
    if final_state is None:
        final_state = rho
    return states, final_state


def _step_propagators(hamiltonians, damping, step_us):
    if damping is None:
        energies, vectors = np.linalg.eigh(hamiltonians)
        phases = np.exp(-1j * TWO_PI * step_us * energies)
        return (vectors * phases[:, None, :]) @ np.conj(np.swapaxes(vectors, 1, 2))

    count = hamiltonians.shape[0]
    left = np.einsum("ij,nkl->nikjl", ID, hamiltonians).reshape(count, 16, 16)
    right = np.einsum("nlk,ij->nkilj", hamiltonians, ID).reshape(count, 16, 16)
    liouvillians = -1j * TWO_PI * (left - right) + damping[None, :, :]
    return scipy.linalg.expm(step_us * liouvillians)


def _frame_components(operator, sys):
    """Splits an operator by the change d = f_a - f_b of the frame generator it causes."""
    generator = frame_generator(sys).diagonal().real
    difference = np.rint(generator[:, None] - generator[None, :]).astype(int)
    for shift in np.unique(difference):
        component = np.where(difference == shift, operator, 0.0)
        if np.any(component):
            yield int(shift), component


def _frame_expectations(states, operator, sys, nu_uw, sense, samples_ns):
    values = np.zeros(len(samples_ns))
    times_us = samples_ns / 1000.0
    for shift, component in _frame_components(operator, sys):
        phase = np.exp(1j * TWO_PI * sense * nu_uw * shift * times_us)
        values = values + (np.einsum("nab,ba->n", states, component) * phase).real
    return values


def _to_lab(rho, sys, nu_uw, sense, t_us):
    generator = frame_generator(sys).diagonal().real
    difference = generator[:, None] - generator[None, :]
    return rho * np.exp(-1j * TWO_PI * sense * nu_uw * t_us * difference)


def _collect_lines(terms) -> SpectralLines:
    constant = 0.0
    merged = []
    for nu, coefficient in sorted(terms, key=lambda term: term[0]):
        if abs(nu) <= _FREQUENCY_MERGE_MHZ:
            constant += coefficient.real
        elif nu > 0:
            if merged and nu - merged[-1][0] <= _FREQUENCY_MERGE_MHZ:
                merged[-1][1] += coefficient
            else:
                merged.append([nu, coefficient])
    lines = tuple(
        SpectralLine(float(nu), 2.0 * abs(coefficient), float(np.angle(coefficient)))
        for nu, coefficient in merged
        if abs(coefficient) > 1e-12
    )
    return SpectralLines(constant=float(constant), lines=lines)


class FrameRefusedException(InvalidArgumentException):
    pass
