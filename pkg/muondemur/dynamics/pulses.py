import enum
import math
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Tuple

from muondemur.spinsys.operators import InvalidArgumentException

MAX_SEGMENTS = 4

# ramps are resolved into this many constant-amplitude steps per flank
RAMP_STEPS = 8


class Geometry(str, enum.Enum):
    LF = "LF"
    TF = "TF"

    @classmethod
    def parse(cls, value) -> "Geometry":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise InvalidArgumentException(
                f"Unknown geometry {value!r}, expected one of: LF, TF"
            )


@dataclass(frozen=True)
class PulseSegment:
    """A rectangular microwave pulse; times in ns, B1 in mT, phase in rad, freq in MHz."""

    t_start: float
    duration: float
    B1: float
    phase: float = 0.0
    freq: float = 0.0

    def __post_init__(self):
        for name in ("t_start", "duration", "B1", "phase", "freq"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidSequenceException(f"PulseSegment.{name} must be finite")
        if self.t_start < 0:
            raise InvalidSequenceException("PulseSegment.t_start must not be negative")
        if self.duration < 0:
            raise InvalidSequenceException("PulseSegment.duration must not be negative")
        if self.B1 < 0:
            raise InvalidSequenceException("PulseSegment.B1 must not be negative")

    @property
    def t_stop(self) -> float:
        return self.t_start + self.duration


class Piece(NamedTuple):
    """A time interval with constant drive; B1 == 0 marks free evolution."""

    t_start: float
    t_stop: float
    B1: float
    phase: float
    freq: float = 0.0


@dataclass(frozen=True)
class PulseSequence:
    segments: Tuple[PulseSegment, ...]
    t_end: float
    geometry: Geometry = Geometry.LF
    max_segments: int = MAX_SEGMENTS

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "geometry", Geometry.parse(self.geometry))

        if not math.isfinite(self.t_end) or self.t_end <= 0:
            raise InvalidSequenceException("PulseSequence.t_end must be positive")
        if len(self.segments) > self.max_segments:
            raise InvalidSequenceException(
                f"{len(self.segments)} segments given, at most {self.max_segments} allowed"
            )
        for previous, current in zip(self.segments, self.segments[1:]):
            if current.t_start < previous.t_stop - 1e-9:
                raise InvalidSequenceException(
                    f"Segments overlap or are out of order: pulse at {current.t_start} ns"
                    f" starts before the previous one ends at {previous.t_stop} ns"
                )
        if self.segments and self.segments[-1].t_stop > self.t_end + 1e-9:
            raise InvalidSequenceException(
                f"Last segment ends at {self.segments[-1].t_stop} ns, after t_end = {self.t_end} ns"
            )

    @property
    def drive_frequencies(self) -> List[float]:
        return sorted({segment.freq for segment in self.segments if segment.B1 > 0})

    def drive_frequency(self) -> Optional[float]:
        frequencies = self.drive_frequencies
        if len(frequencies) > 1:
            raise InvalidSequenceException(
                f"A rotating frame needs one drive frequency, got {frequencies}"
            )
        return frequencies[0] if frequencies else None

    def with_phase_offset(self, phase: float) -> "PulseSequence":
        return replace(
            self,
            segments=tuple(
                replace(segment, phase=segment.phase + phase)
                for segment in self.segments
            ),
        )

    def quantized(self, phase_step_deg: Optional[float]) -> "PulseSequence":
        """:return: the sequence with all phases rounded to the phase-shifter step"""
        if not phase_step_deg:
            return self
        step = math.radians(phase_step_deg)
        return replace(
            self,
            segments=tuple(
                replace(segment, phase=round(segment.phase / step) * step)
                for segment in self.segments
            ),
        )

    def pieces(self, ramp_ns: float = 0.0) -> List[Piece]:
        """:return: constant-drive intervals covering [0, t_end] in time order"""
        pieces = []
        cursor = 0.0
        for segment in self.segments:
            if segment.t_start > cursor:
                pieces.append(Piece(cursor, segment.t_start, 0.0, 0.0))
            pieces.extend(_segment_pieces(segment, ramp_ns))
            cursor = max(cursor, segment.t_stop)
        if self.t_end > cursor:
            pieces.append(Piece(cursor, self.t_end, 0.0, 0.0))
        return [piece for piece in pieces if piece.t_stop > piece.t_start]


def _segment_pieces(segment: PulseSegment, ramp_ns: float) -> List[Piece]:
    if ramp_ns <= 0 or segment.duration == 0:
        return [
            Piece(segment.t_start, segment.t_stop, segment.B1, segment.phase, segment.freq)
        ]

    ramp = min(ramp_ns, segment.duration / 2.0)
    step = ramp / RAMP_STEPS
    rising = [
        Piece(
            segment.t_start + k * step,
            segment.t_start + (k + 1) * step,
            segment.B1 * (k + 0.5) / RAMP_STEPS,
            segment.phase,
            segment.freq,
        )
        for k in range(RAMP_STEPS)
    ]
    plateau = Piece(
        segment.t_start + ramp,
        segment.t_stop - ramp,
        segment.B1,
        segment.phase,
        segment.freq,
    )
    falling = [
        Piece(
            segment.t_stop - (k + 1) * step,
            segment.t_stop - k * step,
            segment.B1 * (k + 0.5) / RAMP_STEPS,
            segment.phase,
            segment.freq,
        )
        for k in reversed(range(RAMP_STEPS))
    ]
    return rising + [plateau] + falling


def rabi(
    B1: float,
    freq: float,
    t_end: float,
    t_p: float = 0.0,
    phase: float = 0.0,
    geometry: Geometry = Geometry.LF,
) -> PulseSequence:
    """Single pulse switched on at t_p and kept on until the end of the window."""
    return PulseSequence(
        segments=(PulseSegment(t_p, t_end - t_p, B1, phase, freq),),
        t_end=t_end,
        geometry=geometry,
    )


def demur_cw(
    B1: float, freq: float, t_end: float, geometry: Geometry = Geometry.TF
) -> PulseSequence:
    return rabi(B1, freq, t_end, t_p=0.0, geometry=geometry)


def ramsey(
    B1: float,
    freq: float,
    pulse_ns: float,
    tau_ns: float,
    t_end: float,
    t_p: float = 0.0,
    second_phase: float = 0.0,
    geometry: Geometry = Geometry.LF,
) -> PulseSequence:
    """Two pulses of pulse_ns separated by a free evolution tau_ns; the second one carries second_phase."""
    first = PulseSegment(t_p, pulse_ns, B1, 0.0, freq)
    second = PulseSegment(first.t_stop + tau_ns, pulse_ns, B1, second_phase, freq)
    return PulseSequence(segments=(first, second), t_end=t_end, geometry=geometry)


def transient_nutation(
    B1: float,
    freq: float,
    t_nut: float,
    t_end: float,
    t_p: float = 0.0,
    geometry: Geometry = Geometry.LF,
) -> PulseSequence:
    """Pulse of variable length t_nut; the observable is read after the pulse ends."""
    return PulseSequence(
        segments=(PulseSegment(t_p, t_nut, B1, 0.0, freq),),
        t_end=t_end,
        geometry=geometry,
    )


def inversion_recovery(
    B1: float,
    freq: float,
    pi_ns: float,
    recovery_ns: float,
    t_end: float,
    read_ns: Optional[float] = None,
    t_p: float = 0.0,
    geometry: Geometry = Geometry.LF,
) -> PulseSequence:
    """
    Inverting pulse followed by a recovery delay and a read-out pulse.
    The read-out pulse defaults to half the inverting one.
    """
    if read_ns is None:
        read_ns = pi_ns / 2.0
    inversion = PulseSegment(t_p, pi_ns, B1, 0.0, freq)
    read_out = PulseSegment(inversion.t_stop + recovery_ns, read_ns, B1, 0.0, freq)
    return PulseSequence(
        segments=(inversion, read_out), t_end=t_end, geometry=geometry
    )


def free_evolution(t_end: float, geometry: Geometry = Geometry.LF) -> PulseSequence:
    return PulseSequence(segments=(), t_end=t_end, geometry=geometry)


TEMPLATES = {
    "rabi": rabi,
    "ramsey": ramsey,
    "transient_nutation": transient_nutation,
    "inversion_recovery": inversion_recovery,
    "demur_cw": demur_cw,
}


class InvalidSequenceException(InvalidArgumentException):
    pass
