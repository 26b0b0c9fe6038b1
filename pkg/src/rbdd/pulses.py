"""Pulse schedules: rectangular, BB1, KDD-5, XY-n cycles and protected gates.

A schedule is a list of piecewise-constant segments together with the
rotation it is meant to implement.  Composite pulses that leave a residual
z rotation (KDD-5, virtual z gates) report it as ``frame_shift``; the
segment product equals ``R_z(frame_shift) o ideal_rotation``.  When
schedules are concatenated every later phase is offset by the accumulated
frame shift, which keeps the logical action equal to the product of the
ideal rotations up to a final z rotation that a z readout cannot see.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .clifford import AxisGate, GGate, PGate, RBSequence, compose, pauli_gate
from .errors import InvalidInputError
from .su2 import Rotation, rotation_unitary

TWO_PI = 2.0 * math.pi
T_PI_DEFAULT = 8e-6
OMEGA1_DEFAULT = math.pi / T_PI_DEFAULT  # rad/s, 2 pi x 62.5 kHz

# Reference durations of one PG step per scheme (s).
GATE_TIMES = {
    "bare_bb1": 76e-6,
    "scheme_a": 88e-6,
    "scheme_b": 116e-6,
    "scheme_c": 152e-6,
    "scheme_d": 336e-6,
    "scheme_e": 384e-6,
}

XY4_PHASES = (0.0, math.pi / 2, 0.0, math.pi / 2)
XY8_PHASES = XY4_PHASES + tuple(reversed(XY4_PHASES))
XY16_PHASES = XY8_PHASES + tuple(p + math.pi for p in XY8_PHASES)
DD_PHASES = {"XY4": XY4_PHASES, "XY8": XY8_PHASES, "XY16": XY16_PHASES}


class SchemeId(str, enum.Enum):
    BARE_RECT = "bare_rect"
    BARE_BB1 = "bare_bb1"
    SCHEME_A = "scheme_a"
    SCHEME_B = "scheme_b"
    SCHEME_C = "scheme_c"
    SCHEME_D = "scheme_d"
    SCHEME_E = "scheme_e"

    @classmethod
    def parse(cls, value) -> "SchemeId":
        try:
            return cls(value)
        except ValueError:
            raise InvalidInputError(f"unknown scheme {value!r}") from None


@dataclass(frozen=True)
class PulseSegment:
    kind: str  # "drive" or "delay"
    duration: float  # s
    amplitude: float = 0.0  # rad/s
    phase: float = 0.0  # rad

    def __post_init__(self):
        if self.kind not in ("drive", "delay"):
            raise InvalidInputError(f"unknown segment kind {self.kind!r}")
        if not self.duration > 0:
            raise InvalidInputError(f"segment duration must be > 0, got {self.duration}")
        if self.amplitude < 0:
            raise InvalidInputError("amplitude must be >= 0")
        if self.kind == "delay" and self.amplitude != 0:
            raise InvalidInputError("delay segments must have zero amplitude")

    @property
    def angle(self) -> float:
        return self.amplitude * self.duration

    def unitary(self) -> np.ndarray:
        """Noise-free, error-free propagator of the segment."""
        if self.kind == "delay":
            return np.eye(2, dtype=complex)
        return rotation_unitary(Rotation.in_plane(self.phase, self.angle))


def drive(theta: float, phi: float, omega1: float) -> PulseSegment:
    return PulseSegment("drive", theta / omega1, omega1, float(np.mod(phi, TWO_PI)))


def delay(t: float) -> list[PulseSegment]:
    return [PulseSegment("delay", t)] if t > 0 else []


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple[PulseSegment, ...]
    ideal_rotation: Rotation
    frame_shift: float = 0.0
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def duration(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    @property
    def n_pulses(self) -> int:
        return sum(1 for s in self.segments if s.kind == "drive")

    def segment_product(self) -> np.ndarray:
        """Brute-force product of the segments' ideal unitaries (time ordered)."""
        u = np.eye(2, dtype=complex)
        for s in self.segments:
            u = s.unitary() @ u
        return u

    def expected_product(self) -> np.ndarray:
        """``R_z(frame_shift) o ideal_rotation`` as a unitary."""
        return rotation_unitary(Rotation.about_z(self.frame_shift)) @ rotation_unitary(self.ideal_rotation)

    def shifted(self, frame: float) -> "PulseSchedule":
        if frame == 0.0:
            return self
        segs = tuple(
            replace(s, phase=float(np.mod(s.phase + frame, TWO_PI))) if s.kind == "drive" else s
            for s in self.segments
        )
        return replace(self, segments=segs)

    def arrays(self):
        """``(start, duration, amplitude, phase)`` arrays for the propagator."""
        dur = np.array([s.duration for s in self.segments], dtype=float)
        start = np.concatenate(([0.0], np.cumsum(dur)[:-1])) if len(dur) else np.zeros(0)
        amp = np.array([s.amplitude for s in self.segments], dtype=float)
        phase = np.array([s.phase for s in self.segments], dtype=float)
        return start, dur, amp, phase

    def timing_table(self) -> str:
        """One line per segment: ``start_time, duration, amplitude, phase, kind``."""
        lines = ["start_time, duration, amplitude, phase, kind"]
        t = 0.0
        for s in self.segments:
            lines.append(f"{t:.10g}, {s.duration:.10g}, {s.amplitude:.10g}, {s.phase:.10g}, {s.kind}")
            t += s.duration
        return "\n".join(lines) + "\n"


def concatenate(schedules, metadata=None) -> PulseSchedule:
    """Play ``schedules`` in order, absorbing each frame shift into later phases."""
    segs: list[PulseSegment] = []
    frame = 0.0
    ideal = np.eye(3)
    for sch in schedules:
        segs.extend(sch.shifted(frame).segments)
        ideal = sch.ideal_rotation.matrix() @ ideal
        frame += sch.frame_shift
    merged: list[PulseSegment] = []
    for s in segs:
        if merged and s.kind == "delay" and merged[-1].kind == "delay":
            merged[-1] = PulseSegment("delay", merged[-1].duration + s.duration)
        else:
            merged.append(s)
    return PulseSchedule(tuple(merged), Rotation.from_matrix(ideal),
                         float(np.mod(frame, TWO_PI)), dict(metadata or {}))


def _check_omega(omega1):
    if not omega1 > 0:
        raise InvalidInputError("omega1 must be > 0")


def rectangular(theta: float, phi: float = 0.0, omega1: float = OMEGA1_DEFAULT) -> PulseSchedule:
    """Single square pulse of area ``theta`` about the axis at azimuth ``phi``."""
    _check_omega(omega1)
    if not theta > 0:
        raise InvalidInputError("theta must be > 0")
    return PulseSchedule((drive(theta, phi, omega1),), Rotation.in_plane(phi, theta))


def bb1_beta(theta: float) -> float:
    """BB1 correction phase ``arccos(-theta / 4 pi)``."""
    if not 0 <= theta <= 4 * math.pi:
        raise InvalidInputError(f"BB1 needs 0 <= theta <= 4 pi, got {theta}")
    return math.acos(-theta / (4 * math.pi))


def _bb1_check(theta, omega1):
    _check_omega(omega1)
    if not 0 < theta <= TWO_PI:
        if theta > 4 * math.pi:
            raise InvalidInputError("theta > 4 pi leaves the BB1 phase undefined")
        raise InvalidInputError("BB1 requires 0 < theta <= 2 pi")


def bb1(theta: float, phi: float = 0.0, omega1: float = OMEGA1_DEFAULT) -> PulseSchedule:
    """BB1: theta_phi, then pi, 2 pi, pi at phases beta, 3 beta, beta (+ phi)."""
    _bb1_check(theta, omega1)
    b = bb1_beta(theta)
    segs = (
        drive(theta, phi, omega1),
        drive(math.pi, phi + b, omega1),
        drive(TWO_PI, phi + 3 * b, omega1),
        drive(math.pi, phi + b, omega1),
    )
    return PulseSchedule(segs, Rotation.in_plane(phi, theta))


def bb1_spread(theta: float, phi: float = 0.0, omega1: float = OMEGA1_DEFAULT,
               spacing: float | None = None, delay_before_first: bool = True) -> PulseSchedule:
    """BB1 with its correction block written as four pi units separated by delays.

    The 2 pi segment is split into two pi pulses of equal phase.  Each pi
    unit is preceded by ``spacing`` (default twice the theta-pulse length);
    ``delay_before_first=False`` drops the delay between the theta pulse and
    the first unit.
    """
    _bb1_check(theta, omega1)
    if spacing is None:
        spacing = 2.0 * theta / omega1
    if spacing < 0:
        raise InvalidInputError("spacing must be >= 0")
    b = bb1_beta(theta)
    segs = [drive(theta, phi, omega1)]
    for i, ph in enumerate((b, 3 * b, 3 * b, b)):
        if i > 0 or delay_before_first:
            segs += delay(spacing)
        segs.append(drive(math.pi, phi + ph, omega1))
    return PulseSchedule(tuple(segs), Rotation.in_plane(phi, theta))


KDD5_PHASES = (math.pi / 6, 0.0, math.pi / 2, 0.0, math.pi / 6)
KDD5_FRAME_SHIFT = -math.pi / 3


def kdd5(phi: float = 0.0, omega1: float = OMEGA1_DEFAULT) -> PulseSchedule:
    """Five pi pulses at phases phi + (pi/6, 0, pi/2, 0, pi/6).

    Net action ``R_z(-pi/3) R_phi(pi)``; the z part is left to the frame.
    """
    _check_omega(omega1)
    segs = tuple(drive(math.pi, phi + p, omega1) for p in KDD5_PHASES)
    return PulseSchedule(segs, Rotation.in_plane(phi, math.pi), KDD5_FRAME_SHIFT)


def _pi_pulse(phase, style, omega1) -> PulseSchedule:
    if style == "rect":
        return rectangular(math.pi, phase, omega1)
    if style == "bb1":
        return bb1(math.pi, phase, omega1)
    raise InvalidInputError(f"unknown pulse style {style!r}")


def _dd_train(phases, style, tau_delay, omega1, half_edges=True) -> list[PulseSchedule]:
    """``tau/2 P tau P ... P tau/2`` as a list of schedules."""
    out = []
    edge = tau_delay / 2 if half_edges else tau_delay
    for i, ph in enumerate(phases):
        gap = edge if i == 0 else tau_delay
        if gap > 0:
            out.append(PulseSchedule(tuple(delay(gap)), Rotation.identity()))
        out.append(_pi_pulse(ph, style, omega1))
    if edge > 0:
        out.append(PulseSchedule(tuple(delay(edge)), Rotation.identity()))
    return out


def dd_cycle(kind: str = "XY4", pulse_style: str = "rect", tau_delay: float = 0.0,
             omega1: float = OMEGA1_DEFAULT, phase_offset: float = 0.0) -> PulseSchedule:
    """One XY-4, XY-8 or XY-16 cycle with pulse spacing ``tau_delay``.

    XY-8 is XY-4 followed by its time reverse and XY-16 appends the
    phase-inverted XY-8.  The ideal action is the identity.
    """
    if kind not in DD_PHASES:
        raise InvalidInputError(f"unknown DD cycle {kind!r}")
    if tau_delay < 0:
        raise InvalidInputError("tau_delay must be >= 0")
    _check_omega(omega1)
    phases = [p + phase_offset for p in DD_PHASES[kind]]
    sch = concatenate(_dd_train(phases, pulse_style, tau_delay, omega1), {"kind": kind})
    # The pi pulses multiply to the identity (or -1 in SU(2)).
    return replace(sch, ideal_rotation=Rotation.identity())


# ----------------------------------------------------------------------------
# Protected gate schemes


@dataclass(frozen=True)
class SchemeParams:
    """Timing knobs for :func:`compile_gate`.

    ``None`` delays are tuned so each scheme hits its reference gate time.
    ``pad_virtual`` replaces identity/z gates by a delay as long as the pulse
    they stand in for, keeping the gate duration fixed.
    """

    omega1: float = OMEGA1_DEFAULT
    pad_virtual: bool = True
    spread_delay: float | None = None
    spread_delay_before_first: bool = True
    dd_delay: float | None = None

    def __post_init__(self):
        _check_omega(self.omega1)
        for name in ("spread_delay", "dd_delay"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InvalidInputError(f"{name} must be >= 0")


# Pulse style used for the P and G rotations of each scheme.
_STYLES = {
    SchemeId.BARE_RECT: ("rect", "rect"),
    SchemeId.BARE_BB1: ("bb1", "bb1"),
    SchemeId.SCHEME_A: ("kdd5", "bb1_spread"),
    SchemeId.SCHEME_B: ("bb1", "bb1"),
    SchemeId.SCHEME_C: ("bb1", "bb1"),
    SchemeId.SCHEME_D: ("bb1", "bb1"),
    SchemeId.SCHEME_E: ("bb1", "bb1"),
}

# Number of delay slots per gate, used to hit the reference durations.
_N_DD_DELAYS = {SchemeId.SCHEME_B: 0, SchemeId.SCHEME_C: 2, SchemeId.SCHEME_D: 8, SchemeId.SCHEME_E: 16}
_DD_PULSES_PER_GATE = {SchemeId.SCHEME_B: 1, SchemeId.SCHEME_C: 1, SchemeId.SCHEME_D: 8, SchemeId.SCHEME_E: 16}
_DD_STYLE = {SchemeId.SCHEME_B: "bb1", SchemeId.SCHEME_C: "bb1", SchemeId.SCHEME_D: "rect", SchemeId.SCHEME_E: "rect"}


def _style_duration(style: str, theta: float, omega1: float, params: SchemeParams) -> float:
    if style == "rect":
        return theta / omega1
    if style == "bb1":
        return (theta + 4 * math.pi) / omega1
    if style == "kdd5":
        return 5 * math.pi / omega1
    if style == "bb1_spread":
        return (theta + 4 * math.pi) / omega1 + _n_spread_gaps(params) * _spread_delay(params, theta)
    raise InvalidInputError(f"unknown pulse style {style!r}")


def _n_spread_gaps(params: SchemeParams) -> int:
    return 4 if params.spread_delay_before_first else 3


def _spread_delay(params: SchemeParams, theta: float = math.pi / 2) -> float:
    if params.spread_delay is not None:
        return params.spread_delay
    w = params.omega1
    pulses = (5 * math.pi + theta + 4 * math.pi) / w  # KDD-5 + BB1(theta)
    gap = (GATE_TIMES["scheme_a"] - pulses) / _n_spread_gaps(params)
    if gap < 0:
        raise InvalidInputError("omega1 too small to fit scheme_a into its reference duration")
    return gap


def _dd_delay(scheme: SchemeId, params: SchemeParams) -> float:
    if params.dd_delay is not None:
        return params.dd_delay
    n = _N_DD_DELAYS[scheme]
    if n == 0:
        return 0.0
    w = params.omega1
    gate = (9.5 * math.pi) / w  # BB1(pi) + BB1(pi/2)
    per_dd = _style_duration(_DD_STYLE[scheme], math.pi, w, params)
    gap = (GATE_TIMES[scheme.value] - gate - _DD_PULSES_PER_GATE[scheme] * per_dd) / n
    if gap < 0:
        raise InvalidInputError(f"omega1 too small to fit {scheme.value} into its reference duration")
    return gap


def dd_delay(scheme, params: SchemeParams | None = None) -> float:
    """Delay between decoupling pulses used by a DD-protected scheme."""
    scheme = SchemeId.parse(scheme)
    if scheme not in _N_DD_DELAYS:
        raise InvalidInputError(f"{scheme.value} has no decoupling delays")
    return _dd_delay(scheme, params or SchemeParams())


def rotation_schedule(gate: AxisGate, style: str, params: SchemeParams) -> PulseSchedule:
    """Physical realization of one P or G rotation in the given pulse style."""
    w = params.omega1
    if gate.is_virtual:
        pad = _style_duration(style, gate.angle if gate.angle else math.pi, w, params)
        segs = tuple(delay(pad)) if params.pad_virtual else ()
        if gate.is_identity:
            return PulseSchedule(segs, Rotation.identity())
        angle = gate.sign * gate.angle
        # No pulse is played; the requested R_z(angle) is carried by the frame.
        return PulseSchedule(segs, Rotation.about_z(angle), -angle)
    if style == "rect":
        return rectangular(gate.angle, gate.phase, w)
    if style == "bb1":
        return bb1(gate.angle, gate.phase, w)
    if style == "bb1_spread":
        return bb1_spread(gate.angle, gate.phase, w, _spread_delay(params, gate.angle),
                          params.spread_delay_before_first)
    if style == "kdd5":
        if abs(gate.angle - math.pi) > 1e-12:
            raise InvalidInputError("KDD-5 only implements pi rotations")
        return kdd5(gate.phase, w)
    raise InvalidInputError(f"unknown pulse style {style!r}")


def _delay_schedule(t: float) -> PulseSchedule:
    return PulseSchedule(tuple(delay(t)), Rotation.identity())


def compile_gate(p_gate: AxisGate, g_gate: AxisGate, scheme, params: SchemeParams | None = None,
                 position: int = 0) -> PulseSchedule:
    """Schedule for one benchmarking step ``C = P G`` (G played first).

    ``position`` is the index of the step in the sequence; the DD schemes
    use it to walk through the XY-16 pattern.  In schemes b and c one BB1 pi
    pulse of the pattern follows each gate and the P pulse is replaced by
    ``D P`` so that the decoupling pulse ``D`` restores the intended action.
    """
    scheme = SchemeId.parse(scheme)
    params = params or SchemeParams()
    p_style, g_style = _STYLES[scheme]
    w = params.omega1
    parts: list[PulseSchedule]
    if scheme in (SchemeId.SCHEME_B, SchemeId.SCHEME_C):
        d_phase = XY16_PHASES[position % 16]
        d_gate = PGate("x" if d_phase % math.pi == 0 else "y")
        p_phys = pauli_gate(compose(d_gate.clifford, p_gate.clifford))
        gap = _dd_delay(scheme, params)
        parts = [rotation_schedule(g_gate, g_style, params), rotation_schedule(p_phys, p_style, params)]
        parts += [_delay_schedule(gap), bb1(math.pi, d_phase, w), _delay_schedule(gap)]
    elif scheme is SchemeId.SCHEME_D:
        gap = _dd_delay(scheme, params)
        offset = math.pi if position % 2 else 0.0
        first = [p + offset for p in XY4_PHASES]
        second = [p + offset for p in reversed(XY4_PHASES)]
        parts = _dd_train(first, "rect", gap, w)
        parts += [rotation_schedule(g_gate, g_style, params), rotation_schedule(p_gate, p_style, params)]
        parts += _dd_train(second, "rect", gap, w)
    elif scheme is SchemeId.SCHEME_E:
        gap = _dd_delay(scheme, params)
        parts = [rotation_schedule(g_gate, g_style, params), rotation_schedule(p_gate, p_style, params)]
        parts += _dd_train(XY16_PHASES, "rect", gap, w)
    else:
        parts = [rotation_schedule(g_gate, g_style, params), rotation_schedule(p_gate, p_style, params)]
    sch = concatenate([x for x in parts if x.segments or x.frame_shift or x.ideal_rotation.angle])
    ideal = compose(p_gate.clifford, g_gate.clifford).rotation()
    return replace(sch, ideal_rotation=ideal,
                   metadata={"gate_duration": sch.duration, "scheme": scheme.value, "position": position})


def gate_duration(scheme, params: SchemeParams | None = None) -> float:
    """Duration from the start of one P G step to the start of the next."""
    params = params or SchemeParams()
    if not params.pad_virtual:
        raise InvalidInputError("gate duration is only fixed when virtual gates are padded")
    return compile_gate(PGate("x"), GGate("x"), scheme, params).metadata["gate_duration"]


def compile_sequence(seq: RBSequence, scheme, params: SchemeParams | None = None) -> PulseSchedule:
    """Full schedule for ``seq``: the steps, then ``P_a``, ``R`` and ``P_b``."""
    scheme = SchemeId.parse(scheme)
    params = params or SchemeParams()
    p_style, g_style = _STYLES[scheme]
    parts = [compile_gate(p, g, scheme, params, position=i) for i, (p, g) in enumerate(seq.gates)]
    rec = seq.recovery
    parts.append(rotation_schedule(rec.p_first, p_style, params))
    for g in rec.r_gates[:-1]:
        parts.append(rotation_schedule(g, g_style, params))
    parts.append(compile_gate(rec.r_pauli, rec.r_gates[-1], scheme, params, position=seq.m))
    parts.append(rotation_schedule(rec.p_last, p_style, params))
    sch = concatenate(parts)
    return replace(sch, metadata={"scheme": scheme.value, "m": seq.m,
                                  "gate_duration": parts[0].metadata["gate_duration"]})
