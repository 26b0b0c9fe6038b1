import math

import numpy as np
import pytest

from rbdd.clifford import G_GATES, P_GATES, sample_rb_sequence
from rbdd.engine import propagate
from rbdd.errors import InvalidInputError
from rbdd.pulses import (
    OMEGA1_DEFAULT,
    T_PI_DEFAULT,
    GATE_TIMES,
    SchemeId,
    bb1,
    bb1_beta,
    bb1_spread,
    compile_gate,
    compile_sequence,
    dd_cycle,
    gate_duration,
    kdd5,
    rectangular,
)
from rbdd.su2 import QubitState, Rotation, phase_insensitive_overlap, rotation_unitary, unitary_to_so3


def erroneous_product(sched, eps):
    """Oracle: product of the segment unitaries with every drive angle scaled by 1+eps."""
    u = np.eye(2, dtype=complex)
    for s in sched.segments:
        if s.kind == "drive":
            u = rotation_unitary(Rotation.in_plane(s.phase, s.angle * (1 + eps))) @ u
    return u


def inversion_infidelity(sched, eps):
    """1 - tr(rho_ideal rho) starting from |0>."""
    ideal = unitary_to_so3(sched.expected_product()) @ [0, 0, 1]
    actual = unitary_to_so3(erroneous_product(sched, eps)) @ [0, 0, 1]
    return 0.5 * (1 - float(ideal @ actual))


def test_rectangular_pi_is_8us():
    s = rectangular(math.pi)
    assert len(s.segments) == 1
    assert s.duration == pytest.approx(8e-6, rel=1e-12)
    assert rectangular(math.pi / 2).duration == pytest.approx(s.duration / 2, rel=1e-12)


def test_rectangular_ideal_simulation():
    s = rectangular(math.pi / 2, 0.7)
    for start in ((0, 0, 1), (1, 0, 0), (0, 1, 0)):
        out = propagate(QubitState(start), s, None)
        assert np.allclose(out.bloch, s.ideal_rotation.matrix() @ start, atol=1e-8)


@pytest.mark.parametrize("theta, beta", [(math.pi / 2, 1.696), (math.pi, 1.823)])
def test_bb1_beta(theta, beta):
    assert bb1_beta(theta) == pytest.approx(beta, abs=1e-3)
    assert bb1_beta(theta) == pytest.approx(math.acos(-theta / (4 * math.pi)), abs=1e-15)


def test_bb1_beta_small_angle_limit():
    assert bb1_beta(1e-12) == pytest.approx(math.pi / 2, abs=1e-12)


def test_bb1_rejects_large_angle():
    with pytest.raises(InvalidInputError):
        bb1(5 * math.pi)
    with pytest.raises(InvalidInputError):
        bb1_beta(5 * math.pi)


def test_bb1_segments():
    s = bb1(math.pi / 2, 0.3)
    b = bb1_beta(math.pi / 2)
    angles = [seg.angle for seg in s.segments]
    phases = [seg.phase for seg in s.segments]
    assert np.allclose(angles, [math.pi / 2, math.pi, 2 * math.pi, math.pi])
    assert np.allclose(phases, [0.3, 0.3 + b, 0.3 + 3 * b, 0.3 + b])
    assert s.frame_shift == 0.0
    assert s.duration == pytest.approx(36e-6)


def test_bb1_robust_vs_rectangular():
    eps = 0.05
    rect = inversion_infidelity(rectangular(math.pi), eps)
    assert rect == pytest.approx(math.sin(math.pi * eps / 2) ** 2, rel=1e-10)
    assert rect == pytest.approx(6.2e-3, abs=5e-5)
    assert inversion_infidelity(bb1(math.pi), eps) <= 1e-4


def test_engine_agrees_with_unitary_oracle_under_amplitude_error():
    eps = 0.05
    for sched in (rectangular(math.pi), bb1(math.pi), bb1(math.pi / 2, 1.1), kdd5(0.4)):
        out = propagate(QubitState.ground(), sched, None, eps=eps)
        expect = unitary_to_so3(erroneous_product(sched, eps)) @ [0, 0, 1]
        assert np.allclose(out.bloch, expect, atol=1e-10)


def test_flip_angle_robustness_order():
    eps = np.geomspace(0.01, 0.1, 7)
    rect = [inversion_infidelity(rectangular(math.pi), e) for e in eps]
    comp = [inversion_infidelity(bb1(math.pi), e) for e in eps]
    rect_slope = np.polyfit(np.log(eps), np.log(rect), 1)[0]
    bb1_slope = np.polyfit(np.log(eps), np.log(comp), 1)[0]
    assert rect_slope == pytest.approx(2.0, abs=0.05)
    assert bb1_slope >= 4.0


def test_bb1_spread_layout():
    s = bb1_spread(math.pi / 2)
    delays = [seg.duration for seg in s.segments if seg.kind == "delay"]
    assert delays == pytest.approx([8e-6] * 4)
    pulses = [seg.angle for seg in s.segments if seg.kind == "drive"]
    assert pulses == pytest.approx([math.pi / 2] + [math.pi] * 4)
    assert len([d for d in bb1_spread(math.pi / 2, delay_before_first=False).segments if d.kind == "delay"]) == 3
    out = propagate(QubitState.ground(), s, None)
    assert np.allclose(out.bloch, Rotation.in_plane(0, math.pi / 2).matrix() @ [0, 0, 1], atol=1e-8)


def test_bb1_spread_keeps_bb1_robustness():
    assert inversion_infidelity(bb1_spread(math.pi), 0.05) <= 1e-4


def test_kdd5_identity():
    s = kdd5()
    target = rotation_unitary(Rotation.about_z(-math.pi / 3)) @ rotation_unitary(Rotation((1, 0, 0), math.pi))
    assert phase_insensitive_overlap(s.segment_product(), target) == pytest.approx(1.0, abs=1e-9)
    assert s.frame_shift == pytest.approx(-math.pi / 3)
    assert s.duration == pytest.approx(40e-6)


def test_kdd5_robust_inversion():
    eps = 0.05

    def inversion_error(sched):
        u = erroneous_product(sched, eps)
        return 1 - abs(u[1, 0])

    assert inversion_error(kdd5()) * 10 <= inversion_error(rectangular(math.pi))


def test_xy4_ideal_identity():
    s = dd_cycle("XY4", "rect", 5e-6)
    assert phase_insensitive_overlap(s.segment_product(), np.eye(2)) == pytest.approx(1.0, abs=1e-9)
    assert s.duration == pytest.approx(4 * 8e-6 + 4 * 5e-6)


@pytest.mark.parametrize("kind, count", [("XY4", 4), ("XY8", 8), ("XY16", 16)])
@pytest.mark.parametrize("style", ["rect", "bb1"])
def test_dd_pulse_count_and_content(kind, count, style):
    s = dd_cycle(kind, style, 2e-6)
    per = 1 if style == "rect" else 4
    assert s.n_pulses == count * per
    drives = [seg for seg in s.segments if seg.kind == "drive"]
    pi_like = [seg for seg in drives if abs(seg.angle - math.pi) < 1e-9]
    assert len(pi_like) / len(drives) >= 0.5
    assert phase_insensitive_overlap(s.segment_product(), np.eye(2)) == pytest.approx(1.0, abs=1e-9)


def test_xy8_is_xy4_and_reverse():
    phases = [seg.phase for seg in dd_cycle("XY8").segments if seg.kind == "drive"]
    assert np.allclose(phases, [0, np.pi / 2, 0, np.pi / 2, np.pi / 2, 0, np.pi / 2, 0])
    phases16 = [seg.phase for seg in dd_cycle("XY16").segments if seg.kind == "drive"]
    assert np.allclose(np.mod(np.array(phases16[8:]) - phases16[:8], 2 * np.pi), np.pi)


@pytest.mark.parametrize("scheme", list(SchemeId))
def test_every_gate_matches_ideal(scheme):
    for i, p in enumerate(P_GATES):
        for g in G_GATES:
            s = compile_gate(p, g, scheme, position=i)
            assert phase_insensitive_overlap(s.segment_product(), s.expected_product()) == pytest.approx(1.0, abs=1e-8)
            expected = p.clifford.array() @ g.clifford.array()
            assert np.allclose(s.ideal_rotation.matrix(), expected, atol=1e-9)


@pytest.mark.parametrize("scheme, tau", list(GATE_TIMES.items()))
def test_gate_durations_match_table(scheme, tau):
    assert gate_duration(scheme) == pytest.approx(tau, rel=1e-12)


def test_scheme_c_doubles_bb1_gate_time():
    assert gate_duration("scheme_c") == pytest.approx(2 * gate_duration("bare_bb1"), rel=1e-12)


def test_padded_gates_have_fixed_duration():
    for scheme in SchemeId:
        durations = {round(compile_gate(p, g, scheme).duration * 1e12) for p in P_GATES for g in G_GATES}
        assert len(durations) == 1


def test_unknown_scheme():
    with pytest.raises(InvalidInputError):
        compile_gate(P_GATES[0], G_GATES[0], "scheme_z")


@pytest.mark.parametrize("scheme", list(SchemeId))
def test_frame_tracking_matches_logical_product(scheme, rng):
    # Simulated action, with the accumulated frame undone, equals the
    # frame-free product of the logical gates.
    for _ in range(5):
        seq = sample_rb_sequence(int(rng.integers(1, 12)), rng)
        sched = compile_sequence(seq, scheme)
        logical = seq.net().array()
        undo = Rotation.about_z(-sched.frame_shift).matrix()
        cols = [undo @ propagate(QubitState(tuple(e)), sched, None).vector for e in np.eye(3)]
        assert np.allclose(np.column_stack(cols), logical, atol=1e-8)


def test_timing_table():
    table = rectangular(math.pi, math.pi / 2).timing_table().splitlines()
    assert table[0] == "start_time, duration, amplitude, phase, kind"
    assert table[1] == f"0, 8e-06, {OMEGA1_DEFAULT:.10g}, {math.pi / 2:.10g}, drive"
    lines = bb1_spread(math.pi / 2).timing_table().splitlines()[1:]
    starts = [float(line.split(",")[0]) for line in lines]
    durs = [float(line.split(",")[1]) for line in lines]
    assert np.allclose(np.diff(starts), durs[:-1])
    assert starts[-1] + durs[-1] == pytest.approx(4e-6 + 4 * 8e-6 + 4 * T_PI_DEFAULT)
