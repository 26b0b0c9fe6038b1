import collections
import math

import numpy as np
import pytest

from rbdd.clifford import (
    CLIFFORD_GROUP,
    G_GATES,
    IDENTITY,
    P_GATES,
    GGate,
    PauliFrame,
    PGate,
    RBSequence,
    compose,
    decompose,
    frame_advance,
    invert,
    readout_sign,
    sample_rb_sequence,
)
from rbdd.errors import InvalidInputError
from rbdd.su2 import Rotation, unitary_to_so3


def test_group_has_24_distinct_rotations():
    assert len(set(CLIFFORD_GROUP)) == 24
    for c in CLIFFORD_GROUP:
        m = c.array()
        assert np.array_equal(m @ m.T, np.eye(3, dtype=int))
        assert round(np.linalg.det(m)) == 1


def test_group_closed_under_compose_and_invert():
    group = set(CLIFFORD_GROUP)
    for a in CLIFFORD_GROUP:
        assert invert(a) in group
        assert compose(a, invert(a)) == IDENTITY
        for b in CLIFFORD_GROUP:
            assert compose(a, b) in group


def test_identity_composition():
    for c in CLIFFORD_GROUP:
        assert compose(IDENTITY, c) == c


def test_x90_twice_is_x180():
    x90 = GGate("x").clifford
    assert compose(x90, x90) == PGate("x").clifford


def test_inverse_examples():
    assert invert(IDENTITY) == IDENTITY
    for axis in "xyz":
        p = PGate(axis).clifford
        assert invert(p) == p
    assert invert(GGate("x").clifford) == GGate("x", -1).clifford


def test_gate_sets_sizes():
    assert len(P_GATES) == 8
    assert len(G_GATES) == 6
    assert len({g.clifford for g in P_GATES}) == 4


def test_pg_products_cover_half_the_group():
    # The ±pi/2 rotations about one axis differ by a Pauli, so the 48 P G
    # products hit 12 elements four times each; they still generate all 24.
    counts = collections.Counter(compose(p.clifford, g.clifford) for p in P_GATES for g in G_GATES)
    assert len(counts) == 12
    assert set(counts.values()) == {4}
    closure = set(counts)
    while True:
        new = {compose(a, b) for a in closure for b in closure} | closure
        if new == closure:
            break
        closure = new
    assert closure == set(CLIFFORD_GROUP)


def test_every_element_decomposes():
    for c in CLIFFORD_GROUP:
        options = decompose(c)
        assert options
        for p, gs in options:
            acc = IDENTITY
            for g in gs:
                acc = compose(g.clifford, acc)
            assert compose(p.clifford, acc) == c
        assert len({len(gs) for _, gs in options}) == 1


def test_clifford_matches_unitary_image():
    for g in P_GATES + G_GATES:
        assert np.allclose(g.clifford.array(), unitary_to_so3(g.rotation().unitary()), atol=1e-12)


def test_single_step_sequence_returns_z(rng):
    seq = sample_rb_sequence(1, rng)
    assert abs(seq.net().z_sign) == 1
    assert readout_sign(seq) == seq.net().z_sign


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_recovery_small_m(m, rng):
    for _ in range(400):
        seq = sample_rb_sequence(m, rng)
        net = seq.net().array()
        assert abs(net[2, 2]) == 1
        # Net action is a Pauli: diagonal.
        assert np.array_equal(np.abs(net), np.eye(3, dtype=int))


def test_recovery_random_long(rng):
    for _ in range(300):
        seq = sample_rb_sequence(int(rng.integers(1, 81)), rng)
        assert readout_sign(seq) == seq.recovery.p_last.clifford.z_sign


def test_readout_sign_matches_brute_force_rotation_product(rng):
    seq = sample_rb_sequence(80, rng)
    m = np.eye(3)
    for p, g in seq.gates:
        m = p.rotation().matrix() @ g.rotation().matrix() @ m
    rec = seq.recovery
    m = rec.p_first.rotation().matrix() @ m
    for g in rec.r_gates:
        m = g.rotation().matrix() @ m
    m = rec.p_last.rotation().matrix() @ rec.r_pauli.rotation().matrix() @ m
    assert readout_sign(seq) == int(round(m[2, 2]))


def test_identity_step_sign():
    ident = RBSequence.from_line("I+/+X90 | Pa=I+ R=I+/-X90 Pb=I+")
    assert readout_sign(ident) == 1
    flipped = RBSequence.from_line("I+/+X90 | Pa=I+ R=I+/-X90 Pb=+X180")
    assert readout_sign(flipped) == -1


def test_pg_draws_are_uniform():
    rng = np.random.default_rng(5)
    counts = collections.Counter()
    n_seq, m = 2500, 40
    for _ in range(n_seq):
        for p, g in sample_rb_sequence(m, rng).gates:
            counts[(p, g)] += 1
    n = n_seq * m
    assert len(counts) == 48
    p = 1 / 48
    sd = math.sqrt(n * p * (1 - p))
    for c in counts.values():
        assert abs(c - n * p) < 5 * sd
    chi2 = sum((c - n * p) ** 2 / (n * p) for c in counts.values())
    # 47 degrees of freedom; 99.9th percentile is about 82.7.
    assert chi2 < 82.7


def test_line_round_trip(rng):
    for m in (1, 7, 30):
        seq = sample_rb_sequence(m, rng)
        back = RBSequence.from_line(seq.to_line())
        assert back == seq


def test_malformed_line():
    with pytest.raises(InvalidInputError):
        RBSequence.from_line("+X90 | nonsense")


def test_frame_advance():
    f = frame_advance(PauliFrame(), math.pi)
    assert f.angle == pytest.approx(math.pi)
    f = frame_advance(f, math.pi)
    assert math.isclose(math.remainder(f.angle, 2 * math.pi), 0.0, abs_tol=1e-12)
    assert PauliFrame(0.5).emit(1.0) == pytest.approx(1.5)


def test_sample_rejects_empty():
    with pytest.raises(InvalidInputError):
        sample_rb_sequence(0, np.random.default_rng())
