"""Single-qubit Clifford bookkeeping for randomized benchmarking.

Clifford elements are represented exactly by their SO(3) image, a signed
permutation matrix.  Each benchmarking step is ``C = P G`` with ``G`` a
pi/2 rotation about a coordinate axis (applied first) and ``P`` the identity
or a pi rotation about a coordinate axis.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .su2 import Rotation

_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


@dataclass(frozen=True)
class CliffordElement:
    """Signed 3x3 permutation matrix with determinant +1."""

    matrix: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (3, 3) or not np.all(np.isin(m, (-1, 0, 1))):
            raise InvalidInputError("Clifford matrix must be 3x3 with entries in {0, +-1}")
        if not (np.all(np.abs(m).sum(axis=0) == 1) and np.all(np.abs(m).sum(axis=1) == 1)):
            raise InvalidInputError("Clifford matrix must be a signed permutation")
        if round(np.linalg.det(m)) != 1:
            raise InvalidInputError("Clifford matrix must have determinant +1")
        object.__setattr__(self, "matrix", tuple(tuple(int(v) for v in row) for row in m))

    @classmethod
    def from_array(cls, m) -> "CliffordElement":
        return cls(tuple(tuple(int(v) for v in row) for row in np.rint(np.asarray(m)).astype(int)))

    @classmethod
    def from_rotation(cls, r: Rotation) -> "CliffordElement":
        return cls.from_array(r.matrix())

    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=int)

    @property
    def z_sign(self) -> int:
        """Sign with which the element maps +z (0 if it leaves the z axis)."""
        return self.matrix[2][2]

    def rotation(self) -> Rotation:
        return Rotation.from_matrix(self.array())

    def __matmul__(self, other: "CliffordElement") -> "CliffordElement":
        return compose(self, other)


IDENTITY = CliffordElement(((1, 0, 0), (0, 1, 0), (0, 0, 1)))


@functools.lru_cache(maxsize=None)
def compose(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    """``a o b``: apply ``b`` first, then ``a``."""
    return CliffordElement.from_array(a.array() @ b.array())


@functools.lru_cache(maxsize=None)
def invert(c: CliffordElement) -> CliffordElement:
    return CliffordElement.from_array(c.array().T)


def _all_elements() -> tuple[CliffordElement, ...]:
    out = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3), dtype=int)
            for row, (col, s) in enumerate(zip(perm, signs)):
                m[row, col] = s
            if round(np.linalg.det(m)) == 1:
                out.append(CliffordElement.from_array(m))
    return tuple(out)


CLIFFORD_GROUP = _all_elements()


@dataclass(frozen=True)
class AxisGate:
    """Rotation by ``angle`` (pi or pi/2) about ``sign * axis``; ``axis`` "I" is the identity."""

    axis: str
    sign: int
    angle: float

    @property
    def label(self) -> str:
        s = "+" if self.sign > 0 else "-"
        if self.axis == "I":
            return f"I{s}"
        return f"{s}{self.axis.upper()}{round(np.degrees(self.angle))}"

    @property
    def is_identity(self) -> bool:
        return self.axis == "I"

    @property
    def is_virtual(self) -> bool:
        """True when no drive pulse is needed (identity or z rotation)."""
        return self.axis in ("I", "z")

    @property
    def phase(self) -> float:
        """Drive phase of the rotation axis for x/y gates."""
        if self.axis == "x":
            return 0.0 if self.sign > 0 else np.pi
        if self.axis == "y":
            return np.pi / 2 if self.sign > 0 else 3 * np.pi / 2
        raise InvalidInputError(f"{self.label} has no drive phase")

    def rotation(self) -> Rotation:
        if self.axis == "I":
            return Rotation.identity()
        return Rotation(_AXES[self.axis], self.sign * self.angle)

    @functools.cached_property
    def clifford(self) -> CliffordElement:
        return CliffordElement.from_rotation(self.rotation())


def PGate(axis: str, sign: int = 1) -> AxisGate:
    if axis not in ("I", "x", "y", "z"):
        raise InvalidInputError(f"unknown P axis {axis!r}")
    return AxisGate(axis, sign, 0.0 if axis == "I" else np.pi)


def GGate(axis: str, sign: int = 1) -> AxisGate:
    if axis not in ("x", "y", "z"):
        raise InvalidInputError(f"unknown G axis {axis!r}")
    return AxisGate(axis, sign, np.pi / 2)


P_GATES = tuple(PGate(a, s) for a in ("I", "x", "y", "z") for s in (1, -1))
G_GATES = tuple(GGate(a, s) for a in ("x", "y", "z") for s in (1, -1))
_BY_LABEL = {g.label: g for g in P_GATES + G_GATES}


def gate_from_label(label: str) -> AxisGate:
    try:
        return _BY_LABEL[label]
    except KeyError:
        raise InvalidInputError(f"unknown gate mnemonic {label!r}") from None


def pauli_gate(c: CliffordElement) -> AxisGate:
    """The ``+`` P gate whose SO(3) image is the Pauli element ``c``."""
    for g in P_GATES:
        if g.sign > 0 and g.clifford == c:
            return g
    raise InvalidInputError("element is not a Pauli")


@functools.lru_cache(maxsize=None)
def _decompose(c: CliffordElement) -> tuple:
    return tuple(decompose_uncached(c))


def decompose(c: CliffordElement) -> list[tuple[AxisGate, tuple[AxisGate, ...]]]:
    """Cached :func:`decompose_uncached`."""
    return list(_decompose(c))


def decompose_uncached(c: CliffordElement) -> list[tuple[AxisGate, tuple[AxisGate, ...]]]:
    """All shortest decompositions ``c = P o G_k o ... o G_1``.

    The 48 products ``P o G`` only reach the 12 elements outside the cosets
    of the identity and of the 120-degree rotations; the remaining 12 need a
    second pi/2 rotation.  Returned as ``(P, (G_1, ..., G_k))`` in time order.
    """
    out = [(p, (g,)) for p in P_GATES for g in G_GATES if compose(p.clifford, g.clifford) == c]
    if out:
        return out
    for p in P_GATES:
        for g1 in G_GATES:
            for g2 in G_GATES:
                if compose(p.clifford, compose(g2.clifford, g1.clifford)) == c:
                    out.append((p, (g1, g2)))
    return out


@dataclass(frozen=True)
class Recovery:
    """Final ``P_b o R o P_a`` block; ``r_pauli o r_gates`` realizes ``R``."""

    p_first: AxisGate
    r: CliffordElement
    r_gates: tuple[AxisGate, ...]
    r_pauli: AxisGate
    p_last: AxisGate


@dataclass(frozen=True)
class RBSequence:
    gates: tuple[tuple[AxisGate, AxisGate], ...]  # (P, G) per step
    recovery: Recovery
    m: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "m", len(self.gates))

    def accumulated(self) -> CliffordElement:
        acc = IDENTITY
        for p, g in self.gates:
            acc = compose(p.clifford, compose(g.clifford, acc))
        return acc

    def net(self) -> CliffordElement:
        """Ideal net action of gates plus recovery."""
        rec = self.recovery
        c = compose(rec.p_first.clifford, self.accumulated())
        for g in rec.r_gates:
            c = compose(g.clifford, c)
        c = compose(rec.r_pauli.clifford, c)
        return compose(rec.p_last.clifford, c)

    def to_line(self) -> str:
        """Text form, e.g. ``+X180/-Y90 I+/+Z90 | Pa=+Z180 R=-X180/+X90 Pb=I-``.

        Steps are written ``P/G`` as in ``C = P G``; ``R`` lists its pi/2
        rotations in time order after the slash.
        """
        steps = " ".join(f"{p.label}/{g.label}" for p, g in self.gates)
        rec = self.recovery
        r = rec.r_pauli.label + "/" + ",".join(g.label for g in rec.r_gates)
        return f"{steps} | Pa={rec.p_first.label} R={r} Pb={rec.p_last.label}"

    @classmethod
    def from_line(cls, line: str) -> "RBSequence":
        try:
            body, tail = line.split("|")
            gates = []
            for tok in body.split():
                p, g = tok.split("/")
                gates.append((gate_from_label(p), gate_from_label(g)))
            fields = dict(part.split("=", 1) for part in tail.split())
            r_p, r_g = fields["R"].split("/")
            r_gates = tuple(gate_from_label(x) for x in r_g.split(","))
            r_pauli = gate_from_label(r_p)
            r = r_pauli.clifford
            for g in reversed(r_gates):
                r = compose(r, g.clifford)
            rec = Recovery(gate_from_label(fields["Pa"]), r, r_gates, r_pauli,
                           gate_from_label(fields["Pb"]))
        except (ValueError, KeyError) as exc:
            raise InvalidInputError(f"malformed sequence line: {line!r}") from exc
        return cls(tuple(gates), rec)


def sample_rb_sequence(m: int, rng: np.random.Generator) -> RBSequence:
    """Draw ``m`` uniform (P, G) steps and the randomized recovery.

    ``R`` inverts everything up to and including ``P_a``, so the ideal net
    action is the random Pauli ``P_b``; its z sign is the readout sign.
    """
    if m < 1:
        raise InvalidInputError("sequence length m must be >= 1")
    idx = rng.integers(0, len(P_GATES) * len(G_GATES), size=m)
    gates = tuple((P_GATES[i // len(G_GATES)], G_GATES[i % len(G_GATES)]) for i in idx)
    acc = IDENTITY
    for p, g in gates:
        acc = compose(p.clifford, compose(g.clifford, acc))
    p_first = P_GATES[rng.integers(len(P_GATES))]
    p_last = P_GATES[rng.integers(len(P_GATES))]
    r = invert(compose(p_first.clifford, acc))
    options = decompose(r)
    r_pauli, r_gates = options[rng.integers(len(options))]
    return RBSequence(gates, Recovery(p_first, r, r_gates, r_pauli, p_last))


def readout_sign(seq: RBSequence) -> int:
    """Ideal sign of the final z projection (+1 or -1)."""
    sign = seq.net().z_sign
    if sign == 0:
        raise InvalidInputError("sequence does not return z to +-z")
    return sign


@dataclass(frozen=True)
class PauliFrame:
    """Software rotating frame: drive phases are emitted as ``nominal + angle``."""

    angle: float = 0.0

    def emit(self, phase: float) -> float:
        return phase + self.angle


def frame_advance(f: PauliFrame, z_angle: float) -> PauliFrame:
    """Add ``z_angle`` to the frame, wrapped to ``[0, 2 pi)``."""
    return PauliFrame(float(np.mod(f.angle + z_angle, 2 * np.pi)))
