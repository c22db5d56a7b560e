"""Exact simulation of small quantum circuits.

State vectors are complex amplitude arrays of length 2**n with little-endian
qubit ordering (qubit 0 = least significant bit of the basis index).  The
gate set is {RX, RY, RZ, U3, CX} with the rotation convention
R_P(theta) = exp(-i*theta*P/2) and U3(a, b, c) = R_Z(c) R_X(b) R_Z(a).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import GATE_CX, GATE_RX, GATE_RY, GATE_RZ
from .errors import ConfigError, UsageError

AXES = ("X", "Y", "Z")
MAX_QUBITS = 14

_ROTATION_CODE = {"RX": GATE_RX, "RY": GATE_RY, "RZ": GATE_RZ}
_AXIS_TO_KIND = {"X": "RX", "Y": "RY", "Z": "RZ"}


@dataclass
class StateVector:
    """Pure state of n qubits as a dense complex amplitude array."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ConfigError(
                f"amplitude array of length {self.amplitudes.shape} does not match "
                f"{self.n_qubits} qubits"
            )

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class GateOp:
    """A single gate: rotation (1 target, 1 angle), U3 (1 target, 3 angles)
    or CX (control, target)."""

    kind: str
    targets: tuple[int, ...]
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind in ("RX", "RY", "RZ"):
            if len(self.targets) != 1 or len(self.angles) != 1:
                raise ConfigError(f"{self.kind} takes 1 target and 1 angle")
        elif self.kind == "U3":
            if len(self.targets) != 1 or len(self.angles) != 3:
                raise ConfigError("U3 takes 1 target and 3 angles")
        elif self.kind == "CX":
            if len(self.targets) != 2 or self.angles:
                raise ConfigError("CX takes (control, target) and no angles")
            if self.targets[0] == self.targets[1]:
                raise ConfigError("CX control and target must differ")
        else:
            raise ConfigError(f"unknown gate kind {self.kind!r}")


@dataclass(frozen=True)
class PauliString:
    """Product of same-axis Pauli operators on a strictly increasing qubit tuple."""

    axis: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not 1 <= len(self.qubits) <= 3:
            raise ConfigError("Pauli string supports 1 to 3 factors")
        if any(b <= a for a, b in zip(self.qubits, self.qubits[1:])):
            raise ConfigError("qubit indices must be strictly increasing")

    @property
    def factors(self) -> tuple[tuple[int, str], ...]:
        return tuple((q, self.axis) for q in self.qubits)


@dataclass(frozen=True)
class ShotConfig:
    """Sampling setup: shots=None means exact expectation values from the
    wave function; coherent_sigma is the std-dev of Gaussian rotation-angle
    perturbations (0 = noiseless)."""

    shots: int | None = None
    coherent_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots must be a positive integer or None (exact)")
        if self.coherent_sigma < 0:
            raise ConfigError("coherent_sigma must be nonnegative")


def init_state(n_qubits: int) -> StateVector:
    """All-zeros computational basis state |0...0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def rotation_matrix(axis: str, theta: float) -> np.ndarray:
    """2x2 unitary exp(-i*theta*P/2) for P in {X, Y, Z}."""
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "Z":
        return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]])
    raise ConfigError(f"unknown rotation axis {axis!r}")


def gate_matrix(gate: GateOp) -> np.ndarray:
    """2x2 unitary of a single-qubit gate (rotations and U3)."""
    if gate.kind in ("RX", "RY", "RZ"):
        return rotation_matrix(gate.kind[1], gate.angles[0])
    if gate.kind == "U3":
        a, b, c = gate.angles
        return rotation_matrix("Z", c) @ rotation_matrix("X", b) @ rotation_matrix("Z", a)
    raise ConfigError(f"{gate.kind} has no single-qubit matrix")


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Apply one gate in place and return the state."""
    for q in gate.targets:
        if not 0 <= q < state.n_qubits:
            raise ConfigError(f"qubit index {q} out of range for {state.n_qubits} qubits")
    if gate.kind == "CX":
        _kernels.apply_cx(state.amplitudes, gate.targets[0], gate.targets[1])
    else:
        m = gate_matrix(gate)
        _kernels.apply_1q(state.amplitudes, gate.targets[0], m[0, 0], m[0, 1], m[1, 0], m[1, 1])
    return state


def apply_circuit(state: StateVector, gates: list[GateOp]) -> StateVector:
    for g in gates:
        apply_gate(state, g)
    return state


def _apply_pauli(amps: np.ndarray, axis: str, qubit: int) -> np.ndarray:
    """Return P_qubit |amps> for a single Pauli factor."""
    n = amps.shape[0]
    idx = np.arange(n)
    bit = (idx >> qubit) & 1
    if axis == "Z":
        return amps * (1 - 2 * bit)
    flipped = amps[idx ^ (1 << qubit)]
    if axis == "X":
        return flipped
    # Y: |0> -> i|1>, |1> -> -i|0>
    return flipped * np.where(bit == 1, 1j, -1j)


def expectation(state: StateVector, obs: PauliString) -> float:
    """Exact <psi|P|psi> for a same-axis Pauli product."""
    for q in obs.qubits:
        if q >= state.n_qubits:
            raise ConfigError(f"observable qubit {q} out of range")
    phi = state.amplitudes
    for q in obs.qubits:
        phi = _apply_pauli(phi, obs.axis, q)
    return float(np.real(np.vdot(state.amplitudes, phi)))


def basis_change_gates(n_qubits: int, axis: str) -> list[GateOp]:
    """Gates mapping the +1/-1 eigenbasis of the axis onto the Z basis:
    RY(-pi/2) per qubit for X, RX(pi/2) per qubit for Y, nothing for Z."""
    if axis == "X":
        return [GateOp("RY", (q,), (-np.pi / 2,)) for q in range(n_qubits)]
    if axis == "Y":
        return [GateOp("RX", (q,), (np.pi / 2,)) for q in range(n_qubits)]
    if axis == "Z":
        return []
    raise ConfigError(f"unknown measurement axis {axis!r}")


def born_probabilities(state: StateVector, axis: str) -> np.ndarray:
    """Outcome distribution of measuring all qubits in the given axis.

    Bit q of the outcome index is 0 for the +1 eigenvalue of the axis
    operator on qubit q and 1 for the -1 eigenvalue.
    """
    rotated = state.copy()
    apply_circuit(rotated, basis_change_gates(state.n_qubits, axis))
    probs = rotated.probabilities()
    probs = np.maximum(probs, 0.0)
    return probs / probs.sum()


def sample_basis(
    state: StateVector, axis: str, shots: int, rng: np.random.Generator
) -> dict[int, int]:
    """Draw a count table of all-qubit measurements in one axis.

    Keys are little-endian outcome indices, values are counts summing to
    ``shots``; the distribution is the Born distribution after the basis
    change rotation.
    """
    if shots < 1:
        raise ConfigError("shots must be >= 1")
    probs = born_probabilities(state, axis)
    counts = rng.multinomial(shots, probs)
    hit = np.nonzero(counts)[0]
    return {int(i): int(counts[i]) for i in hit}


def estimate_from_counts(counts: dict[int, int], obs: PauliString) -> float:
    """Expectation estimate from a same-axis count table: the shot-weighted
    mean of the product of +-1 outcome bits on the observable's qubits.

    Fractional weights are accepted, so passing Born probabilities gives the
    infinite-shot limit.
    """
    if not counts:
        raise UsageError("empty count table")
    keys = np.fromiter(counts.keys(), dtype=np.int64)
    vals = np.fromiter(counts.values(), dtype=np.float64)
    signs = np.ones(keys.shape[0])
    for q in obs.qubits:
        signs *= 1 - 2 * ((keys >> q) & 1)
    return float(np.sum(signs * vals) / np.sum(vals))


def perturb_angles(
    gates: list[GateOp], sigma: float, rng: np.random.Generator
) -> list[GateOp]:
    """Add N(0, sigma^2) draws to every rotation angle; CX gates pass through."""
    if sigma < 0:
        raise ConfigError("sigma must be nonnegative")
    if sigma == 0:
        return list(gates)
    out = []
    for g in gates:
        if g.kind == "CX":
            out.append(g)
        else:
            noisy = tuple(a + rng.normal(0.0, sigma) for a in g.angles)
            out.append(GateOp(g.kind, g.targets, noisy))
    return out


def gates_to_program(
    gates: list[GateOp],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Flatten a gate list into (kinds, targ_a, targ_b, angles) kernel arrays.

    U3 gates are decomposed into RZ, RX, RZ.
    """
    kinds, ta, tb, angles = [], [], [], []

    def push(kind_code, a, b, angle):
        kinds.append(kind_code)
        ta.append(a)
        tb.append(b)
        angles.append(angle)

    for g in gates:
        if g.kind == "CX":
            push(GATE_CX, g.targets[0], g.targets[1], 0.0)
        elif g.kind == "U3":
            a, b, c = g.angles
            q = g.targets[0]
            push(GATE_RZ, q, -1, a)
            push(GATE_RX, q, -1, b)
            push(GATE_RZ, q, -1, c)
        else:
            push(_ROTATION_CODE[g.kind], g.targets[0], -1, g.angles[0])
    return (
        np.asarray(kinds, dtype=np.int64),
        np.asarray(ta, dtype=np.int64),
        np.asarray(tb, dtype=np.int64),
        np.asarray(angles, dtype=np.float64),
    )


def run_program(state: StateVector, program) -> StateVector:
    """Apply a flattened gate program (from gates_to_program) in place."""
    kinds, ta, tb, angles = program
    _kernels.run_gates(state.amplitudes, kinds, ta, tb, angles)
    return state
