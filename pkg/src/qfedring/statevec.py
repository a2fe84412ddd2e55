"""Dense statevector simulation for few-qubit registers.

Basis convention: qubit 0 is the most significant bit of the basis index,
so a two-qubit amplitude vector is ordered |00>, |01>, |10>, |11> and a
state built as ``tensor_product(a, b)`` puts ``a``'s qubits in the high
bits.  This convention is fixed here and used by every other module.

States are immutable values: every operation returns a fresh StateVector
and never mutates its input, which keeps snapshots taken by the federated
orchestration (and by tests) unambiguous.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_QUBITS = 12

_NORM_TOL = 1e-10
_MIN_OUTCOME_PROB = 1e-15

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _rx_matrix(a: float) -> np.ndarray:
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry_matrix(a: float) -> np.ndarray:
    c, s = math.cos(a / 2), math.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz_matrix(a: float) -> np.ndarray:
    return np.array([[cmath.exp(-0.5j * a), 0], [0, cmath.exp(0.5j * a)]])


def _rot_matrix(phi: float, theta: float, omega: float) -> np.ndarray:
    # RZ(omega) @ RY(theta) @ RZ(phi): RZ(phi) hits the state first.
    return _rz_matrix(omega) @ _ry_matrix(theta) @ _rz_matrix(phi)


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitudes over the 2**num_qubits basis states."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.num_qubits, int) or not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {self.num_qubits!r}")
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"amplitudes are not normalized (L2 norm {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real**2 + a.imag**2


def zero_state(num_qubits: int) -> StateVector:
    """|0...0> on the given number of qubits."""
    if not isinstance(num_qubits, int) or not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits!r}")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def from_amplitudes(amplitudes) -> StateVector:
    """Build a StateVector from a raw amplitude sequence, inferring the qubit count."""
    amps = np.asarray(amplitudes, dtype=complex)
    n = int(round(math.log2(amps.size))) if amps.size else 0
    if amps.size == 0 or 2**n != amps.size:
        raise ValueError(f"amplitude count {amps.size} is not a power of two")
    return StateVector(n, amps)


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    """Joint state with ``a``'s qubits in the high bits of the basis index."""
    if a.num_qubits + b.num_qubits > MAX_QUBITS:
        raise ValueError("combined register exceeds the qubit limit")
    return StateVector(a.num_qubits + b.num_qubits, np.kron(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, insensitive to global phase."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("states act on different register sizes")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


_GATE_NUM_ANGLES = {"RX": 1, "ROT": 3, "CNOT": 0, "H": 0, "X": 0, "Z": 0}


@dataclass(frozen=True)
class GateOp:
    """One gate: a kind, a target qubit, an optional control, and its angles."""

    kind: str
    target: int
    control: int | None = None
    angles: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in _GATE_NUM_ANGLES:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.angles) != _GATE_NUM_ANGLES[self.kind]:
            raise ValueError(
                f"{self.kind} takes {_GATE_NUM_ANGLES[self.kind]} angle(s), got {len(self.angles)}"
            )
        if not all(math.isfinite(a) for a in self.angles):
            raise ValueError(f"{self.kind} angles must be finite, got {self.angles}")
        if self.target < 0:
            raise ValueError(f"target index must be non-negative, got {self.target}")
        if self.kind == "CNOT":
            if self.control is None:
                raise ValueError("CNOT requires a control qubit")
            if self.control < 0:
                raise ValueError(f"control index must be non-negative, got {self.control}")
            if self.control == self.target:
                raise ValueError("CNOT control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind} takes no control qubit")


def rx(target: int, angle: float) -> GateOp:
    return GateOp("RX", target, angles=(float(angle),))


def rot(target: int, phi: float, theta: float, omega: float) -> GateOp:
    return GateOp("ROT", target, angles=(float(phi), float(theta), float(omega)))


def cnot(control: int, target: int) -> GateOp:
    return GateOp("CNOT", target, control=control)


def h(target: int) -> GateOp:
    return GateOp("H", target)


def x(target: int) -> GateOp:
    return GateOp("X", target)


def z(target: int) -> GateOp:
    return GateOp("Z", target)


def gate_matrix(gate: GateOp) -> np.ndarray:
    """Dense matrix of the gate: 2x2, or 4x4 for CNOT (control on the high bit)."""
    if gate.kind == "RX":
        return _rx_matrix(gate.angles[0])
    if gate.kind == "ROT":
        return _rot_matrix(*gate.angles)
    if gate.kind == "H":
        return _H.copy()
    if gate.kind == "X":
        return _X.copy()
    if gate.kind == "Z":
        return _Z.copy()
    # CNOT on the (control, target) pair ordered control-first
    m = np.eye(4, dtype=complex)
    m[[2, 3]] = m[[3, 2]]
    return m


def _check_qubit(index: int, num_qubits: int, role: str) -> None:
    if not 0 <= index < num_qubits:
        raise ValueError(f"{role} qubit {index} out of range for {num_qubits}-qubit state")


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Return U|state>; the input state is left untouched."""
    n = state.num_qubits
    _check_qubit(gate.target, n, "target")
    if gate.kind == "CNOT":
        _check_qubit(gate.control, n, "control")
        t = state.amplitudes.reshape((2,) * n).copy()
        sel: list = [slice(None)] * n
        sel[gate.control] = 1
        tgt_axis = gate.target - 1 if gate.target > gate.control else gate.target
        t[tuple(sel)] = np.flip(t[tuple(sel)], axis=tgt_axis)
        amps = t.reshape(-1)
    else:
        mat = gate_matrix(gate)
        t = state.amplitudes.reshape((2,) * n)
        t = np.moveaxis(t, gate.target, -1)
        t = t @ mat.T
        amps = np.moveaxis(t, -1, gate.target).reshape(-1)
    return StateVector(n, amps)


@dataclass(frozen=True)
class ObservableSpec:
    """Single-qubit Pauli-Z observable on a target qubit."""

    kind: str = "PAULI_Z"
    target: int = 0

    def __post_init__(self) -> None:
        if self.kind != "PAULI_Z":
            raise ValueError(f"unsupported observable kind {self.kind!r}")
        if self.target < 0:
            raise ValueError(f"target index must be non-negative, got {self.target}")


def pauli_z(target: int) -> ObservableSpec:
    return ObservableSpec("PAULI_Z", target)


@lru_cache(maxsize=64)
def _z_signs(num_qubits: int, target: int) -> np.ndarray:
    bits = (np.arange(2**num_qubits) >> (num_qubits - 1 - target)) & 1
    signs = 1.0 - 2.0 * bits
    signs.flags.writeable = False
    return signs


def expectation(state: StateVector, obs: ObservableSpec) -> float:
    """<state| Z_target |state>, computed exactly from the amplitudes."""
    _check_qubit(obs.target, state.num_qubits, "observable target")
    return float(_z_signs(state.num_qubits, obs.target) @ state.probabilities())


def _bit_probability(amps: np.ndarray, num_qubits: int, target: int) -> float:
    """Probability that ``target`` reads 1."""
    t = (amps.real**2 + amps.imag**2).reshape((2,) * num_qubits)
    sel: list = [slice(None)] * num_qubits
    sel[target] = 1
    return float(t[tuple(sel)].sum())


def _project(amps: np.ndarray, num_qubits: int, target: int, outcome: int, prob: float) -> np.ndarray:
    t = amps.reshape((2,) * num_qubits).copy()
    sel: list = [slice(None)] * num_qubits
    sel[target] = 1 - outcome
    t[tuple(sel)] = 0.0
    return t.reshape(-1) / math.sqrt(prob)


def measure_qubits(
    state: StateVector, targets: list[int], rng: np.random.Generator
) -> tuple[list[int], StateVector]:
    """Measure the targets in order, sampling outcomes from the Born rule.

    Returns the outcome bits and the renormalized post-measurement state.
    Deterministic for a given rng state; outcomes whose probability falls
    below 1e-15 are never drawn.
    """
    if len(set(targets)) != len(targets):
        raise ValueError(f"measurement targets must be distinct, got {targets}")
    for q in targets:
        _check_qubit(q, state.num_qubits, "measurement")
    amps = state.amplitudes
    outcomes: list[int] = []
    for q in targets:
        p1 = _bit_probability(amps, state.num_qubits, q)
        if p1 < _MIN_OUTCOME_PROB:
            outcome = 0
        elif p1 > 1.0 - _MIN_OUTCOME_PROB:
            outcome = 1
        else:
            outcome = 1 if rng.random() < p1 else 0
        amps = _project(amps, state.num_qubits, q, outcome, p1 if outcome else 1.0 - p1)
        outcomes.append(outcome)
    return outcomes, StateVector(state.num_qubits, amps)


def collapse_qubits(
    state: StateVector, targets: list[int], outcomes: list[int]
) -> tuple[float, StateVector]:
    """Force the given measurement outcomes, returning their joint probability.

    Companion to measure_qubits for tests and protocols that enumerate
    branches explicitly; rejects branches of probability below 1e-15.
    """
    if len(targets) != len(outcomes):
        raise ValueError("targets and outcomes must pair up")
    if len(set(targets)) != len(targets):
        raise ValueError(f"collapse targets must be distinct, got {targets}")
    amps = state.amplitudes
    joint = 1.0
    for q, outcome in zip(targets, outcomes):
        _check_qubit(q, state.num_qubits, "collapse")
        if outcome not in (0, 1):
            raise ValueError(f"outcome bits must be 0 or 1, got {outcome!r}")
        p1 = _bit_probability(amps, state.num_qubits, q)
        p = p1 if outcome else 1.0 - p1
        if p < _MIN_OUTCOME_PROB:
            raise ValueError(f"outcome {outcome} on qubit {q} has probability {p:.3e}")
        amps = _project(amps, state.num_qubits, q, outcome, p)
        joint *= p
    return joint, StateVector(state.num_qubits, amps)
