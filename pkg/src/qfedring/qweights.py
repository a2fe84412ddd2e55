"""Circuit weights held as single-qubit states instead of raw floats.

Each weight is an angle ``a``; the usable parameter value is gamma * <Z> of
RX(a)|0>, read out through the simulator rather than computed as gamma*cos(a)
directly, so the value path is the same one the teleportation transport acts
on.  Gradients with respect to the stored angles follow by one more
application of the parameter-shift rule through the encoding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .statevec import StateVector, apply_gate, expectation, pauli_z, rx, zero_state
from .vqc import SHIFT_RULE

ANGLE_INIT_CENTER = math.pi / 2
ANGLE_INIT_HALF_WIDTH = 0.5

_PURITY_TOL = 1e-6


@dataclass(frozen=True)
class QuantumWeightStore:
    """Angles shaped like circuit params [layer][qubit][3], plus the value scale."""

    angles: np.ndarray
    gamma: float = math.pi

    def __post_init__(self) -> None:
        a = np.array(self.angles, dtype=float)
        if a.ndim != 3 or a.shape[2] != 3 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"angles must have shape (layers, qubits, 3), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("angles must be finite")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma!r}")
        a.flags.writeable = False
        object.__setattr__(self, "angles", a)

    @property
    def num_layers(self) -> int:
        return self.angles.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.angles.shape[1]

    def with_angles(self, angles: np.ndarray) -> "QuantumWeightStore":
        return replace(self, angles=angles)


def init_store(
    rng: np.random.Generator,
    num_layers: int = 2,
    num_qubits: int = 2,
    gamma: float = math.pi,
) -> QuantumWeightStore:
    """Angles drawn uniformly around pi/2, where <Z> crosses zero at full slope."""
    if num_layers < 1:
        raise ValueError(f"num_layers must be >= 1, got {num_layers}")
    lo = ANGLE_INIT_CENTER - ANGLE_INIT_HALF_WIDTH
    hi = ANGLE_INIT_CENTER + ANGLE_INIT_HALF_WIDTH
    angles = rng.uniform(lo, hi, size=(num_layers, num_qubits, 3))
    return QuantumWeightStore(angles, gamma=gamma)


def encode_weight(angle: float) -> StateVector:
    """The carrier state RX(angle)|0> for one stored weight."""
    return apply_gate(zero_state(1), rx(0, float(angle)))


def _encoded_z(angle: float) -> float:
    return expectation(encode_weight(angle), pauli_z(0))


def materialize(store: QuantumWeightStore) -> np.ndarray:
    """Effective circuit parameters gamma * <Z>, one per stored angle."""
    flat = store.angles.reshape(-1)
    out = np.array([store.gamma * _encoded_z(a) for a in flat])
    return out.reshape(store.angles.shape)


def weight_gradient(store: QuantumWeightStore, circuit_grad: np.ndarray) -> np.ndarray:
    """Chain the circuit gradient back to the stored angles.

    The readout <Z>(a) obeys the same two-point shift rule as the circuit
    parameters, so the inner factor is evaluated as two shifted expectations
    rather than an analytic derivative.
    """
    cg = np.asarray(circuit_grad, dtype=float)
    if cg.shape != store.angles.shape:
        raise ValueError(f"circuit_grad shape {cg.shape} != angles shape {store.angles.shape}")
    if not np.all(np.isfinite(cg)):
        raise ValueError("circuit_grad must be finite")
    flat = store.angles.reshape(-1)
    inner = np.array(
        [
            SHIFT_RULE.coefficient
            * (_encoded_z(a + SHIFT_RULE.shift) - _encoded_z(a - SHIFT_RULE.shift))
            for a in flat
        ]
    ).reshape(store.angles.shape)
    return cg * store.gamma * inner


def state_expectations(state: StateVector) -> tuple[float, float]:
    """(<Z>, <Y>) of a single-qubit state.

    <Y> comes from a basis change: RX(pi/2)^dag Z RX(pi/2) = Y, so rotating
    the state by RX(pi/2) and reading Z gives it without a second observable.
    """
    if state.num_qubits != 1:
        raise ValueError("expected a single-qubit state")
    ez = expectation(state, pauli_z(0))
    ey = expectation(apply_gate(state, rx(0, math.pi / 2)), pauli_z(0))
    return ez, ey


def decode_angle(expect_z: float, expect_y: float) -> float:
    """Recover the stored angle from (<Z>, <Y>) of its carrier state.

    RX(a)|0> has <Z> = cos a and <Y> = -sin a, so the pair must sit on the
    unit circle; anything off it by more than 1e-6 means the carrier was not
    a clean RX encoding and is rejected.  Result lies in (-pi, pi].
    """
    residual = expect_z * expect_z + expect_y * expect_y - 1.0
    if abs(residual) > _PURITY_TOL:
        raise ValueError(
            f"expectation pair ({expect_z!r}, {expect_y!r}) is off the unit circle "
            f"by {residual:.3e}"
        )
    angle = math.atan2(-expect_y, expect_z)
    if angle <= -math.pi:
        angle = math.pi
    return angle


def canonical_angles(angles: np.ndarray) -> np.ndarray:
    """Wrap angles to the principal branch (-pi, pi] without changing any <Z> or <Y>.

    Applied after every optimizer step so that stored angles stay on the same
    branch decode_angle returns, keeping transports interchangeable.  Angles
    already inside the branch pass through bit for bit.
    """
    a = np.asarray(angles, dtype=float)
    wrapped = np.mod(a + math.pi, 2.0 * math.pi) - math.pi
    wrapped = np.where(wrapped == -math.pi, math.pi, wrapped)
    return np.where((a > math.pi) | (a <= -math.pi), wrapped, a)
