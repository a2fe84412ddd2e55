"""Single-qubit teleportation over a simulated Bell pair.

The three-qubit register is (message, bell_A, bell_B).  Sender applies
CNOT(message -> bell_A) then H(message), measures qubits 0 and 1, and the
receiver fixes up bell_B with X (if the second bit is 1) then Z (if the
first bit is 1).  Noiseless, so the recovered state always has fidelity 1
with the message up to float rounding.

``teleport_weights`` moves a whole weight store by teleporting each angle's
carrier state in a fixed order and decoding it on the far side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qweights import QuantumWeightStore, decode_angle, encode_weight, state_expectations
from .statevec import (
    StateVector,
    apply_gate,
    cnot,
    collapse_qubits,
    fidelity,
    h,
    measure_qubits,
    tensor_product,
    x,
    z,
    zero_state,
)


class TransferError(RuntimeError):
    """A weight could not be moved; ``weight_index`` names the (layer, qubit, k) slot."""

    def __init__(self, message: str, weight_index: tuple[int, int, int] | None = None):
        super().__init__(message)
        self.weight_index = weight_index


@dataclass(frozen=True)
class TeleportRecord:
    """Outcome of one teleportation: measured bits, recovered state, fidelity."""

    bell_outcome: tuple[int, int]
    recovered_state: StateVector
    fidelity: float
    input_angle: float | None = None


def bell_pair() -> StateVector:
    """(|00> + |11>) / sqrt(2)."""
    state = apply_gate(zero_state(2), h(0))
    return apply_gate(state, cnot(0, 1))


def teleport_state(
    message: StateVector,
    rng: np.random.Generator | None = None,
    force_outcome: tuple[int, int] | None = None,
    input_angle: float | None = None,
) -> TeleportRecord:
    """Teleport a single-qubit state, sampling the Bell measurement from ``rng``.

    ``force_outcome`` pins the two measured bits instead (for tests that
    enumerate all four branches); exactly one of ``rng``/``force_outcome``
    is needed.
    """
    if message.num_qubits != 1:
        raise ValueError("teleportation moves exactly one qubit")
    if force_outcome is None and rng is None:
        raise ValueError("provide an rng or force an outcome")
    reg = tensor_product(message, bell_pair())
    reg = apply_gate(reg, cnot(0, 1))
    reg = apply_gate(reg, h(0))
    if force_outcome is not None:
        m1, m2 = force_outcome
        _, reg = collapse_qubits(reg, [0, 1], [m1, m2])
    else:
        (m1, m2), reg = measure_qubits(reg, [0, 1], rng)
    if m2:
        reg = apply_gate(reg, x(2))
    if m1:
        reg = apply_gate(reg, z(2))
    # Qubits 0 and 1 are collapsed to (m1, m2); slice out the receiver's qubit.
    block = reg.amplitudes.reshape(2, 2, 2)[m1, m2, :]
    recovered = StateVector(1, block)
    return TeleportRecord(
        bell_outcome=(m1, m2),
        recovered_state=recovered,
        fidelity=fidelity(message, recovered),
        input_angle=input_angle,
    )


def teleport_weights(store: QuantumWeightStore, rng: np.random.Generator) -> QuantumWeightStore:
    """Move every stored angle through its own Bell pair, in (layer, qubit, k) order.

    Returns a new store with the decoded angles; raises TransferError naming
    the first weight whose carrier failed to decode.
    """
    out = np.empty_like(store.angles)
    for layer in range(store.angles.shape[0]):
        for q in range(store.angles.shape[1]):
            for k in range(3):
                angle = float(store.angles[layer, q, k])
                record = teleport_state(encode_weight(angle), rng, input_angle=angle)
                try:
                    out[layer, q, k] = decode_angle(*state_expectations(record.recovered_state))
                except ValueError as exc:
                    raise TransferError(
                        f"weight (layer={layer}, qubit={q}, k={k}) failed to decode: {exc}",
                        weight_index=(layer, q, k),
                    ) from exc
    return store.with_angles(out)
