"""Variational circuit classifier: RX feature encoding, ring-entangled
rotation layers, per-qubit Pauli-Z readout.

Gradients use the two-point parameter shift (pi/2 shift, 1/2 coefficient),
which is exact for these rotation gates.  ``forward``/``gradient`` walk the
simulator gate by gate and define the semantics; ``forward_batch`` and
``gradient_batch`` are algebraically identical two-qubit fast paths used by
the training loops, and the tests pin them to the gate-by-gate versions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .statevec import (
    StateVector,
    _rot_matrix,
    apply_gate,
    cnot,
    expectation,
    pauli_z,
    rot,
    rx,
    zero_state,
)


@dataclass(frozen=True)
class ShiftRule:
    """Two-point shift rule: grad = coefficient * (f(p + shift) - f(p - shift))."""

    shift: float = math.pi / 2
    coefficient: float = 0.5


SHIFT_RULE = ShiftRule()


@dataclass(frozen=True)
class EncoderSpec:
    kind: str = "VARIATIONAL_RX"

    def __post_init__(self) -> None:
        if self.kind != "VARIATIONAL_RX":
            raise ValueError(f"unsupported encoder kind {self.kind!r}")


@dataclass(frozen=True)
class VqcModel:
    """Trainable circuit parameters, shaped [layer][qubit][(phi, theta, omega)]."""

    params: np.ndarray
    num_qubits: int = 2
    encoder: EncoderSpec = field(default_factory=EncoderSpec)

    def __post_init__(self) -> None:
        p = np.array(self.params, dtype=float)
        if p.ndim != 3 or p.shape[1:] != (self.num_qubits, 3) or p.shape[0] < 1:
            raise ValueError(
                f"params must have shape (layers, {self.num_qubits}, 3) with layers >= 1, "
                f"got {p.shape}"
            )
        if not np.all(np.isfinite(p)):
            raise ValueError("params must be finite")
        p.flags.writeable = False
        object.__setattr__(self, "params", p)

    @property
    def num_layers(self) -> int:
        return self.params.shape[0]

    def with_params(self, params: np.ndarray) -> "VqcModel":
        return replace(self, params=params)


def init_model(rng: np.random.Generator, num_layers: int = 2, num_qubits: int = 2) -> VqcModel:
    """Fresh model with angles drawn uniformly from [-pi/4, pi/4]."""
    if num_layers < 1:
        raise ValueError(f"num_layers must be >= 1, got {num_layers}")
    params = rng.uniform(-math.pi / 4, math.pi / 4, size=(num_layers, num_qubits, 3))
    return VqcModel(params, num_qubits=num_qubits)


def entangler_pairs(num_qubits: int) -> list[tuple[int, int]]:
    """Ring of CNOTs, each qubit controlling its successor (two qubits: 0->1, 1->0)."""
    if num_qubits < 2:
        return []
    return [(q, (q + 1) % num_qubits) for q in range(num_qubits)]


def encode(model: VqcModel, features) -> StateVector:
    """RX(feature) on each qubit of |0...0>; one feature per qubit."""
    feats = np.asarray(features, dtype=float)
    if feats.shape != (model.num_qubits,):
        raise ValueError(f"expected {model.num_qubits} features, got shape {feats.shape}")
    if not np.all(np.isfinite(feats)):
        raise ValueError("features must be finite")
    state = zero_state(model.num_qubits)
    for q, angle in enumerate(feats):
        state = apply_gate(state, rx(q, angle))
    return state


def _run_layers(state: StateVector, params: np.ndarray) -> StateVector:
    num_qubits = params.shape[1]
    for layer in params:
        for control, target in entangler_pairs(num_qubits):
            state = apply_gate(state, cnot(control, target))
        for q in range(num_qubits):
            state = apply_gate(state, rot(q, *layer[q]))
    return state


def forward(model: VqcModel, features) -> np.ndarray:
    """Logits: <Z_q> for each qubit q, each in [-1, 1]."""
    state = _run_layers(encode(model, features), model.params)
    return np.array([expectation(state, pauli_z(q)) for q in range(model.num_qubits)])


def gradient(model: VqcModel, features, upstream) -> np.ndarray:
    """Parameter-shift gradient of upstream . logits, one array entry per angle.

    Each scalar parameter costs exactly two full shifted forward passes.
    """
    up = np.asarray(upstream, dtype=float)
    if up.shape != (model.num_qubits,):
        raise ValueError(f"upstream must have shape ({model.num_qubits},), got {up.shape}")
    if not np.all(np.isfinite(up)):
        raise ValueError("upstream weights must be finite")
    grads = np.zeros_like(model.params)
    for layer in range(model.num_layers):
        for q in range(model.num_qubits):
            for k in range(3):
                plus = np.array(model.params)
                minus = np.array(model.params)
                plus[layer, q, k] += SHIFT_RULE.shift
                minus[layer, q, k] -= SHIFT_RULE.shift
                f_plus = forward(model.with_params(plus), features)
                f_minus = forward(model.with_params(minus), features)
                grads[layer, q, k] = up @ (SHIFT_RULE.coefficient * (f_plus - f_minus))
    return grads


# ---------------------------------------------------------------------------
# Two-qubit batched fast path.  Amplitude order |00>, |01>, |10>, |11>.

_CNOT_01 = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_CNOT_10 = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)
# CNOT(0->1) is applied first, so it sits rightmost in the product.
_ENTANGLER_2Q = _CNOT_10 @ _CNOT_01


def _layer_unitary(layer_params: np.ndarray) -> np.ndarray:
    r0 = _rot_matrix(*layer_params[0])
    r1 = _rot_matrix(*layer_params[1])
    return np.kron(r0, r1) @ _ENTANGLER_2Q


def _encode_batch(features: np.ndarray) -> np.ndarray:
    """Product-state amplitudes of RX(x1) x RX(x2) on |00>, one row per sample."""
    half = features / 2.0
    c, s = np.cos(half), np.sin(half)
    top = np.stack([c[:, 0], -1j * s[:, 0]], axis=1)
    bot = np.stack([c[:, 1], -1j * s[:, 1]], axis=1)
    return np.einsum("bi,bj->bij", top, bot).reshape(-1, 4)


def _readout_2q(psi: np.ndarray) -> np.ndarray:
    p = psi.real**2 + psi.imag**2
    z0 = p[:, 0] + p[:, 1] - p[:, 2] - p[:, 3]
    z1 = p[:, 0] - p[:, 1] + p[:, 2] - p[:, 3]
    return np.stack([z0, z1], axis=1)


def _check_batch(params: np.ndarray, features) -> np.ndarray:
    if params.ndim != 3 or params.shape[1:] != (2, 3):
        raise ValueError(f"batched path supports (layers, 2, 3) params, got {params.shape}")
    feats = np.asarray(features, dtype=float)
    if feats.ndim != 2 or feats.shape[1] != 2:
        raise ValueError(f"expected features of shape (batch, 2), got {feats.shape}")
    return feats


def forward_batch(params: np.ndarray, features) -> np.ndarray:
    """Logits for a whole batch at once; rows match forward() to float precision."""
    feats = _check_batch(params, features)
    psi = _encode_batch(feats)
    for layer in params:
        psi = psi @ _layer_unitary(layer).T
    return _readout_2q(psi)


def gradient_batch(params: np.ndarray, features, upstream) -> np.ndarray:
    """Sum over the batch of per-sample parameter-shift gradients.

    upstream has shape (batch, 2); the caller divides by the batch size when
    it wants a mean.  Matches summing gradient() over the rows.
    """
    feats = _check_batch(params, features)
    up = np.asarray(upstream, dtype=float)
    if up.shape != (feats.shape[0], 2):
        raise ValueError(f"upstream must have shape {(feats.shape[0], 2)}, got {up.shape}")
    psi0 = _encode_batch(feats)
    base = [_layer_unitary(layer) for layer in params]
    grads = np.zeros_like(params)
    for layer in range(params.shape[0]):
        for q in range(2):
            for k in range(3):
                shifted = np.array(params[layer])
                shifted[q, k] += SHIFT_RULE.shift
                f_plus = _eval_with_layer(psi0, base, layer, _layer_unitary(shifted))
                shifted[q, k] -= 2.0 * SHIFT_RULE.shift
                f_minus = _eval_with_layer(psi0, base, layer, _layer_unitary(shifted))
                delta = SHIFT_RULE.coefficient * (f_plus - f_minus)
                grads[layer, q, k] = float(np.sum(up * delta))
    return grads


def _eval_with_layer(
    psi0: np.ndarray, base: list[np.ndarray], index: int, unitary: np.ndarray
) -> np.ndarray:
    psi = psi0
    for i, layer_u in enumerate(base):
        psi = psi @ (unitary.T if i == index else layer_u.T)
    return _readout_2q(psi)
