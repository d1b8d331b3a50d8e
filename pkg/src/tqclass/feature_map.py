"""Trainable quantum feature mappings with data re-uploading.

A layout is ``layers + 1`` rotation blocks (every block re-uploads the data)
with an entangler between consecutive blocks.  The combine rule is additive:
each rotation angle is ``x[i] + theta`` for the block's own theta slot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import StructuralError, ValidationError
from .sim import GateOp, Statevector, apply_circuit, marginal_probabilities

ROTATION_PATTERNS = {"Y": ("RY",), "ZYZ": ("RZ", "RY", "RZ")}
ENTANGLERS = ("None", "LinearCZ", "LinearCNOT", "FullCZ")


@dataclass(frozen=True)
class FeatureMapLayout:
    n_qubits: int
    layers: int = 0
    rotation_pattern: str = "Y"
    entangler: str = "LinearCZ"
    combine_rule: str = "additive"

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        if self.layers < 0:
            raise ValidationError("layers must be >= 0")
        if self.rotation_pattern not in ROTATION_PATTERNS:
            raise ValidationError(f"unknown rotation pattern {self.rotation_pattern!r}")
        if self.entangler not in ENTANGLERS:
            raise ValidationError(f"unknown entangler {self.entangler!r}")
        if self.combine_rule != "additive":
            raise ValidationError("only the additive combine rule is implemented")

    @property
    def rotations_per_block(self) -> int:
        return len(ROTATION_PATTERNS[self.rotation_pattern])

    def parameter_count(self) -> int:
        return self.n_qubits * self.rotations_per_block * (self.layers + 1)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_qubits": self.n_qubits,
                "layers": self.layers,
                "rotation_pattern": self.rotation_pattern,
                "entangler": self.entangler,
                "combine_rule": self.combine_rule,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "FeatureMapLayout":
        return cls(**json.loads(text))


def canonicalize_parameters(values: np.ndarray) -> np.ndarray:
    """Wrap angles into [0, 2*pi)."""
    return np.mod(np.asarray(values, dtype=float), 2.0 * np.pi)


def _entangler_gates(layout: FeatureMapLayout) -> list[GateOp]:
    if layout.entangler == "None" or layout.n_qubits == 1:
        return []
    if layout.entangler == "FullCZ":
        return [
            GateOp("CZ", (a, b))
            for a in range(layout.n_qubits)
            for b in range(a + 1, layout.n_qubits)
        ]
    kind = "CZ" if layout.entangler == "LinearCZ" else "CNOT"
    return [
        GateOp(kind, (q, q + 1)) for q in range(layout.n_qubits - 1)
    ]


def _check_encode_args(
    layout: FeatureMapLayout, x: np.ndarray, theta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.shape != (layout.n_qubits,):
        raise ValidationError(
            f"feature vector length {x.shape} != n_qubits {layout.n_qubits}"
        )
    if theta.shape != (layout.parameter_count(),):
        raise ValidationError(
            f"theta length {theta.shape} != parameter_count {layout.parameter_count()}"
        )
    return x, theta


def encode(layout: FeatureMapLayout, x: np.ndarray, theta: np.ndarray) -> Statevector:
    """|psi(x, theta)> = U(x, theta)|0>^n."""
    x, theta = _check_encode_args(layout, x, theta)
    axes = ROTATION_PATTERNS[layout.rotation_pattern]
    ent = _entangler_gates(layout)
    gates: list[GateOp] = []
    k = 0
    for block in range(layout.layers + 1):
        if block > 0:
            gates.extend(ent)
        for q in range(layout.n_qubits):
            for axis in axes:
                gates.append(GateOp(axis, (q,), angle=x[q] + theta[k]))
                k += 1
    return apply_circuit(Statevector.zero(layout.n_qubits), gates)


def _batched_rotation(kind: str, angles: np.ndarray) -> np.ndarray:
    """(B, 2, 2) rotation matrices for a batch of angles."""
    c, s = np.cos(angles / 2.0), np.sin(angles / 2.0)
    mats = np.zeros((len(angles), 2, 2), dtype=complex)
    if kind == "RY":
        mats[:, 0, 0], mats[:, 0, 1] = c, -s
        mats[:, 1, 0], mats[:, 1, 1] = s, c
    elif kind == "RZ":
        mats[:, 0, 0] = np.exp(-0.5j * angles)
        mats[:, 1, 1] = np.exp(0.5j * angles)
    elif kind == "RX":
        mats[:, 0, 0], mats[:, 0, 1] = c, -1j * s
        mats[:, 1, 0], mats[:, 1, 1] = -1j * s, c
    else:
        raise ValidationError(kind)
    return mats


def encode_many(
    layout: FeatureMapLayout, xs: np.ndarray, theta: np.ndarray
) -> np.ndarray:
    """Vectorized ``encode`` over the rows of ``xs``; returns (B, 2**n)."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != layout.n_qubits:
        raise ValidationError("xs must be (batch, n_qubits)")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (layout.parameter_count(),):
        raise ValidationError("theta length mismatch")
    n, batch = layout.n_qubits, xs.shape[0]
    axes_kinds = ROTATION_PATTERNS[layout.rotation_pattern]
    states = np.zeros((batch, 2**n), dtype=complex)
    states[:, 0] = 1.0
    ent = _entangler_gates(layout)
    k = 0
    for block in range(layout.layers + 1):
        if block > 0 and ent:
            t = states.reshape([batch] + [2] * n)
            for gate in ent:
                q0, q1 = gate.targets
                idx: list = [slice(None)] * (n + 1)
                idx[1 + n - 1 - q0] = 1
                if gate.kind == "CZ":
                    idx[1 + n - 1 - q1] = 1
                    t[tuple(idx)] *= -1.0
                else:  # CNOT
                    i0, i1 = list(idx), list(idx)
                    i0[1 + n - 1 - q1], i1[1 + n - 1 - q1] = 0, 1
                    a, b = tuple(i0), tuple(i1)
                    t[a], t[b] = t[b].copy(), t[a].copy()
            states = t.reshape(batch, 2**n)
        for q in range(n):
            for kind in axes_kinds:
                mats = _batched_rotation(kind, xs[:, q] + theta[k])
                k += 1
                t = states.reshape([batch] + [2] * n)
                axis = 1 + n - 1 - q
                t = np.moveaxis(t, axis, -1)
                t = np.einsum("b...j,bij->b...i", t, mats)
                states = np.ascontiguousarray(np.moveaxis(t, -1, axis)).reshape(
                    batch, 2**n
                )
    return states


def label_qubit_count(n_classes: int) -> int:
    return max(1, int(np.ceil(np.log2(n_classes))))


def label_pattern_probabilities(
    states: np.ndarray, n_qubits: int, n_classes: int
) -> np.ndarray:
    """(B, n_classes) marginal probability of each label pattern.

    Label qubits are qubits 0..ceil(log2 L)-1; class j maps to pattern j with
    qubit 0 as the least-significant bit.
    """
    k = label_qubit_count(n_classes)
    probs = np.abs(states) ** 2
    # little-endian: basis index mod 2**k is exactly the label-qubit pattern
    grouped = probs.reshape(probs.shape[0], -1, 2**k).sum(axis=1)
    return grouped[:, :n_classes]


def clustering_loss(
    layout: FeatureMapLayout,
    theta: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
) -> float:
    """E(theta) = 1 - (1/L) sum_j (1/M_j) sum_i P(label qubits read j)."""
    labels = np.asarray(labels, dtype=int)
    classes = np.unique(labels)
    n_classes = int(classes.max()) + 1
    if label_qubit_count(n_classes) > layout.n_qubits:
        raise ValidationError(
            f"{n_classes} classes need more label qubits than the layout has"
        )
    states = encode_many(layout, np.asarray(features, dtype=float), theta)
    pattern_probs = label_pattern_probabilities(states, layout.n_qubits, n_classes)
    total = 0.0
    for j in range(n_classes):
        mask = labels == j
        if not mask.any():
            raise ValidationError(f"class {j} has no samples")
        total += float(pattern_probs[mask, j].mean())
    return 1.0 - total / n_classes


def compact_binary_loss(
    layout: FeatureMapLayout,
    theta: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
) -> float:
    """First-qubit-only loss: 1 - mean P(first qubit = (1+a)/2)."""
    labels = np.asarray(labels, dtype=int)
    if not set(np.unique(labels)).issubset({-1, 1}):
        raise ValidationError("compact loss requires labels in {-1, +1}")
    states = encode_many(layout, np.asarray(features, dtype=float), theta)
    probs = np.abs(states) ** 2
    p_first_one = probs.reshape(probs.shape[0], -1, 2)[:, :, 1].sum(axis=1)
    target_bit = (1 + labels) // 2
    hit = np.where(target_bit == 1, p_first_one, 1.0 - p_first_one)
    return float(1.0 - hit.mean())


def explicit_classify_binary(state_probs_first_one: float) -> int:
    """sign(P(first qubit = 1) - P(first qubit = 0)); ties go to +1."""
    return 1 if state_probs_first_one >= 0.5 else -1


def explicit_classify(
    layout: FeatureMapLayout,
    theta: np.ndarray,
    x: np.ndarray,
    n_classes: int = 2,
    binary: bool = True,
) -> int:
    state = encode(layout, x, theta)
    if binary:
        p1 = float(marginal_probabilities(state, [0])[1])
        return explicit_classify_binary(p1)
    probs = label_pattern_probabilities(
        state.amplitudes[None, :], layout.n_qubits, n_classes
    )[0]
    return int(np.argmax(probs))


def static_baseline_map(x: np.ndarray) -> Statevector:
    """U_phi(x) H^n U_phi(x) H^n |0>^n with U_phi = tensor RZ(x_i)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    gates: list[GateOp] = []
    for _ in range(2):
        gates.extend(GateOp("H", (q,)) for q in range(n))
        gates.extend(GateOp("RZ", (q,), angle=x[q]) for q in range(n))
    return apply_circuit(Statevector.zero(n), gates)


def static_baseline_many(xs: np.ndarray) -> np.ndarray:
    """Vectorized ``static_baseline_map`` over rows of ``xs``."""
    return np.array([static_baseline_map(x).amplitudes for x in xs])


def baseline_head_states(
    xs: np.ndarray, theta: np.ndarray, layers: int, entangler: str = "LinearCZ"
) -> np.ndarray:
    """QFM(zyz) pipeline: static map followed by a trainable ZYZ head W(theta).

    The head has ``layers + 1`` ZYZ blocks separated by an entangler,
    mirroring the TQFM block structure but without data re-uploading.
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.shape[1]
    head = FeatureMapLayout(
        n, layers=layers, rotation_pattern="ZYZ", entangler=entangler
    )
    base = static_baseline_many(xs)
    # the head is data-free, so build its unitary once and apply to the batch
    head_unitary = _head_unitary(head, theta)
    return base @ head_unitary.T


def baseline_head_parameter_count(n_qubits: int, layers: int) -> int:
    return FeatureMapLayout(n_qubits, layers=layers, rotation_pattern="ZYZ").parameter_count()


def _head_unitary(layout: FeatureMapLayout, theta: np.ndarray) -> np.ndarray:
    """Dense unitary of the trainable head (data-free blocks)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (layout.parameter_count(),):
        raise ValidationError("theta length mismatch for head")
    dim = 2**layout.n_qubits
    basis = np.eye(dim, dtype=complex)
    zeros = np.zeros(layout.n_qubits)
    cols = encode_many_from(layout, basis, zeros, theta)
    return cols.T


def encode_many_from(
    layout: FeatureMapLayout, initial: np.ndarray, x: np.ndarray, theta: np.ndarray
) -> np.ndarray:
    """Apply the layout's gate sequence for a single ``x`` to a batch of
    initial states (rows of ``initial``)."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n = layout.n_qubits
    axes_kinds = ROTATION_PATTERNS[layout.rotation_pattern]
    ent = _entangler_gates(layout)
    states = np.asarray(initial, dtype=complex).copy()
    batch = states.shape[0]
    k = 0
    for block in range(layout.layers + 1):
        if block > 0 and ent:
            t = states.reshape([batch] + [2] * n)
            for gate in ent:
                q0, q1 = gate.targets
                idx: list = [slice(None)] * (n + 1)
                idx[1 + n - 1 - q0] = 1
                if gate.kind == "CZ":
                    idx[1 + n - 1 - q1] = 1
                    t[tuple(idx)] *= -1.0
                else:
                    i0, i1 = list(idx), list(idx)
                    i0[1 + n - 1 - q1], i1[1 + n - 1 - q1] = 0, 1
                    a, b = tuple(i0), tuple(i1)
                    t[a], t[b] = t[b].copy(), t[a].copy()
            states = t.reshape(batch, 2**n)
        for q in range(n):
            for kind in axes_kinds:
                mats = _batched_rotation(kind, np.full(batch, x[q] + theta[k]))
                k += 1
                t = states.reshape([batch] + [2] * n)
                axis = 1 + n - 1 - q
                t = np.moveaxis(t, axis, -1)
                t = np.einsum("b...j,bij->b...i", t, mats)
                states = np.ascontiguousarray(np.moveaxis(t, -1, axis)).reshape(
                    batch, 2**n
                )
    return states
