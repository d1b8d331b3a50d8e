"""Dense statevector simulation.

Conventions fixed here once and asserted in tests:

* little-endian basis ordering -- qubit 0 is the least-significant bit of the
  basis index;
* halved-angle rotations, RY(t) = exp(-i t Y / 2), RZ(t) = exp(-i t Z / 2);
* states are immutable, every operation returns a fresh array.

The backend is dense and capped at ``MAX_QUBITS`` qubits; the largest circuit
any experiment builds is 9 qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError, StructuralError, ValidationError

MAX_QUBITS = 20

NORM_ATOL = 1e-10

ROTATION_KINDS = ("RX", "RY", "RZ")
FIXED_KINDS = ("H", "CZ", "CNOT", "SWAP")


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]], dtype=complex
    )


_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)

_ROT = {"RX": _rx, "RY": _ry, "RZ": _rz}


@dataclass(frozen=True)
class Statevector:
    """Normalized complex amplitudes over ``2**n_qubits`` basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise StructuralError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise StructuralError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class GateOp:
    """One gate: a rotation, a fixed Clifford, a diagonal sign flip, or a
    basis permutation.

    ``diagonal`` entries must be exactly +-1; ``mapping`` must be a bijection
    on basis indices.  Both therefore denote unitaries by construction.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    diagonal: np.ndarray | None = None
    mapping: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in ROTATION_KINDS + FIXED_KINDS + (
            "DiagonalPhase",
            "Permutation",
        ):
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise StructuralError("gate targets must be distinct")
        if self.kind in ROTATION_KINDS and self.angle is None:
            raise ValidationError(f"{self.kind} requires an angle")
        if self.kind == "DiagonalPhase":
            diag = np.asarray(self.diagonal)
            if diag is None or not np.all(np.isin(diag, (-1, 1))):
                raise ValidationError("DiagonalPhase entries must be +-1")
            object.__setattr__(self, "diagonal", diag.astype(float))
        if self.kind == "Permutation":
            perm = np.asarray(self.mapping, dtype=np.intp)
            if sorted(perm.tolist()) != list(range(len(perm))):
                raise ValidationError("Permutation mapping must be a bijection")
            object.__setattr__(self, "mapping", perm)


def rotation(kind: str, qubit: int, angle: float) -> GateOp:
    return GateOp(kind, (qubit,), angle=angle)


def _check_targets(gate: GateOp, n: int) -> None:
    for t in gate.targets:
        if not 0 <= t < n:
            raise StructuralError(f"target {t} out of range for {n} qubits")


def _apply_1q(amps: np.ndarray, mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    t = amps.reshape([2] * n)
    axis = n - 1 - qubit
    t = np.moveaxis(t, axis, -1)
    t = t @ mat.T
    return np.ascontiguousarray(np.moveaxis(t, -1, axis)).reshape(-1)


def _pair_index(n: int, q0: int, q1: int, v0: int, v1: int) -> tuple:
    idx: list = [slice(None)] * n
    idx[n - 1 - q0] = v0
    idx[n - 1 - q1] = v1
    return tuple(idx)


def apply_gate(state: Statevector, gate: GateOp) -> Statevector:
    """Return gate * state.  Norm is preserved to 1e-10 by construction."""
    n = state.n_qubits
    _check_targets(gate, n)
    amps = np.array(state.amplitudes)

    if gate.kind in ROTATION_KINDS:
        (q,) = gate.targets
        out = _apply_1q(amps, _ROT[gate.kind](float(gate.angle)), q, n)
    elif gate.kind == "H":
        (q,) = gate.targets
        out = _apply_1q(amps, _H, q, n)
    elif gate.kind == "CZ":
        q0, q1 = gate.targets
        t = amps.reshape([2] * n)
        t[_pair_index(n, q0, q1, 1, 1)] *= -1.0
        out = t.reshape(-1)
    elif gate.kind == "CNOT":
        q0, q1 = gate.targets  # control q0, target q1
        t = amps.reshape([2] * n)
        a, b = _pair_index(n, q0, q1, 1, 0), _pair_index(n, q0, q1, 1, 1)
        t[a], t[b] = t[b].copy(), t[a].copy()
        out = t.reshape(-1)
    elif gate.kind == "SWAP":
        q0, q1 = gate.targets
        t = amps.reshape([2] * n)
        a, b = _pair_index(n, q0, q1, 0, 1), _pair_index(n, q0, q1, 1, 0)
        t[a], t[b] = t[b].copy(), t[a].copy()
        out = t.reshape(-1)
    elif gate.kind == "DiagonalPhase":
        if gate.diagonal.shape != (2**n,):
            raise StructuralError("DiagonalPhase length must be 2**n_qubits")
        out = amps * gate.diagonal
    elif gate.kind == "Permutation":
        if gate.mapping.shape != (2**n,):
            raise StructuralError("Permutation length must be 2**n_qubits")
        out = np.empty_like(amps)
        out[gate.mapping] = amps
    else:  # pragma: no cover - kinds validated in GateOp
        raise ValidationError(gate.kind)

    return Statevector(n, out)


def apply_circuit(state: Statevector, gates: Iterable[GateOp]) -> Statevector:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def gate_matrix(gate: GateOp, n_qubits: int) -> np.ndarray:
    """Dense unitary of ``gate`` on ``n_qubits`` qubits (test utility)."""
    dim = 2**n_qubits
    cols = []
    for i in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[i] = 1.0
        cols.append(apply_gate(Statevector(n_qubits, e), gate).amplitudes)
    return np.array(cols).T


def overlap(a: Statevector, b: Statevector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.n_qubits != b.n_qubits:
        raise StructuralError("overlap requires equal qubit counts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def marginal_probabilities(state: Statevector, qubits: Sequence[int]) -> np.ndarray:
    """Outcome distribution over ``qubits``; ``qubits[0]`` is the LSB of the
    outcome index."""
    if len(qubits) == 0:
        raise ValidationError("need at least one qubit")
    n = state.n_qubits
    for q in qubits:
        if not 0 <= q < n:
            raise StructuralError(f"qubit {q} out of range")
    t = state.probabilities.reshape([2] * n)
    keep = [n - 1 - q for q in qubits]
    other = tuple(ax for ax in range(n) if ax not in keep)
    if other:
        t = t.sum(axis=other)
    # remaining axes follow the sorted original axis order; rearrange so that
    # qubits[0] ends up least significant
    order = [sorted(keep).index(ax) for ax in reversed(keep)]
    t = np.transpose(t, axes=order)
    return t.reshape(-1)


@dataclass(frozen=True)
class ShotSampler:
    """Deterministic shot sampling: Philox counter-based generator keyed by
    ``seed``, inverse-CDF over the cumulative outcome distribution."""

    seed: int
    shots: int

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValidationError("shots must be >= 1")

    def sample_counts(self, probabilities: np.ndarray) -> np.ndarray:
        probs = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
        cdf = np.cumsum(probs)
        cdf /= cdf[-1]
        rng = np.random.Generator(np.random.Philox(key=self.seed))
        draws = rng.random(self.shots)
        outcomes = np.searchsorted(cdf, draws, side="right")
        return np.bincount(outcomes, minlength=len(probs))

    def derive(self, *indices: int) -> "ShotSampler":
        """Child sampler with a seed derived deterministically from indices."""
        seq = np.random.SeedSequence([self.seed, *indices])
        return ShotSampler(int(seq.generate_state(1)[0]), self.shots)


def sample_measurement(
    state: Statevector, sampler: ShotSampler, measured_qubits: Sequence[int]
) -> dict[str, int]:
    """Histogram of bitstrings over ``measured_qubits`` (MSB..LSB strings,
    ``measured_qubits[0]`` least significant)."""
    probs = marginal_probabilities(state, measured_qubits)
    counts = sampler.sample_counts(probs)
    width = len(measured_qubits)
    return {
        format(i, f"0{width}b"): int(c) for i, c in enumerate(counts) if c > 0
    }


def hadamard_test_probabilities(
    alpha: Statevector, signs: np.ndarray | None = None
) -> tuple[float, float]:
    """Ancilla Hadamard-test outcome probabilities for V = H^m D |alpha>.

    D is the optional +-1 diagonal ``signs`` (identity when omitted): without
    it P0 - P1 = <0|H^m|alpha>, i.e. the L1 norm of the amplitudes divided by
    sqrt(2^m); with it the signed sum instead.
    """
    m = alpha.n_qubits
    v = np.array(alpha.amplitudes)
    if signs is not None:
        signs = np.asarray(signs, dtype=float)
        if signs.shape != v.shape or not np.all(np.isin(signs, (-1.0, 1.0))):
            raise ValidationError("signs must be a +-1 vector of matching length")
        v = v * signs
    for q in range(m):
        v = _apply_1q(v, _H, q, m)
    e0 = np.zeros_like(v)
    e0[0] = 1.0
    # ancilla construction: H_anc, controlled-V, H_anc
    branch0 = (e0 + v) / 2.0
    branch1 = (e0 - v) / 2.0
    p0 = float(np.sum(np.abs(branch0) ** 2))
    p1 = float(np.sum(np.abs(branch1) ** 2))
    return p0, p1


ApplyFn = Callable[[Statevector], Statevector]


def grover_reflections(
    state: Statevector,
    marked: Sequence[int],
    apply_u: ApplyFn,
    apply_u_dag: ApplyFn,
    iterations: int = 1,
) -> Statevector:
    """Apply ``iterations`` rounds of U O U^dag T.

    T flips the sign of the ``marked`` basis states; O = diag(1, -1, ..., -1)
    reflects about |0...0>.  ``apply_u`` must prepare ``state`` from |0...0>.
    """
    if iterations < 0:
        raise ValidationError("iterations must be >= 0")
    n = state.n_qubits
    prepared = apply_u(Statevector.zero(n))
    if np.linalg.norm(prepared.amplitudes - state.amplitudes) > 1e-8:
        raise ContractError("apply_u(|0...0>) does not match the input state")
    t_signs = np.ones(2**n)
    for idx in marked:
        if not 0 <= idx < 2**n:
            raise StructuralError(f"marked index {idx} out of range")
        t_signs[idx] = -1.0

    current = state
    for _ in range(iterations):
        flipped = Statevector(n, current.amplitudes * t_signs)
        y = apply_u_dag(flipped)
        amps = -np.array(y.amplitudes)
        amps[0] = y.amplitudes[0]
        current = apply_u(Statevector(n, amps))
    return current
