"""Ensemble classification and the Grover-amplified multiclass readout.

The readout circuit follows the 9-qubit instance: label qubits are the
least-significant bits, then index qubits, one work qubit, and the feature
register on top.  With that ordering the swap S that moves the L target
amplitudes to the first L basis indices is the identity permutation; it is
still carried in the register map as an explicit basis mapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError, ValidationError
from .feature_map import FeatureMapLayout, encode_many
from .sim import ShotSampler, Statevector, grover_reflections


@dataclass
class ClassEnsemble:
    class_index: int
    weights: np.ndarray
    member_states: np.ndarray  # (M_j, 2**n) encoded training states

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        self.member_states = np.asarray(self.member_states, dtype=complex)
        if len(self.weights) != self.member_states.shape[0]:
            raise ValidationError("one weight per member state")
        if len(self.weights) == 0:
            raise ValidationError("empty ensemble")
        if abs(self.weights.sum() - 1.0) > 1e-10:
            raise ValidationError("ensemble weights must sum to 1")

    @classmethod
    def from_samples(
        cls,
        class_index: int,
        layout: FeatureMapLayout,
        theta: np.ndarray,
        features: np.ndarray,
        weights: np.ndarray | None = None,
    ) -> "ClassEnsemble":
        states = encode_many(layout, np.asarray(features, dtype=float), theta)
        m = states.shape[0]
        w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights)
        return cls(class_index, w, states)


def trace_overlaps(
    ensembles: list[ClassEnsemble], trial_state: np.ndarray
) -> np.ndarray:
    """Tr(rho^j rho) = sum_i p_i |<psi_i^j|psi(x)>|^2 per ensemble."""
    values = []
    for ens in ensembles:
        overlaps = np.abs(ens.member_states.conj() @ trial_state) ** 2
        values.append(float(np.dot(ens.weights, overlaps)))
    return np.array(values)


def ensemble_decision_ovo(
    ensembles: list[ClassEnsemble],
    x: np.ndarray,
    layout: FeatureMapLayout,
    theta: np.ndarray,
) -> int:
    """argmax_j Tr(rho^j rho); ties resolved to the smallest class index."""
    if len(ensembles) < 2:
        raise ValidationError("need at least two ensembles")
    trial = encode_many(layout, np.asarray(x, dtype=float)[None, :], theta)[0]
    values = trace_overlaps(ensembles, trial)
    return int(np.argmax(values))


def ovr_scores(trace_values: np.ndarray) -> np.ndarray:
    """(rho^j rho)^ovr = Tr(rho^j rho) - mean of the other traces."""
    n = len(trace_values)
    total = trace_values.sum()
    return trace_values - (total - trace_values) / (n - 1)


def ensemble_decision_ovr(
    ensembles: list[ClassEnsemble],
    x: np.ndarray,
    layout: FeatureMapLayout,
    theta: np.ndarray,
) -> tuple[int, bool]:
    """(class, unique_flag): the unique positive-score class when it exists,
    otherwise the argmax with unique_flag False."""
    if len(ensembles) < 2:
        raise ValidationError("need at least two ensembles")
    trial = encode_many(layout, np.asarray(x, dtype=float)[None, :], theta)[0]
    scores = ovr_scores(trace_overlaps(ensembles, trial))
    positive = np.flatnonzero(scores > 0)
    if len(positive) == 1:
        return int(positive[0]), True
    return int(np.argmax(scores)), False


@dataclass
class ReadoutRegisterMap:
    label_qubits: tuple[int, ...]
    index_qubits: tuple[int, ...]
    work_qubit: int
    feature_qubits: tuple[int, ...]
    target_basis_states: tuple[int, ...]

    @property
    def n_qubits(self) -> int:
        return len(self.label_qubits) + len(self.index_qubits) + 1 + len(
            self.feature_qubits
        )

    def validate(self) -> None:
        regs = (
            set(self.label_qubits)
            | set(self.index_qubits)
            | {self.work_qubit}
            | set(self.feature_qubits)
        )
        if len(regs) != self.n_qubits or regs != set(range(self.n_qubits)):
            raise StructuralError("register sets must be disjoint and contiguous")


def _householder_apply(v: np.ndarray) -> tuple:
    """Self-inverse reflection mapping e0 to the real unit vector v."""
    e0 = np.zeros_like(v)
    e0[0] = 1.0
    w = e0 - v
    nw = np.linalg.norm(w)
    if nw < 1e-12:
        return lambda a: a.copy(), w
    w = w / nw

    def apply(amps: np.ndarray) -> np.ndarray:
        return amps - 2.0 * np.outer(w, w @ amps) if amps.ndim == 2 else (
            amps - 2.0 * w * np.dot(w, amps)
        )

    return apply, w


class ReadoutCircuit:
    """U_G = S U_x^dag U_L for one trial datum, with apply/inverse callables.

    U_L and the per-trial V_x are realized as Householder reflections whose
    first column is the required superposition; only that column matters for
    the Grover iteration, which depends on U_G solely through U_G|0>.
    """

    def __init__(
        self,
        layout: FeatureMapLayout,
        theta: np.ndarray,
        class_features: list[np.ndarray],
        weights: list[np.ndarray] | None = None,
    ):
        self.layout = layout
        self.theta = np.asarray(theta, dtype=float)
        self.n_classes = len(class_features)
        sizes = {len(f) for f in class_features}
        if len(sizes) != 1:
            raise ValidationError("equal samples per class required")
        self.m_j = sizes.pop()
        slots = 1 << max(1, (self.m_j - 1).bit_length())
        n_label = max(1, int(np.ceil(np.log2(self.n_classes))))
        n_index = int(np.log2(slots))
        n_feat = layout.n_qubits
        work = n_label + n_index
        self.map = ReadoutRegisterMap(
            label_qubits=tuple(range(n_label)),
            index_qubits=tuple(range(n_label, work)),
            work_qubit=work,
            feature_qubits=tuple(range(work + 1, work + 1 + n_feat)),
            target_basis_states=tuple(range(self.n_classes)),
        )
        self.map.validate()
        self.n = self.map.n_qubits
        self.dim = 2**self.n
        self._n_label = n_label
        self._slots = slots
        self._feat_dim = 2**n_feat
        self._rest_dim = self.dim // 2**n_label
        # basis index = j + i * 2**n_label + work * 2**(n_label+n_index)
        #             + f * feature_stride
        self._feature_stride = 2 ** (n_label + n_index + 1)

        states = [
            encode_many(layout, np.asarray(f, dtype=float), self.theta)
            for f in class_features
        ]
        if any(np.max(np.abs(s.imag)) > 1e-9 for s in states):
            raise ValidationError("readout circuit requires real feature states")
        self._class_states = [s.real for s in states]
        if weights is None:
            weights = [np.full(self.m_j, 1.0 / self.m_j) for _ in class_features]
        self._weights = [np.asarray(w, dtype=float) for w in weights]

        # |phi_L> = U_L|0>: label j, index i, work 0, feature psi(x_i^j)
        phi = np.zeros(self.dim)
        for j in range(self.n_classes):
            for i in range(self.m_j):
                w = np.sqrt(self._weights[j][i] / self.n_classes)
                base = j + (i << n_label)
                sl = slice(base, base + self._feature_stride * self._feat_dim,
                           self._feature_stride)
                phi[sl] = w * self._class_states[j][i]
        norm = np.linalg.norm(phi)
        if abs(norm - 1.0) > 1e-8:
            raise StructuralError("readout register arithmetic mismatch")
        self._apply_ul, _ = _householder_apply(phi)
        self._apply_vx = None  # set per trial

    def set_trial(self, x: np.ndarray) -> None:
        """Install V_x: |0>_rest -> sum_i |i-1>|0>_work|psi(x)> / sqrt(M_j)."""
        trial = encode_many(
            self.layout, np.asarray(x, dtype=float)[None, :], self.theta
        )[0]
        if np.max(np.abs(trial.imag)) > 1e-9:
            raise ValidationError("trial state must be real")
        rest = np.zeros(self._rest_dim)
        # within the rest register: index bits are least significant, then the
        # work qubit, then the feature bits
        stride_rest = self._slots * 2
        for f in range(self._feat_dim):
            for i in range(self.m_j):
                rest[f * stride_rest + i] = trial.real[f] / np.sqrt(self.m_j)
        self._apply_vx, _ = _householder_apply(rest)

    def _apply_ux(self, amps: np.ndarray) -> np.ndarray:
        cols = amps.reshape(self._rest_dim, 2**self._n_label)
        return self._apply_vx(cols).reshape(-1)

    def apply_u(self, state: Statevector) -> Statevector:
        amps = self._apply_ux(self._apply_ul(np.real(state.amplitudes)))
        return Statevector(self.n, amps.astype(complex))

    def apply_u_dag(self, state: Statevector) -> Statevector:
        amps = self._apply_ul(self._apply_ux(np.real(state.amplitudes)))
        return Statevector(self.n, amps.astype(complex))

    def build_state(self) -> Statevector:
        return self.apply_u(Statevector.zero(self.n))


def build_readout_state(
    layout: FeatureMapLayout,
    theta: np.ndarray,
    class_features: list[np.ndarray],
    x: np.ndarray,
    weights: list[np.ndarray] | None = None,
) -> tuple[Statevector, ReadoutRegisterMap, ReadoutCircuit]:
    """|phi> = S U_x^dag U_L |0...0> plus the register map and the circuit."""
    circuit = ReadoutCircuit(layout, theta, class_features, weights)
    circuit.set_trial(x)
    return circuit.build_state(), circuit.map, circuit


def grover_readout(
    state: Statevector,
    register_map: ReadoutRegisterMap,
    circuit: ReadoutCircuit,
    iterations: int = 1,
    sampler: ShotSampler | None = None,
) -> dict:
    """Amplify the target amplitudes and report per-class probabilities."""
    final = grover_reflections(
        state,
        list(register_map.target_basis_states),
        circuit.apply_u,
        circuit.apply_u_dag,
        iterations=iterations,
    )
    targets = list(register_map.target_basis_states)
    before = np.abs(state.amplitudes[targets]) ** 2
    after = np.abs(final.amplitudes[targets]) ** 2
    report = {
        "probabilities_before": before,
        "probabilities_after": after,
        "predicted": int(np.argmax(after)),
    }
    if sampler is not None:
        counts = sampler.sample_counts(final.probabilities)
        freqs = counts[targets] / sampler.shots
        report["sampled_frequencies"] = freqs
        report["predicted_sampled"] = int(np.argmax(freqs))
    return report


def estimate_iteration_range(m_j: int) -> dict:
    """Iteration bracket [1, floor((sqrt(5 M_j) pi - 1)/2)] and the amplitude
    bracket [1/sqrt(5 M_j), 1/sqrt(3)]."""
    if m_j < 1:
        raise ValidationError("M_j must be >= 1")
    r_max = int(np.floor((np.sqrt(5.0 * m_j) * np.pi - 1.0) / 2.0))
    return {
        "r_min": 1,
        "r_max": r_max,
        "amplitude_lower": 1.0 / np.sqrt(5.0 * m_j),
        "amplitude_upper": 1.0 / np.sqrt(3.0),
    }
