"""Quantum kernel evaluation, SVM matrix assembly, and Pauli sampling.

Exact kernels are |<psi_i|psi_j>|^p computed from statevectors; sampled mode
reproduces the inversion-test measurement (frequency of the all-zeros outcome
of U^dag(x_i) U(x_j)|0>, an estimate of |<.|.>|^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .errors import StructuralError, ValidationError
from .feature_map import FeatureMapLayout, encode_many
from .sim import ShotSampler, Statevector

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class KernelMatrix:
    entries: np.ndarray
    power: int
    source: str  # "exact" or "sampled(shots,seed)"

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise StructuralError("kernel matrix must be square")
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SvmMatrix:
    entries: np.ndarray
    gamma: float
    labels: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class PauliDecomposition:
    terms: list[tuple[float, str]]
    lambda_total: float

    def reconstruct(self) -> np.ndarray:
        m = len(self.terms[0][1])
        out = np.zeros((2**m, 2**m), dtype=complex)
        for coeff, word in self.terms:
            out += coeff * pauli_word_matrix(word)
        return out


def pauli_word_matrix(word: str) -> np.ndarray:
    mat = np.array([[1.0]], dtype=complex)
    for ch in word:
        mat = np.kron(mat, _PAULI[ch])
    return mat


def kernel_value(
    layout: FeatureMapLayout,
    theta: np.ndarray,
    xi: np.ndarray,
    xj: np.ndarray,
    power: int = 2,
    mode: str = "exact",
    sampler: ShotSampler | None = None,
) -> float:
    """k^p(x_i, x_j) for one pair."""
    if power < 1:
        raise ValidationError("power must be >= 1")
    states = encode_many(layout, np.array([xi, xj]), theta)
    ov = abs(np.vdot(states[0], states[1]))
    if mode == "exact":
        return float(ov**power)
    if mode == "sampled":
        if power % 2 != 0:
            raise ValidationError(
                "sampled mode measures |overlap|^2; power must be even"
            )
        if sampler is None:
            raise ValidationError("sampled mode requires a ShotSampler")
        p_zero = ov**2
        counts = sampler.sample_counts(np.array([p_zero, 1.0 - p_zero]))
        freq = counts[0] / sampler.shots
        return float(freq ** (power // 2))
    raise ValidationError(f"unknown mode {mode!r}")


def gram_from_states(states: np.ndarray, power: int) -> np.ndarray:
    overlaps = np.abs(states.conj() @ states.T)
    gram = overlaps**power
    np.fill_diagonal(gram, 1.0)
    return (gram + gram.T) / 2.0


def build_kernel_matrix(
    layout: FeatureMapLayout,
    theta: np.ndarray,
    features: np.ndarray,
    power: int = 2,
    mode: str = "exact",
    sampler: ShotSampler | None = None,
) -> KernelMatrix:
    """M x M Gram matrix; each off-diagonal pair is computed once."""
    features = np.asarray(features, dtype=float)
    if features.shape[0] < 2:
        raise ValidationError("need at least two samples")
    states = encode_many(layout, features, theta)
    if mode == "exact":
        return KernelMatrix(gram_from_states(states, power), power, "exact")
    if mode != "sampled":
        raise ValidationError(f"unknown mode {mode!r}")
    if power % 2 != 0:
        raise ValidationError("sampled mode requires even power")
    if sampler is None:
        raise ValidationError("sampled mode requires a ShotSampler")
    m = features.shape[0]
    gram = np.eye(m)
    overlaps_sq = np.abs(states.conj() @ states.T) ** 2
    for i in range(m):
        for j in range(i + 1, m):
            pair_sampler = sampler.derive(i, j)
            counts = pair_sampler.sample_counts(
                np.array([overlaps_sq[i, j], 1.0 - overlaps_sq[i, j]])
            )
            freq = counts[0] / pair_sampler.shots
            gram[i, j] = gram[j, i] = freq ** (power // 2)
    return KernelMatrix(
        gram, power, f"sampled({sampler.shots},{sampler.seed})"
    )


def build_svm_matrix(
    kernel: KernelMatrix | np.ndarray, labels: np.ndarray, gamma: float
) -> SvmMatrix:
    """K_ij = y_i y_j k(x_i, x_j) + delta_ij / gamma."""
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    labels = np.asarray(labels, dtype=float)
    if not set(np.unique(labels)).issubset({-1.0, 1.0}):
        raise ValidationError("labels must be +-1")
    k = kernel.entries if isinstance(kernel, KernelMatrix) else np.asarray(kernel)
    if k.shape[0] != len(labels):
        raise StructuralError("label length must match kernel size")
    entries = np.outer(labels, labels) * k + np.eye(len(labels)) / gamma
    return SvmMatrix(entries, gamma, labels.astype(int))


def pauli_decompose(matrix: np.ndarray, drop_tol: float = 1e-12) -> PauliDecomposition:
    """coeff(sigma) = Tr(sigma * matrix) / 2^m over all length-m Pauli words."""
    matrix = np.asarray(matrix, dtype=complex)
    dim = matrix.shape[0]
    if matrix.shape != (dim, dim) or dim & (dim - 1) or dim == 0:
        raise ValidationError("matrix dimension must be a power of two")
    m = int(np.log2(dim))
    if m > 4:
        raise ValidationError("pauli_decompose is desk-scale: m <= 4")
    terms: list[tuple[float, str]] = []
    for letters in product("IXYZ", repeat=m):
        word = "".join(letters)
        coeff = np.trace(pauli_word_matrix(word) @ matrix) / dim
        if abs(coeff.imag) > 1e-9:
            raise ValidationError("matrix is not Hermitian-real in the Pauli basis")
        if abs(coeff.real) > drop_tol:
            terms.append((float(coeff.real), word))
    lam = float(sum(abs(c) for c, _ in terms))
    return PauliDecomposition(terms, lam)


def pauli_expectation(word: str, state: Statevector) -> float:
    """Exact <state|sigma|state> for one Pauli word (word[0] acts on the
    highest qubit, matching the kron order of ``pauli_word_matrix``)."""
    amps = np.array(state.amplitudes)
    out = pauli_word_matrix(word) @ amps
    return float(np.real(np.vdot(amps, out)))


def sampled_expectation(
    decomp: PauliDecomposition,
    state: Statevector,
    sampler: ShotSampler,
) -> float:
    """Unbiased estimate of <state|K|state> via term sampling.

    Terms are drawn with probability |lambda_j| / Lambda, each draw measures
    its Pauli word once (a +-1 outcome from the exact eigen-distribution),
    and the signed mean is rescaled by Lambda.
    """
    if not decomp.terms:
        return 0.0
    m = len(decomp.terms[0][1])
    if 2**m != len(state.amplitudes):
        raise StructuralError("decomposition does not match state dimension")
    coeffs = np.array([c for c, _ in decomp.terms])
    weights = np.abs(coeffs) / decomp.lambda_total
    rng = np.random.Generator(np.random.Philox(key=sampler.seed))
    draws = rng.choice(len(coeffs), size=sampler.shots, p=weights)
    expectations = np.array(
        [pauli_expectation(word, state) for _, word in decomp.terms]
    )
    # outcome +-1 with probability (1 +- e)/2 for the drawn word
    probs_plus = (1.0 + expectations[draws]) / 2.0
    outcomes = np.where(rng.random(sampler.shots) < probs_plus, 1.0, -1.0)
    signed = np.sign(coeffs)[draws] * outcomes
    return float(decomp.lambda_total * signed.mean())


def export_kernel_csv(kernel: KernelMatrix, path: str | Path, ids=None) -> None:
    m = kernel.size
    ids = list(ids) if ids is not None else [f"s{i}" for i in range(m)]
    lines = [",".join(["id"] + ids)]
    for i in range(m):
        lines.append(
            ",".join([ids[i]] + [f"{v:.12g}" for v in kernel.entries[i]])
        )
    Path(path).write_text("\n".join(lines) + "\n")


def export_kernel_pgm(kernel: KernelMatrix, path: str | Path) -> None:
    """8-bit grayscale PGM heatmap, value = round(255 * entry)."""
    m = kernel.size
    pixels = np.clip(np.rint(255 * kernel.entries), 0, 255).astype(int)
    lines = [f"P2", f"{m} {m}", "255"]
    for row in pixels:
        lines.append(" ".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def class_block_means(
    kernel: KernelMatrix, labels: np.ndarray
) -> dict[tuple[int, int], float]:
    """Mean off-diagonal kernel entry per (class_a, class_b) block."""
    labels = np.asarray(labels, dtype=int)
    out: dict[tuple[int, int], float] = {}
    for a in sorted(set(labels.tolist())):
        for b in sorted(set(labels.tolist())):
            if a > b:
                continue
            ia, ib = np.flatnonzero(labels == a), np.flatnonzero(labels == b)
            block = kernel.entries[np.ix_(ia, ib)]
            if a == b:
                mask = ~np.eye(len(ia), dtype=bool)
                out[(a, b)] = float(block[mask].mean())
            else:
                out[(a, b)] = float(block.mean())
    return out
