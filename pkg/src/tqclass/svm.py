"""Three SVM flavors and the error/scaling verifiers.

* classical dual oracle (soft margin with squared slack penalty),
* variational SV-QSVM: alpha prepared by a real-amplitude ansatz, objective
  (1/2)<a|K|a> - ||a||_1 + C l(a)^2, support-vector extraction, partial
  superposition classification with a fault-tolerant sign,
* least-squares QSVM baseline via a direct linear solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as _cvx_matrix
from cvxopt import solvers as _cvx_solvers

from .errors import ContractError, StructuralError, ValidationError
from .feature_map import FeatureMapLayout, encode_many
from .kernel import (
    KernelMatrix,
    SvmMatrix,
    build_svm_matrix,
    pauli_decompose,
    sampled_expectation,
)
from .optimize import OptimizationProblem, multistart_minimize
from .sim import (
    GateOp,
    ShotSampler,
    Statevector,
    apply_circuit,
    hadamard_test_probabilities,
)

_cvx_solvers.options["show_progress"] = False
# default interior-point tolerances leave ~1e-3 KKT residuals on
# near-degenerate Gram matrices; tighten them so the oracle stays an oracle
_QP_OPTIONS = {
    "show_progress": False,
    "abstol": 1e-12,
    "reltol": 1e-12,
    "feastol": 1e-10,
}

INCONCLUSIVE = 0


# ---------------------------------------------------------------------------
# classical dual oracle


def classical_dual_solve(
    kernel: KernelMatrix | np.ndarray,
    labels: np.ndarray,
    gamma: float,
    bias_mode: str = "kkt",
    bias_lambda: float = 1.0,
) -> tuple[np.ndarray, float]:
    """Solve the soft-margin dual; returns (alpha, bias).

    ``bias_mode="kkt"`` keeps the equality constraint sum(alpha*y)=0 and
    recovers the bias from the support-vector KKT conditions;
    ``"regularized"`` drops the constraint, adds 1/bias_lambda to the kernel,
    and uses b = sum(alpha*y)/bias_lambda.
    """
    k = kernel.entries if isinstance(kernel, KernelMatrix) else np.asarray(kernel)
    labels = np.asarray(labels, dtype=float)
    m = len(labels)
    if m > 64:
        raise ValidationError("classical oracle is desk-scale: M <= 64")
    if k.shape != (m, m):
        raise StructuralError("kernel/label size mismatch")
    k_eff = k + (1.0 / bias_lambda if bias_mode == "regularized" else 0.0)
    p_mat = np.outer(labels, labels) * k_eff + np.eye(m) / gamma
    p_mat = (p_mat + p_mat.T) / 2.0
    q = -np.ones(m)
    g_mat, h = -np.eye(m), np.zeros(m)
    args = [
        _cvx_matrix(p_mat),
        _cvx_matrix(q),
        _cvx_matrix(g_mat),
        _cvx_matrix(h),
    ]
    if bias_mode == "kkt":
        args += [_cvx_matrix(labels.reshape(1, -1)), _cvx_matrix(np.zeros(1))]
    elif bias_mode != "regularized":
        raise ValidationError(f"unknown bias_mode {bias_mode!r}")
    sol = _cvx_solvers.qp(*args, options=_QP_OPTIONS)
    if sol["status"] != "optimal":
        raise ValidationError(f"dual QP did not converge: {sol['status']}")
    alpha = np.clip(np.array(sol["x"]).ravel(), 0.0, None)

    grad = p_mat @ alpha - 1.0
    sv = alpha > 1e-6 * max(1.0, alpha.max())
    if bias_mode == "kkt":
        if sv.any():
            beta = float(-np.mean(grad[sv] / labels[sv]))
        else:
            beta = 0.0
        resid = np.where(
            sv,
            np.abs(grad + beta * labels),
            np.clip(-(grad + beta * labels), 0.0, None),
        )
        if resid.max() > 1e-5:
            raise ValidationError(f"KKT residual too large: {resid.max():.2e}")
        bias = _kkt_bias(alpha, labels, k_eff, gamma)
    else:
        resid = np.where(sv, np.abs(grad), np.clip(-grad, 0.0, None))
        if resid.max() > 1e-5:
            raise ValidationError(f"stationarity residual too large: {resid.max():.2e}")
        bias = float(np.dot(alpha, labels) / bias_lambda)
    return alpha, bias


def _kkt_bias(
    alpha: np.ndarray, labels: np.ndarray, k: np.ndarray, gamma: float
) -> float:
    sv = alpha > 1e-6 * max(1.0, alpha.max())
    if not sv.any():
        return 0.0
    f_no_bias = (alpha * labels) @ k
    # y_i (f(x_i) + b) = 1 - alpha_i / gamma on support vectors
    values = labels[sv] * (1.0 - alpha[sv] / gamma) - f_no_bias[sv]
    return float(values.mean())


def dual_decision_values(
    alpha: np.ndarray, labels: np.ndarray, kvecs: np.ndarray, bias: float = 0.0
) -> np.ndarray:
    """f(x) = sum_i alpha_i y_i k(x_i, x) + b for rows of ``kvecs``."""
    return np.asarray(kvecs) @ (alpha * labels) + bias


# ---------------------------------------------------------------------------
# variational SV-QSVM


@dataclass
class AlphaModel:
    mode: str  # "variational" or "direct"
    xi: np.ndarray | None
    alpha: np.ndarray  # nonnegative, original sample order
    labels: np.ndarray
    support_mask: np.ndarray
    m_s: int
    bias: float
    gamma: float
    penalty: float
    order: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    n_padded: int = 0

    def __post_init__(self) -> None:
        self.alpha = np.asarray(self.alpha, dtype=float)
        if np.any(self.alpha < -1e-12):
            raise ValidationError("alpha must be nonnegative")


@dataclass(frozen=True)
class SvmObjectiveBreakdown:
    quadratic: float
    l1_norm: float
    constraint: float
    total: float


@dataclass
class LsqsvmSolution:
    f_matrix: np.ndarray
    bias: float
    alpha: np.ndarray


def alpha_ansatz_amplitudes(xi: np.ndarray, m: int) -> np.ndarray:
    """Real amplitudes of U_A(xi)|0>^m: RY layer, CNOT chain, RY layer."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (2 * m,):
        raise ValidationError(f"xi must have length {2 * m}")
    gates: list[GateOp] = [GateOp("RY", (q,), angle=xi[q]) for q in range(m)]
    gates += [GateOp("CNOT", (q, q + 1)) for q in range(m - 1)]
    gates += [GateOp("RY", (q,), angle=xi[m + q]) for q in range(m)]
    state = apply_circuit(Statevector.zero(m), gates)
    amps = np.real(state.amplitudes)
    return amps


def alpha_from_ansatz(xi: np.ndarray, m: int) -> np.ndarray:
    """Nonnegative weights: amplitude magnitudes (sum of squares stays 1)."""
    return np.abs(alpha_ansatz_amplitudes(xi, m))


def _nonneg_state(alpha: np.ndarray) -> Statevector:
    m = int(np.log2(len(alpha)))
    return Statevector(m, alpha.astype(complex))


def svqsvm_objective(
    xi_or_alpha: np.ndarray,
    svm_matrix: SvmMatrix,
    penalty: float,
    mode: str = "exact",
    sampler: ShotSampler | None = None,
    from_alpha: bool = False,
) -> SvmObjectiveBreakdown:
    """Eq-5-style breakdown on |alpha> = U_A(xi)|0>^m (amplitude magnitudes).

    The L1 term comes from the Hadamard test (scaled by sqrt(2^m)); the
    constraint term from the same test with the +-1 label signs inserted.
    In ``mode="sampled"`` the quadratic form uses the Pauli sampling
    estimator and the two tests use binomial shot noise.
    """
    dim = svm_matrix.size
    m = int(np.log2(dim))
    if 2**m != dim:
        raise ValidationError("svm matrix dimension must be a power of two")
    if from_alpha:
        alpha = np.asarray(xi_or_alpha, dtype=float)
    else:
        alpha = alpha_from_ansatz(np.asarray(xi_or_alpha, dtype=float), m)
    state = _nonneg_state(alpha)
    signs = np.asarray(svm_matrix.labels, dtype=float)

    if mode == "exact":
        quadratic = 0.5 * float(alpha @ svm_matrix.entries @ alpha)
        p0, p1 = hadamard_test_probabilities(state)
        l1 = float(np.sqrt(dim) * (p0 - p1))
        p0s, p1s = hadamard_test_probabilities(state, signs=signs)
        constraint = float(np.sqrt(dim) * (p0s - p1s))
    elif mode == "sampled":
        if sampler is None:
            raise ValidationError("sampled mode requires a ShotSampler")
        decomp = pauli_decompose(svm_matrix.entries)
        quadratic = 0.5 * sampled_expectation(decomp, state, sampler.derive(0))
        l1 = np.sqrt(dim) * _sampled_test_difference(state, None, sampler.derive(1))
        constraint = np.sqrt(dim) * _sampled_test_difference(
            state, signs, sampler.derive(2)
        )
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    total = quadratic - l1 + penalty * constraint**2
    return SvmObjectiveBreakdown(quadratic, l1, constraint, total)


def _sampled_test_difference(
    state: Statevector, signs: np.ndarray | None, sampler: ShotSampler
) -> float:
    p0, _ = hadamard_test_probabilities(state, signs=signs)
    counts = sampler.sample_counts(np.array([p0, 1.0 - p0]))
    freq0 = counts[0] / sampler.shots
    return float(2.0 * freq0 - 1.0)


def prepare_svqsvm_problem(
    kernel_entries: np.ndarray, labels: np.ndarray, gamma: float
) -> tuple[np.ndarray, SvmMatrix]:
    """Permute samples so positives precede negatives, pad to a power of two.

    Returns (order, padded SvmMatrix); padded rows/columns carry zero kernel
    and a large diagonal so the optimizer drives their weights to zero.
    Padded labels alternate sign to keep the constraint meaningful.
    """
    labels = np.asarray(labels, dtype=int)
    k = np.asarray(kernel_entries, dtype=float)
    order = np.concatenate(
        [np.flatnonzero(labels == 1), np.flatnonzero(labels == -1)]
    )
    m = len(order)
    dim = 1 << max(1, (m - 1).bit_length())
    perm_k = k[np.ix_(order, order)]
    perm_y = labels[order]
    signed = np.outer(perm_y, perm_y) * perm_k + np.eye(m) / gamma
    full = np.zeros((dim, dim))
    full[:m, :m] = signed
    if dim > m:
        pad_diag = 10.0 * max(1.0, float(np.max(np.diag(signed))))
        pad_labels = np.array([1 if i % 2 == 0 else -1 for i in range(dim - m)])
        for i in range(m, dim):
            full[i, i] = pad_diag
        all_labels = np.concatenate([perm_y, pad_labels])
    else:
        all_labels = perm_y
    return order, SvmMatrix(full, gamma, all_labels)


def train_svqsvm(
    kernel_entries: np.ndarray,
    labels: np.ndarray,
    gamma: float = 10.0,
    penalty: float = 10.0,
    budget: int = 400,
    n_starts: int = 5,
    seed: int = 0,
    threshold: float | None = None,
) -> AlphaModel:
    """Minimize the SV-QSVM objective over the ansatz angles."""
    labels = np.asarray(labels, dtype=int)
    order, svm_matrix = prepare_svqsvm_problem(kernel_entries, labels, gamma)
    dim = svm_matrix.size
    m = int(np.log2(dim))
    n_params = 2 * m

    def objective(xi: np.ndarray) -> float:
        return svqsvm_objective(xi, svm_matrix, penalty).total

    problem = OptimizationProblem(
        objective,
        n_params,
        lower=np.zeros(n_params),
        upper=np.full(n_params, 2 * np.pi),
        budget=budget,
    )
    trace = multistart_minimize(problem, n_starts, seed=seed)
    alpha_perm = alpha_from_ansatz(trace.best_params, m)

    n_real = len(order)
    alpha = np.zeros(n_real)
    alpha[order] = alpha_perm[:n_real]
    model = AlphaModel(
        mode="variational",
        xi=trace.best_params,
        alpha=alpha,
        labels=labels,
        support_mask=np.zeros(n_real, dtype=bool),
        m_s=0,
        bias=0.0,
        gamma=gamma,
        penalty=penalty,
        order=order,
        n_padded=dim - n_real,
    )
    tau = threshold if threshold is not None else 1.0 / (4.0 * n_real)
    extract_support_vectors(model, tau)
    return model


def extract_support_vectors(
    model: AlphaModel, threshold: float, sampler: ShotSampler | None = None
) -> AlphaModel:
    """Mark sample i as a support vector when its measured frequency (or
    exact alpha_i^2) exceeds ``threshold``; falls back to the argmax set."""
    freqs = model.alpha**2
    if sampler is not None:
        dim = 1 << max(1, (len(model.alpha) - 1).bit_length())
        probs = np.zeros(dim)
        probs[: len(freqs)] = freqs
        leftover = 1.0 - probs.sum()
        if leftover > 0:
            probs[-1] += leftover  # padded slots absorb the remainder
        counts = sampler.sample_counts(probs)
        freqs = counts[: len(freqs)] / sampler.shots
    mask = freqs > threshold
    if not mask.any():
        top = freqs.max()
        mask = np.isclose(freqs, top)
        import warnings

        warnings.warn(
            "all measurement frequencies below threshold; keeping argmax set",
            stacklevel=2,
        )
    model.support_mask = mask
    model.m_s = int(mask.sum())
    return model


def svqsvm_decision_value(model: AlphaModel, kvec: np.ndarray) -> float:
    """f(x) = sum_i c_i alpha_i y_i k(x_i, x) / sqrt(m_s)."""
    if model.m_s == 0:
        raise ContractError("support vectors not extracted")
    c = model.support_mask.astype(float)
    return float(
        np.sum(c * model.alpha * model.labels * np.asarray(kvec))
        / np.sqrt(model.m_s)
    )


def classify_svqsvm(
    model: AlphaModel,
    kvec: np.ndarray,
    shots: int | None = None,
    seed: int = 0,
) -> int:
    """Exact sign of f(x), or the fault-tolerant shot-sampled sign.

    Sampled mode returns +1 when the estimate exceeds 1/sqrt(shots), -1 when
    below -1/sqrt(shots), otherwise ``INCONCLUSIVE`` (0).
    """
    f = svqsvm_decision_value(model, kvec)
    if shots is None:
        return 1 if f >= 0 else -1
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    p_plus = np.clip((1.0 + f) / 2.0, 0.0, 1.0)
    sampler = ShotSampler(seed, shots)
    counts = sampler.sample_counts(np.array([p_plus, 1.0 - p_plus]))
    estimate = 2.0 * counts[0] / shots - 1.0
    margin = 1.0 / np.sqrt(shots)
    if estimate > margin:
        return 1
    if estimate < -margin:
        return -1
    return INCONCLUSIVE


# ---------------------------------------------------------------------------
# LS-QSVM baseline


def lsqsvm_solve(
    k0: np.ndarray, labels: np.ndarray, gamma: float
) -> LsqsvmSolution:
    """Solve the (M+1) x (M+1) least-squares system."""
    k0 = np.asarray(k0, dtype=float)
    labels = np.asarray(labels, dtype=float)
    m = len(labels)
    f_matrix = np.zeros((m + 1, m + 1))
    f_matrix[0, 1:] = 1.0
    f_matrix[1:, 0] = 1.0
    f_matrix[1:, 1:] = k0 + np.eye(m) / gamma
    rhs = np.concatenate([[0.0], labels])
    try:
        solution = np.linalg.solve(f_matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"singular LS-QSVM system: {exc}") from exc
    residual = np.linalg.norm(f_matrix @ solution - rhs, ord=np.inf)
    if residual > 1e-8:
        raise ValidationError(f"LS-QSVM residual too large: {residual:.2e}")
    return LsqsvmSolution(f_matrix, float(solution[0]), solution[1:])


def lsqsvm_decision_values(
    solution: LsqsvmSolution, kvecs: np.ndarray
) -> np.ndarray:
    """Normalized <v|u> per trial row: (b + sum alpha_i k_i) / sqrt(Nu Nx)."""
    kvecs = np.atleast_2d(np.asarray(kvecs, dtype=float))
    m = len(solution.alpha)
    n_u = solution.bias**2 + float(np.sum(solution.alpha**2))
    n_x = m + 1.0
    raw = solution.bias + kvecs @ solution.alpha
    return raw / np.sqrt(n_u * n_x)


def lsqsvm_solve_and_classify(
    k0: np.ndarray, labels: np.ndarray, gamma: float, kvecs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, LsqsvmSolution]:
    solution = lsqsvm_solve(k0, labels, gamma)
    f = lsqsvm_decision_values(solution, kvecs)
    return np.where(f >= 0, 1, -1), f, solution


# ---------------------------------------------------------------------------
# histograms and verifiers


def distinguishability_histogram(
    f_values: np.ndarray, bin_width: float = 0.01
) -> dict:
    """Binned decision-value counts plus the fraction with |f| < 0.05."""
    f_values = np.asarray(f_values, dtype=float)
    if f_values.size == 0:
        raise ValidationError("empty decision-value batch")
    bins = np.round(f_values / bin_width) * bin_width
    centers, counts = np.unique(np.round(bins, 10), return_counts=True)
    return {
        "bin_centers": centers,
        "counts": counts,
        "fraction_small": float(np.mean(np.abs(f_values) < 0.05)),
        "mean": float(f_values.mean()),
    }


def verify_theorem1_scaling(
    layout: FeatureMapLayout,
    theta: np.ndarray,
    m_grid: list[int],
    trials: int = 200,
    seed: int = 0,
) -> dict:
    """Empirical std of f(x) vs M with alpha uniform and random balanced
    labels; fits the log-log slope (target -1/2)."""
    if min(m_grid) < 16 or trials < 200:
        raise ValidationError("need M >= 16 and trials >= 200")
    rng = np.random.default_rng(seed)
    stds = []
    for m in m_grid:
        values = np.empty(trials)
        for t in range(trials):
            data = rng.uniform(0.0, np.pi, size=(m, layout.n_qubits))
            x = rng.uniform(0.0, np.pi, size=(1, layout.n_qubits))
            states = encode_many(layout, np.vstack([data, x]), theta)
            kvals = np.real(states[:m].conj() @ states[m])
            labels = rng.permutation(np.repeat([1.0, -1.0], m // 2))
            alpha = np.full(m, 1.0 / np.sqrt(m))
            values[t] = np.sum(alpha * labels * kvals) / np.sqrt(m)
        stds.append(float(values.std(ddof=1)))
    slope = float(
        np.polyfit(np.log(np.asarray(m_grid, dtype=float)), np.log(stds), 1)[0]
    )
    return {"m_grid": list(m_grid), "stds": stds, "slope": slope}


def lemma1_bound_holds(
    k: np.ndarray,
    k_noisy: np.ndarray,
    alpha: np.ndarray,
    alpha_noisy: np.ndarray,
) -> tuple[bool, bool]:
    """(precondition satisfied, bound satisfied) for one perturbation trial."""
    lam_min = float(np.linalg.eigvalsh((k + k.T) / 2.0)[0])
    eps = float(np.linalg.norm(k_noisy - k, ord="fro"))
    if eps >= lam_min:
        return False, True
    bound = eps / (lam_min - eps) * (1.0 + np.linalg.norm(alpha))
    return True, bool(np.linalg.norm(alpha_noisy - alpha) <= bound + 1e-9)


def verify_shot_budget_lemmas(
    layout: FeatureMapLayout,
    theta: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    gamma: float = 10.0,
    shot_grid: tuple[int, ...] = (1_000, 10_000, 100_000),
    n_trials: int = 20,
    n_perturbations: int = 100,
    seed: int = 0,
) -> dict:
    """Shot-noise monotonicity plus the Lemma-1 perturbation bound check."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    m = len(labels)
    if m > 8:
        raise ValidationError("lemma verifier runs on M <= 8 instances")
    states = encode_many(layout, features, theta)
    k_exact = np.abs(states.conj() @ states.T) ** 2
    np.fill_diagonal(k_exact, 1.0)
    svm_exact = build_svm_matrix(k_exact, labels, gamma).entries
    alpha_exact, _ = classical_dual_solve(k_exact, labels, gamma)
    lam_min = float(np.linalg.eigvalsh(svm_exact)[0])

    rng = np.random.default_rng(seed)
    k_medians, a_medians = [], []
    for shots in shot_grid:
        k_errs, a_errs = [], []
        for t in range(n_trials):
            k_noisy = np.eye(m)
            for i in range(m):
                for j in range(i + 1, m):
                    freq = rng.binomial(shots, k_exact[i, j]) / shots
                    k_noisy[i, j] = k_noisy[j, i] = freq
            svm_noisy = build_svm_matrix(k_noisy, labels, gamma).entries
            k_errs.append(np.linalg.norm(svm_noisy - svm_exact, ord="fro"))
            alpha_noisy, _ = classical_dual_solve(k_noisy, labels, gamma)
            a_errs.append(np.linalg.norm(alpha_noisy - alpha_exact))
        k_medians.append(float(np.median(k_errs)))
        a_medians.append(float(np.median(a_errs)))

    checked = violations = excluded = 0
    while checked < n_perturbations:
        noise = rng.normal(scale=lam_min / 8.0, size=(m, m))
        noise = (noise + noise.T) / 2.0
        k_pert = k_exact + noise
        svm_pert = build_svm_matrix(k_pert, labels, gamma).entries
        eps = float(np.linalg.norm(svm_pert - svm_exact, ord="fro"))
        if eps >= lam_min or np.linalg.eigvalsh(svm_pert)[0] <= 0:
            excluded += 1
            continue
        try:
            alpha_pert, _ = classical_dual_solve(k_pert, labels, gamma)
        except ValidationError:
            excluded += 1
            continue
        valid, ok = lemma1_bound_holds(
            svm_exact, svm_pert, alpha_exact, alpha_pert
        )
        if not valid:
            excluded += 1
            continue
        checked += 1
        if not ok:
            violations += 1
    return {
        "shot_grid": list(shot_grid),
        "kernel_error_medians": k_medians,
        "alpha_error_medians": a_medians,
        "lemma1_trials": checked,
        "lemma1_violations": violations,
        "lemma1_excluded": excluded,
        "lambda_min": lam_min,
    }


def compare_variational_classical(
    model: AlphaModel, alpha_classical: np.ndarray
) -> dict:
    """Scale-free comparison of the two alpha vectors."""
    a, b = model.alpha, np.asarray(alpha_classical, dtype=float)
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    cosine = float(np.dot(a, b) / denom) if denom > 0 else 0.0
    scale = float(np.dot(a, b) / np.dot(a, a)) if np.dot(a, a) > 0 else 0.0
    return {"cosine": cosine, "fitted_scale": scale}
