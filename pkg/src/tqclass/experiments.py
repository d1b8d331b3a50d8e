"""Reproduction scenarios: feature-map training, the explicit-classifier
comparison table, the ensemble classifier, SV-QSVM vs LS-QSVM, the
Grover-amplified multiclass readout, and the lemma/theorem verifiers.

Every runner is a pure function of (dataset, hyperparameters, seed) so the
CLI and the test suite share the exact same code paths.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import feature_map as fm
from . import kernel as kn
from . import multiclass as mc
from . import svm as svm_mod
from .errors import ValidationError
from .optimize import OptimizationProblem, minimize, multistart_minimize
from .sim import ShotSampler

EXPERIMENTS = (
    "train-tqfm",
    "explicit-compare",
    "ensemble",
    "svqsvm-vs-lsqsvm",
    "multiclass-readout",
    "verify-lemmas",
    "verify-theorem1",
)

COMPARISON_REFERENCE = {
    ("tqfm-y", 0): 68.0,
    ("tqfm-y", 1): 81.6,
    ("tqfm-y", 2): 86.0,
    ("tqfm-zyz", 0): 83.2,
    ("tqfm-zyz", 1): 86.0,
    ("tqfm-zyz", 2): 91.8,
    ("qfm-zyz", 0): 63.6,
    ("qfm-zyz", 1): 84.4,
    ("qfm-zyz", 2): 89.8,
}

ENSEMBLE_REFERENCE = {0: 92.0, 1: 91.8, 2: 94.8}
READOUT_REFERENCE = {0: 95.3, 1: 93.3, 2: 94.7}
# reference counts of samples classified with amplified probability > 1/2
READOUT_OVER_HALF_REFERENCE = {0: 81, 1: 125, 2: 136}
# the three-class clustering landscape at depth 2 has shallow local minima;
# restarts until the loss plateaus (~0.32) are required for a good map
READOUT_TRAIN_BUDGET = 1500
READOUT_TRAIN_STARTS = 8

# All reproduction scenarios entangle every qubit pair: with a linear chain
# the readout qubit's light cone misses the informative petal features until
# depth 3, which caps the deeper table cells well below their targets.
DEFAULT_ENTANGLER = "FullCZ"


@dataclass
class RunConfig:
    experiment: str
    seeds: list[int] = field(default_factory=lambda: [0])
    layers: int = 2
    rotation: str = "Y"
    shots: int = 10_000
    budget: int = 500
    gamma: float = 10.0
    c_penalty: float = 10.0
    threshold: float | None = None
    iterations: int = 1
    kernel_power: int = 2
    out_dir: str = "artifacts"
    dataset_path: str | None = None
    strict: bool = False

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


def load_normalized_dataset(path: str | None = None) -> data_mod.LabeledDataset:
    raw = data_mod.load_iris() if path is None else data_mod.load_csv(path, "species")
    return data_mod.normalize(raw, "minmax", lo=0.0, hi=np.pi)


# ---------------------------------------------------------------------------
# feature-map training


def train_clustering(
    dataset: data_mod.LabeledDataset,
    layers: int = 2,
    rotation: str = "Y",
    seed: int = 0,
    budget: int = 500,
    per_class: int = 10,
    start: str = "zero",
    n_starts: int = 1,
    initial_step: float = 0.3,
):
    """Minimize the clustering loss on a stratified per-class split."""
    split = data_mod.sample_split(
        dataset, [per_class] * dataset.n_classes, seed=seed
    )
    train = dataset.subset(split.train_indices)
    layout = fm.FeatureMapLayout(
        dataset.n_features, layers=layers, rotation_pattern=rotation,
        entangler=DEFAULT_ENTANGLER,
    )
    n_params = layout.parameter_count()

    def objective(theta: np.ndarray) -> float:
        return fm.clustering_loss(layout, theta, train.features, train.labels)

    problem = OptimizationProblem(
        objective, n_params, lower=0.0, upper=2 * np.pi, budget=budget
    )
    if start == "zero":
        trace = (
            minimize(problem, np.zeros(n_params), seed=seed,
                     initial_step=initial_step)
            if n_starts == 1
            else multistart_minimize(
                problem, n_starts, seed=seed,
                first_start=np.zeros(n_params), initial_step=initial_step,
            )
        )
    else:
        trace = multistart_minimize(
            problem, n_starts, seed=seed, initial_step=initial_step
        )
    return {"layout": layout, "theta": trace.best_params, "trace": trace,
            "split": split, "train": train}


# ---------------------------------------------------------------------------
# explicit model comparison


def _binary_states(model: str, layers: int, xs: np.ndarray, theta: np.ndarray):
    if model == "qfm-zyz":
        return fm.baseline_head_states(xs, theta, layers, DEFAULT_ENTANGLER)
    pattern = "Y" if model == "tqfm-y" else "ZYZ"
    layout = fm.FeatureMapLayout(
        xs.shape[1], layers=layers, rotation_pattern=pattern,
        entangler=DEFAULT_ENTANGLER,
    )
    return fm.encode_many(layout, xs, theta)


def binary_parameter_count(model: str, layers: int, n_features: int) -> int:
    if model == "qfm-zyz":
        return fm.baseline_head_parameter_count(n_features, layers)
    pattern = "Y" if model == "tqfm-y" else "ZYZ"
    return fm.FeatureMapLayout(
        n_features, layers=layers, rotation_pattern=pattern
    ).parameter_count()


def _first_qubit_one(states: np.ndarray) -> np.ndarray:
    probs = np.abs(states) ** 2
    return probs.reshape(probs.shape[0], -1, 2)[:, :, 1].sum(axis=1)


def explicit_binary_run(
    dataset: data_mod.LabeledDataset,
    class_pair: tuple[int, int],
    model: str,
    layers: int,
    seed: int,
    budget: int = 2500,
    train_per_class: int = 5,
    n_starts: int = 3,
):
    """Train one binary explicit classifier and score it on the full pair.

    The first class of the pair is mapped to +1 (first qubit |1>), the other
    to -1.  Training minimizes the compact first-qubit loss; the start point
    is random, matching the averaged-restart protocol.
    """
    pos, _ = class_pair
    pair_idx = np.flatnonzero(np.isin(dataset.labels, class_pair))
    features = dataset.features[pair_idx]
    labels = np.where(dataset.labels[pair_idx] == pos, 1, -1)

    rng = np.random.default_rng(seed)
    train_idx = []
    for lab in (1, -1):
        members = np.flatnonzero(labels == lab)
        train_idx.extend(rng.choice(members, train_per_class, replace=False))
    train_idx = np.array(sorted(train_idx))
    xs_train, y_train = features[train_idx], labels[train_idx]

    n_params = binary_parameter_count(model, layers, dataset.n_features)
    target_bit = (1 + y_train) // 2

    def objective(theta: np.ndarray) -> float:
        p1 = _first_qubit_one(_binary_states(model, layers, xs_train, theta))
        hit = np.where(target_bit == 1, p1, 1.0 - p1)
        return float(1.0 - hit.mean())

    problem = OptimizationProblem(
        objective, n_params, lower=0.0, upper=2 * np.pi, budget=budget
    )
    start = rng.uniform(0.0, 2 * np.pi, size=n_params)
    trace = multistart_minimize(problem, n_starts, seed=seed, first_start=start)

    p1_all = _first_qubit_one(
        _binary_states(model, layers, features, trace.best_params)
    )
    predicted = np.where(p1_all >= 0.5, 1, -1)
    accuracy = float(np.mean(predicted == labels))
    return {
        "model": model,
        "layers": layers,
        "seed": seed,
        "theta": trace.best_params,
        "loss": trace.best_value,
        "accuracy": accuracy,
        "train_indices": train_idx,
        "pair_indices": pair_idx,
        "pair_labels": labels,
    }


#: optimizer effort per model row: (budget, restarts).  The ZYZ trainable map
#: has three times the parameters of the Y map and needs more of both.
COMPARISON_EFFORT = {
    "tqfm-y": (2500, 3),
    "tqfm-zyz": (4000, 5),
    "qfm-zyz": (2500, 3),
}


def explicit_compare(
    dataset: data_mod.LabeledDataset,
    seeds: list[int],
    class_pair: tuple[int, int] = (1, 2),
    effort: dict[str, tuple[int, int]] | None = None,
    models: tuple[str, ...] = ("tqfm-y", "tqfm-zyz", "qfm-zyz"),
    layer_grid: tuple[int, ...] = (0, 1, 2),
):
    """Per-cell mean/std success rates and losses across seeds."""
    effort = COMPARISON_EFFORT if effort is None else effort
    cells = {}
    for model in models:
        budget, n_starts = effort[model]
        for layers in layer_grid:
            runs = [
                explicit_binary_run(
                    dataset, class_pair, model, layers, seed,
                    budget=budget, n_starts=n_starts,
                )
                for seed in seeds
            ]
            accs = np.array([r["accuracy"] for r in runs]) * 100.0
            losses = np.array([r["loss"] for r in runs])
            cells[(model, layers)] = {
                "success_mean": float(accs.mean()),
                "success_std": float(accs.std()),
                "loss_mean": float(losses.mean()),
                "reference": COMPARISON_REFERENCE.get((model, layers)),
                "runs": runs,
            }
    return cells


def comparison_deviation_flags(cells: dict, tolerance: float = 5.0) -> dict:
    return {
        key: abs(cell["success_mean"] - cell["reference"]) > tolerance
        for key, cell in cells.items()
        if cell["reference"] is not None
    }


# ---------------------------------------------------------------------------
# ensemble experiment


def ensemble_run(
    dataset: data_mod.LabeledDataset,
    class_pair: tuple[int, int],
    theta: np.ndarray,
    layers: int,
    train_indices_per_class: dict[int, np.ndarray],
    rotation: str = "Y",
):
    """Binary density-matrix ensemble accuracy on the full class pair."""
    layout = fm.FeatureMapLayout(
        dataset.n_features, layers=layers, rotation_pattern=rotation,
        entangler=DEFAULT_ENTANGLER,
    )
    ensembles = [
        mc.ClassEnsemble.from_samples(
            j, layout, theta, dataset.features[train_indices_per_class[cls]]
        )
        for j, cls in enumerate(class_pair)
    ]
    mask = np.isin(dataset.labels, class_pair)
    correct = 0
    total = 0
    for idx in np.flatnonzero(mask):
        got = mc.ensemble_decision_ovo(
            ensembles, dataset.features[idx], layout, theta
        )
        truth = class_pair.index(int(dataset.labels[idx]))
        correct += int(got == truth)
        total += 1
    return {"accuracy": 100.0 * correct / total, "n": total}


def ensemble_experiment(
    dataset: data_mod.LabeledDataset,
    seeds: list[int],
    class_pair: tuple[int, int] = (1, 2),
    layer_grid: tuple[int, ...] = (0, 1, 2),
    budget: int = 2500,
    members_per_class: int = 4,
    comparison_cells: dict | None = None,
):
    """Reuses the explicit-run training for theta*; each class ensemble holds
    the first ``members_per_class`` samples of its class in dataset order.

    ``comparison_cells`` (the output of :func:`explicit_compare`) lets callers
    share the TQFM(y) training runs instead of re-optimizing.
    """
    per_class = {
        cls: np.flatnonzero(dataset.labels == cls)[:members_per_class]
        for cls in class_pair
    }
    results = {}
    for layers in layer_grid:
        accs = []
        for i, seed in enumerate(seeds):
            if comparison_cells is not None:
                run = comparison_cells[("tqfm-y", layers)]["runs"][i]
            else:
                run = explicit_binary_run(
                    dataset, class_pair, "tqfm-y", layers, seed, budget=budget
                )
            out = ensemble_run(
                dataset, class_pair, run["theta"], layers, per_class
            )
            accs.append(out["accuracy"])
        results[layers] = {
            "accuracy_mean": float(np.mean(accs)),
            "accuracy_std": float(np.std(accs)),
            "reference": ENSEMBLE_REFERENCE.get(layers),
        }
    return results


# ---------------------------------------------------------------------------
# SV-QSVM vs LS-QSVM


def svqsvm_vs_lsqsvm(
    dataset: data_mod.LabeledDataset,
    seed: int = 0,
    layers: int = 2,
    rotation: str = "Y",
    gamma: float = 10.0,
    c_penalty: float = 10.0,
    train_budget: int = 500,
    svm_budget: int = 600,
    shots: int = 4095,
    theta: np.ndarray | None = None,
):
    """The 8-sample comparison: 4/2/2 split, class 0 positive, bias 0."""
    if theta is None:
        trained = train_clustering(
            dataset, layers=layers, rotation=rotation, seed=seed, budget=train_budget
        )
        theta, layout = trained["theta"], trained["layout"]
    else:
        layout = fm.FeatureMapLayout(
            dataset.n_features, layers=layers, rotation_pattern=rotation,
            entangler=DEFAULT_ENTANGLER,
        )
    split = data_mod.sample_split(dataset, [4, 2, 2], seed=seed)
    train = dataset.subset(split.train_indices)
    y_train = np.where(train.labels == 0, 1, -1)

    train_states = fm.encode_many(layout, train.features, theta)
    all_states = fm.encode_many(layout, dataset.features, theta)
    k0 = np.abs(train_states.conj() @ train_states.T) ** 2
    np.fill_diagonal(k0, 1.0)
    kvecs = np.abs(all_states.conj() @ train_states.T) ** 2

    model = svm_mod.train_svqsvm(
        k0, y_train, gamma=gamma, penalty=c_penalty,
        budget=svm_budget, n_starts=5, seed=seed,
    )
    y_true = np.where(dataset.labels == 0, 1, -1)
    f_sv = np.array([svm_mod.svqsvm_decision_value(model, kv) for kv in kvecs])
    sv_pred = np.where(f_sv >= 0, 1, -1)
    sv_acc = 100.0 * float(np.mean(sv_pred == y_true))

    ls_pred, f_ls, ls_sol = svm_mod.lsqsvm_solve_and_classify(
        k0, y_train, gamma, kvecs
    )
    ls_acc = 100.0 * float(np.mean(ls_pred == y_true))

    hist_sv = svm_mod.distinguishability_histogram(f_sv)
    hist_ls = svm_mod.distinguishability_histogram(f_ls)

    sampled = [
        svm_mod.classify_svqsvm(model, kv, shots=shots, seed=seed * 100003 + i)
        for i, kv in enumerate(kvecs)
    ]
    return {
        "theta": theta,
        "split": split,
        "model": model,
        "sv_accuracy": sv_acc,
        "ls_accuracy": ls_acc,
        "f_sv": f_sv,
        "f_ls": f_ls,
        "sv_fraction_small": hist_sv["fraction_small"],
        "ls_fraction_small": hist_ls["fraction_small"],
        "hist_sv": hist_sv,
        "hist_ls": hist_ls,
        "sampled_labels": np.array(sampled),
        "ls_solution": ls_sol,
    }


# ---------------------------------------------------------------------------
# multiclass readout


def multiclass_readout(
    dataset: data_mod.LabeledDataset,
    seed: int = 0,
    layers: int = 2,
    rotation: str = "Y",
    iterations: int = 1,
    shots: int = 10_000,
    members_per_class: int = 4,
    train_budget: int = 500,
    train_starts: int = 1,
    theta: np.ndarray | None = None,
):
    """Classify every sample via the Grover-amplified readout circuit."""
    if theta is None:
        trained = train_clustering(
            dataset, layers=layers, rotation=rotation, seed=seed,
            budget=train_budget, n_starts=train_starts,
        )
        theta, layout, split = trained["theta"], trained["layout"], trained["split"]
    else:
        layout = fm.FeatureMapLayout(
            dataset.n_features, layers=layers, rotation_pattern=rotation,
            entangler=DEFAULT_ENTANGLER,
        )
        split = data_mod.sample_split(
            dataset, [members_per_class] * dataset.n_classes, seed=seed
        )
    per_class_features = []
    for cls in range(dataset.n_classes):
        members = np.flatnonzero(dataset.labels == cls)[:members_per_class]
        per_class_features.append(dataset.features[members])

    circuit = mc.ReadoutCircuit(layout, theta, per_class_features)
    rows = []
    for idx in range(dataset.n_samples):
        circuit.set_trial(dataset.features[idx])
        state = circuit.build_state()
        sampler = ShotSampler(seed * 1_000_003 + idx, shots)
        report = mc.grover_readout(
            state, circuit.map, circuit, iterations=iterations, sampler=sampler
        )
        rows.append(
            {
                "sample": idx,
                "true_class": int(dataset.labels[idx]),
                "before": report["probabilities_before"],
                "after": report["probabilities_after"],
                "predicted": report["predicted_sampled"],
                "winning_prob": float(np.max(report["probabilities_after"])),
            }
        )
    success = 100.0 * float(
        np.mean([r["predicted"] == r["true_class"] for r in rows])
    )
    over_half = int(sum(r["winning_prob"] > 0.5 and r["predicted"] == r["true_class"] for r in rows))
    per_class = {}
    for cls in range(dataset.n_classes):
        cls_rows = [r for r in rows if r["true_class"] == cls]
        per_class[cls] = {
            "before_max": max(float(r["before"][cls]) for r in cls_rows),
            "before_min": min(float(r["before"][cls]) for r in cls_rows),
            "before_avg": float(np.mean([r["before"][cls] for r in cls_rows])),
            "after_max": max(float(r["after"][cls]) for r in cls_rows),
            "after_min": min(float(r["after"][cls]) for r in cls_rows),
            "after_avg": float(np.mean([r["after"][cls] for r in cls_rows])),
            "over_half": sum(
                1
                for r in cls_rows
                if r["after"][cls] > 0.5 and r["predicted"] == r["true_class"]
            ),
        }
    return {
        "rows": rows,
        "success": success,
        "over_half": over_half,
        "per_class": per_class,
        "theta": theta,
    }


# ---------------------------------------------------------------------------
# artifact emission


def _write(path: Path, text: str, manifest: dict) -> None:
    path.write_text(text)
    manifest[path.name] = hashlib.sha256(text.encode()).hexdigest()


def _trace_csv(trace) -> str:
    lines = ["evaluation,value,best_so_far"]
    lines += [f"{i},{v:.10g},{b:.10g}" for i, v, b in trace.to_csv_rows()]
    return "\n".join(lines) + "\n"


def run(config: RunConfig) -> dict:
    """Execute one experiment, write its artifacts, return the manifest."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_normalized_dataset(config.dataset_path)
    manifest: dict = {}
    deviation = False

    if config.experiment == "train-tqfm":
        res = train_clustering(
            dataset, layers=config.layers, rotation=config.rotation,
            seed=config.seeds[0], budget=config.budget,
        )
        _write(out / "loss_trace.csv", _trace_csv(res["trace"]), manifest)
        kernel = kn.build_kernel_matrix(
            res["layout"], res["theta"], res["train"].features,
            power=config.kernel_power,
        )
        kernel0 = kn.build_kernel_matrix(
            res["layout"], np.zeros_like(res["theta"]), res["train"].features,
            power=config.kernel_power,
        )
        kn.export_kernel_csv(kernel, out / "kernel_trained.csv")
        kn.export_kernel_csv(kernel0, out / "kernel_untrained.csv")
        kn.export_kernel_pgm(kernel, out / "kernel_trained.pgm")
        kn.export_kernel_pgm(kernel0, out / "kernel_untrained.pgm")
        for name in (
            "kernel_trained.csv",
            "kernel_untrained.csv",
            "kernel_trained.pgm",
            "kernel_untrained.pgm",
        ):
            manifest[name] = hashlib.sha256((out / name).read_bytes()).hexdigest()
        summary = {"final_loss": res["trace"].best_value,
                   "evaluations": res["trace"].evaluations_used}
        deviation = res["trace"].best_value > 0.45

    elif config.experiment == "explicit-compare":
        cells = explicit_compare(dataset, config.seeds)
        _write(out / "comparison_table.csv", report_comparison(cells), manifest)
        flags = comparison_deviation_flags(cells)
        deviation = any(flags.values())
        summary = {
            f"{m}-r{l}": cells[(m, l)]["success_mean"] for (m, l) in cells
        }

    elif config.experiment == "ensemble":
        res = ensemble_experiment(dataset, config.seeds, budget=config.budget)
        lines = ["layers,accuracy_mean,accuracy_std,reference"]
        for layers, cell in sorted(res.items()):
            lines.append(
                f"{layers},{cell['accuracy_mean']:.2f},"
                f"{cell['accuracy_std']:.2f},{cell['reference']}"
            )
        _write(out / "ensemble.csv", "\n".join(lines) + "\n", manifest)
        deviation = any(
            abs(cell["accuracy_mean"] - cell["reference"]) > 5.0
            for cell in res.values()
        )
        summary = {f"r{l}": c["accuracy_mean"] for l, c in res.items()}

    elif config.experiment == "svqsvm-vs-lsqsvm":
        res = svqsvm_vs_lsqsvm(
            dataset, seed=config.seeds[0], layers=config.layers,
            gamma=config.gamma, c_penalty=config.c_penalty,
            shots=config.shots if config.shots else 4095,
        )
        lines = ["bin_center,count,classifier"]
        for tag in ("sv", "ls"):
            hist = res[f"hist_{tag}"]
            for c, n in zip(hist["bin_centers"], hist["counts"]):
                lines.append(f"{c:.4f},{n},{tag}")
        _write(out / "distinguishability.csv", "\n".join(lines) + "\n", manifest)
        summary = {
            "sv_accuracy": res["sv_accuracy"],
            "ls_accuracy": res["ls_accuracy"],
            "sv_fraction_small": res["sv_fraction_small"],
            "ls_fraction_small": res["ls_fraction_small"],
        }
        deviation = res["sv_accuracy"] < 97.0 or abs(res["ls_accuracy"] - 92.0) > 5.0

    elif config.experiment == "multiclass-readout":
        all_layers = (0, 1, 2) if config.layers is None else (config.layers,)
        lines = [
            "r,class,before_max,before_min,before_avg,"
            "after_max,after_min,after_avg,over_half,success"
        ]
        summary = {}
        for layers in all_layers:
            res = multiclass_readout(
                dataset, seed=config.seeds[0], layers=layers,
                iterations=config.iterations, shots=config.shots,
                train_budget=READOUT_TRAIN_BUDGET,
                train_starts=READOUT_TRAIN_STARTS,
            )
            for cls, row in res["per_class"].items():
                lines.append(
                    f"{layers},{cls + 1},{row['before_max']:.2f},"
                    f"{row['before_min']:.2f},{row['before_avg']:.2f},"
                    f"{row['after_max']:.2f},{row['after_min']:.2f},"
                    f"{row['after_avg']:.2f},{row['over_half']},"
                    f"{res['success']:.1f}"
                )
            summary[f"r{layers}"] = res["success"]
            ref = READOUT_REFERENCE.get(layers)
            if ref is not None and abs(res["success"] - ref) > 5.0:
                deviation = True
        _write(out / "readout_table.csv", "\n".join(lines) + "\n", manifest)

    elif config.experiment == "verify-lemmas":
        layout = fm.FeatureMapLayout(
            dataset.n_features, layers=config.layers,
            rotation_pattern=config.rotation, entangler=DEFAULT_ENTANGLER,
        )
        rng = np.random.default_rng(config.seeds[0])
        theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
        split = data_mod.sample_split(dataset, [4, 2, 2], seed=config.seeds[0])
        sub = dataset.subset(split.train_indices)
        labels = np.where(sub.labels == 0, 1, -1)
        res = svm_mod.verify_shot_budget_lemmas(
            layout, theta, sub.features, labels, gamma=config.gamma,
            seed=config.seeds[0],
        )
        _write(out / "lemma_report.json", json.dumps(res, indent=2), manifest)
        summary = res
        deviation = res["lemma1_violations"] > 0

    elif config.experiment == "verify-theorem1":
        layout = fm.FeatureMapLayout(
            dataset.n_features, layers=1, rotation_pattern=config.rotation,
            entangler=DEFAULT_ENTANGLER,
        )
        rng = np.random.default_rng(config.seeds[0])
        theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
        res = svm_mod.verify_theorem1_scaling(
            layout, theta, [16, 32, 64, 128], trials=500, seed=config.seeds[0]
        )
        _write(out / "theorem1_report.json", json.dumps(res, indent=2), manifest)
        summary = res
        deviation = not (-0.65 <= res["slope"] <= -0.35)

    else:  # pragma: no cover - guarded in RunConfig
        raise ValidationError(config.experiment)

    result = {
        "experiment": config.experiment,
        "summary": summary,
        "deviation": deviation,
        "files": manifest,
    }
    (out / "manifest.json").write_text(json.dumps(result, indent=2, default=float))
    return result


def report_comparison(cells: dict) -> str:
    """Comparison-table CSV with reference targets and deviation flags."""
    lines = ["model,r,success_mean,success_std,loss_mean,reference,deviation_flag"]
    for (model, layers), cell in sorted(cells.items()):
        ref = cell["reference"]
        flag = (
            ""
            if ref is None
            else str(abs(cell["success_mean"] - ref) > 5.0).lower()
        )
        lines.append(
            f"{model},{layers},{cell['success_mean']:.2f},"
            f"{cell['success_std']:.2f},{cell['loss_mean']:.3f},{ref},{flag}"
        )
    return "\n".join(lines) + "\n"
