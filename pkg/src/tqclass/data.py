"""Dataset ingestion, normalization, and deterministic splits."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ValidationError

IRIS_RESOURCE = "iris.csv"


@dataclass
class LabeledDataset:
    features: np.ndarray  # (M, n) raw or normalized values
    labels: np.ndarray  # contiguous class indices 0..L-1
    class_names: list[str]
    normalization: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2:
            raise ValidationError("features must be a 2-D matrix")
        if len(self.labels) != len(self.features):
            raise ValidationError("labels length must match features rows")
        if not np.all(np.isfinite(self.features)):
            bad = int(np.argwhere(~np.isfinite(self.features))[0][0])
            raise ValidationError(f"non-finite feature value in row {bad}")
        present = sorted(set(self.labels.tolist()))
        if present != list(range(len(present))):
            raise ValidationError("class indices must be contiguous from 0")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(
            self.features[indices],
            self.labels[indices],
            self.class_names,
            dict(self.normalization),
            dict(self.provenance),
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "features": self.features.tolist(),
                "labels": self.labels.tolist(),
                "class_names": self.class_names,
                "normalization": self.normalization,
                "provenance": self.provenance,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LabeledDataset":
        obj = json.loads(text)
        return cls(
            np.array(obj["features"]),
            np.array(obj["labels"]),
            obj["class_names"],
            obj["normalization"],
            obj["provenance"],
        )


@dataclass
class SplitRecord:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    description: str = ""

    def __post_init__(self) -> None:
        self.train_indices = np.asarray(self.train_indices, dtype=int)
        self.test_indices = np.asarray(self.test_indices, dtype=int)
        if set(self.train_indices) & set(self.test_indices):
            raise ValidationError("train and test indices overlap")

    def to_json(self) -> str:
        return json.dumps(
            {
                "train_indices": self.train_indices.tolist(),
                "test_indices": self.test_indices.tolist(),
                "seed": self.seed,
                "description": self.description,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SplitRecord":
        obj = json.loads(text)
        return cls(
            np.array(obj["train_indices"]),
            np.array(obj["test_indices"]),
            obj["seed"],
            obj["description"],
        )


def load_csv(path: str | Path, label_column: str) -> LabeledDataset:
    """Load a header-ed CSV with numeric feature columns and a label column."""
    path = Path(path)
    text = path.read_text()
    return _parse_csv(text, label_column, source=str(path))


def _parse_csv(text: str, label_column: str, source: str) -> LabeledDataset:
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or label_column not in reader.fieldnames:
        raise ValidationError(f"missing label column {label_column!r}")
    feature_cols = [c for c in reader.fieldnames if c != label_column]
    rows, raw_labels = [], []
    for lineno, row in enumerate(reader, start=2):
        try:
            values = [float(row[c]) for c in feature_cols]
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed row at line {lineno}: {exc}") from exc
        if not all(np.isfinite(values)):
            raise ValidationError(f"non-finite value at line {lineno}")
        rows.append(values)
        raw_labels.append(row[label_column])
    if not rows:
        raise ValidationError("empty dataset file")
    class_names = sorted(set(raw_labels))
    mapping = {name: i for i, name in enumerate(class_names)}
    labels = np.array([mapping[v] for v in raw_labels])
    digest = hashlib.sha256(text.encode()).hexdigest()
    return LabeledDataset(
        np.array(rows),
        labels,
        class_names,
        provenance={"source": source, "sha256": digest, "label_column": label_column},
    )


def load_iris() -> LabeledDataset:
    """The 150-row IRIS measurements shipped with the package."""
    text = (
        resources.files("tqclass").joinpath("datasets").joinpath(IRIS_RESOURCE)
    ).read_text()
    return _parse_csv(text, "species", source=f"package:{IRIS_RESOURCE}")


def normalize(
    dataset: LabeledDataset,
    method: str = "minmax",
    lo: float = 0.0,
    hi: float = np.pi,
) -> LabeledDataset:
    """Min-max scale every feature column to [lo, hi] (or z-score)."""
    if dataset.n_samples == 0:
        raise ValidationError("empty dataset")
    feats = dataset.features
    if method == "minmax":
        mins, maxs = feats.min(axis=0), feats.max(axis=0)
        span = maxs - mins
        constant = span == 0
        span = np.where(constant, 1.0, span)
        scaled = lo + (feats - mins) / span * (hi - lo)
        scaled[:, constant] = (lo + hi) / 2.0
        meta = {
            "method": "minmax",
            "lo": lo,
            "hi": hi,
            "mins": mins.tolist(),
            "maxs": maxs.tolist(),
        }
    elif method == "zscore":
        mean, std = feats.mean(axis=0), feats.std(axis=0)
        std = np.where(std == 0, 1.0, std)
        scaled = (feats - mean) / std
        meta = {"method": "zscore", "mean": mean.tolist(), "std": std.tolist()}
    else:
        raise ValidationError(f"unknown normalization method {method!r}")
    return LabeledDataset(
        scaled, dataset.labels, dataset.class_names, meta, dict(dataset.provenance)
    )


def apply_normalization(features: np.ndarray, normalization: dict) -> np.ndarray:
    """Apply stored transform parameters to unseen data (min-max clamps)."""
    feats = np.asarray(features, dtype=float)
    if normalization.get("method") == "minmax":
        mins = np.array(normalization["mins"])
        maxs = np.array(normalization["maxs"])
        lo, hi = normalization["lo"], normalization["hi"]
        span = np.where(maxs - mins == 0, 1.0, maxs - mins)
        scaled = lo + (feats - mins) / span * (hi - lo)
        return np.clip(scaled, lo, hi)
    if normalization.get("method") == "zscore":
        return (feats - np.array(normalization["mean"])) / np.array(
            normalization["std"]
        )
    raise ValidationError("dataset carries no normalization metadata")


def sample_split(
    dataset: LabeledDataset, per_class_counts: dict[int, int] | list[int], seed: int
) -> SplitRecord:
    """Stratified deterministic train/test split."""
    if isinstance(per_class_counts, (list, tuple)):
        per_class_counts = dict(enumerate(per_class_counts))
    rng = np.random.default_rng(seed)
    train: list[int] = []
    for cls in range(dataset.n_classes):
        want = per_class_counts.get(cls, 0)
        members = np.flatnonzero(dataset.labels == cls)
        if want > len(members):
            raise ValidationError(
                f"requested {want} samples from class {cls} of size {len(members)}"
            )
        chosen = rng.choice(members, size=want, replace=False)
        train.extend(sorted(int(i) for i in chosen))
    test = [i for i in range(dataset.n_samples) if i not in set(train)]
    return SplitRecord(
        np.array(train), np.array(test), seed, description=str(per_class_counts)
    )


def binary_labels(
    dataset: LabeledDataset, positive_class: int
) -> np.ndarray:
    """Map the chosen class to +1 and every other class to -1."""
    if positive_class not in set(dataset.labels.tolist()):
        raise ValidationError(f"class {positive_class} not present")
    return np.where(dataset.labels == positive_class, 1, -1)
