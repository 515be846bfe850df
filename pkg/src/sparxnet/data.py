"""Synthetic generators, CSV ingestion, preprocessing, and splits.

All randomness flows through Philox (a counter-based generator) so streams are
platform-stable; Gaussian draws use an explicit Box-Muller transform on top of
the uniform stream for the same reason.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard-normal draws via Box-Muller on the uniform stream."""
    m = (n + 1) // 2
    u1 = rng.random(m)
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1-u1 avoids log(0)
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:n]


@dataclass
class Dataset:
    X: np.ndarray                 # (N, d)
    y: np.ndarray                 # (N,)
    feature_names: list[str]
    task: str                     # "regression" or "binary"
    preprocessing: list[dict] = field(default_factory=list)  # per output column
    true_indices: list[int] | None = None  # synthetic ground truth, if known

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError("X and y row counts disagree")
        if self.task not in ("regression", "binary"):
            raise DataError(f"unknown task {self.task!r}")
        if self.task == "binary" and not np.all((self.y == 0) | (self.y == 1)):
            raise DataError("binary targets must be 0/1")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def single_var_truth(x: np.ndarray) -> np.ndarray:
    """Ground-truth curve for the single-variable experiment."""
    return x * x + 2.0 * np.sin(x) + 3.0


def gen_single_var(
    n: int,
    noisy_count: int,
    noise_sigma: float = 0.05,
    true_position: int | None = None,
    seed: int = 0,
) -> Dataset:
    """One informative Uniform[-1,1] feature plus `noisy_count` standard-normal
    distractors; y = x^2 + 2 sin(x) + 3 + N(0, sigma^2).

    The informative column defaults to the middle of the design matrix.
    """
    if true_position is None:
        true_position = noisy_count // 2
    if not 0 <= true_position <= noisy_count:
        raise DataError(
            f"true_position must be in [0, {noisy_count}], got {true_position}"
        )
    rng = make_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=n)
    noise_cols = box_muller(rng, n * noisy_count).reshape(n, noisy_count)
    y = single_var_truth(x)
    if noise_sigma > 0:
        y = y + noise_sigma * box_muller(rng, n)
    X = np.insert(noise_cols, true_position, x, axis=1)
    d = noisy_count + 1
    names = [f"noise_{j}" for j in range(d)]
    names[true_position] = "x_true"
    return Dataset(X, y, names, "regression", true_indices=[true_position])


def multi_var_truth(X5: np.ndarray) -> np.ndarray:
    """y = sin(x0) + 2 x1^2 - 3 x2^2 + 4 e^x3 - 5 e^x4 on the 5 true columns."""
    return (
        np.sin(X5[:, 0])
        + 2.0 * X5[:, 1] ** 2
        - 3.0 * X5[:, 2] ** 2
        + 4.0 * np.exp(X5[:, 3])
        - 5.0 * np.exp(X5[:, 4])
    )


def gen_multi_var(n: int, noisy_count: int = 5, seed: int = 0) -> Dataset:
    """Five true + `noisy_count` standard-normal features, randomly interleaved."""
    if n < 1:
        raise DataError("need n >= 1")
    rng = make_rng(seed)
    d = 5 + noisy_count
    true5 = box_muller(rng, n * 5).reshape(n, 5)
    noise = box_muller(rng, n * noisy_count).reshape(n, noisy_count)
    y = multi_var_truth(true5)
    perm = rng.permutation(d)
    X = np.empty((n, d))
    X[:, perm[:5]] = true5
    X[:, perm[5:]] = noise
    true_idx = sorted(int(i) for i in perm[:5])
    placement = {int(col): k for k, col in enumerate(perm[:5])}
    names = [
        f"true_{placement[j]}" if j in placement else f"noise_{j}"
        for j in range(d)
    ]
    return Dataset(X, y, names, "regression", true_indices=true_idx)


# ---------------------------------------------------------------------------
# CSV ingestion and preprocessing
# ---------------------------------------------------------------------------

@dataclass
class CsvSchema:
    target: str
    positive_label: str | None = None   # binary tasks
    categorical: list[str] = field(default_factory=list)
    task: str = "binary"


@dataclass
class RawTable:
    header: list[str]
    rows: list[list[str | None]]  # None marks a missing cell


def load_csv(path) -> RawTable:
    """RFC-4180-style CSV with a header row; empty cells become missing."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
                )
            rows.append([cell if cell != "" else None for cell in row])
    return RawTable(header, rows)


def _column(raw: RawTable, name: str) -> list[str | None]:
    try:
        j = raw.header.index(name)
    except ValueError:
        raise DataError(f"unknown column {name!r}") from None
    return [row[j] for row in raw.rows]


def fit_preprocessor(raw: RawTable, schema: CsvSchema) -> list[dict]:
    """Per-feature preprocessing parameters fitted on `raw`.

    Numeric: impute median then standardize with the population std
    (constant columns map to all zeros). Categorical: impute mode then
    full one-hot.
    """
    if schema.target not in raw.header:
        raise DataError(f"unknown target column {schema.target!r}")
    plans = []
    for name in raw.header:
        if name == schema.target:
            continue
        col = _column(raw, name)
        if name in schema.categorical:
            present = [c for c in col if c is not None]
            if not present:
                raise DataError(f"column {name!r} is entirely missing")
            counts: dict[str, int] = {}
            for c in present:
                counts[c] = counts.get(c, 0) + 1
            mode = max(sorted(counts), key=counts.get)
            cats = sorted(set(present))
            plans.append(
                {"column": name, "kind": "categorical", "impute": mode, "categories": cats}
            )
        else:
            vals = np.array([float(c) for c in col if c is not None])
            if vals.size == 0:
                raise DataError(f"column {name!r} is entirely missing")
            med = float(np.median(vals))
            filled = np.array([float(c) if c is not None else med for c in col])
            mean = float(filled.mean())
            std = float(filled.std())  # population std
            plans.append(
                {"column": name, "kind": "numeric", "impute": med, "mean": mean, "std": std}
            )
    return plans


def apply_preprocessor(raw: RawTable, schema: CsvSchema, plans: list[dict]) -> Dataset:
    blocks = []
    names = []
    for plan in plans:
        col = _column(raw, plan["column"])
        if plan["kind"] == "numeric":
            filled = np.array(
                [float(c) if c is not None else plan["impute"] for c in col]
            )
            if plan["std"] > 0:
                block = (filled - plan["mean"]) / plan["std"]
            else:
                block = np.zeros_like(filled)
            blocks.append(block[:, None])
            names.append(plan["column"])
        else:
            filled = [c if c is not None else plan["impute"] for c in col]
            onehot = np.zeros((len(filled), len(plan["categories"])))
            index = {c: j for j, c in enumerate(plan["categories"])}
            for i, c in enumerate(filled):
                j = index.get(c)
                if j is not None:  # unseen test categories encode as all-zero
                    onehot[i, j] = 1.0
            blocks.append(onehot)
            names.extend(f"{plan['column']}={c}" for c in plan["categories"])
    X = np.hstack(blocks)
    tcol = _column(raw, schema.target)
    if schema.task == "binary":
        y = np.array([1.0 if c == schema.positive_label else 0.0 for c in tcol])
    else:
        y = np.array([float(c) for c in tcol])
    return Dataset(X, y, names, schema.task, preprocessing=plans)


def preprocess(raw: RawTable, schema: CsvSchema) -> Dataset:
    """Fit and apply preprocessing in one step (single-table use)."""
    return apply_preprocessor(raw, schema, fit_preprocessor(raw, schema))


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    stratified: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise DataError("test_fraction must be in (0, 1)")


def split_indices(
    n: int, spec: SplitSpec, labels: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded (train, test) index arrays; stratified keeps class proportions
    within one sample per class."""
    rng = make_rng(spec.seed)
    if not spec.stratified or labels is None:
        perm = rng.permutation(n)
        n_test = int(round(n * spec.test_fraction))
        if n_test == 0 or n_test == n:
            raise DataError("split leaves an empty side")
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])
    train_parts, test_parts = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.size < 2:
            raise DataError(f"class {cls} has fewer than 2 members")
        perm = idx[rng.permutation(idx.size)]
        n_test = int(round(idx.size * spec.test_fraction))
        n_test = min(max(n_test, 1), idx.size - 1)
        test_parts.append(perm[:n_test])
        train_parts.append(perm[n_test:])
    return (
        np.sort(np.concatenate(train_parts)),
        np.sort(np.concatenate(test_parts)),
    )


def _take(ds: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset(
        ds.X[idx],
        ds.y[idx],
        ds.feature_names,
        ds.task,
        preprocessing=ds.preprocessing,
        true_indices=ds.true_indices,
    )


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    labels = dataset.y if dataset.task == "binary" else None
    tr, te = split_indices(dataset.n_rows, spec, labels)
    return _take(dataset, tr), _take(dataset, te)


def ingest_csv(
    path, schema: CsvSchema, spec: SplitSpec
) -> tuple[Dataset, Dataset]:
    """Load, split on raw rows, fit preprocessing on the training rows only,
    and apply it to both sides."""
    raw = load_csv(path)
    if schema.task == "binary":
        tcol = _column(raw, schema.target)
        labels = np.array([1.0 if c == schema.positive_label else 0.0 for c in tcol])
    else:
        labels = None
    tr, te = split_indices(len(raw.rows), spec, labels)
    raw_tr = RawTable(raw.header, [raw.rows[i] for i in tr])
    raw_te = RawTable(raw.header, [raw.rows[i] for i in te])
    plans = fit_preprocessor(raw_tr, schema)
    return (
        apply_preprocessor(raw_tr, schema, plans),
        apply_preprocessor(raw_te, schema, plans),
    )


def breast_cancer_path():
    """Path to the bundled Breast Cancer Wisconsin table (569 x 30), or None
    when the data file was stripped from the installation."""
    from importlib import resources

    ref = resources.files("sparxnet") / "datasets" / "breast_cancer.csv"
    return ref if ref.is_file() else None


def breast_cancer_schema() -> CsvSchema:
    return CsvSchema(target="diagnosis", positive_label="malignant", task="binary")


# ---------------------------------------------------------------------------
# Dataset file I/O: CSV of features + target with a JSON sidecar
# ---------------------------------------------------------------------------

def save_dataset(path, dataset: Dataset) -> None:
    path = str(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*dataset.feature_names, "target"])
        for xi, yi in zip(dataset.X, dataset.y):
            writer.writerow([format(v, ".17g") for v in (*xi, yi)])
    sidecar = {
        "task": dataset.task,
        "feature_names": dataset.feature_names,
        "preprocessing": dataset.preprocessing,
        "true_indices": dataset.true_indices,
    }
    with open(_sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def _sidecar_path(path: str) -> str:
    return (path[:-4] if path.endswith(".csv") else path) + ".json"


def load_dataset(path) -> Dataset:
    path = str(path)
    raw = load_csv(path)
    if raw.header[-1] != "target":
        raise DataError(f"{path}: last column must be 'target'")
    X = np.array([[float(c) for c in row[:-1]] for row in raw.rows])
    y = np.array([float(row[-1]) for row in raw.rows])
    task = "regression"
    preprocessing: list[dict] = []
    true_indices = None
    try:
        with open(_sidecar_path(path), "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
        task = sidecar.get("task", task)
        preprocessing = sidecar.get("preprocessing") or []
        true_indices = sidecar.get("true_indices")
    except FileNotFoundError:
        if np.all((y == 0) | (y == 1)):
            task = "binary"
    return Dataset(X, y, raw.header[:-1], task, preprocessing, true_indices)
