"""Dataset splitting, confusion-matrix metrics, and the comparison harness.

MA is the positive class everywhere. Splits are stratified: split totals
come from floor arithmetic on the whole set and per-class quotas from
largest-remainder rounding, so each split's class ratio matches the corpus
within one sample per class.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import classifiers as cls
from .errors import DataError
from .imaging import MA
from .seeds import stage_seed

METHODS = (
    "BOF+MLP",
    "BOF+LinearSVM",
    "BOF+KNN",
    "BOF+NaiveBayes",
    "PCA+MLP",
    "PCA+LinearSVM",
    "PCA+KNN",
    "PCA+NaiveBayes",
)


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0.0 for f in fracs):
            raise ValueError("split fractions must be positive")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise ValueError("split fractions must sum to 1")


def _largest_remainder(counts, frac, target):
    """Per-class quotas: floors of counts*frac, topped up to the target by
    descending fractional remainder (ties by class order)."""
    quotas = {c: int(np.floor(n * frac)) for c, n in counts.items()}
    remainders = sorted(
        counts, key=lambda c: (-(counts[c] * frac - quotas[c]), c)
    )
    short = target - sum(quotas.values())
    for c in remainders:
        if short <= 0:
            break
        quotas[c] += 1
        short -= 1
    return quotas


def split_dataset(labels, spec: SplitSpec):
    """Stratified, seeded (train, val, test) index lists.

    Sizes: train = floor(n*train_frac), val = floor(n*val_frac), test takes
    the remainder. Disjoint and covering.
    """
    n = len(labels)
    if n < 3:
        raise DataError("need at least 3 samples to split")
    counts = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    for lab, c in counts.items():
        if c < 3:
            raise DataError(f"class {lab!r} has fewer samples ({c}) than splits")

    n_train = int(np.floor(n * spec.train_frac))
    n_val = int(np.floor(n * spec.val_frac))

    train_q = _largest_remainder(counts, spec.train_frac, n_train)
    remaining = {c: counts[c] - train_q[c] for c in counts}
    val_q = _largest_remainder(remaining, spec.val_frac / (1.0 - spec.train_frac)
                               if spec.train_frac < 1.0 else 0.0, n_val)
    # val quota cannot exceed what train left over
    for c in counts:
        val_q[c] = min(val_q[c], remaining[c])

    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    taken_train = {c: 0 for c in counts}
    taken_val = {c: 0 for c in counts}
    train, val, test = [], [], []
    for idx in perm:
        lab = labels[int(idx)]
        if taken_train[lab] < train_q[lab]:
            train.append(int(idx))
            taken_train[lab] += 1
        elif taken_val[lab] < val_q[lab]:
            val.append(int(idx))
            taken_val[lab] += 1
        else:
            test.append(int(idx))
    return train, val, test


def save_split(path, train, val, test, seed) -> None:
    with open(path, "w") as fh:
        json.dump(
            {"seed": int(seed), "train": list(train), "val": list(val),
             "test": list(test)},
            fh, sort_keys=True,
        )
        fh.write("\n")


def load_split(path):
    with open(path) as fh:
        obj = json.load(fh)
    try:
        return (
            [int(i) for i in obj["train"]],
            [int(i) for i in obj["val"]],
            [int(i) for i in obj["test"]],
            int(obj["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: invalid split file: {exc}") from exc


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    tn: int
    fp: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.tn, self.fp) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.tn + self.fp


@dataclass(frozen=True)
class Metrics:
    """The four Table-style criteria; None marks a zero-denominator case."""

    accuracy: Optional[float]
    sensitivity: Optional[float]
    specificity: Optional[float]
    precision: Optional[float]


def confusion(preds, labels) -> ConfusionMatrix:
    """Counts with MA as the positive class."""
    if len(preds) != len(labels):
        raise ValueError("predictions and labels must have equal length")
    if not labels:
        raise ValueError("cannot tally an empty evaluation")
    tp = fn = tn = fp = 0
    for p, t in zip(preds, labels):
        if t == MA:
            if p == MA:
                tp += 1
            else:
                fn += 1
        else:
            if p == MA:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fn=fn, tn=tn, fp=fp)


def metrics(cm: ConfusionMatrix) -> Metrics:
    def ratio(num, den):
        return num / den if den > 0 else None

    return Metrics(
        accuracy=ratio(cm.tp + cm.tn, cm.total),
        sensitivity=ratio(cm.tp, cm.tp + cm.fn),
        specificity=ratio(cm.tn, cm.tn + cm.fp),
        precision=ratio(cm.tp, cm.tp + cm.fp),
    )


def check_metrics_identity(cm: ConfusionMatrix, m: Metrics, tol: float = 1e-12):
    """accuracy == (sens*P + spec*N) / (P + N); raises if violated."""
    p = cm.tp + cm.fn
    n = cm.tn + cm.fp
    if m.accuracy is None or m.sensitivity is None or m.specificity is None:
        return
    combined = (m.sensitivity * p + m.specificity * n) / (p + n)
    if abs(combined - m.accuracy) > tol:
        raise AssertionError(
            f"metric identity violated: {combined} vs {m.accuracy}"
        )


@dataclass(frozen=True)
class MethodResult:
    name: str
    cm: ConfusionMatrix
    metrics: Metrics


@dataclass(frozen=True)
class SweepPoint:
    hidden: int
    accuracy: float


@dataclass(frozen=True)
class FeatureSplits:
    """One feature representation carved up by the shared dataset split."""

    train_x: np.ndarray
    train_y: list
    val_x: np.ndarray
    val_y: list
    test_x: np.ndarray
    test_y: list


def _accuracy(preds, labels) -> float:
    return sum(p == t for p, t in zip(preds, labels)) / len(labels)


def neuron_sweep(splits: FeatureSplits, hidden_counts, cfg: cls.TrainConfig,
                 seed: int = 0):
    """Validation accuracy per hidden-layer width, plus the argmax width.

    Every width trains on the identical split with the identical seed; the
    argmax tie goes to the smaller width. Returns (points, best_hidden).
    """
    if any(h < 1 for h in hidden_counts):
        raise ValueError("hidden counts must be >= 1")
    y_train = cls.labels_to_float(splits.train_y)
    y_val = cls.labels_to_float(splits.val_y)
    points = []
    best_hidden = None
    best_acc = -1.0
    for h in hidden_counts:
        model = cls.mlp_init(splits.train_x.shape[1], h, seed=seed)
        trained, _ = cls.mlp_train(model, splits.train_x, y_train,
                                   splits.val_x, y_val, cfg)
        preds = [trained.predict(x) for x in splits.val_x]
        acc = _accuracy(preds, splits.val_y)
        points.append(SweepPoint(hidden=h, accuracy=acc))
        if acc > best_acc or (acc == best_acc and h < best_hidden):
            best_acc = acc
            best_hidden = h
    return points, best_hidden


def _fit_predict(name, feats: FeatureSplits, *, hidden, train_cfg, knn_k,
                 svm_lambda, svm_epochs, pca_variance, seed):
    kind = name.split("+", 1)[1]
    if kind == "MLP":
        model = cls.mlp_init(feats.train_x.shape[1], hidden,
                             seed=stage_seed(seed, name))
        trained, _ = cls.mlp_train(
            model, feats.train_x, cls.labels_to_float(feats.train_y),
            feats.val_x, cls.labels_to_float(feats.val_y), train_cfg)
        return [trained.predict(x) for x in feats.test_x]
    if kind == "KNN":
        return [cls.knn_predict(feats.train_x, feats.train_y, x, knn_k)
                for x in feats.test_x]
    if kind == "NaiveBayes":
        model = cls.gnb_fit(feats.train_x, feats.train_y)
        return [model.predict(x) for x in feats.test_x]
    if kind == "LinearSVM":
        model = cls.linsvm_train(feats.train_x, feats.train_y, lam=svm_lambda,
                                 epochs=svm_epochs, seed=stage_seed(seed, name))
        return [model.predict(x) for x in feats.test_x]
    raise DataError(f"unknown method {name!r}; valid: {', '.join(METHODS)}")


def method_matrix(bof: FeatureSplits, raw: Optional[FeatureSplits],
                  methods=METHODS, *, hidden=10, train_cfg=None, knn_k=5,
                  svm_lambda=0.01, svm_epochs=100, pca_variance=0.95,
                  seed=0):
    """One MethodResult per method, all evaluated on the shared test split.

    BOF+* methods consume the term-vector splits; PCA+* methods consume the
    raw SURF feature splits reduced by a PCA fitted on the training rows
    only. Rows come back in the order given.
    """
    for name in methods:
        if name not in METHODS:
            raise DataError(f"unknown method {name!r}; valid: {', '.join(METHODS)}")
    if train_cfg is None:
        train_cfg = cls.TrainConfig()

    pca_feats = None
    if any(m.startswith("PCA+") for m in methods):
        if raw is None:
            raise DataError("PCA methods need raw SURF feature splits")
        pca = cls.pca_fit(raw.train_x, pca_variance)
        pca_feats = FeatureSplits(
            train_x=cls.pca_transform(pca, raw.train_x), train_y=raw.train_y,
            val_x=cls.pca_transform(pca, raw.val_x), val_y=raw.val_y,
            test_x=cls.pca_transform(pca, raw.test_x), test_y=raw.test_y,
        )

    rows = []
    for name in methods:
        feats = bof if name.startswith("BOF+") else pca_feats
        preds = _fit_predict(
            name, feats, hidden=hidden, train_cfg=train_cfg, knn_k=knn_k,
            svm_lambda=svm_lambda, svm_epochs=svm_epochs,
            pca_variance=pca_variance, seed=seed)
        cm = confusion(preds, feats.test_y)
        m = metrics(cm)
        check_metrics_identity(cm, m)
        rows.append(MethodResult(name=name, cm=cm, metrics=m))
    return rows
