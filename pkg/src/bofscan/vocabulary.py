"""Visual vocabulary: k-means++ seeding, Lloyd iterations, and encoding.

Distances are Euclidean. Assignment ties break to the lowest center index;
empty clusters are reseeded to the point farthest from its assigned center.
Everything is deterministic given the seed.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .imaging import LABELS


@dataclass(frozen=True)
class Vocabulary:
    """K cluster centers in descriptor space plus provenance."""

    centers: np.ndarray  # (K, dim)
    rng_seed: int
    wcss: float
    wcss_history: tuple = ()  # per-iteration WCSS from the producing Lloyd run

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.centers, dtype=np.float64))
        if c.ndim != 2 or c.shape[0] < 2:
            raise ValueError("vocabulary needs at least 2 centers")
        if np.unique(c, axis=0).shape[0] != c.shape[0]:
            raise ValueError("vocabulary centers must be pairwise distinct")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class TermVector:
    """Normalized K-bin visual-word histogram for one patch."""

    bins: np.ndarray
    raw_counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.raw_counts, dtype=np.int64)
        bins = np.asarray(self.bins, dtype=np.float64)
        if counts.shape != bins.shape or counts.ndim != 1:
            raise ValueError("bins and raw_counts must be 1-D and equal length")
        if (counts < 0).any():
            raise ValueError("raw_counts must be non-negative")
        total = counts.sum()
        if total > 0 and abs(bins.sum() - 1.0) > 1e-9:
            raise ValueError("bins must sum to 1")
        counts.setflags(write=False)
        bins.setflags(write=False)
        object.__setattr__(self, "raw_counts", counts)
        object.__setattr__(self, "bins", bins)


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n, K), clamped at 0 for fp safety."""
    x2 = (x * x).sum(axis=1)[:, None]
    c2 = (centers * centers).sum(axis=1)[None, :]
    d2 = x2 - 2.0 * (x @ centers.T) + c2
    return np.maximum(d2, 0.0, out=d2)


def kmeanspp_seed(data, k: int, seed) -> np.ndarray:
    """D^2-sampled initial centers; centers are data points.

    `seed` may be an int or any object with a .random() -> [0,1) method
    (handy for scripted-RNG tests). The first center is uniform over the
    data; each next center is drawn with probability proportional to its
    squared distance to the nearest chosen center.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("data must be a non-empty 2-D array")
    n = data.shape[0]
    if np.unique(data, axis=0).shape[0] < k:
        raise DataError(f"need at least {k} distinct points, have fewer")
    rng = seed if hasattr(seed, "random") else np.random.default_rng(seed)

    first = min(int(rng.random() * n), n - 1)
    chosen = [first]
    d2 = _sq_dists(data, data[first : first + 1]).ravel()
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            raise DataError("ran out of distinct points during seeding")
        u = rng.random() * total
        cum = np.cumsum(d2)
        idx = min(int(np.searchsorted(cum, u, side="right")), n - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dists(data, data[idx : idx + 1]).ravel())
    return data[chosen].copy()


def lloyd(data, centers, max_iter: int = 300, tol: float = 1e-6, rng_seed: int = 0) -> Vocabulary:
    """Lloyd iterations from the given centers until WCSS improves < tol.

    Each iteration assigns points (ties to the lowest index), reseeds empty
    clusters to the point farthest from its assigned center, recomputes
    means, and records the WCSS against the updated centers. The recorded
    sequence is non-increasing.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DataError("empty data")
    if max_iter < 1 or tol < 0.0:
        raise ValueError("max_iter must be >= 1 and tol >= 0")
    centers = np.array(centers, dtype=np.float64, copy=True)
    k = centers.shape[0]
    n = data.shape[0]

    history = []
    prev = np.inf
    for _ in range(max_iter):
        d2 = _sq_dists(data, centers)
        labels = d2.argmin(axis=1)

        counts = np.bincount(labels, minlength=k)
        if (counts == 0).any():
            own = d2[np.arange(n), labels]
            order = np.argsort(-own, kind="stable")
            used = 0
            for j in np.flatnonzero(counts == 0):
                centers[j] = data[order[used]]
                labels[order[used]] = j
                used += 1
            counts = np.bincount(labels, minlength=k)

        for j in range(k):
            if counts[j] > 0:
                centers[j] = data[labels == j].mean(axis=0)

        diff = data - centers[labels]
        wcss = float((diff * diff).sum())
        history.append(wcss)
        if prev - wcss < tol:
            break
        prev = wcss

    return Vocabulary(
        centers=centers, rng_seed=int(rng_seed), wcss=history[-1],
        wcss_history=tuple(history),
    )


def build_vocabulary(data, k: int = 100, seed: int = 0, max_iter: int = 300,
                     tol: float = 1e-6) -> Vocabulary:
    """k-means++ seeding followed by Lloyd refinement."""
    init = kmeanspp_seed(data, k, seed)
    return lloyd(data, init, max_iter=max_iter, tol=tol, rng_seed=seed)


def nearest_center(vocab: Vocabulary, d) -> int:
    """Index of the L2-nearest center; ties go to the lowest index."""
    d = np.asarray(d, dtype=np.float64).reshape(1, -1)
    return int(_sq_dists(d, vocab.centers).argmin())


def encode(vocab: Vocabulary, descriptors) -> TermVector:
    """Histogram of nearest-center assignments, L1-normalized."""
    descriptors = np.asarray(descriptors, dtype=np.float64)
    if descriptors.ndim != 2 or descriptors.shape[0] == 0:
        raise DataError("cannot encode an empty descriptor list")
    idx = _sq_dists(descriptors, vocab.centers).argmin(axis=1)
    counts = np.bincount(idx, minlength=vocab.k)
    bins = counts / counts.sum()
    return TermVector(bins=bins, raw_counts=counts)


def class_occurrence_sum(term_vectors, labels) -> dict:
    """Per-class elementwise sums of raw counts (both classes always present)."""
    if len(term_vectors) != len(labels):
        raise ValueError("term_vectors and labels must have equal length")
    k = term_vectors[0].raw_counts.shape[0] if term_vectors else 0
    totals = {lab: np.zeros(k, dtype=np.int64) for lab in LABELS}
    for tv, lab in zip(term_vectors, labels):
        if lab not in totals:
            raise ValueError(f"unknown label {lab!r}")
        totals[lab] = totals[lab] + tv.raw_counts
    return totals


def save_vocabulary(vocab: Vocabulary, path) -> None:
    obj = {
        "k": vocab.k,
        "seed": vocab.rng_seed,
        "wcss": vocab.wcss,
        "centers": [[float(v) for v in row] for row in vocab.centers],
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")


def load_vocabulary(path) -> Vocabulary:
    with open(path) as fh:
        obj = json.load(fh)
    try:
        vocab = Vocabulary(
            centers=np.array(obj["centers"], dtype=np.float64),
            rng_seed=int(obj["seed"]),
            wcss=float(obj["wcss"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: invalid vocabulary file: {exc}") from exc
    if vocab.k != int(obj["k"]):
        raise DataError(f"{path}: center count disagrees with declared k")
    return vocab


def write_term_vectors_csv(path, source_ids, labels, term_vectors) -> None:
    """One row per patch: source_id, label, then the K normalized bins."""
    k = term_vectors[0].bins.shape[0] if term_vectors else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_id", "label"] + [f"b{i:03d}" for i in range(k)])
        for sid, lab, tv in zip(source_ids, labels, term_vectors):
            writer.writerow([sid, lab] + [f"{v:.17g}" for v in tv.bins])


def read_term_vectors_csv(path):
    """Returns (source_ids, labels, bins matrix (n, K))."""
    ids, labels, rows = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3:
            raise DataError(f"{path}: not a term-vector CSV")
        for row in reader:
            ids.append(row[0])
            labels.append(row[1])
            rows.append([float(v) for v in row[2:]])
    return ids, labels, np.array(rows, dtype=np.float64)
