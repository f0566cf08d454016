"""Classifiers: the 1-hidden-layer MLP plus the PCA/KNN/NB/linear-SVM track.

Every classifier model exposes predict(x) -> label with MA as the positive
class; prediction ties always resolve to MA. Training is seeded and
single-threaded, so identical inputs give identical models.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError, NumericError
from .imaging import LABELS, MA, NORMAL


def labels_to_float(labels) -> np.ndarray:
    """MA -> 1.0, NORMAL -> 0.0."""
    out = np.empty(len(labels), dtype=np.float64)
    for i, lab in enumerate(labels):
        if lab not in LABELS:
            raise ValueError(f"unknown label {lab!r}")
        out[i] = 1.0 if lab == MA else 0.0
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    neg = ~pos
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[neg])
    out[neg] = ez / (1.0 + ez)
    return out


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 2000
    full_batch: bool = True
    seed: int = 0
    early_stop_patience: int = 50

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1 or self.early_stop_patience < 0:
            raise ValueError("epochs must be >= 1 and patience >= 0")
        if not self.full_batch:
            raise ValueError("only full-batch training is supported")


@dataclass
class MlpModel:
    """Logistic-sigmoid MLP with one hidden layer and a single output unit."""

    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (1, hidden)
    b2: np.ndarray  # (1,)

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def copy(self) -> "MlpModel":
        return MlpModel(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())

    def predict(self, x) -> str:
        return MA if mlp_forward(self, x) >= 0.5 else NORMAL


def mlp_init(input_dim: int, hidden: int, seed: int = 0) -> MlpModel:
    """Uniform weights in [-r, r] with r = sqrt(6 / (fan_in + fan_out)); zero biases."""
    if input_dim < 1 or hidden < 1:
        raise ValueError("dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    r1 = math.sqrt(6.0 / (input_dim + hidden))
    r2 = math.sqrt(6.0 / (hidden + 1))
    return MlpModel(
        w1=rng.uniform(-r1, r1, size=(hidden, input_dim)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-r2, r2, size=(1, hidden)),
        b2=np.zeros(1),
    )


def _mlp_batch(m: MlpModel, x: np.ndarray):
    """Forward pass: (probabilities (n,), hidden activations (n, h), logits (n,))."""
    a1 = _sigmoid(x @ m.w1.T + m.b1)
    z2 = (a1 @ m.w2.T + m.b2).ravel()
    return _sigmoid(z2), a1, z2


def mlp_forward(m: MlpModel, x) -> float:
    """Output probability sigmoid(w2 . sigmoid(w1 x + b1) + b2)."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != m.input_dim:
        raise ValueError(f"expected input of length {m.input_dim}, got {x.shape[1]}")
    p, _, _ = _mlp_batch(m, x)
    return float(p[0])


def _bce_from_logits(z2: np.ndarray, y: np.ndarray) -> float:
    # softplus(z) - y*z, numerically stable for large |z|
    softplus = np.maximum(z2, 0.0) + np.log1p(np.exp(-np.abs(z2)))
    return float((softplus - y * z2).mean())


def mlp_gradient(m: MlpModel, x, y):
    """Analytic gradients of mean binary cross-entropy; returns an MlpModel
    whose fields hold d(loss)/d(parameter)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("x must be (n, input_dim) matching y")
    if x.shape[1] != m.input_dim:
        raise ValueError(f"expected inputs of length {m.input_dim}")
    n = x.shape[0]
    p, a1, _ = _mlp_batch(m, x)
    g2 = (p - y) / n  # (n,)
    dw2 = g2[None, :] @ a1  # (1, h)
    db2 = np.array([g2.sum()])
    g1 = (g2[:, None] * m.w2) * (a1 * (1.0 - a1))  # (n, h)
    dw1 = g1.T @ x
    db1 = g1.sum(axis=0)
    return MlpModel(w1=dw1, b1=db1, w2=dw2, b2=db2)


def mlp_loss(m: MlpModel, x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    _, _, z2 = _mlp_batch(m, x)
    return _bce_from_logits(z2, y)


def mlp_train(m: MlpModel, x, y, val_x=None, val_y=None,
              cfg: TrainConfig = None):
    """Full-batch gradient descent on mean binary cross-entropy.

    Records train (and validation, when given) loss per epoch. With a
    validation set, keeps the parameters with the best validation loss and
    stops once the epochs since that best exceed the patience. Returns
    (trained model, {"train": [...], "val": [...]}).
    """
    if cfg is None:
        cfg = TrainConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("empty training set")
    if set(np.unique(y)) - {0.0, 1.0}:
        raise ValueError("labels must be binary (0/1)")
    has_val = val_x is not None and val_y is not None
    if has_val:
        val_x = np.asarray(val_x, dtype=np.float64)
        val_y = np.asarray(val_y, dtype=np.float64).ravel()

    model = m.copy()
    lr = cfg.learning_rate
    history = {"train": [], "val": []}
    best_val = math.inf
    best_model = model.copy()
    since_best = 0

    for _ in range(cfg.epochs):
        p, a1, z2 = _mlp_batch(model, x)
        train_loss = _bce_from_logits(z2, y)
        if not math.isfinite(train_loss):
            raise NumericError("training loss is not finite (learning rate too high?)")
        history["train"].append(train_loss)

        if has_val:
            val_loss = mlp_loss(model, val_x, val_y)
            history["val"].append(val_loss)
            if val_loss < best_val:
                best_val = val_loss
                best_model = model.copy()
                since_best = 0
            else:
                since_best += 1
                if since_best > cfg.early_stop_patience:
                    break

        n = x.shape[0]
        g2 = (p - y) / n
        dw2 = g2[None, :] @ a1
        db2 = g2.sum()
        g1 = (g2[:, None] * model.w2) * (a1 * (1.0 - a1))
        model.w1 -= lr * (g1.T @ x)
        model.b1 -= lr * g1.sum(axis=0)
        model.w2 -= lr * dw2
        model.b2 -= lr * db2

    return (best_model if has_val else model), history


@dataclass
class PcaModel:
    """Orthonormal principal directions (rows), descending eigenvalue order."""

    mean: np.ndarray
    components: np.ndarray  # (C, input_dim)
    eigenvalues: np.ndarray  # (C,)
    total_variance: float

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance <= 0.0:
            return np.zeros_like(self.eigenvalues)
        return self.eigenvalues / self.total_variance


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below tol. Returns
    (eigenvalues, eigenvectors-as-columns), unsorted.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(max(float((a * a).sum() - (np.diag(a) ** 2).sum()), 0.0))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(1.0 + theta * theta)
                )
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NumericError("Jacobi eigendecomposition did not converge")
    return np.diag(a).copy(), v


def pca_fit(x, variance_target=0.95) -> PcaModel:
    """Mean-centered PCA via Jacobi eigendecomposition.

    variance_target may be a fraction in (0, 1] (keep the smallest count of
    components whose cumulative explained variance reaches it) or an int
    (keep exactly that many). When there are fewer samples than features the
    Gram matrix is decomposed instead of the covariance; the retained
    components are identical.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("PCA needs at least 2 samples")
    n, d = x.shape
    mean = x.mean(axis=0)
    xc = x - mean

    if d <= n:
        cov = (xc.T @ xc) / (n - 1)
        evals, evecs = jacobi_eigh(cov)
        comps = evecs.T  # rows
    else:
        gram = (xc @ xc.T) / (n - 1)
        evals, u = jacobi_eigh(gram)
        keep = evals > max(1e-12, 1e-12 * float(evals.max(initial=0.0)))
        evals = evals[keep]
        comps = (xc.T @ u[:, keep]).T / np.sqrt(evals * (n - 1))[:, None]

    order = np.argsort(-evals, kind="stable")
    evals = np.maximum(evals[order], 0.0)
    comps = comps[order]

    total = float(np.maximum((xc * xc).sum() / (n - 1), 0.0))
    if total <= 0.0:
        raise DataError("PCA undefined for zero-variance data")

    if isinstance(variance_target, (int, np.integer)) and not isinstance(
        variance_target, bool
    ):
        n_comp = int(variance_target)
        if not 1 <= n_comp <= comps.shape[0]:
            raise DataError(
                f"requested {n_comp} components, only {comps.shape[0]} available"
            )
    else:
        target = float(variance_target)
        if not 0.0 < target <= 1.0:
            raise ValueError("variance target must lie in (0, 1]")
        cum = np.cumsum(evals) / total
        reached = np.flatnonzero(cum >= target - 1e-12)
        n_comp = int(reached[0]) + 1 if reached.size else comps.shape[0]

    comps = comps[:n_comp].copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0.0:
            row *= -1.0
    return PcaModel(
        mean=mean,
        components=comps,
        eigenvalues=evals[:n_comp].copy(),
        total_variance=total,
    )


def pca_transform(p: PcaModel, x) -> np.ndarray:
    """Project (x - mean) onto the retained components."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != p.mean.shape[0]:
        raise ValueError(f"expected input of length {p.mean.shape[0]}")
    out = (x - p.mean) @ p.components.T
    return out[0] if single else out


@dataclass
class KnnModel:
    train_x: np.ndarray
    train_y: list
    k: int

    def predict(self, x) -> str:
        return knn_predict(self.train_x, self.train_y, x, self.k)


def knn_predict(train_x, train_y, x, k: int) -> str:
    """Majority label of the k nearest neighbours (L2).

    Distance ties prefer the lower sample index; vote ties go to MA.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    if train_x.ndim != 2 or train_x.shape[0] == 0:
        raise DataError("empty training set")
    if not 1 <= k <= train_x.shape[0]:
        raise ValueError("k must satisfy 1 <= k <= len(train)")
    diff = train_x - np.asarray(x, dtype=np.float64)
    d2 = (diff * diff).sum(axis=1)
    nearest = np.argsort(d2, kind="stable")[:k]
    ma_votes = sum(1 for i in nearest if train_y[i] == MA)
    return MA if 2 * ma_votes >= k else NORMAL


@dataclass
class GnbModel:
    """Per-class per-feature Gaussians with frequency priors (class order MA, NORMAL)."""

    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d), floored
    priors: np.ndarray  # (2,)

    def predict(self, x) -> str:
        return gnb_predict(self, x)


def gnb_fit(train_x, train_y, var_floor: float = 1e-9) -> GnbModel:
    train_x = np.asarray(train_x, dtype=np.float64)
    means, variances, priors = [], [], []
    for lab in (MA, NORMAL):
        rows = train_x[[i for i, y in enumerate(train_y) if y == lab]]
        if rows.shape[0] < 2:
            raise DataError(f"class {lab} needs at least 2 training samples")
        means.append(rows.mean(axis=0))
        variances.append(np.maximum(rows.var(axis=0), var_floor))
        priors.append(rows.shape[0] / train_x.shape[0])
    return GnbModel(
        means=np.array(means), variances=np.array(variances), priors=np.array(priors)
    )


def gnb_predict(m: GnbModel, x) -> str:
    x = np.asarray(x, dtype=np.float64)
    log_post = np.log(m.priors) + (
        -0.5 * np.log(2.0 * math.pi * m.variances)
        - (x - m.means) ** 2 / (2.0 * m.variances)
    ).sum(axis=1)
    return MA if log_post[0] >= log_post[1] else NORMAL


@dataclass
class LinSvmModel:
    w: np.ndarray
    b: float
    lam: float

    def predict(self, x) -> str:
        score = float(self.w @ np.asarray(x, dtype=np.float64) + self.b)
        return MA if score >= 0.0 else NORMAL


def linsvm_train(train_x, train_y, lam: float = 0.01, epochs: int = 100,
                 seed: int = 0) -> LinSvmModel:
    """Pegasos primal subgradient descent on hinge loss + (lam/2)||w||^2.

    Step eta_t = 1/(lam*t) over per-sample updates with one seeded shuffle
    per epoch, followed by the Pegasos projection onto the ball of radius
    1/sqrt(lam) (where the optimum lives); the bias is updated on margin
    violations and not regularized.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    if train_x.ndim != 2 or train_x.shape[0] == 0:
        raise DataError("empty training set")
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    y = np.where(labels_to_float(train_y) > 0.5, 1.0, -1.0)
    n, d = train_x.shape
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = 0.0
    t = 0
    radius = 1.0 / math.sqrt(lam)
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            if y[i] * (w @ train_x[i] + b) < 1.0:
                w = (1.0 - eta * lam) * w + (eta * y[i]) * train_x[i]
                b += eta * y[i]
            else:
                w = (1.0 - eta * lam) * w
            norm = math.sqrt(float(w @ w))
            if norm > radius:
                w *= radius / norm
    return LinSvmModel(w=w, b=float(b), lam=lam)


def save_model(model, path) -> None:
    """Persist any model as JSON with a model_type tag and explicit shapes."""
    if isinstance(model, MlpModel):
        obj = {
            "model_type": "mlp",
            "input_dim": model.input_dim,
            "hidden": model.hidden,
            "w1": model.w1.tolist(),
            "b1": model.b1.tolist(),
            "w2": model.w2.tolist(),
            "b2": model.b2.tolist(),
        }
    elif isinstance(model, PcaModel):
        obj = {
            "model_type": "pca",
            "input_dim": int(model.mean.shape[0]),
            "n_components": int(model.components.shape[0]),
            "mean": model.mean.tolist(),
            "components": model.components.tolist(),
            "eigenvalues": model.eigenvalues.tolist(),
            "total_variance": model.total_variance,
        }
    elif isinstance(model, KnnModel):
        obj = {
            "model_type": "knn",
            "input_dim": int(model.train_x.shape[1]),
            "n_train": int(model.train_x.shape[0]),
            "k": model.k,
            "train_x": model.train_x.tolist(),
            "train_y": list(model.train_y),
        }
    elif isinstance(model, GnbModel):
        obj = {
            "model_type": "gnb",
            "input_dim": int(model.means.shape[1]),
            "means": model.means.tolist(),
            "variances": model.variances.tolist(),
            "priors": model.priors.tolist(),
        }
    elif isinstance(model, LinSvmModel):
        obj = {
            "model_type": "linsvm",
            "input_dim": int(model.w.shape[0]),
            "w": model.w.tolist(),
            "b": model.b,
            "lam": model.lam,
        }
    else:
        raise ValueError(f"cannot serialize {type(model).__name__}")
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        obj = json.load(fh)
    try:
        kind = obj["model_type"]
        if kind == "mlp":
            model = MlpModel(
                w1=np.array(obj["w1"], dtype=np.float64),
                b1=np.array(obj["b1"], dtype=np.float64),
                w2=np.array(obj["w2"], dtype=np.float64),
                b2=np.array(obj["b2"], dtype=np.float64),
            )
            if model.input_dim != obj["input_dim"] or model.hidden != obj["hidden"]:
                raise DataError(f"{path}: declared shapes disagree with weights")
            return model
        if kind == "pca":
            return PcaModel(
                mean=np.array(obj["mean"], dtype=np.float64),
                components=np.array(obj["components"], dtype=np.float64),
                eigenvalues=np.array(obj["eigenvalues"], dtype=np.float64),
                total_variance=float(obj["total_variance"]),
            )
        if kind == "knn":
            return KnnModel(
                train_x=np.array(obj["train_x"], dtype=np.float64),
                train_y=list(obj["train_y"]),
                k=int(obj["k"]),
            )
        if kind == "gnb":
            return GnbModel(
                means=np.array(obj["means"], dtype=np.float64),
                variances=np.array(obj["variances"], dtype=np.float64),
                priors=np.array(obj["priors"], dtype=np.float64),
            )
        if kind == "linsvm":
            return LinSvmModel(
                w=np.array(obj["w"], dtype=np.float64),
                b=float(obj["b"]),
                lam=float(obj["lam"]),
            )
    except KeyError as exc:
        raise DataError(f"{path}: missing model field {exc}") from exc
    raise DataError(f"{path}: unknown model_type {obj.get('model_type')!r}")
