"""Pipeline configuration: every knob the CLI commands consume.

Defaults follow the pipeline's canonical geometry (170x30 strips, 8x8 grid,
100 visual words, 10 hidden neurons, 70/15/15 split). One master seed fans
out to per-stage seeds (see seeds.stage_seed).
"""

import dataclasses
import json
from dataclasses import dataclass

from .classifiers import TrainConfig
from .errors import DataError
from .evaluation import SplitSpec
from .seeds import stage_seed


@dataclass(frozen=True)
class PipelineConfig:
    strip_width: int = 30
    band_height: int = 170
    grid_nx: int = 8
    grid_ny: int = 8
    surf_scale: float = 1.0
    vocab_k: int = 100
    hidden_neurons: int = 10
    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    learning_rate: float = 0.1
    epochs: int = 2000
    early_stop_patience: int = 50
    master_seed: int = 1
    n_scans: int = 20
    scan_width: int = 768
    scan_height: int = 496
    lesions_min: int = 2
    lesions_max: int = 3
    normal_ratio: float = 1.2
    knn_k: int = 5
    svm_lambda: float = 0.01
    svm_epochs: int = 100
    pca_variance: float = 0.95
    sweep_hidden: tuple = (1, 2, 5, 10, 15, 20)

    def __post_init__(self):
        counts = {
            "strip_width": self.strip_width,
            "band_height": self.band_height,
            "grid_nx": self.grid_nx,
            "grid_ny": self.grid_ny,
            "vocab_k": self.vocab_k,
            "hidden_neurons": self.hidden_neurons,
            "epochs": self.epochs,
            "n_scans": self.n_scans,
            "scan_width": self.scan_width,
            "scan_height": self.scan_height,
            "knn_k": self.knn_k,
            "svm_epochs": self.svm_epochs,
        }
        for name, value in counts.items():
            if int(value) < 1:
                raise DataError(f"{name} must be a positive count")
        if self.lesions_min < 0 or self.lesions_max < self.lesions_min:
            raise DataError("need 0 <= lesions_min <= lesions_max")
        if self.surf_scale < 1.0:
            raise DataError("surf_scale must be >= 1")
        if self.learning_rate <= 0.0 or self.svm_lambda <= 0.0:
            raise DataError("learning_rate and svm_lambda must be positive")
        if not 0.0 < self.pca_variance <= 1.0:
            raise DataError("pca_variance must lie in (0, 1]")
        if self.normal_ratio < 0.0:
            raise DataError("normal_ratio must be >= 0")
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0.0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-12:
            raise DataError("split fractions must be positive and sum to 1")
        object.__setattr__(self, "sweep_hidden", tuple(int(h) for h in self.sweep_hidden))
        if any(h < 1 for h in self.sweep_hidden):
            raise DataError("sweep_hidden entries must be >= 1")

    def with_seed(self, master_seed: int) -> "PipelineConfig":
        return dataclasses.replace(self, master_seed=int(master_seed))

    def split_spec(self) -> SplitSpec:
        return SplitSpec(
            train_frac=self.train_frac,
            val_frac=self.val_frac,
            test_frac=self.test_frac,
            seed=stage_seed(self.master_seed, "split"),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            seed=stage_seed(self.master_seed, "mlp"),
            early_stop_patience=self.early_stop_patience,
        )

    def to_file(self, path) -> None:
        obj = dataclasses.asdict(self)
        obj["sweep_hidden"] = list(self.sweep_hidden)
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise DataError(f"{path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise DataError(f"{path}: unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise DataError(f"{path}: bad config value: {exc}") from exc
