"""Command-line entry point: synth / train / eval / bench / register / predict.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Every command is reproducible from (config, master seed, inputs) and writes
only under its --out directory.
"""

import argparse
import csv
import json
import os
import sys
from contextlib import contextmanager

import numpy as np

from .classifiers import MlpModel, load_model, mlp_init, mlp_train, save_model
from .classifiers import labels_to_float
from .config import PipelineConfig
from .errors import DataError, NumericError, PlacementError
from .evaluation import (
    METHODS,
    FeatureSplits,
    MethodResult,
    confusion,
    load_split,
    method_matrix,
    metrics,
    neuron_sweep,
    save_split,
    split_dataset,
)
from .features import describe_patch
from .imaging import (
    MA,
    NORMAL,
    crop_to_band,
    extract_strip,
    load_pgm,
    round_half_up,
    save_pgm,
)
from .registration import SearchSpace, rigid_register
from .reports import emit_report
from .seeds import stage_seed
from .synth import synth_bscan
from .vocabulary import (
    build_vocabulary,
    class_occurrence_sum,
    encode,
    load_vocabulary,
    read_term_vectors_csv,
    save_vocabulary,
)


class UsageError(Exception):
    """Bad command-line usage detected after argument parsing."""


@contextmanager
def _stage(name):
    """Tag stage failures with the stage name for actionable CLI errors."""
    try:
        yield
    except (DataError, NumericError) as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except ValueError as exc:
        raise DataError(f"[{name}] {exc}") from exc


MANIFEST_COLUMNS = ["path", "label", "source_id", "center_x"]


def write_manifest(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        writer.writerows(rows)


def read_manifest(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_COLUMNS:
            raise DataError(f"{path}: expected manifest header {MANIFEST_COLUMNS}")
        rows = []
        for row in reader:
            if len(row) != 4:
                raise DataError(f"{path}: malformed manifest row {row}")
            rows.append(
                {
                    "path": row[0],
                    "label": row[1],
                    "source_id": row[2],
                    "center_x": int(row[3]),
                }
            )
    if not rows:
        raise DataError(f"{path}: manifest is empty")
    return rows


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_synth(cfg: PipelineConfig, out_dir) -> None:
    """Generate B-scans, extract labeled patches, and write the manifest."""
    scans_dir = os.path.join(out_dir, "scans")
    patches_dir = os.path.join(out_dir, "patches")
    os.makedirs(scans_dir, exist_ok=True)
    os.makedirs(patches_dir, exist_ok=True)
    rng = np.random.default_rng(stage_seed(cfg.master_seed, "synth"))
    half = cfg.strip_width // 2
    col_lo = half
    col_hi = cfg.scan_width - 1 - (cfg.strip_width - half - 1)
    rows = []

    for i in range(cfg.n_scans):
        source_id = f"scan{i:03d}"
        n_lesions = int(rng.integers(cfg.lesions_min, cfg.lesions_max + 1))
        img, ann = synth_bscan(
            stage_seed(cfg.master_seed, source_id),
            n_lesions,
            cfg.scan_width,
            cfg.scan_height,
        )
        save_pgm(img, os.path.join(scans_dir, f"{source_id}.pgm"))
        with open(os.path.join(scans_dir, f"{source_id}.json"), "w") as fh:
            fh.write(ann.to_json() + "\n")

        for j, (lx, _ly) in enumerate(ann.lesion_centers):
            strip = extract_strip(img, lx, cfg.strip_width)
            patch = crop_to_band(strip, cfg.band_height)
            rel = f"patches/{source_id}_ma{j:02d}.pgm"
            save_pgm(patch, os.path.join(out_dir, rel))
            rows.append((rel, MA, source_id, lx))

        n_normal = int(round_half_up(cfg.normal_ratio * max(n_lesions, 1)))
        used = set()
        placed = 0
        attempts = 0
        while placed < n_normal:
            attempts += 1
            if attempts > 500 * max(n_normal, 1):
                raise PlacementError(
                    f"{source_id}: could not sample {n_normal} normal columns"
                )
            col = int(rng.integers(col_lo, col_hi + 1))
            if col in used:
                continue
            if any(abs(col - lx) <= cfg.strip_width for lx, _ in ann.lesion_centers):
                continue
            used.add(col)
            strip = extract_strip(img, col, cfg.strip_width)
            patch = crop_to_band(strip, cfg.band_height)
            rel = f"patches/{source_id}_n{placed:02d}.pgm"
            save_pgm(patch, os.path.join(out_dir, rel))
            rows.append((rel, NORMAL, source_id, col))
            placed += 1

    write_manifest(os.path.join(out_dir, "manifest.csv"), rows)


def _load_patch_images(manifest_path, rows, indices):
    base = os.path.dirname(os.path.abspath(manifest_path))
    return {i: load_pgm(os.path.join(base, rows[i]["path"])) for i in indices}


def _describe_indices(cfg, images, indices):
    return {
        i: describe_patch(images[i], cfg.grid_nx, cfg.grid_ny, cfg.surf_scale)
        for i in indices
    }


def _check_classes(labels) -> None:
    for lab in (MA, NORMAL):
        if labels.count(lab) < 3:
            raise DataError(f"class {lab} has fewer than 3 samples")


def cmd_train(cfg: PipelineConfig, manifest_path, out_dir) -> None:
    """Split, build the vocabulary on training patches, train the MLP."""
    os.makedirs(out_dir, exist_ok=True)
    rows = read_manifest(manifest_path)
    labels = [r["label"] for r in rows]
    with _stage("split"):
        _check_classes(labels)
        spec = cfg.split_spec()
        train_idx, val_idx, test_idx = split_dataset(labels, spec)
    with _stage("features"):
        images = _load_patch_images(manifest_path, rows, train_idx + val_idx)
        descs = _describe_indices(cfg, images, train_idx + val_idx)
    with _stage("vocabulary"):
        pool = np.concatenate([descs[i] for i in train_idx], axis=0)
        vocab = build_vocabulary(
            pool, cfg.vocab_k, seed=stage_seed(cfg.master_seed, "vocab")
        )
    with _stage("encode"):
        train_x = np.array([encode(vocab, descs[i]).bins for i in train_idx])
        val_x = np.array([encode(vocab, descs[i]).bins for i in val_idx])
        train_y = labels_to_float([labels[i] for i in train_idx])
        val_y = labels_to_float([labels[i] for i in val_idx])
    with _stage("train"):
        model = mlp_init(
            cfg.vocab_k, cfg.hidden_neurons, seed=stage_seed(cfg.master_seed, "mlp")
        )
        trained, _curve = mlp_train(model, train_x, train_y, val_x, val_y,
                                    cfg.train_config())
    save_vocabulary(vocab, os.path.join(out_dir, "vocab.json"))
    save_model(trained, os.path.join(out_dir, "model.json"))
    save_split(os.path.join(out_dir, "split.json"), train_idx, val_idx, test_idx,
               spec.seed)


def cmd_eval(cfg: PipelineConfig, manifest_path, artifacts_dir, out_dir) -> None:
    """Encode the saved test split with the saved vocabulary and report."""
    rows = read_manifest(manifest_path)
    vocab = load_vocabulary(os.path.join(artifacts_dir, "vocab.json"))
    model = load_model(os.path.join(artifacts_dir, "model.json"))
    if not isinstance(model, MlpModel):
        raise DataError("model.json does not hold an MLP model")
    if model.input_dim != vocab.k:
        raise DataError(
            f"model input dim {model.input_dim} does not match vocabulary k {vocab.k}"
        )
    if vocab.k != cfg.vocab_k:
        raise DataError(
            f"config vocab_k {cfg.vocab_k} does not match vocabulary k {vocab.k}"
        )
    _train_idx, _val_idx, test_idx, _seed = load_split(
        os.path.join(artifacts_dir, "split.json")
    )
    if any(i >= len(rows) for i in test_idx):
        raise DataError("split.json indices exceed the manifest")

    with _stage("features"):
        images = _load_patch_images(manifest_path, rows, test_idx)
        descs = _describe_indices(cfg, images, test_idx)
    with _stage("encode"):
        tvs = [encode(vocab, descs[i]) for i in test_idx]
    test_labels = [rows[i]["label"] for i in test_idx]
    preds = [model.predict(tv.bins) for tv in tvs]
    cm = confusion(preds, test_labels)
    result = MethodResult(name="BOF+MLP", cm=cm, metrics=metrics(cm))
    occ = class_occurrence_sum(tvs, test_labels)
    emit_report([result], occ, [], out_dir)
    with open(os.path.join(out_dir, "predictions.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "source_id", "label", "predicted"])
        for i, pred in zip(test_idx, preds):
            writer.writerow([i, rows[i]["source_id"], rows[i]["label"], pred])


def cmd_bench(cfg: PipelineConfig, manifest_path, out_dir, methods=METHODS) -> None:
    """Full method comparison plus the hidden-neuron sweep, with figures."""
    rows = read_manifest(manifest_path)
    labels = [r["label"] for r in rows]
    with _stage("split"):
        _check_classes(labels)
        spec = cfg.split_spec()
        train_idx, val_idx, test_idx = split_dataset(labels, spec)
    all_idx = train_idx + val_idx + test_idx
    with _stage("features"):
        images = _load_patch_images(manifest_path, rows, all_idx)
        descs = _describe_indices(cfg, images, all_idx)
    with _stage("vocabulary"):
        pool = np.concatenate([descs[i] for i in train_idx], axis=0)
        vocab = build_vocabulary(
            pool, cfg.vocab_k, seed=stage_seed(cfg.master_seed, "vocab")
        )
    with _stage("encode"):
        tv_by_idx = {i: encode(vocab, descs[i]) for i in all_idx}

    def bof_matrix(indices):
        return np.array([tv_by_idx[i].bins for i in indices])

    def raw_matrix(indices):
        return np.array([descs[i].ravel() for i in indices])

    def label_list(indices):
        return [labels[i] for i in indices]

    bof = FeatureSplits(
        train_x=bof_matrix(train_idx), train_y=label_list(train_idx),
        val_x=bof_matrix(val_idx), val_y=label_list(val_idx),
        test_x=bof_matrix(test_idx), test_y=label_list(test_idx),
    )
    raw = FeatureSplits(
        train_x=raw_matrix(train_idx), train_y=label_list(train_idx),
        val_x=raw_matrix(val_idx), val_y=label_list(val_idx),
        test_x=raw_matrix(test_idx), test_y=label_list(test_idx),
    )
    with _stage("methods"):
        results = method_matrix(
            bof, raw, methods,
            hidden=cfg.hidden_neurons, train_cfg=cfg.train_config(),
            knn_k=cfg.knn_k, svm_lambda=cfg.svm_lambda, svm_epochs=cfg.svm_epochs,
            pca_variance=cfg.pca_variance,
            seed=stage_seed(cfg.master_seed, "bench"),
        )
    with _stage("sweep"):
        sweep_points, _best = neuron_sweep(
            bof, cfg.sweep_hidden, cfg.train_config(),
            seed=stage_seed(cfg.master_seed, "sweep"),
        )
    occ = class_occurrence_sum([tv_by_idx[i] for i in all_idx], label_list(all_idx))
    emit_report(results, occ, sweep_points, out_dir)


def cmd_register(fixed_path, moving_path, out_path, space: SearchSpace) -> None:
    fixed = load_pgm(fixed_path)
    moving = load_pgm(moving_path)
    params, score = rigid_register(fixed, moving, space)
    with open(out_path, "w") as fh:
        json.dump(
            {"angle": params.angle, "scale": params.scale, "tx": params.tx,
             "ty": params.ty, "score": score},
            fh, sort_keys=True,
        )
        fh.write("\n")


def _model_input_dim(model) -> int:
    if isinstance(model, MlpModel):
        return model.input_dim
    if hasattr(model, "train_x"):
        return model.train_x.shape[1]
    if hasattr(model, "means"):
        return model.means.shape[1]
    if hasattr(model, "w"):
        return model.w.shape[0]
    raise DataError(f"{type(model).__name__} is not a classifier model")


def cmd_predict(model_path, vectors_path, out_path) -> None:
    model = load_model(model_path)
    if not hasattr(model, "predict"):
        raise DataError(f"{model_path}: model of this type cannot predict")
    ids, _labels, x = read_term_vectors_csv(vectors_path)
    dim = _model_input_dim(model)
    if x.shape[1] != dim:
        raise DataError(
            f"term vectors have {x.shape[1]} bins but the model expects {dim}"
        )
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_id", "predicted"])
        for sid, row in zip(ids, x):
            writer.writerow([sid, model.predict(row)])


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage problems must exit 1, not argparse's default 2
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="bofscan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        return p

    p = add("synth", "generate a synthetic labeled patch dataset")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.set_defaults(func=lambda a: cmd_synth(_load_config(a), a.out) or 0)

    p = add("train", "train vocabulary + MLP from a manifest")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=lambda a: cmd_train(_load_config(a), a.manifest, a.out) or 0)

    p = add("eval", "evaluate saved artifacts on the saved test split")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--manifest", required=True)
    p.add_argument("--artifacts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(
        func=lambda a: cmd_eval(_load_config(a), a.manifest, a.artifacts, a.out) or 0
    )

    p = add("bench", "compare all feature/classifier combinations")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--methods", help="comma-separated subset of: " + ",".join(METHODS))
    p.set_defaults(func=_run_bench)

    p = add("register", "rigid-align two PGM images")
    p.add_argument("--fixed", required=True)
    p.add_argument("--moving", required=True)
    p.add_argument("--out", required=True, help="output params JSON")
    p.add_argument("--angle-range", nargs=3, type=float, default=(-10.0, 10.0, 1.0),
                   metavar=("MIN", "MAX", "STEP"))
    p.add_argument("--scale-range", nargs=3, type=float, default=(0.9, 1.1, 0.02),
                   metavar=("MIN", "MAX", "STEP"))
    p.add_argument("--radius", type=int, default=20)
    p.add_argument("--levels", type=int, default=3)
    p.set_defaults(func=_run_register)

    p = add("predict", "apply a saved model to a term-vector CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=lambda a: cmd_predict(a.model, a.vectors, a.out) or 0)

    return parser


def _run_bench(args) -> int:
    cfg = _load_config(args)
    methods = METHODS
    if args.methods:
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        bad = [m for m in methods if m not in METHODS]
        if bad:
            raise UsageError(
                f"unknown methods {bad}; valid names: {', '.join(METHODS)}"
            )
        if not methods:
            raise UsageError("empty --methods list")
    cmd_bench(cfg, args.manifest, args.out, methods)
    return 0


def _run_register(args) -> int:
    space = SearchSpace(
        angle_range=tuple(args.angle_range),
        scale_range=tuple(args.scale_range),
        translation_radius=args.radius,
        pyramid_levels=args.levels,
    )
    cmd_register(args.fixed, args.moving, args.out, space)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bofscan: error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"bofscan: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError, ValueError) as exc:
        print(f"bofscan: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
