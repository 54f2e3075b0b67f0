"""Experiment sweeps over (model, PCA dimension, sample size, epochs).

Each grid cell is independent: it draws its own seed from
``derive_seed(seed, model, dim, n, epochs)``, subsamples the dataset, makes a
stratified train/test split, fits the scaler and PCA on the training part
only, trains the model and scores the held-out part. Records are appended to
``results.csv`` in grid order as soon as they are available; cells already
present in that file are skipped on rerun.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import _backend, __version__
from ._seeding import derive_seed
from .dataio import Dataset, class_counts, generate_synthetic, load_csv
from .encode import FeatureMapSpec
from .metrics import accuracy, mcc, roc_auc
from .optim import OptimizerConfig
from .prep import apply_scaler, fit_pca, fit_scaler, pca_transform, stratified_split, subsample
from .qkernel import EXACT, KernelMode, gram_cross, kernel_matrix, load_gram_csv, save_gram_csv
from .svm import decision_values, rbf_kernel, train_svm
from .vqc import LINEAR_CHAIN, AnsatzSpec, circuit_evaluations_per_epoch, scores, train_vqc

log = logging.getLogger(__name__)

QSVM = "QSVM"
VQC = "VQC"
RBF_SVM = "RBF_SVM"
MODELS = (QSVM, VQC, RBF_SVM)
PCA_THEN_SCALE = "PCA_THEN_SCALE"
SCALE_THEN_PCA = "SCALE_THEN_PCA"
METRICS = ("ACC", "AUC", "MCC")
MIN_DIM, MAX_DIM = 2, 10

RESULTS_HEADER = [
    "model", "dim", "n_samples", "epochs", "acc", "auc", "mcc", "wall_ms",
    "eval_count", "seed", "pipeline_order", "kernel_mode", "optimizer",
]
EXTRA_HEADER = [
    "model", "dim", "n_samples", "epochs", "auc_hard", "train_acc", "train_auc", "train_mcc",
    "train_size", "test_size", "error",
]


@dataclass
class ExperimentConfig:
    dataset: str | dict
    models: list[str]
    pca_dims: list[int]
    sample_sizes: list[int]
    epochs_list: list[int] = field(default_factory=lambda: [10, 100, 150])
    kernel_mode: str = EXACT
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    C: float = 1.0
    test_fraction: float = 0.25
    pipeline_order: str = PCA_THEN_SCALE
    seed: int = 0
    output_dir: str = "results"
    # knobs beyond the core sweep definition
    workers: int = 1
    vqc_layers: int = 2
    entangler: str = LINEAR_CHAIN
    threshold: float = 0.0
    angle_scale: float = 1.0
    rbf_gamma: float | None = None
    svm_tol: float = 1e-3
    report_train: bool = False
    save_models: bool = True

    def __post_init__(self):
        if isinstance(self.optimizer, dict):
            self.optimizer = OptimizerConfig.from_dict(self.optimizer)
        self.kernel_mode = str(KernelMode.parse(self.kernel_mode))
        self.models = [m.upper() for m in self.models]
        for name in ("models", "pca_dims", "sample_sizes"):
            if not getattr(self, name):
                raise ValueError(f"config field {name!r} must be nonempty")
        bad = [m for m in self.models if m not in MODELS]
        if bad:
            raise ValueError(f"unknown models {bad}; choose from {MODELS}")
        if any(not MIN_DIM <= d <= MAX_DIM for d in self.pca_dims):
            raise ValueError(f"pca_dims must lie in [{MIN_DIM}, {MAX_DIM}]")
        if any(n < 4 for n in self.sample_sizes):
            raise ValueError("sample sizes must be at least 4")
        if VQC in self.models and (not self.epochs_list or any(e < 1 for e in self.epochs_list)):
            raise ValueError("VQC needs a nonempty epochs_list of positive integers")
        if self.pipeline_order not in (PCA_THEN_SCALE, SCALE_THEN_PCA):
            raise ValueError(f"pipeline_order must be {PCA_THEN_SCALE} or {SCALE_THEN_PCA}")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")

    @property
    def mode(self) -> KernelMode:
        return KernelMode.parse(self.kernel_mode)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["optimizer"] = self.optimizer.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Cell:
    model: str
    dim: int
    n_samples: int
    epochs: int

    @property
    def key(self) -> tuple[str, int, int, int]:
        return (self.model, self.dim, self.n_samples, self.epochs)

    @property
    def name(self) -> str:
        return f"{self.model}_d{self.dim}_n{self.n_samples}_e{self.epochs}"

    def seed(self, base: int) -> int:
        return derive_seed(base, self.model, self.dim, self.n_samples, self.epochs)


@dataclass
class ResultRecord:
    model: str
    dim: int
    n_samples: int
    epochs: int
    acc: float
    auc: float
    mcc: float
    wall_ms: float
    eval_count: int
    seed: int
    pipeline_order: str
    kernel_mode: str
    optimizer: str
    # kept out of results.csv; written to results_extra.csv
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def key(self) -> tuple[str, int, int, int]:
        return (self.model, self.dim, self.n_samples, self.epochs)

    @property
    def failed(self) -> bool:
        return bool(self.extra.get("error"))

    def metric(self, name: str) -> float:
        return {"ACC": self.acc, "AUC": self.auc, "MCC": self.mcc}[name.upper()]

    def csv_row(self) -> list[str]:
        return [self.model, str(self.dim), str(self.n_samples), str(self.epochs),
                _fmt(self.acc), _fmt(self.auc), _fmt(self.mcc), f"{self.wall_ms:.3f}",
                str(self.eval_count), str(self.seed), self.pipeline_order, self.kernel_mode, self.optimizer]

    def extra_row(self) -> list[str]:
        e = self.extra
        return [self.model, str(self.dim), str(self.n_samples), str(self.epochs)] + [
            _fmt(e.get(k, math.nan)) for k in ("auc_hard", "train_acc", "train_auc", "train_mcc")
        ] + [str(e.get("train_size", "")), str(e.get("test_size", "")), e.get("error", "")]


def _fmt(v: float) -> str:
    return repr(float(v))


def plan_cells(config: ExperimentConfig) -> list[Cell]:
    cells = []
    for model in config.models:
        for dim in config.pca_dims:
            for n in config.sample_sizes:
                for epochs in (config.epochs_list if model == VQC else [0]):
                    cells.append(Cell(model, int(dim), int(n), int(epochs)))
    return cells


def load_dataset(spec: str | dict) -> Dataset:
    if isinstance(spec, dict):
        if "synthetic" not in spec:
            raise ValueError("dataset dict must have a 'synthetic' entry")
        s = spec["synthetic"]
        return generate_synthetic(int(s["n"]), int(s["d"]), float(s["pos_fraction"]),
                                  float(s["separation"]), int(s.get("seed", 0)))
    return load_csv(spec)


def fit_transforms(X_train, X_test, dim: int, order: str):
    """Fit scaler and PCA on the training rows; return transformed (train, test, params)."""
    if order == PCA_THEN_SCALE:
        pca = fit_pca(X_train, dim)
        Z = pca_transform(X_train, pca)
        scaler = fit_scaler(Z)
        return apply_scaler(Z, scaler), apply_scaler(pca_transform(X_test, pca), scaler), (scaler, pca)
    scaler = fit_scaler(X_train)
    S = apply_scaler(X_train, scaler)
    pca = fit_pca(S, dim)
    return pca_transform(S, pca), pca_transform(apply_scaler(X_test, scaler), pca), (scaler, pca)


def _score_block(y, pred, dv) -> tuple[float, float, float]:
    return accuracy(y, pred), roc_auc(y, dv), mcc(y, pred)


def run_cell(cell: Cell, ds: Dataset, config: ExperimentConfig, output_dir: Path | None = None) -> ResultRecord:
    """Train and evaluate one grid cell. Failures become records with NaN metrics."""
    seed = cell.seed(config.seed)
    optimizer_label = config.optimizer.label() if cell.model == VQC else "NONE"
    kernel_label = config.kernel_mode if cell.model == QSVM else "NONE"
    t0 = time.perf_counter()
    extra: dict = {}
    try:
        acc, auc, mcc_, evals, extra = _run_cell(cell, ds, config, seed, output_dir)
    except Exception as exc:  # recorded, sweep continues
        log.warning("cell %s failed: %s", cell.name, exc)
        log.debug("%s", traceback.format_exc())
        acc = auc = mcc_ = math.nan
        evals = 0
        extra = {"error": f"{type(exc).__name__}: {exc}".replace("\n", " ")}
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return ResultRecord(cell.model, cell.dim, cell.n_samples, cell.epochs, acc, auc, mcc_, wall_ms, evals, seed,
                        config.pipeline_order, kernel_label, optimizer_label, extra)


def _run_cell(cell: Cell, ds: Dataset, config: ExperimentConfig, seed: int, output_dir: Path | None):
    if cell.dim > ds.d:
        raise ValueError(f"PCA dimension {cell.dim} exceeds the dataset's {ds.d} features")
    X, y = subsample(ds.features, ds.labels, cell.n_samples, derive_seed(seed, "subsample"))
    split = stratified_split(X, y, config.test_fraction, derive_seed(seed, "split"))
    Ztr, Zte, (scaler, pca) = fit_transforms(split.X_train, split.X_test, cell.dim, config.pipeline_order)
    Ztr = Ztr * config.angle_scale
    Zte = Zte * config.angle_scale
    ytr, yte = split.y_train, split.y_test
    artifact: dict = {"scaler": scaler.to_dict(), "pca": pca.to_dict(), "seed": seed,
                      "test_fraction": config.test_fraction, "pipeline_order": config.pipeline_order}
    train_scores = None

    if cell.model in (QSVM, RBF_SVM):
        if cell.model == QSVM:
            fmap = FeatureMapSpec(cell.dim, entangling=True, repetitions=1)
            mode = config.mode
            K = _train_gram(Ztr, fmap, mode, seed, cell, output_dir)
            K_test = gram_cross(Zte, Ztr, fmap, mode, rng_seed=seed)
            evals = Ztr.shape[0] * (Ztr.shape[0] - 1) // 2 + K_test.size
            artifact["feature_map"] = fmap.to_dict()
        else:
            gamma = config.rbf_gamma if config.rbf_gamma else 1.0 / cell.dim
            K = rbf_kernel(Ztr, Ztr, gamma)
            K_test = rbf_kernel(Zte, Ztr, gamma)
            evals = 0
            artifact["gamma"] = gamma
        model = train_svm(K, ytr, config.C, config.svm_tol, training_ref=cell.name)
        dv = decision_values(model, K_test)
        pred = np.where(dv >= 0, 1, -1)
        if config.report_train:
            train_scores = decision_values(model, K)
        artifact["model"] = json.loads(model.to_json())
    else:
        ansatz = AnsatzSpec(cell.dim, config.vqc_layers, config.entangler)
        fmap = FeatureMapSpec(cell.dim, entangling=False, repetitions=1)
        opt = config.optimizer.with_seed(derive_seed(seed, "optimizer"))
        model = train_vqc(Ztr, ytr, ansatz, fmap, opt, cell.epochs, derive_seed(seed, "init"),
                          threshold=config.threshold)
        dv = scores(model, Zte)
        pred = np.where(dv >= model.threshold, 1, -1)
        evals = (circuit_evaluations_per_epoch(model, opt, Ztr.shape[0]) * cell.epochs
                 + Ztr.shape[0] + Zte.shape[0])
        if config.report_train:
            train_scores = scores(model, Ztr)
        artifact["model"] = json.loads(model.to_json())
        artifact["optimizer"] = opt.to_dict()

    acc, auc, mcc_ = _score_block(yte, pred, dv)
    extra = {"auc_hard": roc_auc(yte, pred), "train_size": int(ytr.shape[0]), "test_size": int(yte.shape[0])}
    if train_scores is not None:
        thr = config.threshold if cell.model == VQC else 0.0
        tp = np.where(train_scores >= thr, 1, -1)
        extra["train_acc"], extra["train_auc"], extra["train_mcc"] = _score_block(ytr, tp, train_scores)
    if config.save_models and output_dir is not None:
        mdir = output_dir / "models"
        mdir.mkdir(parents=True, exist_ok=True)
        with open(mdir / f"{cell.name}.json", "w", encoding="utf-8") as fh:
            json.dump(artifact, fh)
    return acc, auc, mcc_, int(evals), extra


def _train_gram(Ztr, fmap, mode: KernelMode, seed: int, cell: Cell, output_dir: Path | None) -> np.ndarray:
    """Training Gram matrix; SHOTS-mode matrices are cached as CSV under ``kernels/``."""
    if mode.kind == EXACT or output_dir is None:
        return kernel_matrix(Ztr, fmap, mode, rng_seed=seed).values
    path = output_dir / "kernels" / f"{cell.name}.csv"
    if path.exists():
        K = load_gram_csv(path)
        if K.shape[0] == Ztr.shape[0]:
            return K
    K = kernel_matrix(Ztr, fmap, mode, rng_seed=seed).values
    path.parent.mkdir(parents=True, exist_ok=True)
    save_gram_csv(K, path)
    return K


# ---------------------------------------------------------------------------
# results files

def read_results(path) -> list[ResultRecord]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if header != RESULTS_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        out = []
        for row in reader:
            if not row:
                continue
            r = dict(zip(header, row))
            out.append(ResultRecord(r["model"], int(r["dim"]), int(r["n_samples"]), int(r["epochs"]),
                                    float(r["acc"]), float(r["auc"]), float(r["mcc"]), float(r["wall_ms"]),
                                    int(r["eval_count"]), int(r["seed"]), r["pipeline_order"],
                                    r["kernel_mode"], r["optimizer"]))
    return out


def _open_append(path: Path, header: list[str]):
    fresh = not path.exists() or path.stat().st_size == 0
    fh = open(path, "a", newline="", encoding="utf-8")
    w = csv.writer(fh, lineterminator="\n")
    if fresh:
        w.writerow(header)
    return fh, w


_WORKER: dict = {}


def _init_worker(ds: Dataset, config: ExperimentConfig, output_dir: str) -> None:
    _WORKER["ds"], _WORKER["config"], _WORKER["out"] = ds, config, Path(output_dir)


def _worker_run(cell: Cell) -> ResultRecord:
    return run_cell(cell, _WORKER["ds"], _WORKER["config"], _WORKER["out"])


def _execute(cells: list[Cell], ds: Dataset, config: ExperimentConfig, out: Path) -> Iterator[ResultRecord]:
    if config.workers <= 1 or len(cells) <= 1:
        for c in cells:
            yield run_cell(c, ds, config, out)
        return
    with ProcessPoolExecutor(max_workers=config.workers, initializer=_init_worker,
                             initargs=(ds, config, str(out))) as pool:
        # map preserves submission order, so the file order matches the serial run
        yield from pool.map(_worker_run, cells)


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None) -> list[ResultRecord]:
    """Run every pending cell; return the full record list (previous and new) in grid order."""
    ds = dataset if dataset is not None else load_dataset(config.dataset)
    too_wide = [d for d in config.pca_dims if d > ds.d]
    if too_wide:
        raise ValueError(f"pca_dims {too_wide} exceed the dataset's {ds.d} features")
    too_many = [n for n in config.sample_sizes if n > ds.n]
    if too_many:
        raise ValueError(f"sample_sizes {too_many} exceed the dataset's {ds.n} rows")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_meta(config, ds, out)

    results_path = out / "results.csv"
    existing = {r.key: r for r in read_results(results_path)}
    cells = plan_cells(config)
    pending = [c for c in cells if c.key not in existing]
    log.info("%d cells planned, %d already done, %d to run", len(cells), len(cells) - len(pending), len(pending))

    fh, w = _open_append(results_path, RESULTS_HEADER)
    efh, ew = _open_append(out / "results_extra.csv", EXTRA_HEADER)
    new: dict = {}
    try:
        for rec in _execute(pending, ds, config, out):
            w.writerow(rec.csv_row())
            ew.writerow(rec.extra_row())
            fh.flush()
            efh.flush()
            new[rec.key] = rec
            log.info("%s dim=%d n=%d epochs=%d acc=%.4f auc=%.4f mcc=%.4f (%.0f ms)", rec.model, rec.dim,
                     rec.n_samples, rec.epochs, rec.acc, rec.auc, rec.mcc, rec.wall_ms)
    finally:
        fh.close()
        efh.close()
    return [new.get(c.key) or existing[c.key] for c in cells]


def _write_meta(config: ExperimentConfig, ds: Dataset, out: Path) -> None:
    n_pos, n_neg = class_counts(ds)
    meta = {
        "config": config.to_dict(),
        "dataset": {"source": ds.source, "n": ds.n, "d": ds.d, "n_pos": n_pos, "n_neg": n_neg},
        "split": {"kind": "stratified", "test_fraction": config.test_fraction},
        "pipeline_order": config.pipeline_order,
        "backend": _backend.NAME,
        "version": __version__,
    }
    with open(out / "run_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# tables and plot data

def _select(records: Iterable[ResultRecord], model: str, epochs: int | None) -> list[ResultRecord]:
    sel = [r for r in records if r.model == model.upper() and (epochs is None or r.epochs == epochs)]
    keys = [(r.dim, r.n_samples) for r in sel]
    if len(set(keys)) != len(keys):
        raise ValueError(f"{model} records span several epoch settings; pass epochs")
    return sel


def render_table(records: Iterable[ResultRecord], metric: str, model: str, epochs: int | None = None) -> str:
    """Markdown table: PCA dimensions down, sample sizes across, maximum in bold."""
    metric = metric.upper()
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    sel = _select(records, model, epochs)
    if not sel:
        raise ValueError(f"no records for model={model} epochs={epochs}")
    dims = sorted({r.dim for r in sel})
    sizes = sorted({r.n_samples for r in sel})
    cells = {(r.dim, r.n_samples): r.metric(metric) for r in sel}
    finite = [v for v in cells.values() if math.isfinite(v)]
    best = max(finite) if finite else None
    lines = ["| dim \\ n | " + " | ".join(str(s) for s in sizes) + " |",
             "|---" * (len(sizes) + 1) + "|"]
    for d in dims:
        row = []
        for s in sizes:
            v = cells.get((d, s))
            if v is None or not math.isfinite(v):
                row.append("—")
            elif v == best:
                row.append(f"**{v:.4f}**")
            else:
                row.append(f"{v:.4f}")
        lines.append(f"| {d} | " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _write_wide(path: Path, index_name: str, rows: list, cols: list, value) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([index_name] + [str(c) for c in cols])
        for r in rows:
            w.writerow([str(r)] + [value(r, c) for c in cols])


def write_plot_files(records: list[ResultRecord], out_dir) -> list[Path]:
    """acc_vs_dim.csv (dim x sample size) and auc_vs_samples.csv (n x dim) for one selection."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dims = sorted({r.dim for r in records})
    sizes = sorted({r.n_samples for r in records})
    table = {(r.dim, r.n_samples): r for r in records}

    def acc(d, n):
        rec = table.get((d, n))
        return "" if rec is None else _fmt(rec.acc)

    def auc(n, d):
        rec = table.get((d, n))
        return "" if rec is None else _fmt(rec.auc)

    a = out_dir / "acc_vs_dim.csv"
    b = out_dir / "auc_vs_samples.csv"
    _write_wide(a, "dim", dims, sizes, acc)
    _write_wide(b, "n", sizes, dims, auc)
    return [a, b]


def emit_plot_data(records: Iterable[ResultRecord], output_dir) -> list[Path]:
    """Plot-ready CSVs, one directory per (model, epochs) group.

    With no records, header-only files are written directly into
    ``output_dir``.
    """
    records = list(records)
    if not records:
        return write_plot_files([], output_dir)
    groups: dict[tuple[str, int], list[ResultRecord]] = {}
    for r in records:
        groups.setdefault((r.model, r.epochs), []).append(r)
    paths = []
    for (model, epochs), recs in sorted(groups.items()):
        sub = model if epochs == 0 else f"{model}_e{epochs}"
        paths.extend(write_plot_files(recs, Path(output_dir) / sub))
    return paths


def default_workers() -> int:
    return max(1, (os.cpu_count() or 1))
