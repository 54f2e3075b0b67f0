"""Command-line entry point: ``qclassify <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .dataio import generate_synthetic, load_csv, save_csv
from .encode import FeatureMapSpec
from .harness import (
    MAX_DIM,
    METRICS,
    MIN_DIM,
    PCA_THEN_SCALE,
    SCALE_THEN_PCA,
    ExperimentConfig,
    emit_plot_data,
    read_results,
    render_table,
    run_experiment,
)
from .prep import apply_scaler, fit_pca, fit_scaler, pca_transform
from .qkernel import DEFAULT_SHOTS, KernelMode, kernel_matrix, save_gram_csv


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    if args.output_dir:
        config.output_dir = args.output_dir
    if args.workers:
        config.workers = args.workers
    records = run_experiment(config)
    failed = sum(r.failed or r.acc != r.acc for r in records)
    print(f"{len(records)} records in {Path(config.output_dir) / 'results.csv'}"
          + (f" ({failed} failed)" if failed else ""))
    return 0


def _cmd_synth(args) -> int:
    ds = generate_synthetic(args.n, args.d, args.pos_frac, args.separation, args.seed)
    save_csv(ds, args.out)
    print(f"wrote {ds.n} rows x {ds.d} features to {args.out}")
    return 0


def _cmd_table(args) -> int:
    records = read_results(args.results)
    print(f"{args.model.upper()} {args.metric.upper()}" + (f" ({args.epochs} epochs)" if args.epochs else ""))
    print()
    print(render_table(records, args.metric, args.model, args.epochs), end="")
    return 0


def _cmd_plot_data(args) -> int:
    for path in emit_plot_data(read_results(args.results), args.out_dir):
        print(path)
    return 0


def _cmd_kernel(args) -> int:
    ds = load_csv(args.data)
    X = ds.features
    if args.dim is not None and args.dim != ds.d:
        if args.pipeline_order == PCA_THEN_SCALE:
            Z = pca_transform(X, fit_pca(X, args.dim))
            X = apply_scaler(Z, fit_scaler(Z))
        else:
            S = apply_scaler(X, fit_scaler(X))
            X = pca_transform(S, fit_pca(S, args.dim))
    else:
        X = apply_scaler(X, fit_scaler(X))
    mode = KernelMode.parse(args.mode if args.mode.upper() == "EXACT" else f"SHOTS({args.shots})")
    km = kernel_matrix(X, FeatureMapSpec(X.shape[1], entangling=not args.no_entangle), mode, rng_seed=args.seed)
    save_gram_csv(km.values, args.out)
    print(f"wrote {km.n}x{km.n} {mode} Gram matrix ({km.eval_count} kernel evaluations) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qclassify", description="Quantum kernel SVM / VQC experiments.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sweep described by a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--output-dir", help="override the config's output_dir")
    r.add_argument("--workers", type=int, help="override the config's worker count")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("synth", help="write a two-cluster synthetic dataset")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--pos-frac", type=float, default=0.5)
    s.add_argument("--separation", type=float, default=2.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_synth)

    t = sub.add_parser("table", help="render a Markdown table from results.csv")
    t.add_argument("--results", required=True)
    t.add_argument("--metric", type=str.upper, choices=METRICS, default="ACC")
    t.add_argument("--model", required=True)
    t.add_argument("--epochs", type=int)
    t.set_defaults(func=_cmd_table)

    pd = sub.add_parser("plot-data", help="write plot-ready CSVs from results.csv")
    pd.add_argument("--results", required=True)
    pd.add_argument("--out-dir", required=True)
    pd.set_defaults(func=_cmd_plot_data)

    k = sub.add_parser("kernel", help="export a quantum-kernel Gram matrix as headerless CSV")
    k.add_argument("--data", required=True)
    k.add_argument("--dim", type=int, help=f"PCA dimension ({MIN_DIM}-{MAX_DIM}); default keeps all features")
    k.add_argument("--mode", type=str.upper, choices=("EXACT", "SHOTS"), default="EXACT")
    k.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--pipeline-order", choices=(PCA_THEN_SCALE, SCALE_THEN_PCA), default=PCA_THEN_SCALE)
    k.add_argument("--no-entangle", action="store_true", help="omit the CX chain from the feature map")
    k.add_argument("--out", required=True)
    k.set_defaults(func=_cmd_kernel)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
