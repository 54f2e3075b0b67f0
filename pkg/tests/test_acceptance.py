"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; add ``-m "not slow"``
to skip the full-size grid reproduction.
"""
import csv
import itertools
import math
import time

import numpy as np
import pytest

from qclassify.encode import FeatureMapSpec
from qclassify.harness import QSVM, VQC, ExperimentConfig, render_table, run_experiment
from qclassify.metrics import accuracy, mcc, roc_auc
from qclassify.optim import GRADIENT_DESCENT, SPSA, OptimizerConfig
from qclassify.qkernel import kernel_entry_exact, kernel_entry_shots, kernel_matrix
from qclassify.svm import DEFAULT_MAX_ITER, dual_objective, kkt_violation, rbf_kernel, train_svm
from qclassify.vqc import AnsatzSpec, VqcModel, loss, parameter_shift_gradient

from oracles import brute_accuracy, brute_auc, brute_mcc, feature_map_state


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def csv_rows_without_wall(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    w = rows[0].index("wall_ms")
    return [r[:w] + r[w + 1:] for r in rows]


def test_01_kernel_correctness(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    one = FeatureMapSpec(1)
    err1 = 0.0
    for _ in range(200):
        x, y = rng.uniform(-2 * np.pi, 2 * np.pi, 2)
        err1 = max(err1, abs(kernel_entry_exact([x], [y], one) - math.cos((x - y) / 2) ** 2))
    err2 = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 5))
        spec = FeatureMapSpec(n, entangling=True)
        x, y = rng.uniform(-np.pi, np.pi, (2, n))
        ref = abs(np.vdot(feature_map_state(x, True), feature_map_state(y, True))) ** 2
        err2 = max(err2, abs(kernel_entry_exact(x, y, spec) - ref))
    dt = time.perf_counter() - t0
    report(1, err1 <= 1e-12 and err2 <= 1e-10 and dt < 5,
           f"closed-form err {err1:.1e}, dense-oracle err {err2:.1e}, {dt:.2f} s")


def test_02_shot_convergence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    e1, e4 = [], []
    for k in range(100):
        n = int(rng.integers(1, 5))
        spec = FeatureMapSpec(n, entangling=True)
        x, y = rng.uniform(-np.pi, np.pi, (2, n))
        exact = kernel_entry_exact(x, y, spec)
        e1.append(abs(kernel_entry_shots(x, y, spec, 10_000, rng_seed=k) - exact))
        e4.append(abs(kernel_entry_shots(x, y, spec, 40_000, rng_seed=10_000 + k) - exact))
    within = sum(e <= 0.05 for e in e1)
    ratio = np.mean(e4) / np.mean(e1)
    dt = time.perf_counter() - t0
    report(2, within >= 95 and ratio <= 0.55 and dt < 60,
           f"{within}/100 within 0.05 at 1e4 shots, MAE ratio 4e4/1e4 = {ratio:.3f}, {dt:.2f} s")


def test_03_gram_properties(report):
    X = np.random.default_rng(3).uniform(-np.pi, np.pi, (30, 4))
    km = kernel_matrix(X, FeatureMapSpec(4))
    K = km.values
    asym = np.max(np.abs(K - K.T))
    diag = np.max(np.abs(np.diag(K) - 1))
    lam = np.linalg.eigvalsh(K).min()
    report(3, asym <= 1e-12 and diag <= 1e-12 and lam >= -1e-9 and km.eval_count == 435,
           f"asymmetry {asym:.1e}, |diag-1| {diag:.1e}, min eigenvalue {lam:.2e}, eval_count {km.eval_count}")


def test_04_svm_optimality(report):
    # Trained at tol 1e-4 (stricter than the default 1e-3): at the default tol
    # the stopping rule alone leaves objective gaps up to ~2e-6 on these
    # problems, above the 1e-6 bound. The certificate is checked at 1e-3.
    rng = np.random.default_rng(2024)
    worst_kkt = worst_gap = worst_default_gap = 0.0
    feasible = True
    for p in range(20):
        n, d = int(rng.integers(10, 41)), int(rng.integers(2, 5))
        X = rng.normal(size=(n, d))
        y = np.where(X[:, 0] + 0.5 * rng.normal(size=n) > 0, 1, -1)
        y[0], y[1] = 1, -1
        K = rbf_kernel(X, X, 1.0 / d) if p % 2 == 0 else kernel_matrix(X, FeatureMapSpec(d)).values
        Q = K + 1e-8 * np.eye(n)
        m = train_svm(K, y, tol=1e-4)
        ref = train_svm(K, y, tol=1e-12, max_iter=10 * DEFAULT_MAX_ITER)
        default = train_svm(K, y)
        best = dual_objective(ref.alphas, y, Q)
        worst_kkt = max(worst_kkt, kkt_violation(m, K))
        worst_gap = max(worst_gap, abs(dual_objective(m.alphas, y, Q) - best))
        worst_default_gap = max(worst_default_gap, abs(dual_objective(default.alphas, y, Q) - best))
        feasible &= bool(np.all((m.alphas >= 0) & (m.alphas <= 1.0)) and abs(m.alphas @ y) <= 1e-8)
    report(4, feasible and worst_kkt <= 1e-3 and worst_gap <= 1e-6,
           f"max KKT violation {worst_kkt:.1e}, max objective gap {worst_gap:.1e} "
           f"(default tol gap {worst_default_gap:.1e})")


def test_05_gradient_check(report):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 4))
        layers = int(rng.integers(0, 9 // n))
        spec = AnsatzSpec(n, layers)
        assert spec.n_params <= 9
        m = VqcModel(np.zeros(spec.n_params), spec, FeatureMapSpec(n, False))
        theta = rng.uniform(-np.pi, np.pi, spec.n_params)
        X = rng.uniform(-np.pi, np.pi, (int(rng.integers(1, 8)), n))
        y = np.where(rng.random(X.shape[0]) < 0.5, 1, -1)
        g = parameter_shift_gradient(theta, X, y, m)
        for k in range(spec.n_params):
            e = np.zeros_like(theta)
            e[k] = 1e-5
            fd = (loss(theta + e, X, y, m) - loss(theta - e, X, y, m)) / 2e-5
            worst = max(worst, abs(g[k] - fd))
    report(5, worst <= 1e-6, f"max |shift - finite difference| {worst:.1e} over 50 instances")


def test_06_learnability(report, tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        dataset={"synthetic": {"n": 200, "d": 2, "pos_fraction": 0.5, "separation": 10.0, "seed": 0}},
        models=[VQC, QSVM], pca_dims=[2], sample_sizes=[200], epochs_list=[150],
        optimizer=OptimizerConfig(kind=GRADIENT_DESCENT), C=1.0, output_dir=str(tmp_path))
    recs = {r.model: r for r in run_experiment(cfg)}
    dt = time.perf_counter() - t0
    report(6, recs[VQC].acc >= 0.95 and recs[QSVM].acc >= 0.95 and dt < 120,
           f"VQC test acc {recs[VQC].acc:.4f}, QSVM test acc {recs[QSVM].acc:.4f}, {dt:.1f} s")


def test_07_imbalance_regime(report, tmp_path):
    accs, mccs = [], []
    for seed in range(5):
        cfg = ExperimentConfig(
            dataset={"synthetic": {"n": 4000, "d": 10, "pos_fraction": 0.73, "separation": 0.0, "seed": seed}},
            models=[VQC], pca_dims=[4], sample_sizes=[4000], epochs_list=[100],
            optimizer=OptimizerConfig(kind=GRADIENT_DESCENT), seed=seed, output_dir=str(tmp_path / str(seed)))
        (rec,) = run_experiment(cfg)
        accs.append(rec.acc)
        mccs.append(rec.mcc)
    a, m = float(np.mean(accs)), float(np.mean(mccs))
    report(7, 0.70 <= a <= 0.76 and -0.1 <= m <= 0.1,
           f"mean test acc {a:.4f}, mean MCC {m:+.4f} over 5 seeds")


def test_08_metrics_oracle(report):
    mismatches = 0
    for t in itertools.product((1, -1), repeat=6):
        for p in itertools.product((1, -1), repeat=6):
            mismatches += accuracy(t, p) != brute_accuracy(t, p)
            mismatches += abs(mcc(t, p) - brute_mcc(t, p)) > 1e-15
    rng = np.random.default_rng(8)
    auc_bad = checked = 0
    while checked < 1000:
        n = int(rng.integers(2, 9))
        y = np.where(rng.random(n) < 0.5, 1, -1)
        if len(set(y.tolist())) < 2:
            continue
        s = rng.normal(size=n) if checked % 2 else rng.integers(-2, 3, n).astype(float)
        auc_bad += roc_auc(y, s) != brute_auc(y.tolist(), s.tolist())
        checked += 1
    report(8, mismatches == 0 and auc_bad == 0,
           f"{mismatches} acc/MCC mismatches over 4096 pairs, {auc_bad} AUC mismatches over 1000 vectors")


GRID_DATA = {"synthetic": {"n": 4000, "d": 10, "pos_fraction": 0.73, "separation": 1.0, "seed": 9}}


def table_shape(text):
    lines = text.splitlines()
    return len(lines) - 2, lines[0].count("|") - 2


@pytest.mark.slow
def test_09_grid_shape(report, tmp_path):
    t0 = time.perf_counter()
    q = run_experiment(ExperimentConfig(dataset=GRID_DATA, models=[QSVM], pca_dims=list(range(2, 11)),
                                        sample_sizes=[20, 100], output_dir=str(tmp_path / "qsvm")))
    q_shapes = {table_shape(render_table(q, m, QSVM)) for m in ("ACC", "AUC", "MCC")}
    v = run_experiment(ExperimentConfig(dataset=GRID_DATA, models=[VQC], pca_dims=list(range(2, 11)),
                                        sample_sizes=[1000, 2000, 3000, 4000], epochs_list=[10, 100, 150],
                                        optimizer=OptimizerConfig(kind=SPSA),
                                        output_dir=str(tmp_path / "vqc")))
    v_shapes = {table_shape(render_table(v, m, VQC, e)) for m in ("ACC", "AUC", "MCC") for e in (10, 100, 150)}
    failed = sum(r.failed for r in q + v)
    dt = time.perf_counter() - t0
    report(9, len(q) == 18 and q_shapes == {(9, 2)} and len(v) == 108 and v_shapes == {(9, 4)} and failed == 0,
           f"QSVM {len(q)} records, tables {sorted(q_shapes)}; VQC {len(v)} records, tables {sorted(v_shapes)}; "
           f"{failed} failed cells, {dt:.0f} s")


def test_10_determinism(report, tmp_path):
    base = dict(dataset={"synthetic": {"n": 150, "d": 5, "pos_fraction": 0.6, "separation": 1.5, "seed": 10}},
                models=[QSVM, VQC, "RBF_SVM"], pca_dims=[2, 4], sample_sizes=[30, 60], epochs_list=[3, 5],
                kernel_mode="SHOTS(256)", optimizer=OptimizerConfig(kind=SPSA), seed=10)
    paths = []
    for name, workers in (("a", 1), ("b", 1), ("c", 2)):
        run_experiment(ExperimentConfig(**base, workers=workers, output_dir=str(tmp_path / name)))
        paths.append(tmp_path / name / "results.csv")
    a, b, c = (csv_rows_without_wall(p) for p in paths)
    report(10, a == b and a == c and len(a) == 17,
           f"{len(a) - 1} records; rerun identical: {a == b}; serial vs 2 workers identical: {a == c}")
