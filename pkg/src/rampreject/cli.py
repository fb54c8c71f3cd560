"""Command line interface: data generation, training, prediction,
cross validation, grid search and the benchmark suites.

Exit codes: 0 ok, 2 usage or validation error, 3 training hit the iteration
limit without converging, 4 degenerate (single-class) data, 5 feature
dimension mismatch, 6 model file error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import data as data_mod
from . import model as model_mod
from .data import DataFormatError, atomic_write_text
from .evaluation import DEFAULT_C_GRID, evaluate, grid_search, kfold_cv
from .kernels import KernelSpec
from .trainer import Hyperparams, SingleClassError, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NONCONVERGED = 3
EXIT_DEGENERATE = 4
EXIT_DIMENSION = 5
EXIT_MODEL_IO = 6

BENCH_D_SWEEP = [round(0.05 * i, 2) for i in range(1, 11)]


def _kernel_from_args(args) -> KernelSpec:
    if args.kernel == "rbf":
        if args.gamma is None:
            raise ValueError("--kernel rbf requires --gamma")
        return KernelSpec(kind="rbf", gamma=args.gamma)
    return KernelSpec(kind="linear")


def _hyper_from_args(args) -> Hyperparams:
    return Hyperparams(
        C=args.reg_c,
        d=args.cost_d,
        mu=args.mu,
        kernel=_kernel_from_args(args),
        dc_max_iter=args.dc_max_iter,
        dc_tol=args.dc_tol,
    )


def _add_hyper_flags(sub, with_gamma=True):
    sub.add_argument("--reg-c", type=float, required=True, help="regularization trade-off C")
    sub.add_argument("--cost-d", type=float, required=True, help="rejection cost d in (0, 0.5]")
    sub.add_argument("--mu", type=float, default=1.0, help="ramp slope parameter in (0, 1]")
    sub.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    if with_gamma:
        sub.add_argument("--gamma", type=float, default=None, help="RBF width parameter")
    sub.add_argument("--dc-max-iter", type=int, default=50)
    sub.add_argument("--dc-tol", type=float, default=1e-4)


def _add_data_flags(sub):
    sub.add_argument("data", help="CSV dataset path")
    sub.add_argument("--label-col", type=int, default=-1, help="label column index (default last)")
    sub.add_argument(
        "--header", choices=("auto", "yes", "no"), default="auto", help="header row handling"
    )


def cmd_gen_data(args) -> int:
    if args.generator == "synth1":
        dataset = data_mod.gen_synth1(args.seed)
        oracle = None
    elif args.generator == "synth2":
        dataset, oracle = data_mod.gen_synth2(args.seed)
    else:
        dataset = data_mod.gen_diagonal_band(args.seed)
        oracle = None
    try:
        data_mod.save_csv(dataset, args.out, comment=f"generator={args.generator} seed={args.seed}")
        if oracle is not None:
            data_mod.save_oracle(oracle, args.out + ".oracle.json", seed=args.seed)
    except OSError as exc:
        print(f"error: cannot write {args.out!r}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {dataset.n} rows to {args.out} (seed={args.seed})")
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        dataset = data_mod.load_csv(args.data, label_column=args.label_col, header=args.header)
        hyper = _hyper_from_args(args)
    except (DataFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        fitted, state = train(dataset, hyper)
    except SingleClassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        fitted.diagnostics["seed"] = args.seed
    try:
        model_mod.save(fitted, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out!r}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    converged = fitted.diagnostics["converged"]
    print(
        f"risk={state.risk_history[-1]:.6f} iterations={state.iteration} "
        f"support_vectors={fitted.n_support} rho={fitted.rho:.6f} "
        f"converged={converged} seed={args.seed}"
    )
    if not converged:
        print("warning: iteration limit reached before convergence", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        fitted = model_mod.load(args.model)
    except model_mod.ModelIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL_IO
    try:
        X = data_mod.load_feature_matrix(
            args.data,
            label_column=args.label_col,
            header=args.header,
        )
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    lines = ["f,prediction"]
    if X.size:
        try:
            f = fitted.decision_function(X)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DIMENSION
        preds = np.where(f > fitted.rho, 1, np.where(np.abs(f) <= fitted.rho, 0, -1))
        for fi, pi in zip(f, preds):
            lines.append(f"{float(fi)!r},{int(pi)}")
    try:
        atomic_write_text(args.out, "\n".join(lines) + "\n")
    except OSError as exc:
        print(f"error: cannot write {args.out!r}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {len(lines) - 1} predictions to {args.out}")
    return EXIT_OK


def _write_report(report, out: str) -> None:
    if out.endswith(".json"):
        report.to_json(out)
    else:
        report.to_csv(out)


def cmd_cv(args) -> int:
    try:
        dataset = data_mod.load_csv(args.data, label_column=args.label_col, header=args.header)
        hyper = _hyper_from_args(args)
        report = kfold_cv(dataset, hyper, k=args.folds, repetitions=args.reps, seed=args.seed)
    except (DataFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write_report(report, args.out)
    risk, rr, acc = report.risk_mean_std, report.rr_mean_std, report.acc_mean_std
    acc_txt = "NA" if acc[0] is None else f"{100 * acc[0]:.2f}"
    print(
        f"d={hyper.d} risk={risk[0]:.4f}±{risk[1]:.4f} "
        f"RR%={100 * rr[0]:.2f} Acc%={acc_txt} seed={args.seed}"
    )
    return EXIT_OK


def cmd_grid(args) -> int:
    try:
        dataset = data_mod.load_csv(args.data, label_column=args.label_col, header=args.header)
        C_values = [float(v) for v in args.c_grid.split(",")] if args.c_grid else DEFAULT_C_GRID
        gamma_values = (
            [float(v) for v in args.gamma_grid.split(",")] if args.gamma_grid else None
        )
        best, reports = grid_search(
            dataset,
            d=args.cost_d,
            C_values=C_values,
            gamma_values=gamma_values,
            kernel_kind=args.kernel,
            k=args.folds,
            repetitions=args.reps,
            seed=args.seed,
        )
    except (DataFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    header = "d,C,gamma,risk_mean,risk_std,rr_mean,rr_std,acc_mean,acc_std"
    lines = [f"# seed={args.seed}", header]
    for report in reports:
        lines.append(",".join(report.to_rows()[-1][col] for col in header.split(",")))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    gamma_txt = "" if best.kernel.gamma is None else f" gamma={best.kernel.gamma}"
    print(f"best: C={best.C}{gamma_txt} (full table in {args.out}) seed={args.seed}")
    return EXIT_OK


def _bench_tables(args, suite: str) -> int:
    if suite == "synth1-table3":
        dataset = data_mod.gen_synth1(args.seed)
        kernel = KernelSpec(kind="linear")
        C = 2.0
    else:
        dataset, _ = data_mod.gen_synth2(args.seed)
        kernel = KernelSpec(kind="rbf", gamma=0.25)
        C = 64.0
    os.makedirs(args.out_dir, exist_ok=True)
    header = "d,C,gamma,risk_mean,risk_std,rr_mean,rr_std,acc_mean,acc_std"
    summary = [f"# suite={suite} seed={args.seed}", header]
    print(f"{'d':>5} {'risk':>16} {'RR%':>8} {'Acc%':>8}")
    for d in BENCH_D_SWEEP:
        hyper = Hyperparams(C=C, d=d, kernel=kernel)
        report = kfold_cv(dataset, hyper, k=args.folds, repetitions=args.reps, seed=args.seed)
        report.to_csv(os.path.join(args.out_dir, f"{suite}_d{d:.2f}.csv"))
        summary.append(",".join(report.to_rows()[-1][col] for col in header.split(",")))
        risk, rr, acc = report.risk_mean_std, report.rr_mean_std, report.acc_mean_std
        acc_txt = "NA" if acc[0] is None else f"{100 * acc[0]:8.2f}"
        print(f"{d:>5.2f} {risk[0]:>8.4f}±{risk[1]:6.4f} {100 * rr[0]:>8.2f} {acc_txt}")
    atomic_write_text(os.path.join(args.out_dir, f"{suite}_summary.csv"), "\n".join(summary) + "\n")
    return EXIT_OK


def _bench_diagonal(args) -> int:
    dataset = data_mod.gen_diagonal_band(args.seed)
    hyper = Hyperparams(
        C=100.0, d=0.2, kernel=KernelSpec(kind="linear"), dc_tol=1e-6, qp_tol=1e-8
    )
    fitted, state = train(dataset, hyper)
    metrics = evaluate(fitted, dataset, hyper.d)
    os.makedirs(args.out_dir, exist_ok=True)
    model_mod.save(fitted, os.path.join(args.out_dir, "diagonal_model.json"))
    f = fitted.decision_function(dataset.X)
    margins = dataset.y * f
    retained = np.abs(state.gamma1 + state.gamma2) > 1e-10
    lines = [f"# suite=diagonal-fig3 seed={args.seed}", "x1,x2,label,f,margin,is_support"]
    for row, label, fi, mi, sv in zip(dataset.X, dataset.y, f, margins, retained):
        lines.append(
            f"{float(row[0])!r},{float(row[1])!r},{int(label)},"
            f"{float(fi)!r},{float(mi)!r},{int(sv)}"
        )
    atomic_write_text(os.path.join(args.out_dir, "diagonal_points.csv"), "\n".join(lines) + "\n")
    acc = metrics.accuracy_unrejected
    print(
        f"rho={fitted.rho:.4f} b={fitted.b:.4f} support_vectors={fitted.n_support} "
        f"RR%={100 * metrics.rejection_rate:.2f} "
        f"Acc%={'NA' if acc is None else f'{100 * acc:.2f}'} seed={args.seed}"
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.suite in ("synth1-table3", "synth2-table4"):
        return _bench_tables(args, args.suite)
    if args.suite == "diagonal-fig3":
        return _bench_diagonal(args)
    print(f"error: unknown suite {args.suite!r}", file=sys.stderr)
    return EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rampreject",
        description="Reject option classification under the double ramp loss",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("gen-data", help="write a synthetic dataset as CSV")
    p.add_argument("generator", choices=("synth1", "synth2", "diagonal-band"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = subs.add_parser("train", help="fit a model and write it as JSON")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="model output path")
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("predict", help="score a feature CSV with a saved model")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--label-col", type=int, default=None, help="drop this column before scoring")
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("cv", help="repeated stratified k-fold cross validation")
    _add_data_flags(p)
    _add_hyper_flags(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report path (.csv or .json)")
    p.set_defaults(func=cmd_cv)

    p = subs.add_parser("grid", help="cross-validated hyperparameter grid search")
    _add_data_flags(p)
    p.add_argument("--cost-d", type=float, required=True)
    p.add_argument("--kernel", choices=("linear", "rbf"), default="rbf")
    p.add_argument("--c-grid", default=None, help="comma-separated C values")
    p.add_argument("--gamma-grid", default=None, help="comma-separated gamma values")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = subs.add_parser("bench", help="desk-scale benchmark suites")
    p.add_argument("suite", choices=("synth1-table3", "synth2-table4", "diagonal-fig3"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
