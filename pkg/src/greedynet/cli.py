"""Command-line entry points.

Subcommands:

    train          run one algorithm on one dataset, emit a JSON report
    bench          run several algorithms x seeds, print a comparison table
    sweep-amnesia  scan the amnesia factor over shared seeds
    features       render a trained layer's input weights as a PGM grid
    scatter        dump two code components per example as CSV
    kernel-bench   time the compiled kernels against the numpy reference

Dataset arguments accept a CSV path, or the name "digits" for the bundled
8x8 handwritten digits.  Bare names are also searched for in
$GREEDYNET_DATA_DIR.  All randomness flows from --seed; two invocations
with the same arguments and backend produce identical reports apart from
wall-clock fields.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import backend
from .dataset import (
    NormalizeParams,
    SplitSpec,
    apply_normalization,
    load_csv,
    load_csv_pair,
    load_digits_dataset,
    normalize,
    split,
)
from .export import export_feature_grid, export_scatter
from .network import NS_SPLIT, codes_batch, derive_seed, load_weights, save_weights
from .trainer import ALGORITHMS, PipelineConfig, run_pipeline

__all__ = ["main", "build_parser"]


# ---- argument parsing helpers ---- #


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _pair(text: str) -> tuple[int, int]:
    for sep in ("x", ","):
        if sep in text:
            parts = text.split(sep)
            if len(parts) == 2:
                try:
                    return int(parts[0]), int(parts[1])
                except ValueError:
                    break
    raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}")


def _algo_list(text: str) -> tuple[str, ...]:
    values = tuple(tok.strip().lower() for tok in text.split(",") if tok.strip())
    for v in values:
        if v not in ALGORITHMS:
            raise argparse.ArgumentTypeError(f"unknown algorithm {v!r}; pick from {ALGORITHMS}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one algorithm")
    return values


_HEADER = {"auto": None, "yes": True, "no": False}


# ---- dataset plumbing ---- #


def _resolve_data(arg: str | None) -> str | None:
    """Map a --data argument to a path; None means the bundled digits."""
    if arg is None or arg == "digits":
        return None
    if os.path.exists(arg):
        return arg
    data_dir = os.environ.get("GREEDYNET_DATA_DIR")
    if data_dir:
        for candidate in (os.path.join(data_dir, arg), os.path.join(data_dir, arg + ".csv")):
            if os.path.exists(candidate):
                return candidate
    raise FileNotFoundError(f"dataset {arg!r} not found")


def _prepare_splits(args, seed: int):
    """Load, split, and normalize; test features use the training bounds."""
    header = _HEADER[args.header]
    path = _resolve_data(args.data)
    if getattr(args, "test_data", None):
        if path is None:
            raise ValueError("--test-data needs --data to point at a training CSV")
        train_raw, test_raw = load_csv_pair(path, args.test_data, args.label_col, header)
    else:
        ds = load_digits_dataset() if path is None else load_csv(path, args.label_col, header)
        spec = SplitSpec(args.test_frac, derive_seed(seed, NS_SPLIT))
        train_raw, test_raw = split(ds, spec)
    train = normalize(train_raw)
    test = apply_normalization(test_raw, train.norm)
    return train, test


def _pipeline_config(args, algorithm: str, seed: int, amnesia: float | None = None) -> PipelineConfig:
    return PipelineConfig(
        algorithm=algorithm,
        arch=args.arch,
        epochs=args.epochs,
        lr=args.lr,
        l2=args.l2,
        amnesia=args.amnesia if amnesia is None else amnesia,
        classifier_epochs=args.classifier_epochs,
        classifier_lr=args.classifier_lr,
        finetune_epochs=args.finetune_epochs,
        finetune_lr=args.finetune_lr,
        seed=seed,
    )


def _apply_backend(args) -> None:
    if getattr(args, "backend", None):
        backend.set_backend(args.backend)


def _write_json(path: str, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---- subcommands ---- #


def cmd_train(args) -> int:
    _apply_backend(args)
    cfg = _pipeline_config(args, args.algo, args.seed)
    train, test = _prepare_splits(args, args.seed)
    report, net = run_pipeline(cfg, train, test)
    if args.save_model:
        norm = train.norm
        save_weights(args.save_model, net, seed=args.seed, norm_lo=norm.lo, norm_hi=norm.hi)
    if args.out:
        _write_json(args.out, report.to_dict())
        print(
            f"{cfg.algorithm} arch={list(cfg.arch)} seed={cfg.seed}: "
            f"train {report.train_accuracy:.3f} test {report.test_accuracy:.3f} "
            f"pretrain {report.phase_seconds['pretrain']:.2f}s (report -> {args.out})"
        )
    else:
        print(report.to_json())
    return 0


def _mean(values) -> float:
    return float(np.mean(values))


def cmd_bench(args) -> int:
    """Grid of algorithm x seed runs, executed one after another.

    Cells run sequentially in one process so the wall-clock columns are
    comparable; keep it that way when timing matters.
    """
    _apply_backend(args)
    runs = []
    for algo in args.algos:
        for seed in args.seeds:
            cfg = _pipeline_config(args, algo, seed)
            train, test = _prepare_splits(args, seed)
            report, _ = run_pipeline(cfg, train, test)
            runs.append(report)
            print(
                f"  done {algo} seed={seed}: train {report.train_accuracy:.3f} "
                f"test {report.test_accuracy:.3f} "
                f"({report.total_seconds:.2f}s)",
                file=sys.stderr,
            )

    summary = {}
    for algo in args.algos:
        group = [r for r in runs if r.algorithm == algo]
        summary[algo] = {
            "runs": len(group),
            "pretrain_seconds": _mean([r.phase_seconds["pretrain"] for r in group]),
            "total_seconds": _mean([r.total_seconds for r in group]),
            "pretrain_ops": _mean([r.op_counts["pretrain"]["total"] for r in group]),
            "train_accuracy": _mean([r.train_accuracy for r in group]),
            "test_accuracy": _mean([r.test_accuracy for r in group]),
        }

    header = (
        f"{'algorithm':<10} {'runs':>4} {'pretrain_s':>10} {'total_s':>8} "
        f"{'pretrain_ops':>13} {'train':>6} {'test':>6}"
    )
    print(header)
    print("-" * len(header))
    for algo, s in summary.items():
        print(
            f"{algo:<10} {s['runs']:>4} {s['pretrain_seconds']:>10.2f} "
            f"{s['total_seconds']:>8.2f} {s['pretrain_ops']:>13.3e} "
            f"{s['train_accuracy']:>6.3f} {s['test_accuracy']:>6.3f}"
        )
    if "usv" in summary:
        base = summary["usv"]
        for algo, s in summary.items():
            if algo == "usv":
                continue
            t = base["pretrain_seconds"] / max(s["pretrain_seconds"], 1e-12)
            o = base["pretrain_ops"] / max(s["pretrain_ops"], 1.0)
            print(f"pre-training speedup of {algo} over usv: {t:.2f}x time, {o:.2f}x ops")

    if args.out:
        _write_json(args.out, {"runs": [r.to_dict() for r in runs], "summary": summary})
        print(f"report -> {args.out}")
    return 0


def cmd_sweep_amnesia(args) -> int:
    _apply_backend(args)
    if args.algo not in ("gn", "gcn"):
        raise ValueError("the amnesia sweep applies to the greedy algorithms (gn, gcn)")
    runs = []
    for value in args.values:
        for seed in args.seeds:
            cfg = _pipeline_config(args, args.algo, seed, amnesia=value)
            train, test = _prepare_splits(args, seed)
            report, _ = run_pipeline(cfg, train, test)
            runs.append(report)
            print(
                f"  done amnesia={value:.2f} seed={seed}: test {report.test_accuracy:.3f}",
                file=sys.stderr,
            )

    table = []
    for value in args.values:
        group = [r for r in runs if r.config["amnesia"] == value]
        tests = [r.test_accuracy for r in group]
        table.append(
            {
                "amnesia": value,
                "train_accuracy": _mean([r.train_accuracy for r in group]),
                "test_accuracy": _mean(tests),
                "test_std": float(np.std(tests)),
            }
        )

    header = f"{'amnesia':>7} {'train':>7} {'test':>7} {'std':>7}"
    print(header)
    print("-" * len(header))
    for row in table:
        print(
            f"{row['amnesia']:>7.2f} {row['train_accuracy']:>7.3f} "
            f"{row['test_accuracy']:>7.3f} {row['test_std']:>7.3f}"
        )
    best = max(table, key=lambda row: row["test_accuracy"])
    print(f"best mean test accuracy {best['test_accuracy']:.3f} at amnesia={best['amnesia']:.2f}")

    if args.out:
        _write_json(args.out, {"runs": [r.to_dict() for r in runs], "table": table})
        print(f"report -> {args.out}")
    return 0


def cmd_features(args) -> int:
    mlp, _ = load_weights(args.model)
    if not 0 <= args.layer < len(mlp.layers):
        raise ValueError(f"layer {args.layer} out of range; model has {len(mlp.layers)} layers")
    weights = mlp.layers[args.layer]
    d1 = weights.shape[1] - 1
    if args.img_shape is not None:
        img_shape = args.img_shape
    else:
        side = int(round(d1**0.5))
        if side * side != d1:
            raise ValueError(f"{d1} inputs is not square; pass --img-shape HxW")
        img_shape = (side, side)
    export_feature_grid(args.out, weights, img_shape, args.grid)
    print(f"feature grid {args.grid[0]}x{args.grid[1]} -> {args.out}")
    return 0


def cmd_scatter(args) -> int:
    mlp, meta = load_weights(args.model)
    hidden = mlp.layers[:-1] if mlp.output_head == "softmax" else mlp.layers
    if not hidden:
        raise ValueError("model has no hidden layers to take codes from")
    path = _resolve_data(args.data)
    ds = load_digits_dataset() if path is None else load_csv(path, args.label_col, _HEADER[args.header])
    if "norm_lo" in meta:
        params = NormalizeParams(meta["norm_lo"], meta["norm_hi"])
        ds = apply_normalization(ds, params)
    else:
        ds = normalize(ds)
    codes = codes_batch(hidden, ds.features)
    export_scatter(args.out, codes, ds.labels, args.components)
    print(f"{codes.shape[0]} points, components {args.components} -> {args.out}")
    return 0


def cmd_kernel_bench(args) -> int:
    """Time each SGD kernel on synthetic data, numpy vs compiled."""
    rng = np.random.default_rng(7)
    n, d1, d2, c = 256, 64, 40, 10
    X = np.ascontiguousarray(rng.uniform(-1, 1, (n, d1)))
    T = X.copy()
    R = np.ascontiguousarray(rng.uniform(-1, 1, (n, d1)))
    H = np.ascontiguousarray(rng.uniform(-1, 1, (n, d2)))
    labels = rng.integers(0, c, n).astype(np.int64)
    order = np.arange(n, dtype=np.int64)
    w1 = rng.uniform(-0.1, 0.1, (d2, d1 + 1))
    w2 = rng.uniform(-0.1, 0.1, (d1, d2 + 1))
    w_in = rng.uniform(-0.1, 0.1, d1 + 1)
    w_out = rng.uniform(-0.1, 0.1, d1)
    bias = rng.uniform(-0.1, 0.1, d1)
    w_head = rng.uniform(-0.1, 0.1, (c, d2 + 1))

    workloads = {
        "ae_sgd_epoch": lambda k: k.ae_sgd_epoch(X, T, w1.copy(), w2.copy(), order, 1e-3, 1e-5),
        "node_sgd_epoch": lambda k: k.node_sgd_epoch(
            X, R, order, w_in.copy(), w_out.copy(), 0.4, 1e-3, 1e-5
        ),
        "seed_node_sgd_epoch": lambda k: k.seed_node_sgd_epoch(
            X, order, w_in.copy(), w_out.copy(), bias.copy(), 1e-3, 1e-5
        ),
        "softmax_sgd_epoch": lambda k: k.softmax_sgd_epoch(
            H, labels, w_head.copy(), order, 1e-3, 1e-5
        ),
    }

    backends = ["python"]
    if backend.cython_available():
        backends.append("cython")
    else:
        print("compiled kernels unavailable; timing the numpy reference only", file=sys.stderr)

    results: dict[str, dict[str, float]] = {}
    for name, work in workloads.items():
        results[name] = {}
        for b in backends:
            with backend.use_backend(b) as kern:
                work(kern)  # warm up
                best = min(
                    _timed(work, kern) for _ in range(args.repeat)
                )
            results[name][b] = best

    header = f"{'kernel':<22} {'python_ms':>10} {'cython_ms':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, row in results.items():
        py_ms = row["python"] * 1e3
        if "cython" in row:
            cy_ms = row["cython"] * 1e3
            print(f"{name:<22} {py_ms:>10.3f} {cy_ms:>10.3f} {py_ms / cy_ms:>7.1f}x")
        else:
            print(f"{name:<22} {py_ms:>10.3f} {'-':>10} {'-':>8}")

    if args.out:
        _write_json(args.out, results)
        print(f"report -> {args.out}")
    return 0


def _timed(work, kern) -> float:
    t0 = time.perf_counter()
    work(kern)
    return time.perf_counter() - t0


# ---- parser ---- #


def build_parser() -> argparse.ArgumentParser:
    data_args = argparse.ArgumentParser(add_help=False)
    data_args.add_argument("--data", help="CSV path or 'digits' for the bundled set")
    data_args.add_argument("--label-col", type=int, default=-1, help="label column index (default: last)")
    data_args.add_argument("--header", choices=sorted(_HEADER), default="auto")

    split_args = argparse.ArgumentParser(add_help=False)
    split_args.add_argument("--test-frac", type=float, default=0.3, help="held-out fraction (default 0.3)")
    split_args.add_argument("--test-data", help="separate test CSV; disables the random split")

    sgd_args = argparse.ArgumentParser(add_help=False)
    sgd_args.add_argument("--arch", type=_int_list, default=(40, 30), help="hidden widths, e.g. 40,30")
    sgd_args.add_argument("--epochs", type=int, default=300, help="pre-training epochs per unit")
    sgd_args.add_argument("--lr", type=float, default=0.001)
    sgd_args.add_argument("--l2", type=float, default=1.0)
    sgd_args.add_argument("--amnesia", type=float, default=0.4)
    sgd_args.add_argument("--classifier-epochs", type=int, default=500)
    sgd_args.add_argument("--classifier-lr", type=float, default=0.002)
    sgd_args.add_argument("--finetune-epochs", type=int, default=20)
    sgd_args.add_argument("--finetune-lr", type=float, default=0.001)
    sgd_args.add_argument(
        "--backend", choices=("auto", "cython", "python"), help="kernel backend override"
    )

    parser = argparse.ArgumentParser(prog="greedynet", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "train", parents=[data_args, split_args, sgd_args], help="run one algorithm end to end"
    )
    p.add_argument("--algo", required=True, choices=ALGORITHMS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--save-model", help="write an .npz checkpoint of the trained network")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser(
        "bench",
        parents=[data_args, split_args, sgd_args],
        help="compare algorithms over shared seeds",
    )
    p.add_argument("--algos", type=_algo_list, default=ALGORITHMS, help="e.g. sv,usv,gn,gcn")
    p.add_argument("--seeds", type=_int_list, default=(0, 1, 2))
    p.add_argument("--out", help="write all reports plus the summary as JSON")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser(
        "sweep-amnesia",
        parents=[data_args, split_args, sgd_args],
        help="scan the amnesia factor over shared seeds",
    )
    p.add_argument("--algo", default="gcn", choices=("gn", "gcn"))
    p.add_argument("--values", type=_float_list, default=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0))
    p.add_argument("--seeds", type=_int_list, default=(0, 1, 2, 3, 4))
    p.add_argument("--out", help="write all reports plus the table as JSON")
    p.set_defaults(func=cmd_sweep_amnesia)

    p = sub.add_parser("features", help="render node input weights as a PGM image grid")
    p.add_argument("--model", required=True, help=".npz checkpoint from train --save-model")
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--img-shape", type=_pair, help="HxW per node (default: square)")
    p.add_argument("--grid", type=_pair, default=(3, 3), help="ROWSxCOLS tiles (default 3x3)")
    p.add_argument("--out", required=True, help="output .pgm path")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("scatter", parents=[data_args], help="dump two code components as CSV")
    p.add_argument("--model", required=True, help=".npz checkpoint from train --save-model")
    p.add_argument("--components", type=_pair, default=(0, 1), help="code indices, e.g. 0,1")
    p.add_argument("--out", required=True, help="output .csv path")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("kernel-bench", help="time compiled kernels against the numpy reference")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--out", help="write timings as JSON")
    p.set_defaults(func=cmd_kernel_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
