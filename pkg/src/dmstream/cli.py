"""Command-line entry point.

Subcommands: fit, eval, grid, synth, stats, bench.  Every run takes its
settings from an optional key=value config file plus CLI flag overrides,
requires an explicit --seed on randomized paths, and echoes the resolved
configuration into the output directory so results are reproducible from
the config alone.  Floats in CSV outputs carry 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .checkpoint import save_state
from .data import (
    ANOMALY,
    generate_synthetic,
    load_csv,
    normalize_minmax,
    records_to_arrays,
)
from .density import init_density
from .detector import DetectorParams, DetectorState, fit, score_only
from .evaluate import (
    bench_scoring,
    evaluate_stream,
    fast_forward_state,
    filter_n_init_grid,
    grid_search,
)
from .features import embed, sample_rff
from .metrics import friedman_q, nemenyi, roc_points
from .training import TrainConfig


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


@dataclass
class RunConfig:
    """Flat run settings shared by the data-driven subcommands."""

    dataset: str = "synth"
    label_column: str | None = "label"
    has_header: bool = True
    n_init: int = 64
    sigma: float = 0.1
    alpha: float = 0.04
    beta: float = 0.1
    D: int = 2000
    lr_base: float = 0.01
    lr_end: float = 1e-7
    epochs: int = 10
    batch_size: int = 256
    num_pairs: int | None = None
    seed: int | None = None
    threshold_mode: str = "quantile"
    adaptive: bool = True
    m_sigma: float = 1.0
    out: str = "out"
    # synthetic-recipe settings, used when dataset == "synth"
    synth_n: int = 10000
    synth_rate: float = 0.1
    synth_omega1: float = 0.02
    synth_omega2: float = 0.005
    synth_noise_std: float = 6.0

    def detector_params(self) -> DetectorParams:
        return DetectorParams(
            n_init=self.n_init,
            sigma=self.sigma,
            alpha=self.alpha,
            beta=self.beta,
            D=self.D,
            threshold_mode=self.threshold_mode,
            train_cfg=TrainConfig(
                lr_base=self.lr_base,
                lr_end=self.lr_end,
                epochs=self.epochs,
                batch_size=self.batch_size,
                num_pairs=self.num_pairs,
                seed=self.seed,
            ),
            adaptive=self.adaptive,
            m_sigma=self.m_sigma,
        )


_BOOL_FIELDS = {"has_header", "adaptive"}
_INT_FIELDS = {
    "n_init", "D", "epochs", "batch_size", "num_pairs", "seed", "synth_n",
}
_FLOAT_FIELDS = {
    "sigma", "alpha", "beta", "lr_base", "lr_end", "m_sigma",
    "synth_rate", "synth_omega1", "synth_omega2", "synth_noise_std",
}


def parse_config_file(path) -> dict:
    """Read flat key=value lines; '#' starts a comment, blanks ignored."""
    values = {}
    known = {f.name for f in fields(RunConfig)}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (need key=value): {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = val
    return values


def _coerce(key: str, val):
    if val is None or isinstance(val, (int, float, bool)):
        return val
    if val == "none":
        return None
    if key in _BOOL_FIELDS:
        return val.lower() in ("1", "true", "yes")
    if key in _INT_FIELDS:
        return int(val)
    if key in _FLOAT_FIELDS:
        return float(val)
    return val


def build_config(args) -> RunConfig:
    cfg = RunConfig()
    file_vals = parse_config_file(args.config) if getattr(args, "config", None) else {}
    for key, val in file_vals.items():
        setattr(cfg, key, _coerce(key, val))
    for f in fields(RunConfig):
        cli_val = getattr(args, f.name, None)
        if cli_val is not None:
            setattr(cfg, f.name, _coerce(f.name, cli_val))
    if getattr(args, "no_adaptive", False):
        cfg.adaptive = False
    ablation = getattr(args, "ablation", None)
    if ablation == "noadp":
        cfg.adaptive = False
    elif ablation == "d200":
        cfg.D = 200
    if cfg.seed is None:
        raise ValueError("--seed is required (no silent time-based seeding)")
    return cfg


def echo_config(cfg: RunConfig, out_dir: Path) -> None:
    lines = [f"{f.name}={_fmt(getattr(cfg, f.name))}" for f in fields(RunConfig)]
    (out_dir / "config.txt").write_text("\n".join(lines) + "\n")


def load_records(cfg: RunConfig):
    if cfg.dataset == "synth":
        return generate_synthetic(
            cfg.synth_n,
            cfg.synth_rate,
            cfg.seed,
            omega1=cfg.synth_omega1,
            omega2=cfg.synth_omega2,
            noise_std=cfg.synth_noise_std,
        )
    label_col = cfg.label_column
    if isinstance(label_col, str) and label_col.isdigit():
        label_col = int(label_col)  # headerless files address the column by index
    return load_csv(cfg.dataset, label_column=label_col, has_header=cfg.has_header)


def cmd_synth(args) -> int:
    cfg = build_config(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, out_dir)
    records = generate_synthetic(
        cfg.synth_n,
        cfg.synth_rate,
        cfg.seed,
        omega1=cfg.synth_omega1,
        omega2=cfg.synth_omega2,
        noise_std=cfg.synth_noise_std,
    )
    path = out_dir / "synth.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "label"])
        for r in records:
            writer.writerow([_fmt(float(r.features[0])), 1 if r.label == ANOMALY else 0])
    print(f"wrote {path} ({len(records)} records)")
    return 0


def cmd_fit(args) -> int:
    cfg = build_config(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, out_dir)
    records = load_records(cfg)
    if cfg.n_init > len(records):
        raise ValueError(f"n_init={cfg.n_init} exceeds dataset size {len(records)}")
    normalized, transform = normalize_minmax(records, range(cfg.n_init))
    feats, labels = records_to_arrays(normalized)
    params = cfg.detector_params()

    loss_rows = []
    state = fit(
        feats[: cfg.n_init],
        labels[: cfg.n_init],
        params,
        log_fn=lambda epoch, loss: loss_rows.append((epoch, loss)),
    )

    ckpt = out_dir / "checkpoint.bin"
    save_state(state, ckpt)
    with open(out_dir / "norm.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "min", "max"])
        for j in range(transform.mins.shape[0]):
            writer.writerow([j, _fmt(float(transform.mins[j])), _fmt(float(transform.maxs[j]))])
    if loss_rows:
        with open(out_dir / "loss_log.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss"])
            for epoch, loss in loss_rows:
                writer.writerow([epoch, _fmt(loss)])

    scores = _init_scores(state, feats[: cfg.n_init])
    print(f"wrote {ckpt}")
    print(
        "init scores: "
        f"min={_fmt(float(scores.min()))} "
        f"median={_fmt(float(np.median(scores)))} "
        f"max={_fmt(float(scores.max()))} "
        f"tau={_fmt(state.tau)}"
    )
    return 0


def _init_scores(state: DetectorState, train) -> np.ndarray:
    return np.asarray([score_only(state, row) for row in train])


def cmd_eval(args) -> int:
    cfg = build_config(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, out_dir)
    records = load_records(cfg)
    report = evaluate_stream(records, cfg.detector_params())

    with open(out_dir / "scores.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "score", "pred_label", "true_label"])
        for index, score, pred, true in report.per_record_scores:
            writer.writerow(
                [index, _fmt(score), 1 if pred == ANOMALY else 0, 1 if true == ANOMALY else 0]
            )
    scores = np.asarray([row[1] for row in report.per_record_scores])
    labels = [row[3] for row in report.per_record_scores]
    fpr, tpr = roc_points(-scores, labels)
    with open(out_dir / "roc.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr"])
        for i in range(fpr.shape[0]):
            writer.writerow([_fmt(float(fpr[i])), _fmt(float(tpr[i]))])
    summary = (
        f"auc={_fmt(report.auc)}\n"
        f"n_scored={report.n_scored}\n"
        f"n_flagged={report.n_flagged}\n"
        f"throughput={_fmt(report.throughput)}\n"
    )
    (out_dir / "summary.txt").write_text(summary)
    print(summary, end="")
    return 0


def parse_grid_file(path) -> dict:
    """Grid file: key=comma-separated values, keys among the searched four."""
    grid = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad grid line (need key=v1,v2,...): {raw!r}")
        key, vals = (part.strip() for part in line.split("=", 1))
        if key not in ("n_init", "lr_base", "sigma", "alpha"):
            raise ValueError(f"unknown grid key {key!r}")
        parts = [v.strip() for v in vals.split(",") if v.strip()]
        if not parts:
            raise ValueError(f"grid key {key!r} has no values")
        grid[key] = [int(v) if key == "n_init" else float(v) for v in parts]
    if not grid:
        raise ValueError("grid file is empty")
    return grid


def cmd_grid(args) -> int:
    cfg = build_config(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, out_dir)
    grid = parse_grid_file(args.grid)
    records = load_records(cfg)
    if "n_init" in grid:
        grid["n_init"] = filter_n_init_grid(grid["n_init"], len(records))
        if not grid["n_init"]:
            raise ValueError("no n_init value fits the dataset")

    results_path = out_dir / "results.csv"
    skip = set()
    if results_path.exists():
        with open(results_path, newline="") as fh:
            for row in csv.DictReader(fh):
                skip.add(
                    (
                        int(row["n_init"]),
                        float(row["lr_base"]),
                        float(row["sigma"]),
                        float(row["alpha"]),
                    )
                )
    mode = "a" if skip else "w"
    with open(results_path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(["n_init", "lr_base", "sigma", "alpha", "auc"])
        def emit(row):
            writer.writerow(
                [
                    row["n_init"],
                    _fmt(row["lr_base"]),
                    _fmt(row["sigma"]),
                    _fmt(row["alpha"]),
                    _fmt(row["auc"]),
                ]
            )
            fh.flush()

        best_params, results = grid_search(
            records, grid, cfg.detector_params(), on_result=emit, skip=skip
        )

    # rank over everything on disk, including rows from interrupted runs
    with open(results_path, newline="") as fh:
        all_rows = [
            {
                "n_init": int(r["n_init"]),
                "lr_base": float(r["lr_base"]),
                "sigma": float(r["sigma"]),
                "alpha": float(r["alpha"]),
                "auc": float(r["auc"]),
            }
            for r in csv.DictReader(fh)
        ]
    best = max(all_rows, key=lambda r: (r["auc"], -r["n_init"], -r["alpha"]))
    best_lines = [f"{k}={_fmt(v)}" for k, v in best.items()]
    (out_dir / "best.txt").write_text("\n".join(best_lines) + "\n")
    print(f"evaluated {len(all_rows)} combinations; best auc={_fmt(best['auc'])}")
    return 0


def cmd_stats(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    names, matrix = _read_auc_table(args.table)
    q, p = friedman_q(matrix)
    with open(out_dir / "friedman.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Q", "p_value"])
        writer.writerow([_fmt(q), _fmt(p)])
    pmat = nemenyi(matrix)
    with open(out_dir / "nemenyi.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method"] + names)
        for i, name in enumerate(names):
            writer.writerow([name] + [_fmt(float(v)) for v in pmat[i]])
    with open(out_dir / "significant.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method"] + names)
        for i, name in enumerate(names):
            writer.writerow([name] + [str(bool(v < 0.05)).lower() for v in pmat[i]])
    print(f"Q={_fmt(q)} p={_fmt(p)}")
    return 0


def _read_auc_table(path) -> tuple[list[str], np.ndarray]:
    """AUC table CSV: first column row names, header = method names.

    Rows with empty, '-', or non-numeric cells are dropped (incomplete).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = [c.strip() for c in header[1:]]
        rows = []
        for row in reader:
            if not row:
                continue
            try:
                vals = [float(c) for c in row[1:]]
            except ValueError:
                continue
            if len(vals) != len(names) or not all(np.isfinite(vals)):
                continue
            rows.append(vals)
    if len(rows) < 2:
        raise ValueError(f"{path}: fewer than 2 complete rows after dropping")
    return names, np.asarray(rows)


def cmd_bench(args) -> int:
    cfg = build_config(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, out_dir)
    dims = [int(v) for v in args.dims.split(",")]
    histories = [int(v) for v in args.history.split(",")]
    n_calls = int(args.n_calls)
    rng = np.random.default_rng(cfg.seed)

    rows = []
    for D in dims:
        fm = sample_rff(2, D, 1.0, cfg.seed)
        pool = rng.uniform(0.0, 1.0, size=(256, 2))
        base = init_density(embed(fm, pool[: max(2, cfg.n_init)]), cfg.alpha)
        state = DetectorState(
            fm=fm,
            rho=base,
            tau=-1.0,  # everything normal: bench the full update path
            alpha=cfg.alpha,
            m_sigma=cfg.m_sigma,
            records_seen=base.t,
        )
        for hist in histories:
            work = DetectorState(
                fm=fm,
                rho=state.rho.copy(),
                tau=state.tau,
                alpha=state.alpha,
                m_sigma=state.m_sigma,
                records_seen=state.records_seen,
            )
            if hist > work.records_seen:
                fast_forward_state(work, pool, hist - work.records_seen)
            batch = rng.uniform(0.0, 1.0, size=(n_calls, 2))
            report = bench_scoring(work, batch, repetitions=1)
            rows.append((D, hist, report))
            print(
                f"D={D} history={hist} p50={report.latency_p50*1e6:.1f}us "
                f"throughput={report.throughput:.1f}/s"
            )
    with open(out_dir / "bench.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["D", "history", "n_calls", "p50_s", "p90_s", "p99_s", "mean_s", "throughput"]
        )
        for D, hist, r in rows:
            writer.writerow(
                [
                    D,
                    hist,
                    r.n_calls,
                    _fmt(r.latency_p50),
                    _fmt(r.latency_p90),
                    _fmt(r.latency_p99),
                    _fmt(r.latency_mean),
                    _fmt(r.throughput),
                ]
            )
    return 0


def _add_run_flags(p: argparse.ArgumentParser, *, needs_data: bool) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--seed", type=int, help="RNG seed (required)")
    p.add_argument("--out", help="output directory")
    if needs_data:
        p.add_argument("--data", dest="dataset", help="CSV path or 'synth'")
        p.add_argument("--label-col", dest="label_column", help="label column name")
        p.add_argument("--no-header", dest="has_header", action="store_false", default=None)
        p.add_argument("--n-init", dest="n_init", type=int)
        p.add_argument("--sigma", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--d", dest="D", type=int)
        p.add_argument("--lr-base", dest="lr_base", type=float)
        p.add_argument("--lr-end", dest="lr_end", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--num-pairs", dest="num_pairs", type=int)
        p.add_argument("--threshold-mode", dest="threshold_mode", choices=["quantile", "best_auc"])
        p.add_argument("--m-sigma", dest="m_sigma", type=float)
        p.add_argument("--no-adaptive", dest="no_adaptive", action="store_true")
    p.add_argument("--synth-n", dest="synth_n", type=int)
    p.add_argument("--synth-rate", dest="synth_rate", type=float)
    p.add_argument("--synth-omega1", dest="synth_omega1", type=float)
    p.add_argument("--synth-omega2", dest="synth_omega2", type=float)
    p.add_argument("--synth-noise-std", dest="synth_noise_std", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmstream",
        description="Streaming anomaly detection with Fourier-feature density matrices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="train the map, build the state, write a checkpoint")
    _add_run_flags(p_fit, needs_data=True)
    p_fit.set_defaults(func=cmd_fit)

    p_eval = sub.add_parser("eval", help="end-to-end streaming evaluation")
    _add_run_flags(p_eval, needs_data=True)
    p_eval.add_argument("--ablation", choices=["noadp", "d200"])
    p_eval.set_defaults(func=cmd_eval)

    p_grid = sub.add_parser("grid", help="parameter grid search")
    _add_run_flags(p_grid, needs_data=True)
    p_grid.add_argument("--grid", required=True, help="grid file (key=v1,v2,...)")
    p_grid.set_defaults(func=cmd_grid)

    p_synth = sub.add_parser("synth", help="write the synthetic stream as CSV")
    _add_run_flags(p_synth, needs_data=False)
    p_synth.set_defaults(func=cmd_synth)

    p_stats = sub.add_parser("stats", help="Friedman/Nemenyi tests over an AUC table")
    p_stats.add_argument("--table", required=True, help="AUC table CSV")
    p_stats.add_argument("--out", default="out")
    p_stats.set_defaults(func=cmd_stats)

    p_bench = sub.add_parser("bench", help="process-latency benchmark")
    _add_run_flags(p_bench, needs_data=True)
    p_bench.add_argument("--dims", default="250,500,1000,2000")
    p_bench.add_argument("--history", default="1000")
    p_bench.add_argument("--n-calls", dest="n_calls", default="200")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface errors with a nonzero exit code
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
