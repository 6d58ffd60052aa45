"""Streaming evaluation, parameter grid search, and throughput benchmarks.

``evaluate_stream`` runs the full protocol on one labeled stream: fit on
the first ``n_init`` records (min-max normalization is fitted on that
window only and applied to the whole stream), push the remainder through
the detector one record at a time, and report AUC over the streamed part
with the score negated so that higher means more anomalous.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, replace

import numpy as np

from .data import normalize_minmax, records_to_arrays
from .density import DensityMatrix
from .detector import DetectorParams, DetectorState, fit, process
from .features import embed
from .metrics import auc_roc

# Default search sets for the four searched parameters.  The n_init set is
# filtered to sizes the dataset can actually supply.
DEFAULT_N_INIT_GRID = (64, 128, 256, 512, 1000, 2000, 2048, 5000)
DEFAULT_LR_BASE_GRID = (1e-2, 1e-3, 1e-4)


@dataclass
class EvalReport:
    """Outcome of one streaming evaluation.

    ``per_record_scores`` holds one (index, score, pred_label,
    true_label) tuple per streamed (post-init) record, in arrival order.
    ``throughput`` is records/second over the streaming phase only and is
    the one field that varies across reruns.
    """

    auc: float
    n_scored: int
    n_flagged: int
    throughput: float
    per_record_scores: list

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc must be in [0, 1], got {self.auc}")


def evaluate_stream(records, params: DetectorParams) -> EvalReport:
    """Fit on the init window, stream the rest, report AUC and throughput.

    AUC is computed over post-init records only, using -score as the
    anomaly direction (low density = more anomalous).  Deterministic for
    fixed inputs apart from the throughput field.
    """
    if len(records) <= params.n_init:
        raise ValueError(
            f"stream has {len(records)} records, need more than n_init={params.n_init}"
        )
    normalized, _ = normalize_minmax(records, range(params.n_init))
    feats, labels = records_to_arrays(normalized)
    init_labels = labels[: params.n_init]
    state = fit(feats[: params.n_init], init_labels, params)

    rest = feats[params.n_init :]
    rest_labels = labels[params.n_init :]
    scores = np.empty(rest.shape[0], dtype=np.float64)
    preds: list[str] = []
    t0 = time.perf_counter()
    for i in range(rest.shape[0]):
        label, score = process(state, rest[i])
        scores[i] = score
        preds.append(label)
    elapsed = time.perf_counter() - t0

    auc = auc_roc(-scores, rest_labels)
    per_record = [
        (records[params.n_init + i].index, float(scores[i]), preds[i], rest_labels[i])
        for i in range(rest.shape[0])
    ]
    return EvalReport(
        auc=auc,
        n_scored=rest.shape[0],
        n_flagged=state.anomalies_flagged,
        throughput=rest.shape[0] / elapsed if elapsed > 0 else float("inf"),
        per_record_scores=per_record,
    )


def grid_search(records, grid: dict, base_params: DetectorParams, on_result=None, skip=None):
    """Evaluate every combination of the searched parameters.

    ``grid`` maps any of {"n_init", "lr_base", "sigma", "alpha"} to a list
    of values; missing keys use the value in ``base_params``.  Returns
    ``(best_params, results)`` where results rows are dicts with the four
    searched values plus "auc".  Best is the argmax AUC, ties broken by
    smaller n_init then smaller alpha.  ``on_result(row)`` fires after
    each evaluation; combinations listed in ``skip`` (as (n_init,
    lr_base, sigma, alpha) tuples) are not re-evaluated, which lets a
    caller resume an interrupted search.
    """
    if not grid:
        raise ValueError("grid is empty")
    unknown = set(grid) - {"n_init", "lr_base", "sigma", "alpha"}
    if unknown:
        raise ValueError(f"unknown grid keys: {sorted(unknown)}")
    n_init_vals = list(grid.get("n_init", [base_params.n_init]))
    lr_vals = list(grid.get("lr_base", [base_params.train_cfg.lr_base]))
    sigma_vals = list(grid.get("sigma", [base_params.sigma]))
    alpha_vals = list(grid.get("alpha", [base_params.alpha]))
    skip = skip or set()

    results = []
    for n_init, lr, sigma, alpha in itertools.product(
        n_init_vals, lr_vals, sigma_vals, alpha_vals
    ):
        if (n_init, lr, sigma, alpha) in skip:
            continue
        params = replace(
            base_params,
            n_init=n_init,
            sigma=sigma,
            alpha=alpha,
            train_cfg=replace(base_params.train_cfg, lr_base=lr),
        )
        report = evaluate_stream(records, params)
        row = {
            "n_init": n_init,
            "lr_base": lr,
            "sigma": sigma,
            "alpha": alpha,
            "auc": report.auc,
        }
        results.append(row)
        if on_result is not None:
            on_result(row)
    if not results:
        raise ValueError("grid produced no evaluations (everything skipped?)")
    best = max(results, key=lambda r: (r["auc"], -r["n_init"], -r["alpha"]))
    best_params = replace(
        base_params,
        n_init=best["n_init"],
        sigma=best["sigma"],
        alpha=best["alpha"],
        train_cfg=replace(base_params.train_cfg, lr_base=best["lr_base"]),
    )
    return best_params, results


def filter_n_init_grid(values, n_records: int) -> list[int]:
    """Drop init sizes the dataset cannot supply (need n_init < records)."""
    return [v for v in values if v < n_records]


@dataclass
class BenchReport:
    """Per-call latency statistics for the processing hot path."""

    n_calls: int
    latency_p50: float
    latency_p90: float
    latency_p99: float
    latency_mean: float
    throughput: float


def bench_scoring(state: DetectorState, batch, repetitions: int = 1) -> BenchReport:
    """Time individual ``process`` calls against a copy of ``state``.

    Each repetition replays the batch against a fresh copy so the
    caller's state is untouched.  Latencies are per-call seconds.
    """
    feats = np.atleast_2d(np.asarray(
        [r.features for r in batch] if hasattr(batch[0], "features") else batch,
        dtype=np.float64,
    ))
    if feats.shape[0] == 0:
        raise ValueError("batch is empty")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    latencies = []
    total = 0.0
    for _ in range(repetitions):
        work = DetectorState(
            fm=state.fm,
            rho=state.rho.copy(),
            tau=state.tau,
            alpha=state.alpha,
            m_sigma=state.m_sigma,
            records_seen=state.records_seen,
            anomalies_flagged=state.anomalies_flagged,
        )
        for i in range(feats.shape[0]):
            t0 = time.perf_counter()
            process(work, feats[i])
            dt = time.perf_counter() - t0
            latencies.append(dt)
            total += dt
    lat = np.asarray(latencies)
    return BenchReport(
        n_calls=lat.size,
        latency_p50=float(np.quantile(lat, 0.5)),
        latency_p90=float(np.quantile(lat, 0.9)),
        latency_p99=float(np.quantile(lat, 0.99)),
        latency_mean=float(lat.mean()),
        throughput=lat.size / total if total > 0 else float("inf"),
    )


def fast_forward_state(state: DetectorState, pool, count: int) -> None:
    """Advance ``state`` as if ``count`` normal records were absorbed.

    Cycles through the rows of ``pool`` and applies, in closed form, the
    exact result of ``count`` sequential decay updates:

        rho <- (1-a)^count * rho + sum_j a (1-a)^(count-j) phi_j phi_j^T

    grouped per pool row, which costs one (D x P) x (P x D) product
    instead of ``count`` rank-one blends.  Used by benchmarks to build
    long-history states; equals the sequential result up to float
    rounding.  Mutates ``state`` in place.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if count == 0:
        return
    pool = np.atleast_2d(np.asarray(pool, dtype=np.float64))
    phis = embed(state.fm, pool)
    p = phis.shape[0]
    alpha = state.alpha
    # weight of the record absorbed at step j (1-based) after count steps
    step_weights = alpha * (1.0 - alpha) ** np.arange(count - 1, -1, -1, dtype=np.float64)
    pool_idx = np.arange(count) % p
    coeffs = np.bincount(pool_idx, weights=step_weights, minlength=p)
    rho = (1.0 - alpha) ** count * state.rho.rho
    rho += phis.T @ (coeffs[:, None] * phis)
    state.rho = DensityMatrix(rho=rho, t=state.rho.t + count)
    state.records_seen += count
