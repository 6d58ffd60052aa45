"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
PASS/FAIL lines.  The full module takes roughly 10-15 minutes, dominated
by the synthetic-stream reproduction and the D=2000 training sweep.
"""

import time

import numpy as np

from dmstream import (
    DetectorParams,
    TrainConfig,
    auc_roc,
    evaluate_stream,
    fast_forward_state,
    fit,
    friedman_q,
    generate_synthetic,
    init_density,
    kernel_mse,
    kernel_mse_grad,
    load_state,
    nemenyi,
    process,
    reconstruct_weights,
    sample_pairs,
    sample_rff,
    save_state,
    train_aff,
    update_inplace,
)
from dmstream.detector import DetectorState
from dmstream.features import FeatureMap, embed, gaussian_kernel
from dmstream.oracle import weighted_kde_score
from dmstream.training import augment_training_set


def report(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance] criterion {num} ({name}): {status}{suffix}")
    assert ok, f"criterion {num} ({name}) failed{suffix}"


def blobs(seed, n=200):
    rng = np.random.default_rng(seed)
    a = rng.normal([0.3, 0.3], 0.08, size=(n // 2, 2))
    b = rng.normal([0.7, 0.7], 0.08, size=(n // 2, 2))
    return np.clip(np.concatenate([a, b]), 0.0, 1.0)


def test_criterion_1_decay_weight_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(100)
    worst_entry = 0.0
    worst_sum = 0.0
    configs = [
        (d, D, alpha)
        for d in (1, 4, 16)
        for D in (50, 200)
        for alpha in (0.01, 0.1, 0.5, 0.99)
    ]
    for case in range(50):
        d, D, alpha = configs[case % len(configs)]
        t = int(rng.integers(2, 501))
        fm = sample_rff(d, D, 1.0, seed=case)
        phis = embed(fm, rng.uniform(size=(t, d)))
        dm = init_density(phis[:1], alpha=alpha)
        for i in range(1, t):
            update_inplace(dm, phis[i], alpha)
        q = reconstruct_weights(t, alpha)
        closed = (phis * q[:, None]).T @ phis
        worst_entry = max(worst_entry, float(np.max(np.abs(dm.rho - closed))))
        worst_sum = max(worst_sum, abs(float(q.sum()) - 1.0))
    elapsed = time.perf_counter() - t0
    report(
        1,
        "decay/closed-form equivalence",
        worst_entry <= 1e-9 and worst_sum <= 1e-12 and elapsed < 60,
        f"max entry err {worst_entry:.2e}, max weight-sum err {worst_sum:.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_measurement_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(200)
    worst = 0.0
    for case in range(1000):
        d = int(rng.integers(1, 6))
        D = int(rng.integers(10, 501))
        n = int(rng.integers(1, 40))
        alpha = float(rng.uniform(0.0, 1.0))
        fm = sample_rff(d, D, float(rng.uniform(0.3, 2.0)), seed=case)
        train = rng.uniform(size=(n, d))
        dm = init_density(embed(fm, train), alpha=alpha)
        x = rng.uniform(size=d)
        fast = float(embed(fm, x) @ (dm.rho @ embed(fm, x)))
        slow = weighted_kde_score(train, reconstruct_weights(n, alpha), x, fm)
        worst = max(worst, abs(fast - slow))
    elapsed = time.perf_counter() - t0
    report(
        2,
        "measurement vs brute-force oracle",
        worst <= 1e-8 and elapsed < 60,
        f"max abs err {worst:.2e} over 1000 cases, {elapsed:.1f}s",
    )


def test_criterion_3_kernel_approximation_and_training():
    t0 = time.perf_counter()
    fm = sample_rff(3, 4096, 1.0, seed=0)
    rng = np.random.default_rng(300)
    xs = rng.uniform(size=(1000, 3))
    ys = rng.uniform(size=(1000, 3))
    mc_err = float(
        np.mean(
            np.abs(
                np.einsum("ij,ij->i", embed(fm, xs), embed(fm, ys))
                - gaussian_kernel(xs, ys, 1.0)
            )
        )
    )

    wins = 0
    for seed in range(10):
        train = blobs(seed)
        cfg = TrainConfig(lr_base=1e-3, epochs=30, batch_size=32, num_pairs=2000, seed=seed)
        fm0 = sample_rff(2, 2000, 1.0, seed)
        fm1 = train_aff(train, 1.0, 2000, cfg)
        held = sample_pairs(augment_training_set(train, seed=seed + 999), 2000, seed=seed + 12345)
        if kernel_mse(fm1, held, 1.0) < kernel_mse(fm0, held, 1.0):
            wins += 1
    elapsed = time.perf_counter() - t0
    report(
        3,
        "kernel approximation + trained-beats-untrained",
        mc_err <= 0.05 and wins == 10 and elapsed < 600,
        f"MC err {mc_err:.4f}, wins {wins}/10, {elapsed:.0f}s",
    )


def test_criterion_4_gradient_matches_finite_differences():
    h = 1e-5
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        fm = sample_rff(3, 40, 1.0, seed=seed)
        pairs = (rng.uniform(size=(50, 3)), rng.uniform(size=(50, 3)))
        _, gw, gb = kernel_mse_grad(fm, pairs, 1.0)
        w, b = np.array(fm.w), np.array(fm.b)

        def loss_at(w_mod, b_mod):
            return kernel_mse(FeatureMap(w=w_mod, b=b_mod, sigma=1.0), pairs, 1.0)

        for _ in range(10):
            i, j = rng.integers(w.shape[0]), rng.integers(w.shape[1])
            wp, wm = w.copy(), w.copy()
            wp[i, j] += h
            wm[i, j] -= h
            fd = (loss_at(wp, b) - loss_at(wm, b)) / (2 * h)
            worst = max(worst, abs(gw[i, j] - fd) / max(abs(fd), 1e-12))
            k = rng.integers(b.shape[0])
            bp, bm = b.copy(), b.copy()
            bp[k] += h
            bm[k] -= h
            fd = (loss_at(w, bp) - loss_at(w, bm)) / (2 * h)
            worst = max(worst, abs(gb[k] - fd) / max(abs(fd), 1e-12))
    report(
        4,
        "analytic gradients vs central differences",
        worst <= 1e-4,
        f"worst rel err {worst:.2e} over 5 seeds x 10 coords",
    )


def test_criterion_5_synthetic_stream_reproduction():
    # strongest reported configuration for this stream: n=64, lr_base=0.01,
    # sigma=0.1, alpha=0.04; the published headline number is 0.982 but the
    # generator recipe is underdetermined, so the gate is the 0.90 band plus
    # the full-model >= ablations ordering.
    t0 = time.perf_counter()
    records = generate_synthetic(10_000, 0.1, seed=0)

    def run(D, adaptive):
        params = DetectorParams(
            n_init=64,
            sigma=0.1,
            alpha=0.04,
            beta=0.1,
            D=D,
            adaptive=adaptive,
            train_cfg=TrainConfig(lr_base=0.01, seed=0),
        )
        return evaluate_stream(records, params).auc

    auc_full = run(2000, True)
    auc_noadp = run(2000, False)
    auc_d200 = run(200, True)
    elapsed = time.perf_counter() - t0
    report(
        5,
        "synthetic-stream AUC band and ablation ordering",
        auc_full >= 0.90
        and auc_full >= auc_noadp
        and auc_full >= auc_d200
        and elapsed < 900,
        f"full {auc_full:.4f}, noadp {auc_noadp:.4f}, d200 {auc_d200:.4f}, {elapsed:.0f}s",
    )


def _latency_state(t_target: int) -> DetectorState:
    rng = np.random.default_rng(600)
    train = rng.uniform(size=(64, 2))
    params = DetectorParams(
        n_init=64,
        sigma=0.5,
        alpha=0.05,
        beta=0.1,
        D=2000,
        adaptive=False,
        train_cfg=TrainConfig(lr_base=1e-3, seed=0),
    )
    state = fit(train, None, params)
    state.tau = -1.0  # keep every benchmark call on the full update path
    pool = rng.uniform(size=(512, 2))
    fast_forward_state(state, pool, t_target - state.records_seen)
    return state


def _median_process_latency(state, queries, reps=400):
    times = np.empty(reps)
    for i in range(reps):
        x = queries[i % queries.shape[0]]
        t0 = time.perf_counter()
        process(state, x)
        times[i] = time.perf_counter() - t0
    return float(np.median(times))


def test_criterion_6_constant_time_and_memory():
    import psutil

    rng = np.random.default_rng(601)
    queries = rng.uniform(size=(64, 2))

    state_small = _latency_state(1_000)
    state_large = _latency_state(1_000_000)
    _median_process_latency(state_small, queries, reps=50)  # warm-up
    lat_small = _median_process_latency(state_small, queries)
    lat_large = _median_process_latency(state_large, queries)
    ratio = lat_large / lat_small

    proc = psutil.Process()
    _median_process_latency(state_large, queries, reps=100)
    rss_before = proc.memory_info().rss
    _median_process_latency(state_large, queries, reps=1000)
    rss_growth = proc.memory_info().rss - rss_before

    report(
        6,
        "constant-time processing, flat memory",
        0.75 <= ratio <= 1.25 and rss_growth <= 64 * 2**20,
        f"latency ratio {ratio:.3f} "
        f"({lat_small*1e3:.2f}ms @1e3 vs {lat_large*1e3:.2f}ms @1e6), "
        f"rss growth {rss_growth/2**20:.1f}MiB over 1000 calls",
    )


def test_criterion_7_auc_pairwise_oracle():
    rng = np.random.default_rng(700)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(10, 301))
        # coarse grid of scores forces plenty of ties
        scores = rng.choice(np.linspace(0, 1, 17), size=n)
        mask = rng.uniform(size=n) < rng.uniform(0.2, 0.8)
        if not mask.any() or mask.all():
            mask[0] = True
            mask[1] = False
        labels = ["anomaly" if m else "normal" for m in mask]
        anom, norm = scores[mask], scores[~mask]
        wins = (
            (anom[:, None] > norm[None, :]).sum()
            + 0.5 * (anom[:, None] == norm[None, :]).sum()
        )
        brute = wins / (anom.size * norm.size)
        worst = max(worst, abs(auc_roc(scores, labels) - brute))
    report(7, "AUC vs O(n^2) pair count", worst <= 1e-12, f"max err {worst:.2e}")


def test_criterion_8_rank_statistics():
    strict = np.array([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [0.1, 0.5, 0.9]])
    q_strict, _ = friedman_q(strict)
    identical = np.tile([[0.5], [0.7], [0.9]], (1, 3))
    q_id, _ = friedman_q(identical)

    rng = np.random.default_rng(800)
    symmetric_ok = True
    for _ in range(20):
        m = rng.uniform(size=(rng.integers(2, 8), rng.integers(2, 6)))
        p = nemenyi(m)
        symmetric_ok &= bool(np.array_equal(p, p.T)) and bool(np.all(np.diag(p) == 1.0))
    report(
        8,
        "Friedman exact values, Nemenyi symmetry",
        q_strict == 6.0 and q_id == 0.0 and symmetric_ok,
        f"Q(strict)={q_strict}, Q(identical)={q_id}",
    )


def test_criterion_9_determinism_and_checkpoint(tmp_path):
    rng = np.random.default_rng(900)
    train = rng.uniform(0.2, 0.8, size=(64, 3))
    params = DetectorParams(
        n_init=64,
        sigma=0.5,
        alpha=0.05,
        beta=0.15,
        D=200,
        adaptive=True,
        train_cfg=TrainConfig(lr_base=1e-3, epochs=3, num_pairs=1000, seed=1),
    )
    state = fit(train, None, params)
    path = tmp_path / "ckpt.bin"
    save_state(state, path)

    stream = rng.uniform(-0.3, 1.3, size=(1000, 3))
    run_a = [process(state, x) for x in stream]

    restored = load_state(path)
    run_b = [process(restored, x) for x in stream]

    scores_equal = all(a[1] == b[1] for a, b in zip(run_a, run_b))
    labels_equal = all(a[0] == b[0] for a, b in zip(run_a, run_b))
    state_equal = np.array_equal(state.rho.rho, restored.rho.rho)
    report(
        9,
        "checkpoint restore replays bit-identically",
        scores_equal and labels_equal and state_equal,
        f"{len(stream)} records compared",
    )
