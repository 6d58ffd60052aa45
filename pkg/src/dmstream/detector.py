"""The streaming detector: initialization fit and per-record processing.

Fit consumes the first ``n_init`` records: it trains (or just samples)
the feature map, absorbs the window into the density matrix with the
exponential-decay recurrence while recording each point's density score,
and fixes the anomaly threshold tau from those scores.  After fit, each
arriving record is scored once; records at or above tau are normal and
are absorbed into the state, records below tau are flagged and leave the
state untouched.  tau never drifts after fit and the feature map is
never retrained.

Per-record work is O(dD + D^2) and the memory footprint is O(D^2 + dD),
both independent of how many records have streamed past.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import ANOMALY, NORMAL
from .density import DensityMatrix, measure, update_inplace
from .errors import DegenerateLabelsError
from .features import FeatureMap, embed, sample_rff
from .training import TrainConfig, train_aff


@dataclass
class DetectorParams:
    """Everything needed to fit a detector.

    Attributes:
        n_init: Size of the initialization window.
        sigma: Kernel bandwidth.
        alpha: Decay rate of the density update, in [0, 1].
        beta: Assumed anomaly proportion for the quantile threshold.
        D: Embedding dimension.
        threshold_mode: "quantile" (uses beta) or "best_auc" (needs labels).
        train_cfg: Feature-map training hyperparameters.
        adaptive: False skips gradient refinement and uses the raw
            random features.
        m_sigma: Normalization constant of the density score.  Scores and
            tau scale together, so any positive value yields identical
            decisions; it is configurable for calibrated densities.
    """

    n_init: int
    sigma: float
    alpha: float
    beta: float = 0.1
    D: int = 2000
    threshold_mode: str = "quantile"
    train_cfg: TrainConfig = field(default_factory=lambda: TrainConfig(lr_base=1e-3))
    adaptive: bool = True
    m_sigma: float = 1.0

    def __post_init__(self):
        if self.n_init < 2:
            raise ValueError(f"n_init must be >= 2, got {self.n_init}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")
        if self.D < 1:
            raise ValueError(f"D must be >= 1, got {self.D}")
        if self.threshold_mode not in ("quantile", "best_auc"):
            raise ValueError(f"unknown threshold_mode {self.threshold_mode!r}")
        if not self.m_sigma > 0:
            raise ValueError(f"m_sigma must be positive, got {self.m_sigma}")


@dataclass
class DetectorState:
    """Mutable state of a fitted detector.

    Single-writer: ``process`` mutates the density matrix on the normal
    branch.  Concurrent read-only scoring should go through
    :func:`score_only` against a quiescent state.
    """

    fm: FeatureMap
    rho: DensityMatrix
    tau: float
    alpha: float
    m_sigma: float
    records_seen: int = 0
    anomalies_flagged: int = 0

    def __post_init__(self):
        if self.fm.embed_dim != self.rho.dim:
            raise ValueError(
                f"feature map D={self.fm.embed_dim} but rho is {self.rho.dim}x{self.rho.dim}"
            )
        if not np.isfinite(self.tau):
            raise ValueError(f"tau must be finite, got {self.tau}")
        if self.anomalies_flagged > self.records_seen:
            raise ValueError("anomalies_flagged exceeds records_seen")


def threshold_by_quantile(scores, beta: float) -> float:
    """Empirical beta-quantile of the init scores (linear interpolation).

    Roughly a fraction beta of the scores falls strictly below the
    returned cut, so the lowest-density beta of the window would be
    flagged.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("scores list is empty")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    return float(np.quantile(scores, beta))


def threshold_by_auc(scores, labels) -> float:
    """Score cut maximizing balanced accuracy on the labeled init window.

    Scores are densities (higher = more normal); a record is predicted
    normal when its score >= tau.  Candidate cuts are midpoints between
    adjacent distinct scores plus the two all-normal / all-anomaly
    extremes; ties break toward the larger tau (flags more records).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape[0] != labels.shape[0]:
        raise ValueError("scores and labels must have equal length")
    is_anom = labels == ANOMALY
    n_anom = int(is_anom.sum())
    n_norm = scores.shape[0] - n_anom
    if n_anom == 0 or n_norm == 0:
        raise DegenerateLabelsError("both classes are required to pick a threshold")

    uniq = np.unique(scores)
    if uniq.size > 1:
        mids = (uniq[:-1] + uniq[1:]) / 2.0
        gap = (uniq[-1] - uniq[0]) / 2.0
    else:
        mids = np.empty(0)
        gap = max(abs(uniq[0]), 1.0)
    candidates = np.concatenate([[uniq[0]], mids, [uniq[-1] + gap]])

    best_tau = candidates[0]
    best_ba = -1.0
    for tau in candidates:
        flagged = scores < tau
        sens = np.count_nonzero(flagged & is_anom) / n_anom
        spec = np.count_nonzero(~flagged & ~is_anom) / n_norm
        ba = 0.5 * (sens + spec)
        if ba > best_ba or (ba == best_ba and tau > best_tau):
            best_ba = ba
            best_tau = tau
    return float(best_tau)


def fit(train, labels, params: DetectorParams, log_fn=None) -> DetectorState:
    """Run the initialization pass and assemble a detector state.

    ``train`` must hold exactly ``params.n_init`` rows, normalized into
    [0, 1]^d by the caller.  ``labels`` is required only for the
    best_auc threshold mode.  ``log_fn`` is forwarded to the feature-map
    trainer for per-epoch loss logging.
    """
    train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    n = train.shape[0]
    if n != params.n_init:
        raise ValueError(f"expected n_init={params.n_init} rows, got {n}")
    if params.threshold_mode == "best_auc" and labels is None:
        raise ValueError("threshold_mode='best_auc' requires labels")

    if params.adaptive:
        fm = train_aff(train, params.sigma, params.D, params.train_cfg, log_fn=log_fn)
    else:
        fm = sample_rff(train.shape[1], params.D, params.sigma, params.train_cfg.seed)

    phis = embed(fm, train)
    rho = np.outer(phis[0], phis[0])
    scores = np.empty(n, dtype=np.float64)
    scores[0] = phis[0] @ (rho @ phis[0]) / params.m_sigma
    for i in range(1, n):
        rho *= 1.0 - params.alpha
        rho += params.alpha * np.outer(phis[i], phis[i])
        scores[i] = phis[i] @ (rho @ phis[i]) / params.m_sigma

    if params.threshold_mode == "quantile":
        tau = threshold_by_quantile(scores, params.beta)
    else:
        tau = threshold_by_auc(scores, labels)

    return DetectorState(
        fm=fm,
        rho=DensityMatrix(rho=rho, t=n),
        tau=tau,
        alpha=params.alpha,
        m_sigma=params.m_sigma,
        records_seen=n,
        anomalies_flagged=0,
    )


def score_only(state: DetectorState, x) -> float:
    """Density score of ``x`` against the current state; never mutates."""
    phi = embed(state.fm, _check_input(state, x))
    return measure(state.rho, phi, state.m_sigma)


def process(state: DetectorState, x) -> tuple[str, float]:
    """Classify one record and absorb it if normal.

    Returns ``(label, score)``.  The state is mutated in place: normal
    records update the density matrix via the decay blend, anomalies
    leave it bitwise untouched.  On a bad input the state is never
    mutated.  Work is O(dD + D^2) regardless of stream position.
    """
    x = _check_input(state, x)
    phi = embed(state.fm, x)
    score = measure(state.rho, phi, state.m_sigma)
    if score >= state.tau:
        label = NORMAL
        update_inplace(state.rho, phi, state.alpha)
    else:
        label = ANOMALY
        state.anomalies_flagged += 1
    state.records_seen += 1
    return label, score


def _check_input(state: DetectorState, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.fm.input_dim,):
        raise ValueError(
            f"record must have shape ({state.fm.input_dim},), got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("record contains non-finite features")
    return x
