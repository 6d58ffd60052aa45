"""Evaluation metrics: AUC-ROC and rank-based multi-method tests.

``auc_roc`` uses the Mann-Whitney rank form (ties count one half), which
equals trapezoidal integration of the ROC curve.  ``friedman_q`` and
``nemenyi`` compare k methods over N datasets by per-row ranks.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import chi2, rankdata, studentized_range

from .data import ANOMALY
from .errors import DegenerateLabelsError


def _anomaly_mask(labels) -> np.ndarray:
    labels = np.asarray(labels)
    mask = labels == ANOMALY
    n_anom = int(mask.sum())
    if n_anom == 0 or n_anom == labels.shape[0]:
        raise DegenerateLabelsError("need both normal and anomaly labels")
    return mask


def auc_roc(scores, labels) -> float:
    """Probability a random anomaly outscores a random normal record.

    ``scores`` must be oriented so that higher means more anomalous.
    Tied score pairs count one half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    mask = _anomaly_mask(labels)
    if scores.shape[0] != mask.shape[0]:
        raise ValueError("scores and labels must have equal length")
    n_anom = int(mask.sum())
    n_norm = scores.shape[0] - n_anom
    ranks = rankdata(scores)
    u = ranks[mask].sum() - n_anom * (n_anom + 1) / 2.0
    return float(u / (n_anom * n_norm))


def roc_points(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """ROC curve vertices (fpr, tpr), one per distinct score cut.

    Anomaly is the positive class and higher score means more anomalous.
    Includes the (0, 0) and (1, 1) endpoints; suitable for plotting or
    trapezoidal integration.
    """
    scores = np.asarray(scores, dtype=np.float64)
    mask = _anomaly_mask(labels)
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = mask[order].astype(np.float64)
    # collapse tied scores onto one vertex
    distinct = np.nonzero(np.diff(sorted_scores))[0]
    cut_idx = np.concatenate([distinct, [scores.shape[0] - 1]])
    tp = np.cumsum(sorted_pos)[cut_idx]
    fp = (cut_idx + 1) - tp
    tpr = np.concatenate([[0.0], tp / mask.sum()])
    fpr = np.concatenate([[0.0], fp / (mask.shape[0] - mask.sum())])
    return fpr, tpr


def friedman_q(auc_matrix) -> tuple[float, float]:
    """Friedman rank statistic over an N x k score matrix.

    Rows are datasets, columns are methods; ties get average ranks.
    With column rank sums R_j,

        Q = [12 / (N k (k+1))] * sum_j R_j^2  -  3 N (k+1)

    and the p-value is the chi-square upper tail with k-1 degrees of
    freedom.  Missing cells are rejected; drop incomplete rows first.
    """
    m = np.asarray(auc_matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 2:
        raise ValueError(f"need an N>=2 by k>=2 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains missing or non-finite cells")
    n, k = m.shape
    ranks = np.apply_along_axis(rankdata, 1, m)
    col_sums = ranks.sum(axis=0)
    # multiply before dividing: exact for integer-valued rank sums
    q = 12.0 * np.sum(col_sums**2) / (n * k * (k + 1)) - 3.0 * n * (k + 1)
    p = float(chi2.sf(q, k - 1))
    return float(q), p


def nemenyi(auc_matrix) -> np.ndarray:
    """Pairwise post-hoc p-values for all method pairs.

    Mean-rank differences are referred to the studentized range
    distribution with k groups and infinite degrees of freedom.  Returns
    a symmetric k x k matrix with unit diagonal; small values mean the
    pair differs.
    """
    m = np.asarray(auc_matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 2:
        raise ValueError(f"need an N>=2 by k>=2 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains missing or non-finite cells")
    n, k = m.shape
    mean_ranks = np.apply_along_axis(rankdata, 1, m).mean(axis=0)
    scale = np.sqrt(k * (k + 1) / (6.0 * n))
    diffs = np.abs(mean_ranks[:, None] - mean_ranks[None, :])
    stats = diffs / scale * np.sqrt(2.0)
    p = studentized_range.sf(stats, k, np.inf)
    np.fill_diagonal(p, 1.0)
    # sf(0) == 1 off-diagonal too; clip fp noise and enforce exact symmetry
    p = np.clip(p, 0.0, 1.0)
    return (p + p.T) / 2.0
