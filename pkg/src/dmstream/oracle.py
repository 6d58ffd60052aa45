"""Brute-force reference scorers used only by the test suite.

Both functions recompute the quadratic-form density score without ever
forming the D x D matrix.  Derivation: with rho = sum_i q_i phi_i phi_i^T,

    phi(x)^T rho phi(x) = sum_i q_i phi(x)^T phi_i phi_i^T phi(x)
                        = sum_i q_i (phi(x) . phi_i)^2

and since phi(x) . phi(y) estimates k_sigma(x, y), the infinite-D limit
of the score is sum_i q_i k_sigma(x, x_i)^2 (the kernel enters squared
because the quadratic form squares the inner product).

No attention is paid to speed here: O(n * D) or O(n * d) per query is
fine, independence from the fast path is the point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureMap, embed, gaussian_kernel


@dataclass
class OracleConfig:
    """Tolerances for the oracle/engine agreement checks."""

    tolerance_abs: float = 1e-9
    max_t: int = 500

    def __post_init__(self):
        if not self.tolerance_abs > 0:
            raise ValueError("tolerance_abs must be positive")


def weighted_kde_score(train, weights, x, fm: FeatureMap) -> float:
    """sum_i q_i (phi(x) . phi(x_i))^2 by explicit loop."""
    train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[0] != train.shape[0]:
        raise ValueError(
            f"got {train.shape[0]} points but {weights.shape[0]} weights"
        )
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    phi_x = embed(fm, np.asarray(x, dtype=np.float64))
    total = 0.0
    for i in range(train.shape[0]):
        dot = float(phi_x @ embed(fm, train[i]))
        total += weights[i] * dot * dot
    return total


def exact_kernel_density(train, x, sigma: float, weights) -> float:
    """sum_i q_i k_sigma(x, x_i)^2 — the infinite-D limit of the score."""
    train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[0] != train.shape[0]:
        raise ValueError(
            f"got {train.shape[0]} points but {weights.shape[0]} weights"
        )
    x = np.asarray(x, dtype=np.float64)
    total = 0.0
    for i in range(train.shape[0]):
        k = gaussian_kernel(x, train[i], sigma)
        total += weights[i] * k * k
    return total
