"""Gradient refinement of the feature map against the exact kernel.

Starting from a randomly sampled map, mini-batch gradient descent shrinks
the squared error between the embedding inner product and the Gaussian
kernel over a fixed set of point pairs.  The training set is first padded
with uniform draws from [-0.5, 1.5]^d so the map stays accurate for
future points that leave the normalized [0, 1]^d box: small sets
(< 1000 rows) are grown to 10,000 rows, larger ones are doubled.

Gradients pass through the cosine analytically.  With
u_i = w_m . x_i + b_m and z = (2/D) sum_m cos(u_i) cos(u_j), the per-pair
loss (k - z)^2 has

    dL/db_m  = (4/D) (k - z) [sin(u_i) cos(u_j) + cos(u_i) sin(u_j)]
    dL/dw_m  = (4/D) (k - z) [sin(u_i) cos(u_j) x_i + cos(u_i) sin(u_j) x_j]

The learning rate follows a power-1 polynomial decay from ``lr_base``
down to ``lr_end`` over the total step count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import TrainingDivergedError
from .features import FeatureMap, gaussian_kernel, sample_rff

AUGMENT_LOW = -0.5
AUGMENT_HIGH = 1.5
SMALL_TRAIN_LIMIT = 1000
SMALL_TRAIN_TARGET = 10_000


@dataclass
class TrainConfig:
    """Hyperparameters of the feature-map refinement.

    Attributes:
        lr_base: Initial learning rate.  Zero disables all updates and
            returns the random initialization untouched.
        lr_end: Final learning rate of the polynomial decay.
        epochs: Passes over the fixed pair set.
        batch_size: Pairs per gradient step.
        num_pairs: Size of the training pair set; ``None`` picks
            min(100_000, augmented_size^2 // 10).
        seed: Seeds the map initialization, augmentation sampling, pair
            sampling, and epoch shuffles.
    """

    lr_base: float
    lr_end: float = 1e-7
    epochs: int = 10
    batch_size: int = 256
    num_pairs: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.lr_end > 0:
            raise ValueError(f"lr_end must be positive, got {self.lr_end}")
        # lr_base == 0 is the zero-step debugging mode; otherwise the decay
        # needs lr_base >= lr_end.
        if self.lr_base != 0 and self.lr_base < self.lr_end:
            raise ValueError(
                f"lr_base must be >= lr_end (or exactly 0), got "
                f"lr_base={self.lr_base}, lr_end={self.lr_end}"
            )
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.num_pairs is not None and self.num_pairs < 1:
            raise ValueError(f"num_pairs must be >= 1, got {self.num_pairs}")


def augment_training_set(train, seed: int) -> np.ndarray:
    """Pad a training set with uniform draws from [-0.5, 1.5]^d.

    Sets with fewer than 1000 rows are grown to 10,000 rows; anything
    larger is doubled.  The original rows are preserved, in order, as the
    prefix of the result.
    """
    train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    n = train.shape[0]
    if n == 0:
        raise ValueError("training set is empty")
    d = train.shape[1]
    n_extra = SMALL_TRAIN_TARGET - n if n < SMALL_TRAIN_LIMIT else n
    rng = np.random.default_rng(seed)
    extra = rng.uniform(AUGMENT_LOW, AUGMENT_HIGH, size=(n_extra, d))
    return np.concatenate([train, extra], axis=0)


def sample_pairs(data, num_pairs: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``num_pairs`` point pairs uniformly with replacement.

    Returns two row-aligned arrays of shape (num_pairs, d); pair ``k`` is
    ``(left[k], right[k])``.  Pairs may repeat.  Deterministic per seed.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] < 2:
        raise ValueError(f"need at least 2 rows to form pairs, got {data.shape[0]}")
    if num_pairs < 1:
        raise ValueError(f"num_pairs must be >= 1, got {num_pairs}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, data.shape[0], size=(2, num_pairs))
    return data[idx[0]], data[idx[1]]


def _pair_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    """Accept (left, right) arrays or a list of (x, y) tuples."""
    if isinstance(pairs, tuple) and len(pairs) == 2:
        left = np.atleast_2d(np.asarray(pairs[0], dtype=np.float64))
        right = np.atleast_2d(np.asarray(pairs[1], dtype=np.float64))
    else:
        pairs = list(pairs)
        if len(pairs) == 0:
            raise ValueError("pair list is empty")
        left = np.atleast_2d(np.asarray([p[0] for p in pairs], dtype=np.float64))
        right = np.atleast_2d(np.asarray([p[1] for p in pairs], dtype=np.float64))
    if left.shape != right.shape:
        raise ValueError(f"pair sides disagree: {left.shape} vs {right.shape}")
    if left.shape[0] == 0:
        raise ValueError("pair list is empty")
    return left, right


def kernel_mse(fm: FeatureMap, pairs, sigma: float) -> float:
    """Mean squared kernel-approximation error over a pair set.

    Computes (1/m) sum over pairs of
    (k_sigma(x_i, x_j) - phi(x_i) . phi(x_j))^2.
    """
    left, right = _pair_arrays(pairs)
    loss, _, _ = _loss_and_grads(fm.w, fm.b, left, right, sigma, want_grads=False)
    return loss


def kernel_mse_grad(fm: FeatureMap, pairs, sigma: float):
    """Loss plus analytic gradients of ``kernel_mse`` w.r.t. w and b.

    Returns ``(loss, grad_w, grad_b)`` with shapes matching ``fm.w`` and
    ``fm.b``.
    """
    left, right = _pair_arrays(pairs)
    return _loss_and_grads(fm.w, fm.b, left, right, sigma, want_grads=True)


def _loss_and_grads(w, b, left, right, sigma, want_grads):
    D = w.shape[0]
    u_l = left @ w.T + b
    u_r = right @ w.T + b
    cos_l = np.cos(u_l)
    cos_r = np.cos(u_r)
    approx = (2.0 / D) * np.einsum("ij,ij->i", cos_l, cos_r)
    resid = gaussian_kernel(left, right, sigma) - approx
    loss = float(np.mean(resid * resid))
    if not want_grads:
        return loss, None, None
    m = left.shape[0]
    sin_l = np.sin(u_l)
    sin_r = np.sin(u_r)
    g_l = resid[:, None] * (sin_l * cos_r)  # (m, D)
    g_r = resid[:, None] * (cos_l * sin_r)
    scale = 4.0 / (D * m)
    grad_b = scale * (g_l + g_r).sum(axis=0)
    grad_w = scale * (g_l.T @ left + g_r.T @ right)
    return loss, grad_w, grad_b


def _lr_schedule(step: int, total_steps: int, lr_base: float, lr_end: float) -> float:
    frac = step / total_steps if total_steps > 0 else 1.0
    return (lr_base - lr_end) * (1.0 - frac) + lr_end


def train_aff(
    train,
    sigma: float,
    D: int,
    cfg: TrainConfig,
    log_fn: Callable[[int, float], None] | None = None,
) -> FeatureMap:
    """Refine a random feature map by mini-batch gradient descent.

    Starts from ``sample_rff(d, D, sigma, cfg.seed)``, augments the
    training set, fixes one pair set for all epochs, and descends the
    squared kernel-approximation error.  ``log_fn(epoch, loss)`` is
    called with the full-pair-set loss before training (epoch 0) and
    after each epoch.

    Deterministic for identical inputs.  Raises
    :class:`TrainingDivergedError` if the loss goes non-finite.
    """
    train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    if train.shape[0] == 0:
        raise ValueError("training set is empty")
    d = train.shape[1]
    fm0 = sample_rff(d, D, sigma, cfg.seed)

    seeds = np.random.SeedSequence(cfg.seed).generate_state(3)
    data = augment_training_set(train, seed=int(seeds[0]))
    num_pairs = cfg.num_pairs
    if num_pairs is None:
        num_pairs = min(100_000, (data.shape[0] ** 2) // 10)
    left, right = sample_pairs(data, num_pairs, seed=int(seeds[1]))

    w = np.array(fm0.w)
    b = np.array(fm0.b)
    if cfg.lr_base == 0:
        return fm0

    shuffle_rng = np.random.default_rng(int(seeds[2]))
    n_batches = int(np.ceil(num_pairs / cfg.batch_size))
    total_steps = cfg.epochs * n_batches

    if log_fn is not None:
        loss0, _, _ = _loss_and_grads(w, b, left, right, sigma, want_grads=False)
        log_fn(0, loss0)

    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(num_pairs)
        for k in range(n_batches):
            batch = order[k * cfg.batch_size : (k + 1) * cfg.batch_size]
            loss, gw, gb = _loss_and_grads(
                w, b, left[batch], right[batch], sigma, want_grads=True
            )
            if not np.isfinite(loss):
                raise TrainingDivergedError(step)
            lr = _lr_schedule(step, total_steps, cfg.lr_base, cfg.lr_end)
            w -= lr * gw
            b -= lr * gb
            step += 1
        if log_fn is not None:
            loss, _, _ = _loss_and_grads(w, b, left, right, sigma, want_grads=False)
            log_fn(epoch, loss)

    if not np.all(np.isfinite(w)) or not np.all(np.isfinite(b)):
        raise TrainingDivergedError(step)
    return FeatureMap(w=w, b=b, sigma=sigma)
