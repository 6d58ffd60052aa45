"""Gaussian kernel and its random Fourier feature embedding.

The embedding maps a point ``x`` in R^d to

    phi(x)_j = sqrt(2/D) * cos(w_j . x + b_j),    j = 1..D

with frequency rows ``w_j ~ N(0, I/sigma^2)`` and phases
``b_j ~ Uniform[0, 2*pi)``.  The inner product ``phi(x) . phi(y)`` is then
an unbiased Monte-Carlo estimate of the Gaussian kernel

    k_sigma(x, y) = exp(-||x - y||^2 / (2 sigma^2)),

so the D-dimensional dot product (not an average over it) approximates the
kernel directly.  Each embedding entry is bounded by sqrt(2/D), hence
``||phi(x)||^2 <= 2`` for every x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FeatureMap:
    """Frozen parameters of a cosine feature embedding.

    Attributes:
        w: Frequency matrix, shape (D, d).
        b: Phase offsets in radians, shape (D,).
        sigma: Bandwidth of the kernel this map approximates.

    The map is immutable after construction and safe to share across
    threads for concurrent ``embed`` calls.  Phases are stored wrapped
    into [0, 2*pi); wrapping never changes any embedding output because
    the cosine is periodic.
    """

    w: np.ndarray
    b: np.ndarray
    sigma: float

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.w, dtype=np.float64))
        b = np.ascontiguousarray(np.asarray(self.b, dtype=np.float64))
        if w.ndim != 2:
            raise ValueError(f"w must be 2-D (D, d), got shape {w.shape}")
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ValueError(f"b must have shape ({w.shape[0]},), got {b.shape}")
        if w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError("embedding and input dimensions must be >= 1")
        if not np.all(np.isfinite(w)):
            raise ValueError("w contains non-finite entries")
        if not np.all(np.isfinite(b)):
            raise ValueError("b contains non-finite entries")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        b = np.mod(b, TWO_PI)
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def embed_dim(self) -> int:
        """Output dimension D."""
        return self.w.shape[0]

    @property
    def input_dim(self) -> int:
        """Input dimension d."""
        return self.w.shape[1]


def gaussian_kernel(x, y, sigma: float):
    """Evaluate exp(-||x - y||^2 / (2 sigma^2)).

    ``x`` and ``y`` may be single vectors of shape (d,) or row-aligned
    batches of shape (n, d); batches are evaluated pairwise by row.
    Symmetric in its two arguments, with values in (0, 1].
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: x {x.shape} vs y {y.shape}")
    diff = x - y
    sq = np.sum(diff * diff, axis=-1)
    out = np.exp(-sq / (2.0 * sigma * sigma))
    return float(out) if out.ndim == 0 else out


def embed(fm: FeatureMap, x):
    """Apply the cosine embedding to one point (d,) or a batch (n, d).

    Returns shape (D,) or (n, D) respectively.  Every output entry lies
    in [-sqrt(2/D), sqrt(2/D)].
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != fm.input_dim:
        raise ValueError(
            f"input dimension mismatch: expected {fm.input_dim}, got {x.shape[-1]}"
        )
    proj = x @ fm.w.T + fm.b
    return np.sqrt(2.0 / fm.embed_dim) * np.cos(proj)


def sample_rff(d: int, D: int, sigma: float, seed: int) -> FeatureMap:
    """Draw a fresh random feature map for the Gaussian kernel.

    Frequencies are i.i.d. N(0, 1/sigma^2) per entry and phases are
    i.i.d. Uniform[0, 2*pi).  Deterministic for a fixed seed.
    """
    if d < 1 or D < 1:
        raise ValueError(f"d and D must be >= 1, got d={d}, D={D}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 1.0 / sigma, size=(D, d))
    b = rng.uniform(0.0, TWO_PI, size=D)
    return FeatureMap(w=w, b=b, sigma=sigma)
