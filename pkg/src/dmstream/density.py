"""Density-matrix state: build, score, and decay-update.

The state is a D x D symmetric positive-semidefinite matrix ``rho`` equal
to a convex combination of rank-one embedding outer products,

    rho = sum_i q_i phi(x_i) phi(x_i)^T,    sum_i q_i = 1.

Scoring a query is the quadratic form phi(x)^T rho phi(x) divided by a
normalization constant; by linearity it expands to
sum_i q_i (phi(x) . phi(x_i))^2, which is what the brute-force oracle in
:mod:`dmstream.oracle` recomputes.

Streaming absorption is the exponential-decay blend
rho <- (1 - alpha) rho + alpha phi phi^T.  Starting from
rho_1 = phi_1 phi_1^T, the weights after t points are

    q_1 = (1 - alpha)^(t-1),    q_i = alpha (1 - alpha)^(t-i),  i = 2..t

which always sum to one (`reconstruct_weights` returns them in closed
form, and the tests verify the iterated update against the summed form).
Old points lose weight geometrically, so the state behaves as an
exponential moving average over densities; each update costs O(D^2)
regardless of how many points were absorbed.

Concurrency: ``measure`` is a pure read, ``update`` writes.  Any number
of concurrent readers is safe, or a single writer; interleaving a read
with a write yields torn state unless the caller serializes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PSDViolationError

PSD_SLACK = -1e-10


@dataclass
class DensityMatrix:
    """A streamed density state.

    Attributes:
        rho: Symmetric PSD matrix of shape (D, D) with trace <= 2.
        t: Number of points absorbed so far.
    """

    rho: np.ndarray
    t: int

    def __post_init__(self):
        rho = np.ascontiguousarray(np.asarray(self.rho, dtype=np.float64))
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"rho must be square, got shape {rho.shape}")
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")
        self.rho = rho

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(rho=self.rho.copy(), t=self.t)


def init_density(embeddings, alpha: float, mode: str = "exponential") -> DensityMatrix:
    """Build a density matrix from a block of embeddings.

    ``exponential`` seeds rho with the first outer product and then applies
    the decay recurrence for the remaining points, matching what the
    streaming detector does during its initialization pass.  ``uniform``
    weights every point equally: rho = (1/n) sum phi phi^T.
    """
    phis = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    n = phis.shape[0]
    if n == 0:
        raise ValueError("embeddings list is empty")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if mode == "uniform":
        rho = phis.T @ phis / n
    elif mode == "exponential":
        rho = np.outer(phis[0], phis[0])
        for i in range(1, n):
            rho *= 1.0 - alpha
            rho += alpha * np.outer(phis[i], phis[i])
    else:
        raise ValueError(f"unknown mode {mode!r}, expected 'exponential' or 'uniform'")
    return DensityMatrix(rho=rho, t=n)


def measure(dm: DensityMatrix, phi_x: np.ndarray, m_sigma: float = 1.0) -> float:
    """Score a query embedding: (phi^T rho phi) / m_sigma.

    The quadratic form is nonnegative for PSD state; values in
    [-1e-10, 0) are rounding noise and clamp to 0, anything lower raises
    :class:`PSDViolationError` because it signals corrupted state.
    """
    if not m_sigma > 0:
        raise ValueError(f"m_sigma must be positive, got {m_sigma}")
    phi_x = np.asarray(phi_x, dtype=np.float64)
    if phi_x.shape != (dm.dim,):
        raise ValueError(f"query embedding must have shape ({dm.dim},), got {phi_x.shape}")
    q = float(phi_x @ (dm.rho @ phi_x))
    if q < PSD_SLACK:
        raise PSDViolationError(f"quadratic form is {q}, below slack {PSD_SLACK}")
    if q < 0.0:
        q = 0.0
    return q / m_sigma


def update(dm: DensityMatrix, phi_x: np.ndarray, alpha: float) -> DensityMatrix:
    """Absorb one embedding: rho <- (1 - alpha) rho + alpha phi phi^T.

    Returns a new state with ``t`` incremented; the input is untouched.
    Convex combinations of PSD matrices stay PSD, and the work is O(D^2)
    independent of t.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    phi_x = np.asarray(phi_x, dtype=np.float64)
    if phi_x.shape != (dm.dim,):
        raise ValueError(f"embedding must have shape ({dm.dim},), got {phi_x.shape}")
    rho = (1.0 - alpha) * dm.rho
    rho += alpha * np.outer(phi_x, phi_x)
    return DensityMatrix(rho=rho, t=dm.t + 1)


def update_inplace(dm: DensityMatrix, phi_x: np.ndarray, alpha: float) -> None:
    """Same blend as :func:`update` but mutating ``dm`` (streaming path)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    dm.rho *= 1.0 - alpha
    dm.rho += alpha * np.outer(phi_x, phi_x)
    dm.t += 1


def reconstruct_weights(t: int, alpha: float) -> np.ndarray:
    """Closed-form point weights after t exponential-decay updates.

    Returns q of length t with q[0] = (1-alpha)^(t-1) and
    q[i] = alpha (1-alpha)^(t-1-i) for i >= 1, consistent with the
    rho_1 = phi_1 phi_1^T base case.  The weights sum to 1 exactly in
    exact arithmetic.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    decay = 1.0 - alpha
    q = np.empty(t, dtype=np.float64)
    q[0] = decay ** (t - 1)
    if t > 1:
        q[1:] = alpha * decay ** (t - 1 - np.arange(1, t, dtype=np.float64))
    return q
