"""Stream ingestion: CSV loading, min-max normalization, synthetic data.

Records carry their arrival order, a feature vector, and an optional
ground-truth label ("normal" / "anomaly").  CSV label columns use the
0 = normal, 1 = anomaly convention.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import CsvParseError

NORMAL = "normal"
ANOMALY = "anomaly"


@dataclass
class StreamRecord:
    """One stream element: features, optional label, arrival index."""

    features: np.ndarray
    label: str | None
    index: int


@dataclass
class MinMaxTransform:
    """Per-feature affine map fitted on a window of the stream.

    ``apply`` sends the fit window into [0, 1] per feature and extends
    affinely outside it (later records may leave [0, 1]).  Constant
    features map to 0.5 everywhere and invert back to their constant
    value, so inversion is exact only for non-constant features.
    """

    mins: np.ndarray
    maxs: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        span = self.maxs - self.mins
        out = np.where(span > 0, (x - self.mins) / np.where(span > 0, span, 1.0), 0.5)
        return out

    def invert(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        span = self.maxs - self.mins
        return np.where(span > 0, x * span + self.mins, self.mins)


def records_to_arrays(records) -> tuple[np.ndarray, list]:
    """Stack record features into an (n, d) array plus the label list."""
    feats = np.stack([np.asarray(r.features, dtype=np.float64) for r in records])
    labels = [r.label for r in records]
    return feats, labels


def load_csv(path, label_column=None, has_header: bool = True) -> list[StreamRecord]:
    """Parse a numeric CSV into stream records, in file order.

    ``label_column`` may be a header name (requires a header) or a
    0-based column index; its cells must be 0 (normal) or 1 (anomaly).
    Ragged rows, non-numeric or non-finite feature cells, and unknown
    label values raise :class:`CsvParseError` with the offending
    1-based line number.
    """
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        label_idx = None
        arity = None
        data_row = 0
        for line_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if has_header and header is None:
                header = [c.strip() for c in row]
                arity = len(header)
                if label_column is not None:
                    if isinstance(label_column, str):
                        if label_column not in header:
                            raise CsvParseError(
                                line_no, f"label column {label_column!r} not in header"
                            )
                        label_idx = header.index(label_column)
                    else:
                        label_idx = int(label_column)
                continue
            if arity is None:
                arity = len(row)
                if label_column is not None:
                    if isinstance(label_column, str):
                        raise CsvParseError(
                            line_no, "label column by name requires a header"
                        )
                    label_idx = int(label_column)
            if len(row) != arity:
                raise CsvParseError(
                    line_no, f"expected {arity} columns, got {len(row)}"
                )
            label = None
            feats = []
            for j, cell in enumerate(row):
                if j == label_idx:
                    label = _parse_label(cell, line_no)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvParseError(
                        line_no, f"non-numeric feature cell {cell!r}"
                    ) from None
                if not np.isfinite(v):
                    raise CsvParseError(line_no, f"non-finite feature cell {cell!r}")
                feats.append(v)
            records.append(
                StreamRecord(
                    features=np.asarray(feats, dtype=np.float64),
                    label=label,
                    index=data_row,
                )
            )
            data_row += 1
    return records


def _parse_label(cell: str, line_no: int) -> str:
    try:
        v = float(cell)
    except ValueError:
        raise CsvParseError(line_no, f"unknown label value {cell!r}") from None
    if v == 0.0:
        return NORMAL
    if v == 1.0:
        return ANOMALY
    raise CsvParseError(line_no, f"unknown label value {cell!r}")


def normalize_minmax(records, fit_on) -> tuple[list[StreamRecord], MinMaxTransform]:
    """Fit a per-feature min-max map on ``fit_on`` and apply it everywhere.

    ``fit_on`` is a range (or (start, stop) pair) of record indices:
    typically the initialization window.  Fit-window outputs land exactly
    in [0, 1] per feature; records outside it extend affinely.
    """
    if isinstance(fit_on, tuple):
        fit_on = range(*fit_on)
    fit_idx = list(fit_on)
    if not fit_idx:
        raise ValueError("fit range is empty")
    feats, _ = records_to_arrays(records)
    window = feats[fit_idx]
    transform = MinMaxTransform(mins=window.min(axis=0), maxs=window.max(axis=0))
    scaled = transform.apply(feats)
    out = [
        StreamRecord(features=scaled[i], label=r.label, index=r.index)
        for i, r in enumerate(records)
    ]
    return out, transform


def generate_synthetic(
    n: int,
    anomaly_rate: float,
    seed: int,
    omega1: float = 0.02,
    omega2: float = 0.005,
    noise_std: float | None = None,
) -> list[StreamRecord]:
    """Generate the 1-D two-sinusoid stream with noise-contaminated points.

    Value at step i is sin(omega1 * i) + sin(omega2 * i).  Exactly
    round(n * anomaly_rate) indices, chosen uniformly without
    replacement, get additive Gaussian noise and the anomaly label.
    ``noise_std`` defaults to 3x the combined signal amplitude (= 6.0).
    Deterministic per seed.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < anomaly_rate < 1.0:
        raise ValueError(f"anomaly_rate must be in (0, 1), got {anomaly_rate}")
    if noise_std is None:
        noise_std = 3.0 * 2.0
    rng = np.random.default_rng(seed)
    i = np.arange(n, dtype=np.float64)
    values = np.sin(omega1 * i) + np.sin(omega2 * i)
    n_anom = int(round(n * anomaly_rate))
    anom_idx = rng.choice(n, size=n_anom, replace=False)
    values[anom_idx] += rng.normal(0.0, noise_std, size=n_anom)
    is_anom = np.zeros(n, dtype=bool)
    is_anom[anom_idx] = True
    return [
        StreamRecord(
            features=np.array([values[k]]),
            label=ANOMALY if is_anom[k] else NORMAL,
            index=k,
        )
        for k in range(n)
    ]
