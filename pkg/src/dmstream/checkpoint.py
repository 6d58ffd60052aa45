"""Lossless binary checkpoints for feature maps and detector states.

Layout: an 8-byte magic, a little-endian uint64 header length, a JSON
header (scalars plus the array manifest), then the raw float64
little-endian array bytes in manifest order.  Scalars ride in JSON,
whose shortest-repr float encoding round-trips exactly, so a restored
state reproduces scores bit for bit.  Writing is deterministic: the same
state always produces identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .density import DensityMatrix
from .detector import DetectorState
from .features import FeatureMap

MAGIC = b"DMSTRM01"


def _write(path, kind: str, meta: dict, arrays: dict) -> None:
    manifest = [[name, list(arr.shape)] for name, arr in arrays.items()]
    header = dict(meta)
    header["kind"] = kind
    header["arrays"] = manifest
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("ascii")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint64(len(blob)).tobytes())
        fh.write(blob)
        for _, arr in arrays.items():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read(path) -> tuple[dict, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a dmstream checkpoint")
        (blob_len,) = np.frombuffer(fh.read(8), dtype="<u8")
        header = json.loads(fh.read(int(blob_len)).decode("ascii"))
        arrays = {}
        for name, shape in header["arrays"]:
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return header, arrays


def save_feature_map(fm: FeatureMap, path) -> None:
    """Write (d, D, sigma, w, b) to a flat binary file."""
    _write(path, "feature_map", {"sigma": fm.sigma}, {"w": fm.w, "b": fm.b})


def load_feature_map(path) -> FeatureMap:
    header, arrays = _read(path)
    if header["kind"] != "feature_map":
        raise ValueError(f"{path}: expected a feature_map checkpoint")
    return FeatureMap(w=arrays["w"], b=arrays["b"], sigma=header["sigma"])


def save_state(state: DetectorState, path) -> None:
    """Write the full detector state (map, rho, tau, counters)."""
    meta = {
        "sigma": state.fm.sigma,
        "tau": state.tau,
        "alpha": state.alpha,
        "m_sigma": state.m_sigma,
        "records_seen": state.records_seen,
        "anomalies_flagged": state.anomalies_flagged,
        "rho_t": state.rho.t,
    }
    arrays = {"w": state.fm.w, "b": state.fm.b, "rho": state.rho.rho}
    _write(path, "detector_state", meta, arrays)


def load_state(path) -> DetectorState:
    header, arrays = _read(path)
    if header["kind"] != "detector_state":
        raise ValueError(f"{path}: expected a detector_state checkpoint")
    fm = FeatureMap(w=arrays["w"], b=arrays["b"], sigma=header["sigma"])
    return DetectorState(
        fm=fm,
        rho=DensityMatrix(rho=arrays["rho"], t=int(header["rho_t"])),
        tau=header["tau"],
        alpha=header["alpha"],
        m_sigma=header["m_sigma"],
        records_seen=int(header["records_seen"]),
        anomalies_flagged=int(header["anomalies_flagged"]),
    )
