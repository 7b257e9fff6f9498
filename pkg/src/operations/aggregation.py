"""Server-side merging of client parameter vectors.

Merges are computed as ``min_k w^k + Σ_k c_k (w^k − min_k w^k)`` with the
weighted deltas summed in sorted order per coordinate. The result does not
depend on the order clients are listed in, and identical inputs come back
unchanged bit for bit.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from src.exceptions import DimensionError, ParameterError


def _stack(params: Sequence[np.ndarray], fingerprints: Sequence[str] | None) -> np.ndarray:
    if not params:
        msg = "cannot merge an empty list of parameter vectors"
        raise ParameterError(msg)
    if fingerprints is not None:
        if len(fingerprints) != len(params):
            msg = f"{len(params)} parameter vectors but {len(fingerprints)} fingerprints"
            raise DimensionError(msg)
        if len(set(fingerprints)) != 1:
            msg = f"refusing to merge different architectures: {sorted(set(fingerprints))}"
            raise DimensionError(msg)
    sizes = {p.shape for p in params}
    if len(sizes) != 1 or params[0].ndim != 1:
        msg = f"parameter vectors differ in length: {sorted(p.size for p in params)}"
        raise DimensionError(msg)
    return np.stack(params)


def _merge(stacked: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    floor = stacked.min(axis=0)
    deltas = (stacked - floor).astype(np.float64) * coefficients[:, None]
    merged = floor.astype(np.float64) + np.sort(deltas, axis=0).sum(axis=0)
    return merged.astype(stacked.dtype)


def aggregate_weighted(
    params: Sequence[np.ndarray],
    n_k: Sequence[int],
    *,
    fingerprints: Sequence[str] | None = None,
) -> np.ndarray:
    """Sample-weighted average ``Σ (n_k / n) w^k``.

    When ``fingerprints`` are given they must all be equal; vectors of the same
    length from different architectures are never averaged.
    """
    stacked = _stack(params, fingerprints)
    counts = np.asarray(n_k, dtype=np.float64)
    if counts.shape != (stacked.shape[0],):
        msg = f"{stacked.shape[0]} parameter vectors but {counts.size} sample counts"
        raise DimensionError(msg)
    if (counts <= 0).any():
        msg = "sample counts must be positive"
        raise ParameterError(msg)
    return _merge(stacked, counts / counts.sum())


def aggregate_uniform(
    params: Sequence[np.ndarray], *, fingerprints: Sequence[str] | None = None
) -> np.ndarray:
    """Unweighted average ``(1/K) Σ w^k``; no sample counts are involved."""
    stacked = _stack(params, fingerprints)
    k = stacked.shape[0]
    return _merge(stacked, np.full(k, 1.0 / k))
