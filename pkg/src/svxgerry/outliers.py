"""Tukey range test: quartiles, fences, outlier sets and the outlierness scale."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_K = 1.5


@dataclass(frozen=True)
class OutlierSummary:
    q1: float
    q2: float
    q3: float
    o1: float
    o3: float
    k: float
    alpha: float


def _interp(sorted_data: np.ndarray, p: float) -> float:
    pos = p * (len(sorted_data) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(sorted_data) - 1)
    frac = pos - lo
    x_lo = float(sorted_data[lo])
    return x_lo + frac * (float(sorted_data[hi]) - x_lo)


def quartiles(data) -> tuple[float, float, float]:
    """Lower quartile, median and upper quartile (linear interpolation, type 7)."""
    arr = np.asarray(data, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("quartiles of empty data")
    s = np.sort(arr)
    return _interp(s, 0.25), _interp(s, 0.5), _interp(s, 0.75)


def tukey_fences(q1: float, q3: float, k: float = DEFAULT_K) -> tuple[float, float]:
    if q1 > q3:
        raise ValueError(f"q1 ({q1}) > q3 ({q3})")
    if k < 0:
        raise ValueError(f"fence multiplier must be >= 0, got {k}")
    iqr = q3 - q1
    return q1 - k * iqr, q3 + k * iqr


def outlier_mask(data, o1: float, o3: float) -> np.ndarray:
    d = np.asarray(data, dtype=np.float64)
    return (d < o1) | (d > o3)


def outlier_scale(data, mask) -> float:
    """Fraction of total absolute mass carried by the flagged values (0 for all-zero data)."""
    a = np.abs(np.asarray(data, dtype=np.float64))
    mask = np.asarray(mask, dtype=bool)
    if a.shape != mask.shape:
        raise ValueError(f"data {a.shape} and mask {mask.shape} differ in shape")
    total = a.sum()
    if total == 0:
        return 0.0
    return float(min(1.0, a[mask].sum() / total))


def summarize(data, k: float = DEFAULT_K) -> tuple[OutlierSummary, np.ndarray]:
    """Run the full test on ``data``; returns the summary and the outlier mask."""
    q1, q2, q3 = quartiles(data)
    o1, o3 = tukey_fences(q1, q3, k)
    mask = outlier_mask(data, o1, o3)
    alpha = outlier_scale(data, mask)
    return OutlierSummary(q1, q2, q3, o1, o3, k, alpha), mask
