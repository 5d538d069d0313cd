"""Region similarity, contour accuracy and temporal statistics for mask sequences."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .core import MaskSequence

DEFAULT_BOUNDARY_TOL = 0.008
RECALL_THRESHOLD = 0.5


def _pair(m, g):
    m = np.asarray(m, dtype=bool)
    g = np.asarray(g, dtype=bool)
    if m.shape != g.shape:
        raise ValueError(f"shape mismatch: {m.shape} vs {g.shape}")
    return m, g


def jaccard(m, g) -> float:
    """Intersection over union; 1 when both masks are empty."""
    m, g = _pair(m, g)
    union = np.logical_or(m, g).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(m, g).sum() / union)


def boundary_pixels(mask) -> np.ndarray:
    """Mask pixels with a 4-neighbour outside the mask (the image border counts as outside)."""
    mask = np.asarray(mask, dtype=bool)
    inner = ndimage.binary_erosion(mask, structure=ndimage.generate_binary_structure(2, 1), border_value=0)
    return mask & ~inner


def tolerance_pixels(shape, tol: float) -> int:
    return max(1, math.ceil(tol * math.hypot(*shape)))


def boundary_f(m, g, tol: float = DEFAULT_BOUNDARY_TOL) -> float:
    """Boundary F-measure; pixels match within ceil(tol * diagonal) pixels (Euclidean)."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    m, g = _pair(m, g)
    bm, bg = boundary_pixels(m), boundary_pixels(g)
    nm, ng = int(bm.sum()), int(bg.sum())
    if nm == 0 and ng == 0:
        return 1.0
    if nm == 0 or ng == 0:
        return 0.0
    radius = tolerance_pixels(m.shape, tol)
    dist_to_g = ndimage.distance_transform_edt(~bg)
    dist_to_m = ndimage.distance_transform_edt(~bm)
    precision = float((dist_to_g[bm] <= radius).sum() / nm)
    recall = float((dist_to_m[bg] <= radius).sum() / ng)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def sequence_stats(per_frame) -> tuple[float, float, float]:
    """(mean, recall, decay) of per-frame scores.

    Recall is the fraction of frames above 0.5; decay is the mean of the first
    ceil(n/4) frames minus the mean of the last ceil(n/4).
    """
    x = np.asarray(per_frame, dtype=np.float64)
    if x.size == 0:
        raise ValueError("no per-frame scores")
    q = math.ceil(x.size / 4)
    decay = float(x[:q].mean() - x[-q:].mean())
    return float(x.mean()), float((x > RECALL_THRESHOLD).mean()), decay


def temporal_instability_proxy(masks) -> float:
    """PROXY for temporal instability: mean of 1 - J over consecutive frame pairs."""
    values = masks.values if isinstance(masks, MaskSequence) else np.asarray(masks, dtype=bool)
    if values.shape[0] < 2:
        raise ValueError("need at least 2 frames")
    return float(np.mean([1.0 - jaccard(values[t], values[t + 1]) for t in range(values.shape[0] - 1)]))


@dataclass
class SequenceScore:
    per_frame_j: list[float]
    per_frame_f: list[float]
    j_mean: float
    j_recall: float
    j_decay: float
    f_mean: float
    f_recall: float
    f_decay: float
    t_proxy: float

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("per_frame_j")
        d.pop("per_frame_f")
        return d


def evaluate_sequence(masks, gt, tol: float = DEFAULT_BOUNDARY_TOL) -> SequenceScore:
    m = masks.values if isinstance(masks, MaskSequence) else np.asarray(masks, dtype=bool)
    g = gt.values if isinstance(gt, MaskSequence) else np.asarray(gt, dtype=bool)
    if m.shape != g.shape:
        raise ValueError(f"masks {m.shape} and ground truth {g.shape} differ in shape")
    js = [jaccard(m[t], g[t]) for t in range(m.shape[0])]
    fs = [boundary_f(m[t], g[t], tol) for t in range(m.shape[0])]
    jm, jr, jd = sequence_stats(js)
    fm, fr, fd = sequence_stats(fs)
    return SequenceScore(js, fs, jm, jr, jd, fm, fr, fd, temporal_instability_proxy(m))


def sequence_recall(sequence_means) -> float:
    """Fraction of sequences whose mean score exceeds 0.5."""
    x = np.asarray(sequence_means, dtype=np.float64)
    if x.size == 0:
        raise ValueError("no sequences")
    return float((x > RECALL_THRESHOLD).mean())
