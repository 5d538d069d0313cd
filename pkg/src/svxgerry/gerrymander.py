"""Supervoxel consensus voting: local and non-local, combined with the initial estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MaskSequence, ScoreField, VideoVolume, rgb_to_lab_array
from .mvso import keep_top_components

MODES = ("local", "nonlocal", "both")
_DEFAULT_W0 = {"local": 1.0, "nonlocal": 0.0, "both": 1.0 / 3.0}


@dataclass(frozen=True)
class ConsensusConfig:
    mode: str = "both"
    neighbor_ratio: float = 0.1
    distance_floor: float = 1e-6
    w0: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"consensus mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 < self.neighbor_ratio <= 1.0:
            raise ValueError("neighbor_ratio must lie in (0, 1]")
        if self.distance_floor <= 0:
            raise ValueError("distance_floor must be positive")
        if self.w0 is not None:
            ok = {
                "local": self.w0 == 1.0,
                "nonlocal": self.w0 == 0.0,
                "both": 0.0 < self.w0 < 1.0,
            }[self.mode]
            if not ok:
                raise ValueError(f"w0={self.w0} is inconsistent with mode {self.mode!r}")

    @property
    def local_weight(self) -> float:
        return _DEFAULT_W0[self.mode] if self.w0 is None else float(self.w0)


@dataclass
class SupervoxelStats:
    voxel_count: np.ndarray
    mean_lab: np.ndarray  # N x 3, video-normalised
    local_consensus: np.ndarray

    @property
    def region_count(self) -> int:
        return len(self.voxel_count)


def normalized_lab(v: VideoVolume) -> np.ndarray:
    """Lab per voxel with each channel min-max scaled over the whole video (flat channels map to 0.5)."""
    lab = rgb_to_lab_array(v.frames)
    flat = lab.reshape(-1, 3)
    lo = flat.min(axis=0)
    span = flat.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (lab - lo) / safe, 0.5)


def compute_stats(v: VideoVolume, labels: np.ndarray, m0, scale: float = 2.0, offset: float = -1.0) -> SupervoxelStats:
    """Voxel counts, normalised mean Lab and local consensus mean(scale*m0 + offset) per region."""
    labels = np.asarray(labels)
    m = m0.values if isinstance(m0, MaskSequence) else np.asarray(m0, dtype=bool)
    if labels.shape != m.shape or labels.shape != v.shape:
        raise ValueError(f"shape mismatch: labels {labels.shape}, mask {m.shape}, video {v.shape}")
    flat = labels.ravel()
    n = int(flat.max()) + 1
    counts = np.bincount(flat, minlength=n)
    if (counts == 0).any():
        raise ValueError("labeling is not dense; validate it first")
    votes = np.bincount(flat, weights=scale * m.ravel().astype(np.float64) + offset, minlength=n)
    lab = normalized_lab(v).reshape(-1, 3)
    mean_lab = np.stack([np.bincount(flat, weights=lab[:, c], minlength=n) for c in range(3)], axis=1) / counts[:, None]
    return SupervoxelStats(counts, np.clip(mean_lab, 0.0, 1.0), votes / counts)


def neighbor_count(n_regions: int, ratio: float) -> int:
    if n_regions <= 1:
        return 0
    return min(n_regions - 1, max(1, int(np.floor(ratio * n_regions + 0.5))))


def nearest_neighbors(points: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbours under the L1 metric, excluding self; ties go to the lower id."""
    n = len(points)
    chunk = max(1, (1 << 21) // max(n, 1))
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        d = np.abs(points[start:stop, None, :] - points[None, :, :]).sum(axis=2)
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        idx[start:stop] = order
        dist[start:stop] = np.take_along_axis(d, order, axis=1)
    return idx, dist


def _scaled_weights(dist: np.ndarray, floor: float, total: float) -> np.ndarray:
    nominal = 1.0 / np.maximum(dist, floor) ** 2
    return nominal * total / nominal.sum(axis=-1, keepdims=True)


def neighbor_weights(stats: SupervoxelStats, s0: int, cfg: ConsensusConfig) -> tuple[np.ndarray, np.ndarray]:
    """Non-local neighbour ids of region ``s0`` and their weights (summing to 1 - w0)."""
    n = stats.region_count
    k = neighbor_count(n, cfg.neighbor_ratio)
    if k == 0 or cfg.mode == "local":
        return np.empty(0, dtype=np.int64), np.empty(0)
    d = np.abs(stats.mean_lab - stats.mean_lab[s0]).sum(axis=1)
    d[s0] = np.inf
    ids = np.argsort(d, kind="stable")[:k]
    return ids, _scaled_weights(d[ids], cfg.distance_floor, 1.0 - cfg.local_weight)


@dataclass
class RegionConsensus:
    values: np.ndarray  # per-region consensus
    weight_sums: np.ndarray  # w0 + sum of non-local weights, per region
    neighbors: np.ndarray
    weights: np.ndarray


def region_consensus(stats: SupervoxelStats, cfg: ConsensusConfig) -> RegionConsensus:
    n = stats.region_count
    k = neighbor_count(n, cfg.neighbor_ratio)
    fs = stats.local_consensus
    if k == 0 or cfg.mode == "local":
        # a single region has nobody to consult, whatever the mode
        return RegionConsensus(fs.copy(), np.ones(n), np.empty((n, 0), dtype=np.int64), np.empty((n, 0)))
    w0 = cfg.local_weight
    idx, dist = nearest_neighbors(stats.mean_lab, k)
    w = _scaled_weights(dist, cfg.distance_floor, 1.0 - w0)
    # w0*fs + sum(w*fs[idx]) written relative to fs so unanimous votes stay exact;
    # the clip only removes rounding, the exact value is a convex combination
    values = fs + (w * (fs[idx] - fs[:, None])).sum(axis=1)
    values = np.clip(values, fs.min(), fs.max())
    return RegionConsensus(values, w0 + w.sum(axis=1), idx, w)


def consensus_field(labels: np.ndarray, stats: SupervoxelStats, cfg: ConsensusConfig) -> ScoreField:
    rc = region_consensus(stats, cfg)
    fs = stats.local_consensus
    bounds = (min(-1.0, float(fs.min())), max(1.0, float(fs.max())))
    return ScoreField(rc.values[np.asarray(labels)], bounds)


def final_measure(f0_scaled, f_sc) -> ScoreField:
    a = f0_scaled.values if isinstance(f0_scaled, ScoreField) else np.asarray(f0_scaled, dtype=np.float64)
    b = f_sc.values if isinstance(f_sc, ScoreField) else np.asarray(f_sc, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    bounds = (min(-1.0, float(b.min())), max(2.0, 1.0 + float(b.max()))) if b.size else (-1.0, 2.0)
    return ScoreField(a + b, bounds)


def final_mask(f, max_components: int = 2, connectivity: int = 8) -> MaskSequence:
    """Foreground where the final measure is positive, at most ``max_components`` segments per frame."""
    vals = f.values if isinstance(f, ScoreField) else np.asarray(f, dtype=np.float64)
    raw = vals > 0
    out = np.zeros(vals.shape, dtype=bool)
    for t in range(vals.shape[0]):
        if raw[t].any():
            out[t] = keep_top_components(raw[t], vals[t], max_components, connectivity)
    return MaskSequence(out)


def gerrymander(
    v: VideoVolume,
    labels: np.ndarray,
    m0,
    f0_scaled,
    cfg: ConsensusConfig = ConsensusConfig(),
    scale: float = 2.0,
    offset: float = -1.0,
    connectivity: int = 8,
) -> tuple[MaskSequence, ScoreField, ScoreField]:
    """Full consensus step; returns (mask, final measure, consensus field)."""
    stats = compute_stats(v, labels, m0, scale, offset)
    f_sc = consensus_field(labels, stats, cfg)
    f = final_measure(f0_scaled, f_sc)
    return final_mask(f, 2, connectivity), f, f_sc
