"""Built-in optical flow and visual saliency estimators.

These stand in for external cue methods when no precomputed flow or saliency
is available. They are simple and deterministic, not state of the art.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import rgb_to_lab_array
from .io_ingest import FlowField

__all__ = ["FlowField", "BlockMatchParams", "estimate_flow", "estimate_saliency"]


@dataclass(frozen=True)
class BlockMatchParams:
    patch: int = 8
    radius: int = 8
    levels: int = 3
    median: int = 3


def _gray(frame: np.ndarray) -> np.ndarray:
    # integer luma x1000 keeps every cost exact so ties are real ties
    f = np.asarray(frame, dtype=np.int64)
    if f.ndim == 2:
        return f * 1000
    return 299 * f[..., 0] + 587 * f[..., 1] + 114 * f[..., 2]


def _half(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    padded = np.pad(img, ((0, h % 2), (0, w % 2)), mode="edge")
    return padded[0::2, 0::2] + padded[1::2, 0::2] + padded[0::2, 1::2] + padded[1::2, 1::2]


class _WindowSummer:
    """Sum over a patch x patch window at each pixel, clipped at the borders."""

    def __init__(self, h: int, w: int, patch: int):
        before = patch // 2
        after = patch - before
        self.shape = (h, w)
        self.y0 = np.clip(np.arange(h) - before, 0, h)[:, None]
        self.y1 = np.clip(np.arange(h) + after, 0, h)[:, None]
        self.x0 = np.clip(np.arange(w) - before, 0, w)[None, :]
        self.x1 = np.clip(np.arange(w) + after, 0, w)[None, :]

    def __call__(self, img: np.ndarray) -> np.ndarray:
        h, w = self.shape
        ii = np.zeros((h + 1, w + 1), dtype=np.int64)
        np.cumsum(img, axis=0, out=ii[1:, 1:])
        np.cumsum(ii[1:, 1:], axis=1, out=ii[1:, 1:])
        return ii[self.y1, self.x1] - ii[self.y0, self.x1] - ii[self.y1, self.x0] + ii[self.y0, self.x0]


def _match_level(a: np.ndarray, b: np.ndarray, guess: np.ndarray, params: BlockMatchParams) -> np.ndarray:
    h, w = a.shape
    window = _WindowSummer(h, w, params.patch)
    cache: dict[tuple[int, int], np.ndarray] = {}

    def cost(dy, dx):
        key = (dy, dx)
        if key not in cache:
            ry = np.clip(np.arange(h) + dy, 0, h - 1)
            rx = np.clip(np.arange(w) + dx, 0, w - 1)
            cache[key] = window(np.abs(a - b[ry][:, rx]))
        return cache[key]

    r = params.radius
    offsets = [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)]
    out = np.zeros((h, w, 2), dtype=np.int64)
    groups = guess[..., 0] * (4 * (h + w) + 1) + guess[..., 1]
    for gkey in np.unique(groups):
        sel = np.flatnonzero(groups == gkey)
        gy, gx = guess.reshape(-1, 2)[sel[0]]
        # visiting order encodes the tie-break: smallest total displacement first
        cands = sorted(((gy + dy, gx + dx) for dy, dx in offsets), key=lambda d: (d[0] ** 2 + d[1] ** 2, d))
        best = np.full(len(sel), np.iinfo(np.int64).max)
        best_d = np.zeros((len(sel), 2), dtype=np.int64)
        for dy, dx in cands:
            c = cost(dy, dx).reshape(-1)[sel]
            better = c < best
            best[better] = c[better]
            best_d[better] = (dy, dx)
        out.reshape(-1, 2)[sel] = best_d
    return out


def estimate_flow(a: np.ndarray, b: np.ndarray, params: BlockMatchParams = BlockMatchParams()) -> FlowField:
    """Dense flow from frame ``a`` to frame ``b`` by coarse-to-fine SAD block matching.

    ``a[y, x]`` is matched to ``b[y + v, x + u]``; a 3x3 median filter is applied
    to each component at the end.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    pyr_a, pyr_b = [_gray(a)], [_gray(b)]
    for _ in range(params.levels - 1):
        pyr_a.append(_half(pyr_a[-1]))
        pyr_b.append(_half(pyr_b[-1]))

    flow = np.zeros(pyr_a[-1].shape + (2,), dtype=np.int64)
    for level in range(params.levels - 1, -1, -1):
        la, lb = pyr_a[level], pyr_b[level]
        if level < params.levels - 1:
            h, w = la.shape
            ry = np.minimum(np.arange(h) // 2, flow.shape[0] - 1)
            rx = np.minimum(np.arange(w) // 2, flow.shape[1] - 1)
            guess = 2 * flow[ry[:, None], rx[None, :]]
        else:
            guess = np.zeros(la.shape + (2,), dtype=np.int64)
        flow = _match_level(la, lb, guess, params)

    v = flow[..., 0].astype(np.float64)
    u = flow[..., 1].astype(np.float64)
    if params.median > 1:
        u = ndimage.median_filter(u, size=params.median, mode="nearest")
        v = ndimage.median_filter(v, size=params.median, mode="nearest")
    return FlowField(u, v)


def estimate_saliency(frame: np.ndarray) -> np.ndarray:
    """Centre-surround contrast: Lab distance of the 3x3 local mean from the frame mean, scaled to [0, 1]."""
    lab = rgb_to_lab_array(frame)
    local = np.stack([ndimage.uniform_filter(lab[..., c], size=3, mode="nearest") for c in range(3)], axis=-1)
    glob = lab.reshape(-1, 3).mean(axis=0)
    dist = np.sqrt(((local - glob) ** 2).sum(axis=-1))
    lo, hi = dist.min(), dist.max()
    if hi - lo <= 1e-12 * max(1.0, hi):
        return np.zeros(dist.shape)
    return (dist - lo) / (hi - lo)
