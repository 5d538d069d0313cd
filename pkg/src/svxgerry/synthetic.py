"""Synthetic test videos with known ground truth."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import MaskSequence, VideoVolume
from .io_ingest import write_frames, write_masks


def _texture(rng, h, w, base, spread):
    noise = rng.integers(-spread, spread + 1, size=(h, w, 3))
    return np.clip(np.asarray(base)[None, None, :] + noise, 0, 255)


def translating_square(
    n_frames: int = 20,
    height: int = 64,
    width: int = 64,
    size: int = 12,
    step: int = 1,
    start=(26, 10),
    seed: int = 0,
    background=(40, 70, 150),
    foreground=(220, 60, 40),
    spread: int = 30,
) -> tuple[VideoVolume, MaskSequence]:
    """A textured square translating ``step`` px/frame to the right over a textured background."""
    rng = np.random.default_rng(seed)
    bg = _texture(rng, height, width, background, spread)
    fg = _texture(rng, size, size, foreground, spread)
    frames = np.empty((n_frames, height, width, 3), dtype=np.uint8)
    gt = np.zeros((n_frames, height, width), dtype=bool)
    y0, x0 = start
    for t in range(n_frames):
        x = x0 + step * t
        frame = bg.copy()
        ys = slice(max(y0, 0), min(y0 + size, height))
        xs = slice(max(x, 0), min(x + size, width))
        frame[ys, xs] = fg[ys.start - y0 : ys.stop - y0, xs.start - x : xs.stop - x]
        frames[t] = frame
        gt[t, ys, xs] = True
    return VideoVolume(frames), MaskSequence(gt)


def write_video(root, video: VideoVolume, gt: MaskSequence | None = None) -> Path:
    root = Path(root)
    write_frames(video.frames, root / "frames")
    if gt is not None:
        write_masks(gt, root / "ground_truth")
    return root


def make_dataset(root, n_videos: int = 2, n_frames: int = 20, height: int = 64, width: int = 64, seed: int = 0) -> Path:
    """Write ``n_videos`` translating-square videos under ``root/<name>/``."""
    root = Path(root)
    for i in range(n_videos):
        rng = np.random.default_rng(seed + i)
        start = (int(rng.integers(4, height - 16)), int(rng.integers(2, max(3, width - 14 - n_frames))))
        video, gt = translating_square(n_frames, height, width, start=start, seed=seed + i)
        write_video(root / f"square{i:02d}", video, gt)
    return root
