"""Volume and field types, colour conversion and resolution scaling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class FormatError(ValueError):
    """Input data exists but is malformed or inconsistent."""


class NotFoundError(FileNotFoundError):
    """A required input file or directory is missing."""


@dataclass(frozen=True)
class VideoVolume:
    """T x H x W x 3 stack of 8-bit RGB frames."""

    frames: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise ValueError(f"expected T x H x W x 3 frames, got shape {frames.shape}")
        if frames.shape[0] < 2:
            raise ValueError("a video needs at least 2 frames")
        if frames.shape[1] < 1 or frames.shape[2] < 1:
            raise ValueError("frames must be at least 1 x 1")
        if frames.dtype != np.uint8:
            if frames.min() < 0 or frames.max() > 255:
                raise ValueError("RGB values must lie in [0, 255]")
            frames = frames.astype(np.uint8)
        frames = np.ascontiguousarray(frames)
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.frames.shape[:3]


@dataclass(frozen=True)
class LabTriplet:
    L: float
    a: float
    b: float

    def __post_init__(self):
        if not 0.0 <= self.L <= 100.0:
            raise ValueError(f"L out of range: {self.L}")


@dataclass
class ScoreField:
    """Real per-voxel field with a declared value range."""

    values: np.ndarray
    declared_range: tuple[float, float] = (-np.inf, np.inf)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.check()

    def check(self, atol: float = 1e-12):
        lo, hi = self.declared_range
        if self.values.size and (self.values.min() < lo - atol or self.values.max() > hi + atol):
            raise ValueError(
                f"values [{self.values.min()}, {self.values.max()}] outside declared range {self.declared_range}"
            )


@dataclass
class MaskSequence:
    """Binary T x H x W mask stack."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.dtype != bool:
            if not np.isin(values, (0, 1)).all():
                raise ValueError("mask values must be 0 or 1")
            values = values.astype(bool)
        self.values = values

    @property
    def shape(self):
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, MaskSequence):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.array_equal(self.values, other.values))


# sRGB (D65) -> XYZ
_RGB_TO_XYZ = np.array(
    [
        [0.412453, 0.357580, 0.180423],
        [0.212671, 0.715160, 0.072169],
        [0.019334, 0.119193, 0.950227],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])
_EPS = (6.0 / 29.0) ** 3


def _lab_f(t):
    return np.where(t > _EPS, np.cbrt(t), t / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)


def rgb_to_lab_array(rgb) -> np.ndarray:
    """Convert an (..., 3) array of 8-bit sRGB values to CIELAB (D65)."""
    c = np.asarray(rgb, dtype=np.float64) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB_TO_XYZ.T / _D65_WHITE
    f = _lab_f(xyz)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    lab = np.stack([np.clip(L, 0.0, 100.0), a, b], axis=-1)
    return lab


def rgb_to_lab(rgb) -> LabTriplet:
    if len(rgb) != 3 or any(not 0 <= v <= 255 for v in rgb):
        raise ValueError(f"expected an RGB triplet in [0, 255], got {rgb!r}")
    L, a, b = rgb_to_lab_array(np.asarray(rgb, dtype=np.float64))
    return LabTriplet(float(L), float(a), float(b))


def _box_sums(arr: np.ndarray, factor: int, axis: int):
    n = arr.shape[axis]
    starts = np.arange(0, n, factor)
    sums = np.add.reduceat(arr, starts, axis=axis)
    counts = np.diff(np.append(starts, n))
    return sums, counts


def downscale_volume(v: VideoVolume, factor: int) -> VideoVolume:
    """Box-filter each frame by ``factor``; partial edge boxes average what they cover.

    Rounds half up, so averaging {0, 0, 255, 255} gives 128.
    """
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ValueError(f"downscale factor must be a positive integer, got {factor!r}")
    if factor == 1:
        return v
    data = v.frames.astype(np.int64)
    data, rows = _box_sums(data, factor, axis=1)
    data, cols = _box_sums(data, factor, axis=2)
    count = rows[None, :, None, None] * cols[None, None, :, None]
    out = (2 * data + count) // (2 * count)
    return VideoVolume(out.astype(np.uint8))


def upscale_labels(labels: np.ndarray, target_h: int, target_w: int, factor: int | None = None) -> np.ndarray:
    """Nearest-neighbour replication of a T x h x w label grid to T x target_h x target_w.

    With ``factor`` given, output pixel (y, x) takes source (y // factor, x // factor),
    which inverts the partial-box layout of :func:`downscale_volume`. Otherwise the
    usual ``floor(i * src / target)`` mapping is used.
    """
    labels = np.asarray(labels)
    _, h, w = labels.shape
    if target_h < h or target_w < w:
        raise ValueError(f"target {target_h}x{target_w} is smaller than source {h}x{w}")
    if factor is not None:
        rows = np.minimum(np.arange(target_h) // factor, h - 1)
        cols = np.minimum(np.arange(target_w) // factor, w - 1)
    else:
        rows = np.arange(target_h) * h // target_h
        cols = np.arange(target_w) * w // target_w
    return labels[:, rows[:, None], cols[None, :]]
