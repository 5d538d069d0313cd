"""Readers and writers for frames, cues, supervoxel labelings, masks and ground truth.

Per-video directory layout::

    <video>/frames/00000.png ...
    <video>/flow/00000.flo ...              (optional, T-1 files)
    <video>/saliency/00000.png ...          (optional)
    <video>/supervoxels/<method>/<level>/00000.png ...  (optional)
    <video>/ground_truth/00000.png ...      (optional)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .core import FormatError, MaskSequence, NotFoundError, VideoVolume

IMAGE_SUFFIXES = (".png", ".ppm", ".pgm", ".pnm")
FLO_MAGIC = np.float32(202021.25)

_NUMBER = re.compile(r"(\d+)")


@dataclass(frozen=True)
class FlowField:
    """Per-pixel displacement from one frame to the next (pixels/frame)."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise ValueError("flow components must be matching 2-D arrays")

    def as_array(self) -> np.ndarray:
        return np.stack([self.u, self.v], axis=-1)


def _frame_key(path: Path):
    m = _NUMBER.findall(path.stem)
    if not m:
        raise FormatError(f"file name has no frame number: {path.name}")
    return int(m[-1]), path.name


def list_numbered(directory, suffixes=IMAGE_SUFFIXES) -> list[Path]:
    """Files in ``directory`` with one of ``suffixes``, in numeric frame order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NotFoundError(f"directory not found: {directory}")
    files = [p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in suffixes]
    return sorted(files, key=_frame_key)


def _read_image(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        im.load()
        return np.asarray(im)


def _stack(images: list[np.ndarray], what: str) -> np.ndarray:
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise FormatError(f"{what}: frames have mixed dimensions {sorted(shapes)}")
    return np.stack(images)


def _check_count(files, n_frames, directory):
    if n_frames is not None and len(files) != n_frames:
        if len(files) < n_frames:
            raise NotFoundError(f"{directory}: expected {n_frames} frames, found {len(files)}")
        raise FormatError(f"{directory}: expected {n_frames} frames, found {len(files)}")


def load_frames(directory) -> VideoVolume:
    files = list_numbered(directory)
    if not files:
        raise NotFoundError(f"no frames in {directory}")
    if len(files) < 2:
        raise FormatError(f"{directory}: a video needs at least 2 frames, found {len(files)}")
    images = []
    for f in files:
        with Image.open(f) as im:
            images.append(np.asarray(im.convert("RGB")))
    return VideoVolume(_stack(images, str(directory)))


def frame_names(directory) -> list[str]:
    return [p.stem for p in list_numbered(directory)]


def write_frames(frames: np.ndarray, directory, names=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t, frame in enumerate(np.asarray(frames, dtype=np.uint8)):
        name = names[t] if names is not None else f"{t:05d}"
        Image.fromarray(frame, mode="RGB").save(directory / f"{name}.png")


def read_flo(path) -> FlowField:
    """Read a Middlebury ``.flo`` file."""
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header")
    magic = np.frombuffer(raw, "<f4", count=1)[0]
    if magic != FLO_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    w, h = (int(x) for x in np.frombuffer(raw, "<i4", count=2, offset=4))
    if w < 1 or h < 1:
        raise FormatError(f"{path}: bad dimensions {w}x{h}")
    n = 2 * w * h
    if len(raw) - 12 < 4 * n:
        raise FormatError(f"{path}: truncated payload, expected {n} floats")
    data = np.frombuffer(raw, "<f4", count=n, offset=12).reshape(h, w, 2)
    return FlowField(data[..., 0].astype(np.float32), data[..., 1].astype(np.float32))


def write_flo(flow: FlowField, path):
    h, w = flow.u.shape
    data = np.stack([flow.u, flow.v], axis=-1).astype("<f4")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(FLO_MAGIC.astype("<f4").tobytes())
        fh.write(np.array([w, h], dtype="<i4").tobytes())
        fh.write(data.tobytes())


def load_flow(path) -> FlowField:
    return read_flo(path)


def load_flow_dir(directory, n_pairs: int | None = None) -> list[FlowField]:
    files = list_numbered(directory, suffixes=(".flo",))
    if not files:
        raise NotFoundError(f"no .flo files in {directory}")
    _check_count(files, n_pairs, directory)
    return [read_flo(f) for f in files]


def load_saliency(directory, n_frames: int | None = None) -> np.ndarray:
    """Grayscale saliency images mapped linearly to [0, 1] (T x H x W float)."""
    files = list_numbered(directory)
    if not files:
        raise NotFoundError(f"no saliency maps in {directory}")
    _check_count(files, n_frames, directory)
    maps = []
    for f in files:
        with Image.open(f) as im:
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im).astype(np.float64) / 65535.0
            else:
                arr = np.asarray(im.convert("L")).astype(np.float64) / 255.0
        maps.append(np.clip(arr, 0.0, 1.0))
    return _stack(maps, str(directory))


def load_supervoxel_labels(directory, n_frames: int | None = None) -> np.ndarray:
    """Decode unique-colour-per-region RGB frames into dense integer labels.

    Ids follow the first appearance of each colour in (t, y, x) order.
    """
    files = list_numbered(directory)
    if not files:
        raise NotFoundError(f"no supervoxel frames in {directory}")
    if n_frames is not None and len(files) != n_frames:
        raise FormatError(f"{directory}: {len(files)} supervoxel frames for a {n_frames}-frame video")
    frames = []
    for f in files:
        with Image.open(f) as im:
            frames.append(np.asarray(im.convert("RGB")))
    rgb = _stack(frames, str(directory)).astype(np.int64)
    codes = (rgb[..., 0] << 16) | (rgb[..., 1] << 8) | rgb[..., 2]
    return codes_to_labels(codes)


def codes_to_labels(codes: np.ndarray) -> np.ndarray:
    uniq, first, inverse = np.unique(codes.ravel(), return_index=True, return_inverse=True)
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(uniq))
    return rank[inverse].reshape(codes.shape)


def label_colors(n: int) -> np.ndarray:
    """Distinct 24-bit colours for ids 0..n-1 (odd multiplier is a bijection mod 2**24)."""
    if n > 1 << 24:
        raise ValueError("too many regions for 24-bit colour encoding")
    code = (np.arange(n, dtype=np.int64) * 2654435761 + 0x3C6EF3) % (1 << 24)
    return np.stack([(code >> 16) & 255, (code >> 8) & 255, code & 255], axis=-1).astype(np.uint8)


def write_supervoxel_labels(labels: np.ndarray, directory, names=None):
    labels = np.asarray(labels)
    colors = label_colors(int(labels.max()) + 1)
    write_frames(colors[labels], directory, names)


def load_ground_truth(directory, n_frames: int | None = None, shape=None) -> MaskSequence:
    """Binary masks; any nonzero pixel (in any channel) is foreground."""
    files = list_numbered(directory)
    if not files:
        raise NotFoundError(f"no ground-truth frames in {directory}")
    _check_count(files, n_frames, directory)
    masks = []
    for f in files:
        arr = _read_image(f)
        if arr.ndim == 3:
            arr = arr.any(axis=-1)
        masks.append(arr != 0)
    values = _stack(masks, str(directory))
    if shape is not None and tuple(values.shape[1:]) != tuple(shape):
        raise FormatError(f"{directory}: ground truth is {values.shape[1:]}, video is {tuple(shape)}")
    return MaskSequence(values)


def write_masks(masks, directory, names=None):
    values = masks.values if isinstance(masks, MaskSequence) else np.asarray(masks, dtype=bool)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t, frame in enumerate(values):
        name = names[t] if names is not None else f"{t:05d}"
        Image.fromarray(np.where(frame, 255, 0).astype(np.uint8), mode="L").save(directory / f"{name}.png")


@dataclass(frozen=True)
class DatasetLayout:
    """Locations of the per-video inputs under a video directory."""

    root: Path

    @property
    def name(self) -> str:
        return self.root.name

    @property
    def frames(self) -> Path:
        return self.root / "frames"

    @property
    def flow(self) -> Path:
        return self.root / "flow"

    @property
    def saliency(self) -> Path:
        return self.root / "saliency"

    @property
    def ground_truth(self) -> Path:
        return self.root / "ground_truth"

    def supervoxels(self, method: str, level: int) -> Path:
        return self.root / "supervoxels" / method / str(level)

    def has(self, what: str) -> bool:
        d = getattr(self, what)
        return d.is_dir() and any(d.iterdir())

    def supervoxel_levels(self, method: str) -> list[int]:
        d = self.root / "supervoxels" / method
        if not d.is_dir():
            return []
        return sorted(int(p.name) for p in d.iterdir() if p.is_dir() and p.name.isdigit())


def list_videos(dataset_root) -> list[DatasetLayout]:
    root = Path(dataset_root)
    if not root.is_dir():
        raise NotFoundError(f"dataset not found: {root}")
    return [DatasetLayout(p) for p in sorted(root.iterdir()) if (p / "frames").is_dir()]
