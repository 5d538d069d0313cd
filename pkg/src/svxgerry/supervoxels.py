"""Native hierarchical graph-based supervoxels and labeling validation."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .core import VideoVolume, rgb_to_lab_array

HIST_BINS = 20


@dataclass
class SupervoxelLabeling:
    """Dense disjoint labeling of a T x H x W volume."""

    labels: np.ndarray
    region_count: int = field(init=False)
    voxel_counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.size and self.labels.min() < 0:
            raise ValueError("labels must be non-negative")
        self.region_count = int(self.labels.max()) + 1 if self.labels.size else 0
        self.voxel_counts = np.bincount(self.labels.ravel(), minlength=self.region_count)

    @property
    def shape(self):
        return self.labels.shape


@dataclass
class SupervoxelHierarchy:
    """``levels[0]`` is finest; ``parents[l]`` maps level-l ids to level-(l+1) ids."""

    levels: list[SupervoxelLabeling]
    parents: list[np.ndarray]

    def __len__(self):
        return len(self.levels)


@dataclass
class ValidationReport:
    ok: bool
    errors: list[str]

    def __bool__(self):
        return self.ok


def relabel_first_appearance(labels: np.ndarray) -> np.ndarray:
    """Renumber ids densely in order of first appearance (t, y, x)."""
    flat = np.asarray(labels).ravel()
    uniq, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(uniq))
    return rank[inverse].reshape(np.shape(labels))


def validate_labeling(labeling, shape=None) -> ValidationReport:
    """Check full coverage, dense ids and consistent counts. Never raises."""
    errors = []
    labels = np.asarray(labeling.labels if isinstance(labeling, SupervoxelLabeling) else labeling)
    if shape is not None and tuple(labels.shape) != tuple(shape):
        errors.append(f"shape {labels.shape} does not match expected {tuple(shape)}")
    if labels.size == 0:
        errors.append("empty labeling")
        return ValidationReport(False, errors)
    if not np.issubdtype(labels.dtype, np.integer):
        errors.append(f"labels have non-integer dtype {labels.dtype}")
        return ValidationReport(False, errors)
    n_unlabeled = int((labels < 0).sum())
    if n_unlabeled:
        errors.append(f"coverage: {n_unlabeled} voxels carry no label")
    present = np.unique(labels[labels >= 0])
    if len(present) and (present[0] != 0 or present[-1] != len(present) - 1):
        missing = np.setdiff1d(np.arange(present[-1] + 1), present)
        errors.append(f"density: ids not contiguous, missing {missing[:10].tolist()}")
    if isinstance(labeling, SupervoxelLabeling) and not n_unlabeled:
        counts = np.bincount(labels.ravel(), minlength=labeling.region_count)
        if labeling.region_count != len(present) or not np.array_equal(counts, labeling.voxel_counts):
            errors.append("counts: stored region/voxel counts disagree with labels")
    return ValidationReport(not errors, errors)


def _lattice_edges(shape):
    """6-connected voxel lattice edges (u < v) over flat indices."""
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    us, vs = [], []
    for axis in range(3):
        a = [slice(None)] * 3
        b = [slice(None)] * 3
        a[axis] = slice(None, -1)
        b[axis] = slice(1, None)
        us.append(idx[tuple(a)].ravel())
        vs.append(idx[tuple(b)].ravel())
    return np.concatenate(us), np.concatenate(vs)


def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def segment_level0(v: VideoVolume, k_param: float = 60.0, min_size: int = 20) -> SupervoxelLabeling:
    """Felzenszwalb-Huttenlocher segmentation of the spatiotemporal voxel graph.

    Edge weights are Lab distances between 6-neighbours. Edges are processed in
    (weight, u, v) order; components smaller than ``min_size`` are then merged
    along the cheapest remaining edges.
    """
    if k_param <= 0:
        raise ValueError("k_param must be positive")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    lab = rgb_to_lab_array(v.frames).reshape(-1, 3)
    u, w = _lattice_edges(v.shape)
    weight = np.sqrt(((lab[u] - lab[w]) ** 2).sum(axis=1))
    order = np.lexsort((w, u, weight))
    eu = u[order].tolist()
    ev = w[order].tolist()
    ew = weight[order].tolist()

    n = lab.shape[0]
    parent = list(range(n))
    size = [1] * n
    internal = [0.0] * n
    for a, b, wt in zip(eu, ev, ew):
        ra, rb = _find(parent, a), _find(parent, b)
        if ra == rb:
            continue
        if wt <= min(internal[ra] + k_param / size[ra], internal[rb] + k_param / size[rb]):
            if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]
            internal[ra] = wt
    if min_size > 1:
        for a, b in zip(eu, ev):
            ra, rb = _find(parent, a), _find(parent, b)
            if ra != rb and (size[ra] < min_size or size[rb] < min_size):
                if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
    roots = np.array([_find(parent, i) for i in range(n)], dtype=np.int64)
    return SupervoxelLabeling(relabel_first_appearance(roots.reshape(v.shape)))


def region_adjacency(labels: np.ndarray) -> set[tuple[int, int]]:
    """Unordered pairs of region ids that touch under 6-connectivity."""
    pairs = set()
    for axis in range(3):
        a = np.moveaxis(labels, axis, 0)
        x, y = a[:-1].ravel(), a[1:].ravel()
        diff = x != y
        lo = np.minimum(x[diff], y[diff])
        hi = np.maximum(x[diff], y[diff])
        pairs.update(zip(*np.unique(np.stack([lo, hi]), axis=1).tolist()) if lo.size else [])
    return pairs


def lab_histograms(v: VideoVolume, labels: np.ndarray, n_regions: int, bins: int = HIST_BINS) -> np.ndarray:
    """Per-region Lab histograms (counts), channels normalised to the video's range."""
    lab = rgb_to_lab_array(v.frames).reshape(-1, 3)
    lo = lab.min(axis=0)
    span = lab.max(axis=0) - lo
    norm = np.where(span > 0, (lab - lo) / np.where(span > 0, span, 1.0), 0.5)
    b = np.minimum((norm * bins).astype(np.int64), bins - 1)
    flat = labels.ravel()
    hist = np.zeros((n_regions, 3 * bins))
    for c in range(3):
        np.add.at(hist, (flat, c * bins + b[:, c]), 1.0)
    return hist


def chi_squared(h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
    """Chi-squared distance between histograms; ``h2`` may be a stack of rows."""
    p = h1 / max(h1.sum(), 1e-300)
    q = np.atleast_2d(h2)
    q = q / np.maximum(q.sum(axis=1, keepdims=True), 1e-300)
    s = p + q
    d = np.divide((p - q) ** 2, s, out=np.zeros_like(s), where=s > 0)
    out = 0.5 * d.sum(axis=1)
    return out if np.ndim(h2) == 2 else float(out[0])


def merge_level(labeling: SupervoxelLabeling, v: VideoVolume, bins: int = HIST_BINS) -> tuple[SupervoxelLabeling, np.ndarray]:
    """Greedily merge adjacent regions until the region count halves."""
    n = labeling.region_count
    target = max(1, n // 2)
    hist = lab_histograms(v, labeling.labels, n, bins)
    adj: dict[int, set[int]] = {i: set() for i in range(n)}
    for a, b in region_adjacency(labeling.labels):
        adj[a].add(b)
        adj[b].add(a)
    parent = list(range(n))
    version = [0] * n
    heap = []
    for a in range(n):
        nbs = sorted(b for b in adj[a] if b > a)
        if nbs:
            heap.extend(zip(chi_squared(hist[a], hist[nbs]).tolist(), [a] * len(nbs), nbs, [0] * len(nbs), [0] * len(nbs)))
    heapq.heapify(heap)
    count = n
    while count > target and heap:
        d, a, b, va, vb = heapq.heappop(heap)
        if version[a] != va or version[b] != vb or parent[a] != a or parent[b] != b:
            continue
        # the smaller id survives so ids stay stable
        parent[b] = a
        hist[a] += hist[b]
        adj[a] |= adj[b]
        adj[a].discard(a)
        adj[a].discard(b)
        for nb in adj[b]:
            if nb != a:
                adj[nb].discard(b)
                adj[nb].add(a)
        adj[b] = set()
        version[a] += 1
        version[b] += 1
        count -= 1
        nbs = sorted(adj[a])
        if nbs:
            # chi-squared is symmetric, so one batched call serves both orientations
            for nb, d in zip(nbs, chi_squared(hist[a], hist[nbs]).tolist()):
                lo, hi = (a, nb) if a < nb else (nb, a)
                heapq.heappush(heap, (d, lo, hi, version[lo], version[hi]))
    roots = np.array([_find(parent, i) for i in range(n)], dtype=np.int64)
    coarse = relabel_first_appearance(roots[labeling.labels])
    # parent map from fine ids to new dense ids
    mapping = np.zeros(n, dtype=np.int64)
    mapping[labeling.labels.ravel()] = coarse.ravel()
    return SupervoxelLabeling(coarse), mapping


def build_hierarchy(level0: SupervoxelLabeling, v: VideoVolume, n_levels: int, bins: int = HIST_BINS) -> SupervoxelHierarchy:
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    levels = [level0]
    parents = []
    for _ in range(n_levels - 1):
        nxt, mapping = merge_level(levels[-1], v, bins)
        levels.append(nxt)
        parents.append(mapping)
    return SupervoxelHierarchy(levels, parents)


def mean_volume(h: SupervoxelHierarchy | SupervoxelLabeling, level: int = 0) -> float:
    """Average region size in voxels at ``level``."""
    if isinstance(h, SupervoxelLabeling):
        lab = h
    else:
        if not 0 <= level < len(h.levels):
            raise ValueError(f"level {level} not in hierarchy of {len(h.levels)} levels")
        lab = h.levels[level]
    return lab.labels.size / lab.region_count


def generate_hierarchy(v: VideoVolume, k_param: float = 60.0, min_size: int = 20, n_levels: int = 1) -> SupervoxelHierarchy:
    return build_hierarchy(segment_level0(v, k_param, min_size), v, n_levels)
