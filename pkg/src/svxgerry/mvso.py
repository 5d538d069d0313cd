"""Initial foregroundness and mask from motion and visual saliency outliers (MVSO)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import MaskSequence, ScoreField
from .outliers import DEFAULT_K, summarize

VISUAL_EXPONENTS = (1.0, 1.0 / 2.0, 1.0 / 3.0)
MIN_SCALE = 0.5
PREV_MASK_DISCOUNT = 0.5


@dataclass
class FlowComponents:
    """Per-frame flow measures, each T x H x W."""

    x: np.ndarray
    y: np.ndarray
    magnitude: np.ndarray
    angle: np.ndarray

    def as_list(self) -> list[np.ndarray]:
        return [self.x, self.y, self.magnitude, self.angle]


@dataclass(frozen=True)
class ComponentStats:
    """Per-frame median and outlierness of one flow component (arrays of length T)."""

    median: np.ndarray
    alpha: np.ndarray
    outliers: np.ndarray  # T x H x W bool


@dataclass
class SaliencyMeasures:
    motion: list[np.ndarray]
    visual: list[np.ndarray]

    @property
    def count(self) -> int:
        return len(self.motion) + len(self.visual)

    def all(self) -> list[np.ndarray]:
        return self.motion + self.visual


@dataclass
class InitialEstimate:
    f0: ScoreField
    f0_scaled: ScoreField
    m0: MaskSequence
    measures: SaliencyMeasures | None = None


def align_flows(flows: np.ndarray, n_frames: int) -> np.ndarray:
    """Map T-1 pairwise flows onto T frames: frame t uses flow t, the last frame reuses the last flow."""
    flows = np.asarray(flows, dtype=np.float64)
    if flows.ndim != 4 or flows.shape[-1] != 2:
        raise ValueError(f"expected P x H x W x 2 flows, got {flows.shape}")
    n_pairs = flows.shape[0]
    if n_pairs == n_frames:
        return flows
    if n_pairs != n_frames - 1:
        raise ValueError(f"{n_pairs} flow pairs for {n_frames} frames")
    return np.concatenate([flows, flows[-1:]], axis=0)


def flow_components(flows, magnitude_mode: str = "literal") -> FlowComponents:
    """x, y, magnitude and angle of a stack of flows (T x H x W x 2, u then v).

    ``literal`` magnitude is x**2 + y**2; ``sqrt`` is the Euclidean norm.
    """
    flows = np.asarray(flows, dtype=np.float64)
    if flows.ndim == 3:
        flows = flows[None]
    # + 0.0 folds -0.0 so the angle stays in (-pi, pi]
    x = flows[..., 0] + 0.0
    y = flows[..., 1] + 0.0
    mag = x * x + y * y
    if magnitude_mode == "sqrt":
        mag = np.sqrt(mag)
    elif magnitude_mode != "literal":
        raise ValueError(f"unknown magnitude mode {magnitude_mode!r}")
    angle = np.arctan2(y, x)
    return FlowComponents(x, y, mag, angle)


def component_stats(component: np.ndarray, k: float = DEFAULT_K) -> ComponentStats:
    t = component.shape[0]
    medians = np.empty(t)
    alphas = np.empty(t)
    outliers = np.empty(component.shape, dtype=bool)
    for i in range(t):
        summary, mask = summarize(component[i], k)
        medians[i] = summary.q2
        alphas[i] = summary.alpha
        outliers[i] = mask
    return ComponentStats(medians, alphas, outliers)


def motion_saliency(component: np.ndarray, k: float = DEFAULT_K, stats: ComponentStats | None = None) -> np.ndarray:
    """Outlier deviation from the frame median, weighted by outlierness; zero where alpha < 0.5."""
    component = np.asarray(component, dtype=np.float64)
    if component.ndim == 2:
        component = component[None]
    if stats is None:
        stats = component_stats(component, k)
    alpha = stats.alpha[:, None, None]
    dev = np.abs(component - stats.median[:, None, None])
    keep = stats.outliers & (alpha >= MIN_SCALE)
    return np.where(keep, alpha * dev, 0.0)


def visual_saliency_measure(
    vismap: np.ndarray,
    comps: FlowComponents,
    exponent: float,
    stats: list[ComponentStats] | None = None,
    k: float = DEFAULT_K,
) -> np.ndarray:
    """Visual saliency raised to ``exponent`` times the scaled flow deviation summed over 4 components."""
    if exponent <= 0:
        raise ValueError("saliency exponent must be positive")
    if stats is None:
        stats = [component_stats(c, k) for c in comps.as_list()]
    flow_term = np.zeros(comps.x.shape)
    for c, st in zip(comps.as_list(), stats):
        scale = np.maximum(st.alpha, MIN_SCALE)[:, None, None]
        flow_term += scale * np.abs(c - st.median[:, None, None])
    vis = np.asarray(vismap, dtype=np.float64).reshape(flow_term.shape)
    return vis**exponent * flow_term


def saliency_measures(comps: FlowComponents, vismap: np.ndarray, k: float = DEFAULT_K, exponents=VISUAL_EXPONENTS) -> SaliencyMeasures:
    stats = [component_stats(c, k) for c in comps.as_list()]
    motion = [motion_saliency(c, stats=st) for c, st in zip(comps.as_list(), stats)]
    visual = [visual_saliency_measure(vismap, comps, e, stats=stats) for e in exponents]
    return SaliencyMeasures(motion, visual)


def initial_foreground(measures: SaliencyMeasures | list[np.ndarray]) -> ScoreField:
    items = measures.all() if isinstance(measures, SaliencyMeasures) else list(measures)
    f0 = np.zeros_like(np.asarray(items[0], dtype=np.float64))
    for m in items:
        f0 = f0 + m
    return ScoreField(f0, (0.0, np.inf))


def scale_f0(f0: ScoreField | np.ndarray, scope: str = "frame") -> ScoreField:
    """Divide by the per-frame (or per-video) maximum; all-zero stays zero."""
    vals = f0.values if isinstance(f0, ScoreField) else np.asarray(f0, dtype=np.float64)
    if scope == "frame":
        peak = vals.reshape(vals.shape[0], -1).max(axis=1)[:, None, None]
    elif scope == "video":
        peak = np.full((1, 1, 1), vals.max())
    else:
        raise ValueError(f"unknown scaling scope {scope!r}")
    safe = np.where(peak > 0, peak, 1.0)
    out = np.where(peak > 0, vals / safe, 0.0)
    return ScoreField(np.clip(out, 0.0, 1.0), (0.0, 1.0))


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 8:
        return np.ones((3, 3), dtype=bool)
    if connectivity == 4:
        return ndimage.generate_binary_structure(2, 1)
    raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


def keep_top_components(mask: np.ndarray, score: np.ndarray, max_n: int, connectivity: int = 8) -> np.ndarray:
    """Keep the ``max_n`` connected components with the largest summed score.

    Ties go to the larger component, then to the one whose first pixel comes
    first in row-major order.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_structure(connectivity))
    if n <= max_n:
        return mask.copy()
    flat = labels.ravel()
    sums = np.bincount(flat, weights=np.asarray(score, dtype=np.float64).ravel(), minlength=n + 1)[1:]
    sizes = np.bincount(flat, minlength=n + 1)[1:]
    # ndimage.label numbers components by first pixel in row-major order
    order = np.lexsort((np.arange(n), -sizes, -sums))
    keep = np.zeros(n + 1, dtype=bool)
    keep[order[:max_n] + 1] = True
    return keep[labels]


def initial_mask(f0_frame: np.ndarray, prev: np.ndarray | None = None, connectivity: int = 8) -> np.ndarray:
    """Threshold one frame at (mean + std) * delta and keep the strongest component."""
    f = np.asarray(f0_frame, dtype=np.float64)
    beta = f.mean() + f.std()
    delta = np.ones_like(f) if prev is None else np.where(prev, PREV_MASK_DISCOUNT, 1.0)
    raw = f > beta * delta
    if not raw.any():
        return raw
    return keep_top_components(raw, f, 1, connectivity)


def initial_masks(f0: np.ndarray, connectivity: int = 8) -> np.ndarray:
    out = np.zeros(f0.shape, dtype=bool)
    prev = None
    for t in range(f0.shape[0]):
        out[t] = initial_mask(f0[t], prev, connectivity)
        prev = out[t]
    return out


def compute_initial_estimate(
    flows: np.ndarray,
    vismap: np.ndarray,
    *,
    k: float = DEFAULT_K,
    magnitude_mode: str = "literal",
    f0_scope: str = "frame",
    connectivity: int = 8,
    keep_measures: bool = False,
) -> InitialEstimate:
    """Run the whole MVSO chain. ``flows`` are aligned to frames (T x H x W x 2)."""
    comps = flow_components(flows, magnitude_mode)
    measures = saliency_measures(comps, vismap, k)
    f0 = initial_foreground(measures)
    f0s = scale_f0(f0, f0_scope)
    m0 = MaskSequence(initial_masks(f0.values, connectivity))
    return InitialEstimate(f0, f0s, m0, measures if keep_measures else None)
