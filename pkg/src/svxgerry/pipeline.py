"""End-to-end segmentation of one video and benchmark sweeps over a dataset."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io_ingest
from .config import PipelineConfig
from .core import FormatError, MaskSequence, NotFoundError, VideoVolume, downscale_volume, upscale_labels
from .cues import BlockMatchParams, estimate_flow, estimate_saliency
from .gerrymander import ConsensusConfig, gerrymander
from .metrics import SequenceScore, evaluate_sequence
from .mvso import InitialEstimate, align_flows, compute_initial_estimate
from .supervoxels import SupervoxelHierarchy, generate_hierarchy, validate_labeling

log = logging.getLogger(__name__)

MODE_SUFFIX = {"both": "", "local": "-L", "nonlocal": "-NL"}


@dataclass
class VideoInputs:
    name: str
    video: VideoVolume
    flows: np.ndarray  # T x H x W x 2, aligned to frames
    saliency: np.ndarray
    frame_names: list[str]
    gt: MaskSequence | None = None
    layout: io_ingest.DatasetLayout | None = None


@dataclass
class SupervoxelResult:
    labels: np.ndarray  # full resolution
    region_count: int
    mean_volume: float  # at processing resolution


@dataclass
class PipelineResult:
    name: str
    config_name: str
    masks: MaskSequence
    m0: MaskSequence
    score: SequenceScore | None = None
    svx_volume: float | None = None
    extras: dict = field(default_factory=dict)


def method_name(source: str) -> str:
    return "NATIVE" if source == "native" else source.split(":", 1)[1]


def config_name(source: str | None, level: int | None, mode: str) -> str:
    """Row names: GBH02 (both), GBH02-L (local), GBH02-NL (non-local), MVSO."""
    if mode == "none":
        return "MVSO"
    lvl = "ALL" if level is None else f"{level:02d}"
    return f"{method_name(source)}{lvl}{MODE_SUFFIX[mode]}"


def _flow_params(cfg: PipelineConfig) -> BlockMatchParams:
    return BlockMatchParams(cfg.flow_patch, cfg.flow_radius, cfg.flow_levels, cfg.flow_median)


def load_inputs(video_dir, cfg: PipelineConfig) -> VideoInputs:
    layout = io_ingest.DatasetLayout(Path(video_dir))
    if not layout.frames.is_dir():
        raise NotFoundError(f"{layout.root}: missing frames/ directory")
    video = io_ingest.load_frames(layout.frames)
    names = io_ingest.frame_names(layout.frames)
    t = video.frame_count

    want_pre = cfg.cue_source in ("auto", "precomputed")
    if want_pre and layout.has("flow"):
        pairs = io_ingest.load_flow_dir(layout.flow)
        if len(pairs) not in (t - 1, t):
            raise FormatError(f"{layout.flow}: {len(pairs)} flow files for {t} frames")
        flows = np.stack([p.as_array() for p in pairs]).astype(np.float64)
        if flows.shape[1:3] != video.shape[1:]:
            raise FormatError(f"{layout.flow}: flow is {flows.shape[1:3]}, frames are {video.shape[1:]}")
    elif cfg.cue_source == "precomputed":
        raise NotFoundError(f"{layout.root}: cue_source=precomputed but flow/ is missing")
    else:
        params = _flow_params(cfg)
        flows = np.stack([estimate_flow(video.frames[i], video.frames[i + 1], params).as_array() for i in range(t - 1)])

    if want_pre and layout.has("saliency"):
        sal = io_ingest.load_saliency(layout.saliency, t)
        if sal.shape[1:] != video.shape[1:]:
            raise FormatError(f"{layout.saliency}: saliency is {sal.shape[1:]}, frames are {video.shape[1:]}")
    elif cfg.cue_source == "precomputed":
        raise NotFoundError(f"{layout.root}: cue_source=precomputed but saliency/ is missing")
    else:
        sal = np.stack([estimate_saliency(f) for f in video.frames])

    gt = None
    if layout.has("ground_truth"):
        gt = io_ingest.load_ground_truth(layout.ground_truth, t, video.shape[1:])
    return VideoInputs(layout.name, video, align_flows(flows, t), sal, names, gt, layout)


def compute_mvso(inputs: VideoInputs, cfg: PipelineConfig) -> InitialEstimate:
    return compute_initial_estimate(
        inputs.flows,
        inputs.saliency,
        k=cfg.tukey_k,
        magnitude_mode=cfg.magnitude_mode,
        f0_scope=cfg.f0_scope,
        connectivity=cfg.connectivity,
    )


class SupervoxelProvider:
    """Loads or generates supervoxel labelings for one video, caching per source."""

    def __init__(self, inputs: VideoInputs, cfg: PipelineConfig):
        self.inputs = inputs
        self.cfg = cfg
        self._native: SupervoxelHierarchy | None = None
        self._cache: dict[tuple[str, int], SupervoxelResult] = {}

    def _reduced(self) -> VideoVolume:
        return downscale_volume(self.inputs.video, self.cfg.downscale_factor)

    def native_hierarchy(self, min_levels: int = 1) -> SupervoxelHierarchy:
        n = max(self.cfg.svx_levels, min_levels)
        if self._native is None or len(self._native) < n:
            self._native = generate_hierarchy(self._reduced(), self.cfg.svx_k, self.cfg.svx_min_size, n)
        return self._native

    def get(self, source: str, level: int) -> SupervoxelResult:
        key = (source, level)
        if key not in self._cache:
            self._cache[key] = self._load(source, level)
        return self._cache[key]

    def _load(self, source: str, level: int) -> SupervoxelResult:
        t, h, w = self.inputs.video.shape
        f = self.cfg.downscale_factor
        if source == "native":
            labeling = self.native_hierarchy(level + 1).levels[level]
            labels = labeling.labels
        else:
            method = method_name(source)
            layout = self.inputs.layout
            d = layout.supervoxels(method, level) if layout is not None else None
            if d is None or not d.is_dir():
                raise NotFoundError(f"{self.inputs.name}: missing supervoxels/{method}/{level}/")
            labels = io_ingest.load_supervoxel_labels(d, t)
        report = validate_labeling(labels)
        if not report:
            raise FormatError(f"{self.inputs.name}: invalid supervoxel labeling ({'; '.join(report.errors)})")
        region_count = int(labels.max()) + 1
        volume = labels.size / region_count
        if labels.shape[1:] == (h, w):
            full = labels
        elif labels.shape[1:] == (-(-h // f), -(-w // f)):
            full = upscale_labels(labels, h, w, factor=f)
        else:
            raise FormatError(
                f"{self.inputs.name}: supervoxels are {labels.shape[1:]}, expected {(h, w)} or the 1:{f} reduction"
            )
        return SupervoxelResult(full, region_count, volume)


def consensus_config(cfg: PipelineConfig, mode: str) -> ConsensusConfig:
    w0 = cfg.w0 if mode == "both" else None
    return ConsensusConfig(mode, cfg.neighbor_ratio, cfg.distance_floor, w0)


def segment_with(inputs: VideoInputs, est: InitialEstimate, svx: SupervoxelResult | None, mode: str, cfg: PipelineConfig) -> MaskSequence:
    if mode == "none":
        return est.m0
    masks, _, _ = gerrymander(
        inputs.video,
        svx.labels,
        est.m0,
        est.f0_scaled,
        consensus_config(cfg, mode),
        cfg.consensus_scale,
        cfg.consensus_offset,
        cfg.connectivity,
    )
    return masks


def run_pipeline(cfg: PipelineConfig, video_dir, out_dir=None) -> PipelineResult:
    """Segment one video with the single-run keys of ``cfg``; writes masks when ``out_dir`` is given."""
    inputs = load_inputs(video_dir, cfg)
    est = compute_mvso(inputs, cfg)
    mode = cfg.consensus_mode
    level = cfg.overrides().get(inputs.name, cfg.hierarchy_level)
    svx = None
    if mode != "none":
        svx = SupervoxelProvider(inputs, cfg).get(cfg.supervoxel_source, level)
    masks = segment_with(inputs, est, svx, mode, cfg)
    score = evaluate_sequence(masks, inputs.gt, cfg.boundary_tol) if inputs.gt is not None else None
    name = config_name(cfg.supervoxel_source, level, mode)
    result = PipelineResult(inputs.name, name, masks, est.m0, score, svx.mean_volume if svx else None)
    if out_dir is not None:
        out = Path(out_dir)
        io_ingest.write_masks(masks, out / "masks", inputs.frame_names)
        io_ingest.write_masks(est.m0, out / "mvso", inputs.frame_names)
    return result


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


def _row(video: str, name: str, source, level, mode, score: SequenceScore | None, volume, n_frames, status="ok", selection=""):
    row = {
        "config": name,
        "method": "None" if mode == "none" else method_name(source),
        "level": level,
        "mode": mode,
        "selection": selection,
        "video": video,
        "status": status,
        "n_frames": n_frames,
        "svx_volume": volume,
    }
    keys = ("j_mean", "j_recall", "j_decay", "f_mean", "f_recall", "f_decay", "t_proxy")
    for k in keys:
        row[k] = getattr(score, k) if score is not None else None
    return row


def sweep_configs(cfg: PipelineConfig) -> list[tuple[str | None, int | None, str]]:
    """(source, level, mode) triples of the sweep; MVSO first when requested."""
    out = []
    modes = cfg.sweep_modes()
    if cfg.include_mvso or "none" in modes:
        out.append((None, None, "none"))
    for source in cfg.sweep_sources():
        for level in cfg.sweep_levels():
            for mode in modes:
                if mode != "none":
                    out.append((source, level, mode))
    return out


def benchmark_video(video_dir, cfg: PipelineConfig) -> list[dict]:
    """All sweep rows for one video. Failures become error rows instead of exceptions."""
    video_dir = Path(video_dir)
    name = video_dir.name
    try:
        inputs = load_inputs(video_dir, cfg)
        if inputs.gt is None:
            raise NotFoundError(f"{name}: missing ground_truth/")
        est = compute_mvso(inputs, cfg)
    except Exception as exc:  # noqa: BLE001 - isolate per-video failures
        log.warning("video %s failed: %s", name, exc)
        return [
            _row(name, config_name(src, lvl, mode), src, lvl, mode, None, None, None, f"error: {exc}")
            for src, lvl, mode in sweep_configs(cfg)
        ]

    provider = SupervoxelProvider(inputs, cfg)
    t = inputs.video.frame_count
    rows = []
    for source, level, mode in sweep_configs(cfg):
        cname = config_name(source, level, mode)
        try:
            svx = provider.get(source, level) if mode != "none" else None
            masks = segment_with(inputs, est, svx, mode, cfg)
            score = evaluate_sequence(masks, inputs.gt, cfg.boundary_tol)
            rows.append(_row(name, cname, source, level, mode, score, svx.mean_volume if svx else None, t))
        except Exception as exc:  # noqa: BLE001
            log.warning("video %s config %s failed: %s", name, cname, exc)
            rows.append(_row(name, cname, source, level, mode, None, None, t, f"error: {exc}"))
    return rows


def _oracle_best_rows(rows: list[dict]) -> list[dict]:
    """Per video, pick the hierarchy level with the best J mean (lowest level on ties)."""
    out = []
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        if r["mode"] != "none" and r["status"] == "ok":
            groups.setdefault((r["video"], r["method"], r["mode"]), []).append(r)
    for (video, method, mode), cand in sorted(groups.items()):
        best = min(cand, key=lambda r: (-r["j_mean"], r["level"]))
        row = dict(best)
        row["config"] = f"{method}ALL{MODE_SUFFIX[mode]}"
        row["selection"] = f"oracle-best:level={best['level']}"
        row["level"] = None
        out.append(row)
    return out


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def aggregate(rows: list[dict]) -> list[dict]:
    """One row per config averaging successful videos, with sequence-level recall and J rank."""
    by_config: dict[str, list[dict]] = {}
    for r in rows:
        by_config.setdefault(r["config"], []).append(r)
    out = []
    for name in sorted(by_config):
        group = by_config[name]
        ok = [r for r in group if r["status"] == "ok"]
        first = group[0]
        agg = {
            "config": name,
            "method": first["method"],
            "level": first["level"],
            "mode": first["mode"],
            "selection": "oracle-best" if first["selection"].startswith("oracle-best") else "",
            "video": "*",
            "status": "ok" if ok else "error",
            "n_frames": sum(r["n_frames"] or 0 for r in ok),
            "svx_volume": _mean(r["svx_volume"] for r in ok),
        }
        for k in ("j_mean", "j_recall", "j_decay", "f_mean", "f_recall", "f_decay", "t_proxy"):
            agg[k] = _mean(r[k] for r in ok)
        agg["n_videos"] = len(ok)
        agg["j_seq_recall"] = _mean([1.0 if r["j_mean"] > 0.5 else 0.0 for r in ok])
        agg["f_seq_recall"] = _mean([1.0 if r["f_mean"] > 0.5 else 0.0 for r in ok])
        out.append(agg)
    ranked = sorted((a for a in out if a["j_mean"] is not None), key=lambda a: (-a["j_mean"], a["config"]))
    for i, a in enumerate(ranked, 1):
        a["rank"] = i
    for a in out:
        a.setdefault("rank", None)
    return out


@dataclass
class BenchmarkResult:
    rows: list[dict]
    aggregate: list[dict]
    config: PipelineConfig
    dataset: str


def run_benchmark(cfg: PipelineConfig, dataset) -> BenchmarkResult:
    """Sweep (supervoxel source x level x consensus mode) over every video under ``dataset``."""
    videos = io_ingest.list_videos(dataset)
    if not videos:
        raise NotFoundError(f"{dataset}: no video directories with frames/")
    paths = [str(v.root) for v in videos]
    if cfg.workers > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(paths))) as pool:
            per_video = list(pool.map(benchmark_video, paths, [cfg] * len(paths)))
    else:
        per_video = [benchmark_video(p, cfg) for p in paths]
    rows = [r for rs in per_video for r in rs]
    if cfg.oracle_best and len(cfg.sweep_levels()) > 1:
        rows += _oracle_best_rows(rows)
    rows.sort(key=lambda r: (r["video"], r["config"]))
    return BenchmarkResult(rows, aggregate(rows), cfg, str(dataset))
