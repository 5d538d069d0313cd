"""Pipeline configuration: a flat ``key=value`` file with one CLI flag per key."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

CONSENSUS_MODES = ("none", "local", "nonlocal", "both")
CUE_SOURCES = ("auto", "precomputed", "builtin")


@dataclass(frozen=True)
class PipelineConfig:
    # resolution used for supervoxels; cues always run at full resolution
    downscale_factor: int = 4
    cue_source: str = "auto"
    # "native" or "ingested:<METHOD>" (reads supervoxels/<METHOD>/<level>/)
    supervoxel_source: str = "native"
    svx_k: float = 60.0
    svx_min_size: int = 20
    svx_levels: int = 6
    hierarchy_level: int = 0
    consensus_mode: str = "local"
    w0: float | None = None
    neighbor_ratio: float = 0.1
    distance_floor: float = 1e-6
    tukey_k: float = 1.5
    magnitude_mode: str = "literal"
    consensus_scale: float = 2.0
    consensus_offset: float = -1.0
    f0_scope: str = "frame"
    connectivity: int = 8
    boundary_tol: float = 0.008
    flow_patch: int = 8
    flow_radius: int = 8
    flow_levels: int = 3
    flow_median: int = 3
    # benchmark sweep axes, comma separated; empty falls back to the single-run key
    hierarchy_levels: str = ""
    consensus_modes: str = ""
    supervoxel_sources: str = ""
    include_mvso: bool = True
    oracle_best: bool = True
    # per-video level choice, "video:level,video:level"
    level_overrides: str = ""
    workers: int = 1

    def __post_init__(self):
        errors = []
        if self.downscale_factor < 1:
            errors.append("downscale_factor must be >= 1")
        if self.cue_source not in CUE_SOURCES:
            errors.append(f"cue_source must be one of {CUE_SOURCES}")
        for src in [self.supervoxel_source, *self.sweep_sources()]:
            if src != "native" and not (src.startswith("ingested:") and len(src) > len("ingested:")):
                errors.append(f"bad supervoxel source {src!r}")
        if self.svx_k <= 0 or self.svx_min_size < 1 or self.svx_levels < 1:
            errors.append("svx_k > 0, svx_min_size >= 1 and svx_levels >= 1 required")
        for mode in [self.consensus_mode, *self.sweep_modes()]:
            if mode not in CONSENSUS_MODES:
                errors.append(f"consensus mode must be one of {CONSENSUS_MODES}, got {mode!r}")
        if any(level < 0 for level in [self.hierarchy_level, *self.sweep_levels()]):
            errors.append("hierarchy levels must be >= 0")
        if not 0 < self.neighbor_ratio <= 1:
            errors.append("neighbor_ratio must lie in (0, 1]")
        if self.distance_floor <= 0:
            errors.append("distance_floor must be > 0")
        if self.tukey_k < 0:
            errors.append("tukey_k must be >= 0")
        if self.magnitude_mode not in ("literal", "sqrt"):
            errors.append("magnitude_mode must be literal or sqrt")
        if self.f0_scope not in ("frame", "video"):
            errors.append("f0_scope must be frame or video")
        if self.connectivity not in (4, 8):
            errors.append("connectivity must be 4 or 8")
        if self.boundary_tol <= 0:
            errors.append("boundary_tol must be > 0")
        if min(self.flow_patch, self.flow_levels, self.flow_median) < 1 or self.flow_radius < 0:
            errors.append("flow parameters must be positive")
        if self.workers < 1:
            errors.append("workers must be >= 1")
        self.overrides()
        if errors:
            raise ValueError("; ".join(errors))

    def sweep_levels(self) -> list[int]:
        return [int(x) for x in _split(self.hierarchy_levels)] or [self.hierarchy_level]

    def sweep_modes(self) -> list[str]:
        return _split(self.consensus_modes) or [self.consensus_mode]

    def sweep_sources(self) -> list[str]:
        return _split(self.supervoxel_sources) or [self.supervoxel_source]

    def overrides(self) -> dict[str, int]:
        out = {}
        for item in _split(self.level_overrides):
            name, sep, level = item.rpartition(":")
            if not sep or not name:
                raise ValueError(f"bad level override {item!r}, expected video:level")
            out[name] = int(level)
        return out

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _split(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


_DEFAULTS = PipelineConfig()


def _convert(key: str, raw: str):
    default = getattr(_DEFAULTS, key)
    raw = raw.strip()
    if key == "w0":
        return None if raw.lower() in ("", "none", "default") else float(raw)
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def config_keys() -> list[str]:
    return [f.name for f in fields(PipelineConfig)]


def parse_config_text(text: str) -> dict:
    values = {}
    keys = set(config_keys())
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"line {lineno}: expected key=value")
        if key not in keys:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, value)
    return values


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then the file at ``path``, then ``overrides`` (raw strings or typed values)."""
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        values[key] = _convert(key, value) if isinstance(value, str) else value
    return replace(_DEFAULTS, **values)


def dump_config(cfg: PipelineConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if value is None:
            value = "none"
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"
