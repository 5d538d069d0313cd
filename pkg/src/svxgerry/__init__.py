"""Unsupervised video object segmentation by saliency outliers and supervoxel consensus."""

from .config import PipelineConfig, load_config
from .core import FormatError, MaskSequence, NotFoundError, ScoreField, VideoVolume
from .pipeline import run_benchmark, run_pipeline

__all__ = [
    "FormatError",
    "MaskSequence",
    "NotFoundError",
    "PipelineConfig",
    "ScoreField",
    "VideoVolume",
    "load_config",
    "run_benchmark",
    "run_pipeline",
]
__version__ = "0.1.0"
