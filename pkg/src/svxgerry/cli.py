"""Command line interface.

Subcommands::

    segment      segment one video directory
    benchmark    sweep supervoxel source x level x consensus mode over a dataset
    eval         score a directory of masks against ground truth
    supervoxels  generate a native hierarchy and export it as RGB label images
    synth        write a synthetic translating-square dataset

Every configuration key can be set in a ``key=value`` file (``--config``) and
overridden by a flag of the same name, e.g. ``--hierarchy_level 2``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io_ingest, report
from .config import PipelineConfig, config_keys, dump_config, load_config
from .core import downscale_volume
from .metrics import evaluate_sequence
from .pipeline import run_benchmark, run_pipeline
from .supervoxels import generate_hierarchy, mean_volume
from .synthetic import make_dataset


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key=value configuration file")
    group = p.add_argument_group("configuration overrides")
    for key in config_keys():
        group.add_argument(f"--{key}", dest=f"cfg_{key}", metavar=key.upper(), default=None)


def _config(args) -> PipelineConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    return load_config(args.config, overrides)


def cmd_segment(args) -> int:
    cfg = _config(args)
    result = run_pipeline(cfg, args.video, args.out)
    summary = {"video": result.name, "config": result.config_name, "svx_volume": result.svx_volume}
    if result.score is not None:
        summary.update(result.score.summary())
    (Path(args.out) / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    (Path(args.out) / "config.txt").write_text(dump_config(cfg), encoding="utf-8")
    print(json.dumps(summary, indent=2))
    return 0


def cmd_benchmark(args) -> int:
    cfg = _config(args)
    result = run_benchmark(cfg, args.dataset)
    csv_path, json_path = report.write_reports(result, args.out)
    print(report.format_table(result.aggregate))
    failed = [r for r in result.rows if r["status"] != "ok"]
    if failed:
        print(f"{len(failed)} row(s) failed; see {csv_path}", file=sys.stderr)
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_eval(args) -> int:
    gt = io_ingest.load_ground_truth(args.ground_truth)
    masks = io_ingest.load_ground_truth(args.masks, gt.shape[0], gt.shape[1:])
    score = evaluate_sequence(masks, gt, args.boundary_tol)
    out = score.summary()
    if args.per_frame:
        out["per_frame_j"] = score.per_frame_j
        out["per_frame_f"] = score.per_frame_f
    print(json.dumps(out, indent=2))
    return 0


def cmd_supervoxels(args) -> int:
    cfg = _config(args)
    video = io_ingest.load_frames(Path(args.video) / "frames")
    reduced = downscale_volume(video, cfg.downscale_factor)
    hierarchy = generate_hierarchy(reduced, cfg.svx_k, cfg.svx_min_size, cfg.svx_levels)
    out = Path(args.out) if args.out else Path(args.video) / "supervoxels" / "NATIVE"
    names = io_ingest.frame_names(Path(args.video) / "frames")
    for level, labeling in enumerate(hierarchy.levels):
        io_ingest.write_supervoxel_labels(labeling.labels, out / str(level), names)
        print(f"level {level}: {labeling.region_count} supervoxels, mean volume {mean_volume(hierarchy, level):.1f}")
    print(f"wrote {len(hierarchy)} levels to {out}")
    return 0


def cmd_synth(args) -> int:
    root = make_dataset(args.out, args.videos, args.frames, args.size, args.size, args.seed)
    print(f"wrote {args.videos} synthetic videos to {root}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svxgerry", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment one video")
    p.add_argument("video", type=Path, help="video directory containing frames/")
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("benchmark", help="configuration sweep over a dataset")
    p.add_argument("dataset", type=Path, help="directory of video directories")
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("eval", help="score masks against ground truth")
    p.add_argument("masks", type=Path)
    p.add_argument("ground_truth", type=Path)
    p.add_argument("--boundary_tol", type=float, default=PipelineConfig.boundary_tol)
    p.add_argument("--per_frame", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("supervoxels", help="generate and export a native supervoxel hierarchy")
    p.add_argument("video", type=Path)
    p.add_argument("--out", type=Path, default=None, help="default: <video>/supervoxels/NATIVE")
    _add_config_flags(p)
    p.set_defaults(func=cmd_supervoxels)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("out", type=Path)
    p.add_argument("--videos", type=int, default=2)
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
