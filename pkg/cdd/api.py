"""Python API for the cdd package.

Each function mirrors one command of the ``cdd`` command line and writes the same
files, so experiments can be scripted without going through argparse.
"""

import logging
import re
import time
from pathlib import Path
from typing import Optional, Sequence

from .config import DEFAULT_DECAY_RATE, VERSION
from .distill import (
    build_reference_distribution,
    candidate_curve,
    distill_all,
    reference_curve,
    rescale,
    write_curves,
    write_summary,
)
from .exceptions import UsageError
from .losses import CloudMetrics, cloud_metrics
from .models import (
    CropSpec,
    DistillConfig,
    DistillResult,
    GradientWeightCurve,
    PointCloud,
    RunManifest,
    ShapeSpec,
    TrainConfig,
)
from .pointcloud import crop, generate, read_cloud, write_xyz
from .records import OutputSet, write_csv, write_manifest, write_train_log
from .resolve import ReferenceSource
from .trainer import TrainResult, compare_runs, run_training
from .weightfns import ParamGrid, WeightingFunction

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
SNAPSHOT_PATTERN = re.compile(r"^snap_(\d+)\.xyz$")


def partial_path_for(out: Path) -> Path:
    """Path of the cropped cloud written next to ``out``: ``<stem>_partial.xyz``."""
    out = Path(out)
    return out.with_name(f"{out.stem}_partial.xyz")


def manifest_path_for(out: Path) -> Path:
    """Manifest written next to a single-file output: ``<stem>.manifest.json``."""
    out = Path(out)
    return out.with_name(f"{out.stem}.manifest.json")


def generate_clouds(
    shape: ShapeSpec,
    out: Path,
    crop_spec: Optional[CropSpec] = None,
    argv: Optional[Sequence[str]] = None,
) -> list[Path]:
    """Sample a shape, optionally crop it, and write the clouds as XYZ.

    Args:
        shape: Shape kind, point count and seed.
        out: Destination of the full cloud.
        crop_spec: When given, also write the cropped cloud to
            ``<stem>_partial.xyz``.
        argv: Command line recorded in ``<stem>.manifest.json``.

    Returns:
        Paths written, full cloud first, manifest last.
    """
    out = Path(out)
    with OutputSet() as outputs:
        cloud = generate(shape)
        outputs.add(write_xyz(cloud, out))
        config = {"shape": shape.kind, "count": shape.count}
        if crop_spec is not None:
            outputs.add(write_xyz(crop(cloud, crop_spec), partial_path_for(out)))
            config.update({"crop_direction": list(crop_spec.direction), "keep_ratio": crop_spec.keep_ratio})
        manifest = RunManifest(
            command="gen",
            argv=list(argv or []),
            config=config,
            version=VERSION,
            seed=shape.seed,
            outputs=[p.name for p in outputs.paths] + [manifest_path_for(out).name],
        )
        outputs.add(write_manifest(manifest, manifest_path_for(out)))
    return outputs.paths


def evaluate_files(pred_path: Path, gt_path: Path, tau: float = 0.01) -> CloudMetrics:
    """L1-CD, L2-CD and F1 between two cloud files.

    Raises:
        FileNotFoundError: If a file is missing.
        CloudParseError: If a file is malformed.
    """
    return cloud_metrics(read_cloud(pred_path), read_cloud(gt_path), tau)


def curve_columns(weightings: Sequence[WeightingFunction]) -> list[str]:
    """Column names ``d,z_ref,z_<kind>...``; repeated kinds get ``_2``, ``_3`` suffixes."""
    columns = ["d", "z_ref"]
    seen: dict[str, int] = {}
    for f in weightings:
        seen[f.kind] = seen.get(f.kind, 0) + 1
        suffix = "" if seen[f.kind] == 1 else f"_{seen[f.kind]}"
        columns.append(f"z_{f.kind}{suffix}")
    return columns


def curves_table(
    weightings: Sequence[WeightingFunction],
    cfg: Optional[DistillConfig] = None,
    rescaled: bool = False,
) -> tuple[list[str], list[GradientWeightCurve]]:
    """Reference curve followed by one candidate curve per weighting.

    Returns:
        Tuple of (column names, curves), the reference curve first.
    """
    cfg = cfg or DistillConfig()
    curves = [reference_curve(cfg)] + [candidate_curve(f, cfg) for f in weightings]
    if rescaled:
        curves = [rescale(c) for c in curves]
    return curve_columns(weightings), curves


def format_curves(curves: Sequence[GradientWeightCurve]) -> list[tuple]:
    """Rows of a curves table: the distance then every curve's value."""
    d = curves[0].d_values
    return [(d[i],) + tuple(c.z_values[i] for c in curves) for i in range(d.size)]


def run_distill(
    kinds: Sequence[str],
    out: Path,
    cfg: Optional[DistillConfig] = None,
    reference: ReferenceSource = ReferenceSource("exp_decay", rate=DEFAULT_DECAY_RATE),
    grids: Optional[dict[str, ParamGrid]] = None,
    argv: Optional[Sequence[str]] = None,
) -> list[DistillResult]:
    """Distill every kind and write the results into ``out``.

    One kind writes ``curves.csv``; several write ``curves_<kind>.csv`` each.
    ``summary.csv`` holds one row per kind, best objective first, and
    ``manifest.json`` records the run.

    Returns:
        Results, best objective first.
    """
    cfg = cfg or DistillConfig()
    out = Path(out)
    with OutputSet(out) as outputs:
        dist = build_reference_distribution(reference, cfg)
        results = distill_all(kinds, cfg, dist, grids)
        for result in results:
            name = "curves.csv" if len(results) == 1 else f"curves_{result.kind}.csv"
            outputs.add(write_curves(result, out / name))
        outputs.add(write_summary(results, out / "summary.csv"))
        config = {
            "distill": cfg.to_dict(),
            "kinds": list(kinds),
            "reference": reference.describe(),
            "grid": "default" if not grids else {k: g.values for k, g in grids.items()},
        }
        manifest = RunManifest(
            command="distill",
            argv=list(argv or []),
            config=config,
            version=VERSION,
            outputs=outputs.names() + [MANIFEST_NAME],
        )
        outputs.add(write_manifest(manifest, out / MANIFEST_NAME))
    return results


def snapshot_name(iteration: int) -> str:
    """File name of the snapshot taken at ``iteration``."""
    return f"snap_{iteration}.xyz"


def run_train(
    gt_path: Path,
    partial_path: Path,
    cfg: TrainConfig,
    out: Path,
    argv: Optional[Sequence[str]] = None,
    record_timing: bool = False,
) -> TrainResult:
    """Train free points and write ``final.xyz``, ``log.csv``, snapshots and a manifest.

    Args:
        gt_path: Ground-truth cloud file.
        partial_path: Partial cloud file.
        cfg: Training configuration.
        out: Output directory.
        argv: Command line recorded in the manifest.
        record_timing: Keep wall-clock ``elapsed_ms``; otherwise it is written
            as 0 so that repeated runs produce identical files.

    Raises:
        DivergenceError: If training diverges; no outputs are left behind.
    """
    out = Path(out)
    gt = read_cloud(gt_path)
    partial = read_cloud(partial_path)
    clock = time.perf_counter if record_timing else (lambda: 0.0)
    with OutputSet(out) as outputs:
        result = run_training(partial, gt, cfg, clock=clock)
        outputs.add(write_xyz(result.model.to_cloud(), out / "final.xyz"))
        outputs.add(write_train_log(result.log, out / "log.csv"))
        for iteration, points in sorted(result.snapshots.items()):
            outputs.add(write_xyz(PointCloud(points), out / snapshot_name(iteration)))
        config = cfg.to_dict()
        config.update({"gt": str(gt_path), "partial": str(partial_path)})
        manifest = RunManifest(
            command="train",
            argv=list(argv or []),
            config=config,
            version=VERSION,
            seed=cfg.seed,
            outputs=outputs.names() + [MANIFEST_NAME],
        )
        outputs.add(write_manifest(manifest, out / MANIFEST_NAME))
    return result


def read_snapshots(directory: Path) -> dict:
    """Load every ``snap_<iter>.xyz`` of a run directory, keyed by iteration.

    Raises:
        UsageError: If the directory holds no snapshots.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise UsageError(f"run directory not found: {directory}")
    snapshots = {}
    for path in sorted(directory.iterdir()):
        match = SNAPSHOT_PATTERN.match(path.name)
        if match:
            snapshots[int(match.group(1))] = read_cloud(path).points
    if not snapshots:
        raise UsageError(f"no snapshot files (snap_<iter>.xyz) in {directory}")
    return snapshots


def compare_run_dirs(run_a: Path, run_b: Path) -> list[tuple[int, float]]:
    """Distance between two runs' snapshots at every shared iteration.

    Raises:
        UsageError: If the runs were not snapshotted at the same iterations.
    """
    snaps_a = read_snapshots(run_a)
    snaps_b = read_snapshots(run_b)
    if set(snaps_a) != set(snaps_b):
        raise UsageError(
            f"snapshot iterations differ between {run_a} and {run_b}: "
            f"{sorted(snaps_a)} vs {sorted(snaps_b)}"
        )
    return compare_runs(snaps_a, snaps_b)


def write_curves_table(
    weightings: Sequence[WeightingFunction],
    out: Path,
    cfg: Optional[DistillConfig] = None,
    rescaled: bool = False,
    argv: Optional[Sequence[str]] = None,
) -> list[Path]:
    """Write the curves table to ``out`` as CSV, with ``<stem>.manifest.json`` beside it.

    Returns:
        Paths written, the table first.
    """
    cfg = cfg or DistillConfig()
    out = Path(out)
    with OutputSet() as outputs:
        columns, curves = curves_table(weightings, cfg, rescaled)
        outputs.add(write_csv(out, columns, format_curves(curves)))
        manifest = RunManifest(
            command="curves",
            argv=list(argv or []),
            config={
                "distill": cfg.to_dict(),
                "weightings": [f.label() for f in weightings],
                "rescaled": rescaled,
            },
            version=VERSION,
            outputs=[out.name, manifest_path_for(out).name],
        )
        outputs.add(write_manifest(manifest, manifest_path_for(out)))
    return outputs.paths
