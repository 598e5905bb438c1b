"""Free-point completion training with any Chamfer-family loss.

The completion network is replaced by its output: the trainable parameters are
the predicted point coordinates themselves. Each iteration recomputes the
nearest-neighbour assignment, evaluates the loss and its gradient with that
assignment held fixed, and takes one optimizer step. Runs are deterministic for a
given configuration and inputs.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .exceptions import DivergenceError, InvalidArgumentError
from .losses import cloud_metrics, evaluate_with_grad
from .models import (
    CropSpec,
    FreePointModel,
    LogRow,
    NearestAssignment,
    PointCloud,
    ShapeSpec,
    TrainConfig,
    TrainLog,
)
from .neighbors import assign
from .optim import make_optimizer
from .pointcloud import crop, generate, make_rng

logger = logging.getLogger(__name__)

StepCallback = Callable[[int, NearestAssignment], None]


@dataclass
class TrainResult:
    """Everything a training run produces.

    Attributes:
        model: Final free points
        log: Convergence log
        snapshots: Copies of the points keyed by iteration
        final_assignment: Nearest-neighbour assignment at the final points
    """
    model: FreePointModel
    log: TrainLog
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    final_assignment: Optional[NearestAssignment] = None


def default_task(
    n: int = 512,
    seed: int = 42,
    keep_ratio: float = 0.5,
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0),
) -> tuple[PointCloud, PointCloud]:
    """The desk-scale completion task: a sphere and its half-space crop.

    Returns:
        Tuple of (partial, ground truth).
    """
    gt = generate(ShapeSpec("sphere", n, seed))
    return crop(gt, CropSpec(direction, keep_ratio)), gt


def init_points(partial: PointCloud, cfg: TrainConfig, output_size: int) -> np.ndarray:
    """Initial free points for a run.

    ``jitter`` samples partial points with replacement and adds isotropic Gaussian
    noise; ``copy_partial`` repeats the partial points in order; ``uniform_box``
    draws from [-1, 1]^3.
    """
    rng = make_rng(cfg.seed)
    if cfg.init == "jitter":
        idx = rng.integers(0, len(partial), size=output_size)
        noise = rng.normal(0.0, cfg.jitter_sigma, size=(output_size, 3))
        return partial.points[idx] + noise
    if cfg.init == "copy_partial":
        return np.resize(partial.points, (output_size, 3)).copy()
    return rng.uniform(-1.0, 1.0, size=(output_size, 3))


def run_training(
    partial: PointCloud,
    gt: PointCloud,
    cfg: TrainConfig,
    *,
    clock: Callable[[], float] = time.perf_counter,
    on_step: Optional[StepCallback] = None,
) -> TrainResult:
    """Optimize free points against ``gt`` under ``cfg.loss``.

    Args:
        partial: Observed partial cloud used for initialization.
        gt: Ground-truth cloud.
        cfg: Training configuration.
        clock: Seconds counter for the ``elapsed_ms`` column.
        on_step: Called with ``(iteration, assignment)`` at every iteration,
            including the final evaluation.

    Returns:
        TrainResult with the final model, the log and any snapshots.

    Raises:
        DivergenceError: If the points, loss or gradient become non-finite.
    """
    output_size = cfg.output_size or len(gt)
    points = init_points(partial, cfg, output_size)
    optimizer = make_optimizer(cfg.optimizer, cfg.lr)
    log = TrainLog()
    snapshots: dict[int, np.ndarray] = {}
    logger.info(
        "Training %d points for %d iterations with %s (%s, lr=%g, seed=%d)",
        output_size, cfg.iters, cfg.loss.describe(), cfg.optimizer, cfg.lr, cfg.seed,
    )

    start = clock()
    assignment = None
    for it in range(cfg.iters + 1):
        if not np.all(np.isfinite(points)):
            raise DivergenceError(it, "point coordinates")
        cloud = PointCloud(points)
        assignment = assign(cloud, gt)
        step = evaluate_with_grad(cfg.loss, cloud, gt, assignment)
        if not np.isfinite(step.value):
            raise DivergenceError(it, "loss")
        if not np.all(np.isfinite(step.grad)):
            raise DivergenceError(it, "gradient")

        final = it == cfg.iters
        if it % cfg.eval_every == 0 or final:
            metrics = cloud_metrics(cloud, gt, cfg.tau, assignment)
            row = LogRow(
                iter=it,
                loss=step.value,
                grad_norm=float(np.linalg.norm(step.grad)),
                l1cd=metrics.l1cd,
                l2cd=metrics.l2cd,
                f1=metrics.f1,
                elapsed_ms=(clock() - start) * 1000.0,
            )
            log.append(row)
            logger.debug("iter=%d loss=%.6g l2cd=%.6g f1=%.4f", it, row.loss, row.l2cd, row.f1)
        if cfg.snapshot_every is not None and (it % cfg.snapshot_every == 0 or final):
            snapshots[it] = points.copy()
        if on_step is not None:
            on_step(it, assignment)
        if final:
            break
        optimizer.step(points, step.grad)

    logger.info(
        "Finished: loss %.6g -> %.6g, l2cd %.6g -> %.6g",
        log.first.loss, log.last.loss, log.first.l2cd, log.last.l2cd,
    )
    model = FreePointModel(points=points, init=cfg.init)
    return TrainResult(model=model, log=log, snapshots=snapshots, final_assignment=assignment)


def train(
    partial: PointCloud,
    gt: PointCloud,
    cfg: TrainConfig,
    *,
    clock: Callable[[], float] = time.perf_counter,
) -> tuple[FreePointModel, TrainLog]:
    """Train free points and return the final model and its log."""
    result = run_training(partial, gt, cfg, clock=clock)
    return result.model, result.log


def compare_runs(
    snapshots_a: Mapping[int, np.ndarray],
    snapshots_b: Mapping[int, np.ndarray],
) -> list[tuple[int, float]]:
    """Frobenius distance between two runs' points at every shared snapshot.

    Args:
        snapshots_a: Points of run A keyed by iteration.
        snapshots_b: Points of run B keyed by iteration.

    Returns:
        ``(iteration, distance)`` pairs in increasing iteration order.

    Raises:
        InvalidArgumentError: If the iteration sets or the point shapes differ.
    """
    if set(snapshots_a) != set(snapshots_b):
        only_a = sorted(set(snapshots_a) - set(snapshots_b))
        only_b = sorted(set(snapshots_b) - set(snapshots_a))
        raise InvalidArgumentError(
            f"snapshot iterations differ (only in A: {only_a}, only in B: {only_b})"
        )
    distances = []
    for it in sorted(snapshots_a):
        a = np.asarray(snapshots_a[it], dtype=np.float64)
        b = np.asarray(snapshots_b[it], dtype=np.float64)
        if a.shape != b.shape:
            raise InvalidArgumentError(
                f"snapshot shapes differ at iteration {it}: {a.shape} vs {b.shape}"
            )
        distances.append((it, float(np.linalg.norm(a - b))))
    return distances
