"""Loss distillation by gradient matching.

The HyperCD gradient weight z_H(d) is the reference. For a weighting function f
with mode m, the weighted Chamfer gradient weight is approximated either by its
dominant term ``f(m + d)`` or by a forward difference

    z_W(d) = (f(m + d + delta) - f(m + d)) / delta * d + f(m + d)

Both curves are divided by their maxima, and the parameters of f are chosen from
a finite grid to minimize ``sum_i p(d_i) |z_H(d_i) - z_W(d_i)|`` where p is a
reference distribution of nearest-neighbour distances.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .config import DEFAULT_DECAY_RATE, pool_size
from .exceptions import CddError, CloudParseError, InvalidArgumentError
from .losses import hypercd_weight
from .models import (
    DistillConfig,
    DistillResult,
    GradientWeightCurve,
    LossSpec,
    ReferenceDistribution,
    TrainConfig,
)
from .records import format_number, write_csv
from .resolve import ReferenceSource, parse_reference
from .trainer import default_task, run_training
from .weightfns import WEIGHT_KINDS, ParamGrid, Weighting, WeightingFunction, default_grid

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ("d", "z_ref", "z_fit")
SUMMARY_COLUMNS = ("kind", "param_names", "param_values", "objective")
DEFAULT_SELFGEN_ITERS = 500


# Curves -----------------------------------------------------------------------

def reference_curve(cfg: DistillConfig) -> GradientWeightCurve:
    """HyperCD gradient weights on the distance grid, not rescaled."""
    d = cfg.grid()
    return GradientWeightCurve(d, hypercd_weight(d, cfg.alpha))


def candidate_curve(f: Weighting, cfg: DistillConfig) -> GradientWeightCurve:
    """Weighted-CD gradient weights of ``f`` on the distance grid, not rescaled.

    Args:
        f: Weighting function, evaluated to the right of its mode.
        cfg: Grid and approximation settings.

    Returns:
        The curve under ``cfg.approx``.
    """
    d = cfg.grid()
    x = f.mode() + d
    base = np.asarray(f.pdf(x), dtype=np.float64)
    if cfg.approx == "dominant":
        return GradientWeightCurve(d, base)
    ahead = np.asarray(f.pdf(x + cfg.delta), dtype=np.float64)
    slope = (ahead - base) / cfg.delta
    return GradientWeightCurve(d, slope * d + base)


def constant_curve(cfg: DistillConfig) -> GradientWeightCurve:
    """The rescaled gradient weight of plain L1 Chamfer distance (z = 1)."""
    d = cfg.grid()
    return GradientWeightCurve(d, np.ones_like(d), rescaled=True)


def rescale(curve: GradientWeightCurve) -> GradientWeightCurve:
    """Divide a curve by its maximum.

    Raises:
        InvalidArgumentError: If the curve has no positive finite maximum.
    """
    if curve.rescaled:
        return curve
    z = curve.z_values
    peak = float(np.max(z)) if z.size else 0.0
    if not (math.isfinite(peak) and peak > 0) or not np.all(np.isfinite(z)):
        raise InvalidArgumentError("cannot rescale a curve without a positive finite maximum")
    return GradientWeightCurve(curve.d_values, z / peak, rescaled=True)


def objective(
    ref: GradientWeightCurve,
    cand: GradientWeightCurve,
    dist: ReferenceDistribution,
) -> float:
    """Probability-weighted absolute gap between two rescaled curves.

    Raises:
        InvalidArgumentError: If the curves and distribution use different
            grids or a curve is not rescaled.
    """
    if not (ref.rescaled and cand.rescaled):
        raise InvalidArgumentError("objective compares rescaled curves only")
    if not (
        np.array_equal(ref.d_values, cand.d_values)
        and np.array_equal(ref.d_values, dist.d_values)
    ):
        raise InvalidArgumentError("curves and distribution must share the same distance grid")
    return float(np.sum(dist.p_values * np.abs(ref.z_values - cand.z_values)))


# Grid search ------------------------------------------------------------------

def _try_objective(
    f: WeightingFunction,
    cfg: DistillConfig,
    ref: GradientWeightCurve,
    dist: ReferenceDistribution,
) -> Optional[float]:
    try:
        return objective(ref, rescale(candidate_curve(f, cfg)), dist)
    except CddError as e:
        logger.debug("Skipping %s: %s", f.label(), e)
        return None


def grid_search(
    kind: str,
    grid: Optional[ParamGrid] = None,
    cfg: Optional[DistillConfig] = None,
    dist: Optional[ReferenceDistribution] = None,
) -> DistillResult:
    """Exhaustively fit the parameters of one weighting family.

    Args:
        kind: Weighting family.
        grid: Candidate parameters (default grid of the kind when None).
        cfg: Distillation settings (defaults when None).
        dist: Reference distribution (exponential decay with rate 300 when None).

    Returns:
        DistillResult for the first grid point, in lexicographic order, with the
        smallest objective.

    Raises:
        InvalidArgumentError: If the grid belongs to another kind or no grid
            point yields a usable curve.
        UnknownWeightingError: If ``kind`` is unknown.
    """
    grid = grid if grid is not None else default_grid(kind)
    if grid.kind != kind:
        raise InvalidArgumentError(f"grid is for {grid.kind}, not {kind}")
    cfg = cfg or DistillConfig()
    dist = dist or exp_decay_distribution(DEFAULT_DECAY_RATE, cfg)
    ref = rescale(reference_curve(cfg))

    candidates = [WeightingFunction(kind, params) for params in grid.points()]
    with ThreadPoolExecutor(max_workers=min(pool_size(), len(candidates))) as pool:
        scores = list(pool.map(lambda f: _try_objective(f, cfg, ref, dist), candidates))

    best = None
    for i, score in enumerate(scores):
        if score is not None and (best is None or score < scores[best]):
            best = i
    if best is None:
        raise InvalidArgumentError(f"no grid point of {kind} produced a usable curve")

    winner = candidates[best]
    evaluated = sum(score is not None for score in scores)
    logger.info(
        "Best %s: %s (objective %.6g, %d/%d points)",
        kind, winner.label(), scores[best], evaluated, len(candidates),
    )
    return DistillResult(
        kind=kind,
        best_params=dict(winner.params),
        objective=scores[best],
        reference_curve=ref,
        fitted_curve=rescale(candidate_curve(winner, cfg)),
        approx=cfg.approx,
        evaluated=evaluated,
    )


def distill_all(
    kinds: Iterable[str] = WEIGHT_KINDS,
    cfg: Optional[DistillConfig] = None,
    dist: Optional[ReferenceDistribution] = None,
    grids: Optional[Mapping[str, ParamGrid]] = None,
) -> list[DistillResult]:
    """Run the grid search for several kinds, best fit first.

    Results with equal objectives keep the order of ``kinds``.
    """
    grids = grids or {}
    results = [grid_search(kind, grids.get(kind), cfg, dist) for kind in kinds]
    return sorted(results, key=lambda r: r.objective)


# Reference distributions --------------------------------------------------------

def uniform_distribution(cfg: DistillConfig) -> ReferenceDistribution:
    """Equal probability on every grid distance."""
    d = cfg.grid()
    return ReferenceDistribution(d, np.full(d.size, 1.0 / d.size))


def exp_decay_distribution(rate: float, cfg: DistillConfig) -> ReferenceDistribution:
    """Probabilities proportional to ``exp(-rate * d)`` on the grid.

    Raises:
        InvalidArgumentError: If ``rate`` is negative or not finite.
    """
    if not (math.isfinite(rate) and rate >= 0):
        raise InvalidArgumentError(f"decay rate must be finite and >= 0, got {rate}")
    d = cfg.grid()
    w = np.exp(-rate * d)
    return ReferenceDistribution(d, w / w.sum())


def histogram_distribution(
    distances: Sequence[float],
    cfg: DistillConfig,
    weights: Optional[Sequence[float]] = None,
) -> ReferenceDistribution:
    """Histogram distances into the nearest grid bin and normalize.

    Distances beyond half a step past the last grid point are dropped.

    Raises:
        InvalidArgumentError: If a distance or weight is negative, or nothing
            lands inside the grid.
    """
    grid = cfg.grid()
    d = np.asarray(distances, dtype=np.float64)
    w = np.ones_like(d) if weights is None else np.asarray(weights, dtype=np.float64)
    if d.shape != w.shape:
        raise InvalidArgumentError("distances and weights must have the same length")
    if np.any(d < 0) or np.any(w < 0):
        raise InvalidArgumentError("distances and weights must be >= 0")

    half_step = (grid[-1] - grid[-2]) / 2.0 if grid.size > 1 else cfg.step / 2.0
    inside = d <= grid[-1] + half_step
    edges = (grid[:-1] + grid[1:]) / 2.0
    bins = np.searchsorted(edges, d[inside], side="left")
    counts = np.bincount(bins, weights=w[inside], minlength=grid.size)
    total = counts.sum()
    if not total > 0:
        raise InvalidArgumentError("no distances fall inside the distance grid")
    logger.debug("Histogrammed %d of %d distances", int(inside.sum()), d.size)
    return ReferenceDistribution(grid, counts / total)


def parse_distribution_csv(text: str, path: Optional[str] = None) -> tuple[np.ndarray, np.ndarray]:
    """Parse a ``d,p`` CSV; the second column may hold counts or probabilities.

    Raises:
        CloudParseError: On a missing header, a malformed row or a negative value.
    """
    lines = text.splitlines()
    if not lines or [h.strip() for h in lines[0].split(",")] != ["d", "p"]:
        raise CloudParseError("expected header 'd,p'", 1, path)
    d_values, p_values = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise CloudParseError(f"expected 2 fields, got {len(fields)}", lineno, path)
        try:
            d, p = float(fields[0]), float(fields[1])
        except ValueError:
            raise CloudParseError(f"cannot parse '{line.strip()}' as two numbers", lineno, path)
        if not (math.isfinite(d) and math.isfinite(p)):
            raise CloudParseError("values must be finite", lineno, path)
        if d < 0 or p < 0:
            raise CloudParseError("values must be >= 0", lineno, path)
        d_values.append(d)
        p_values.append(p)
    if not d_values:
        raise CloudParseError("no rows found", len(lines), path)
    return np.array(d_values), np.array(p_values)


def read_distribution(path: Path, cfg: DistillConfig) -> ReferenceDistribution:
    """Read an empirical distribution file and histogram it onto the grid."""
    with open(path, "r") as f:
        d, p = parse_distribution_csv(f.read(), str(path))
    return histogram_distribution(d, cfg, weights=p)


def self_generated_distribution(
    cfg: DistillConfig,
    iters: int = DEFAULT_SELFGEN_ITERS,
    seed: int = 0,
) -> ReferenceDistribution:
    """Distances observed while training with HyperCD on the default sphere task.

    Every nearest-neighbour distance, in both directions, from the last tenth of
    the run's iterations is histogrammed onto the grid.
    """
    partial, gt = default_task()
    train_cfg = TrainConfig(
        loss=LossSpec("hypercd", alpha=cfg.alpha),
        iters=iters,
        seed=seed,
        eval_every=iters,
    )
    window_start = iters - max(1, iters // 10) + 1
    collected: list[np.ndarray] = []

    def collect(it, assignment):
        if it >= window_start:
            collected.append(assignment.forward_dist)
            collected.append(assignment.backward_dist)

    logger.info("Generating reference distances from a %d-iteration HyperCD run", iters)
    run_training(partial, gt, train_cfg, on_step=collect)
    return histogram_distribution(np.concatenate(collected), cfg)


def build_reference_distribution(
    source: Union[str, ReferenceSource],
    cfg: Optional[DistillConfig] = None,
) -> ReferenceDistribution:
    """Build the reference distribution named by a spec string or parsed source.

    Args:
        source: ``uniform``, ``expdecay[:RATE]``, ``file:PATH`` or
            ``selfgen[:ITERS]``, or the corresponding ReferenceSource.
        cfg: Settings providing the distance grid (defaults when None).

    Returns:
        A distribution on the grid of ``cfg``.

    Raises:
        InvalidArgumentError: If the spec is invalid.
        CloudParseError: If a distribution file is malformed.
    """
    cfg = cfg or DistillConfig()
    if isinstance(source, str):
        source = parse_reference(source)
    if source.kind == "uniform":
        return uniform_distribution(cfg)
    if source.kind == "exp_decay":
        return exp_decay_distribution(source.rate, cfg)
    if source.kind == "empirical_file":
        return read_distribution(source.path, cfg)
    iters = source.iters if source.iters is not None else DEFAULT_SELFGEN_ITERS
    return self_generated_distribution(cfg, iters=iters)


# Export -------------------------------------------------------------------------

def summary_row(result: DistillResult) -> tuple:
    """Summary CSV row; names and values are joined with ``;``."""
    names = ";".join(result.best_params)
    values = ";".join(format_number(v) for v in result.best_params.values())
    return (result.kind, names, values, result.objective)


def write_curves(result: DistillResult, path: Path) -> Path:
    """Write the rescaled reference and fitted curves as ``d,z_ref,z_fit``."""
    rows = zip(
        result.reference_curve.d_values,
        result.reference_curve.z_values,
        result.fitted_curve.z_values,
    )
    return write_csv(path, CURVE_COLUMNS, rows)


def write_summary(results: Sequence[DistillResult], path: Path) -> Path:
    """Write one summary row per result."""
    return write_csv(path, SUMMARY_COLUMNS, (summary_row(r) for r in results))
