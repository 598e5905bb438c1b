"""Chamfer distance family: values, gradients and the F1 metric.

Every loss has the form

    (1/|pred|) sum_j g(d_j) + (1/|gt|) sum_k g(d_k)

where ``d_j`` (``d_k``) is the distance from a predicted (ground-truth) point to
its nearest neighbour in the other cloud, and ``g`` is

* ``cd_l1``: d
* ``cd_l2``: d^2
* ``hypercd``: arccosh(1 + alpha d^2)
* ``weighted_cd``: f(m + d) d, with m = mode(f) when mode shifting is on

Gradients hold the nearest-neighbour assignment fixed; each pair contributes
``z(d) (x - y) / d`` where ``z = dg/dd`` is the gradient weight. Pairs at
distance zero contribute nothing.
"""

import logging
from typing import NamedTuple, Optional

import numpy as np

from .config import DEFAULT_TAU
from .exceptions import InvalidArgumentError
from .models import LossGradient, LossSpec, NearestAssignment, PointCloud
from .neighbors import assign

logger = logging.getLogger(__name__)


def hypercd_weight(d, alpha: float = 1.0):
    """HyperCD gradient weight ``2 alpha d / sqrt((1 + alpha d^2)^2 - 1)``.

    Evaluated as ``2 sqrt(alpha) / sqrt(2 + alpha d^2)``, the same function with
    its limit sqrt(2 alpha) at d = 0 built in.
    """
    d = np.asarray(d, dtype=np.float64)
    out = 2.0 * np.sqrt(alpha) / np.sqrt(2.0 + alpha * d * d)
    return float(out) if out.ndim == 0 else out


def _shift(spec: LossSpec) -> float:
    return spec.weighting.mode() if spec.mode_shift else 0.0


def pair_terms(spec: LossSpec, d: np.ndarray) -> np.ndarray:
    """Per-pair loss terms ``g(d)`` for a loss spec."""
    if spec.kind == "cd_l1":
        return d
    if spec.kind == "cd_l2":
        return d * d
    if spec.kind == "hypercd":
        return np.arccosh(1.0 + spec.alpha * d * d)
    weights = np.asarray(spec.weighting.pdf(_shift(spec) + d), dtype=np.float64)
    return weights * d


def pair_weights(spec: LossSpec, d: np.ndarray) -> np.ndarray:
    """Per-pair gradient weights ``z(d) = dg/dd`` (only used where d > 0)."""
    if spec.kind == "cd_l1":
        return np.ones_like(d)
    if spec.kind == "cd_l2":
        return 2.0 * d
    if spec.kind == "hypercd":
        return hypercd_weight(d, spec.alpha)
    x = _shift(spec) + d
    f = np.asarray(spec.weighting.pdf(x), dtype=np.float64)
    f_prime = np.asarray(spec.weighting.pdf_prime(x), dtype=np.float64)
    return f_prime * d + f


def _check_clouds(pred: PointCloud, gt: PointCloud) -> None:
    if len(pred) == 0 or len(gt) == 0:
        raise InvalidArgumentError("loss evaluation needs two non-empty clouds")


def evaluate(
    spec: LossSpec,
    pred: PointCloud,
    gt: PointCloud,
    assignment: Optional[NearestAssignment] = None,
) -> float:
    """Evaluate a Chamfer-family loss.

    Args:
        spec: Loss to evaluate.
        pred: Predicted cloud.
        gt: Ground-truth cloud.
        assignment: Precomputed assignment from ``pred`` to ``gt``.

    Returns:
        Non-negative loss value.

    Raises:
        InvalidArgumentError: If either cloud is empty.
    """
    _check_clouds(pred, gt)
    if assignment is None:
        assignment = assign(pred, gt)
    forward = pair_terms(spec, assignment.forward_dist)
    backward = pair_terms(spec, assignment.backward_dist)
    return float(np.mean(forward) + np.mean(backward))


def evaluate_with_grad(
    spec: LossSpec,
    pred: PointCloud,
    gt: PointCloud,
    assignment: Optional[NearestAssignment] = None,
) -> LossGradient:
    """Evaluate a loss and its gradient with respect to the predicted points.

    Args:
        spec: Loss to evaluate.
        pred: Predicted cloud (the differentiated variable).
        gt: Ground-truth cloud.
        assignment: Precomputed assignment from ``pred`` to ``gt``.

    Returns:
        LossGradient whose value equals :func:`evaluate`.
    """
    _check_clouds(pred, gt)
    if assignment is None:
        assignment = assign(pred, gt)
    x, y = pred.points, gt.points
    grad = np.zeros_like(x)

    fd, fi = assignment.forward_dist, assignment.forward_idx
    coef = np.zeros_like(fd)
    moving = fd > 0
    coef[moving] = pair_weights(spec, fd[moving]) / fd[moving]
    grad += (coef / len(pred))[:, None] * (x - y[fi])

    bd, bi = assignment.backward_dist, assignment.backward_idx
    coef = np.zeros_like(bd)
    moving = bd > 0
    coef[moving] = pair_weights(spec, bd[moving]) / bd[moving]
    # Unbuffered, index-ordered accumulation into the matched predicted points.
    np.add.at(grad, bi, (coef / len(gt))[:, None] * (x[bi] - y))

    value = evaluate(spec, pred, gt, assignment)
    return LossGradient(value=value, grad=grad)


def f1_score(
    pred: PointCloud,
    gt: PointCloud,
    tau: float = DEFAULT_TAU,
    assignment: Optional[NearestAssignment] = None,
) -> float:
    """F-score of point matches closer than ``tau``.

    Precision is the fraction of predicted points whose nearest ground-truth point
    is closer than ``tau``; recall is the converse.

    Raises:
        InvalidArgumentError: If ``tau`` is not positive or a cloud is empty.
    """
    if not tau > 0:
        raise InvalidArgumentError(f"tau must be > 0, got {tau}")
    _check_clouds(pred, gt)
    if assignment is None:
        assignment = assign(pred, gt)
    precision = float(np.mean(assignment.forward_dist < tau))
    recall = float(np.mean(assignment.backward_dist < tau))
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


class CloudMetrics(NamedTuple):
    """Evaluation metrics between a prediction and its ground truth."""
    l1cd: float
    l2cd: float
    f1: float


_CD_L1 = LossSpec("cd_l1")
_CD_L2 = LossSpec("cd_l2")


def cloud_metrics(
    pred: PointCloud,
    gt: PointCloud,
    tau: float = DEFAULT_TAU,
    assignment: Optional[NearestAssignment] = None,
) -> CloudMetrics:
    """L1-CD, L2-CD and F1 from a single nearest-neighbour assignment."""
    _check_clouds(pred, gt)
    if assignment is None:
        assignment = assign(pred, gt)
    return CloudMetrics(
        l1cd=evaluate(_CD_L1, pred, gt, assignment),
        l2cd=evaluate(_CD_L2, pred, gt, assignment),
        f1=f1_score(pred, gt, tau, assignment),
    )
