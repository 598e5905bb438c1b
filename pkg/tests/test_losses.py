"""Tests for Chamfer-family losses, their gradients and the F1 metric."""

import math

import numpy as np
import pytest

from cdd.exceptions import InvalidArgumentError
from cdd.losses import cloud_metrics, evaluate, evaluate_with_grad, f1_score, hypercd_weight
from cdd.models import LossSpec, PointCloud
from cdd.neighbors import assign
from cdd.weightfns import WEIGHT_KINDS, WeightingFunction

ORIGIN = PointCloud.from_points([[0, 0, 0]])
UNIT_X = PointCloud.from_points([[1, 0, 0]])

GRADIENT_SPECS = (
    [LossSpec("cd_l1"), LossSpec("cd_l2")]
    + [LossSpec("hypercd", alpha=a) for a in (0.5, 1.0, 2.0)]
    + [LossSpec("weighted_cd", weighting=WeightingFunction(k, None)) for k in WEIGHT_KINDS]
)


def spec_id(spec: LossSpec) -> str:
    return spec.describe()


def test_cd_l1_single_pair():
    """Each direction contributes the unit distance."""
    assert evaluate(LossSpec("cd_l1"), ORIGIN, UNIT_X) == pytest.approx(2.0)


def test_hypercd_single_pair():
    """2 arccosh(2) = 2 ln(2 + sqrt(3))."""
    value = evaluate(LossSpec("hypercd", alpha=1.0), ORIGIN, UNIT_X)
    assert value == pytest.approx(2.633916, abs=1e-6)
    assert value == pytest.approx(2 * math.log(2 + math.sqrt(3)), rel=1e-12)


def test_cd_l1_hand_enumeration():
    """0 forward, (1 + 0) / 2 backward."""
    gt = PointCloud.from_points([[1, 0, 0], [0, 0, 0]])
    assert evaluate(LossSpec("cd_l1"), ORIGIN, gt) == pytest.approx(0.5)


def test_cd_l2_gradient_collects_both_directions():
    """Forward and backward terms hit the same predicted point."""
    pred = PointCloud.from_points([[0.5, 0, 0]])
    result = evaluate_with_grad(LossSpec("cd_l2"), pred, ORIGIN)
    assert result.value == pytest.approx(0.5)
    np.testing.assert_allclose(result.grad, [[2.0, 0.0, 0.0]])


@pytest.mark.parametrize("spec", GRADIENT_SPECS, ids=spec_id)
def test_identical_clouds_have_zero_loss_and_gradient(spec, random_cloud):
    pc = random_cloud(32, 0)
    result = evaluate_with_grad(spec, pc, pc)
    assert result.value == 0.0
    assert np.all(result.grad == 0.0)


@pytest.mark.parametrize("spec", GRADIENT_SPECS, ids=spec_id)
def test_losses_are_symmetric_and_non_negative(spec, random_cloud):
    a, b = random_cloud(40, 1), random_cloud(25, 2)
    forward = evaluate(spec, a, b)
    assert forward >= 0.0
    assert forward == pytest.approx(evaluate(spec, b, a), rel=1e-12)


def test_value_of_evaluate_with_grad_matches_evaluate(random_cloud):
    spec = LossSpec("hypercd", alpha=1.0)
    a, b = random_cloud(30, 3), random_cloud(30, 4)
    assert evaluate_with_grad(spec, a, b).value == evaluate(spec, a, b)


def test_constant_weighting_reduces_to_l1(constant_weighting, cloud_pairs):
    """Weighted CD with f = 1 equals L1 CD on 100 random pairs."""
    weighted = LossSpec("weighted_cd", weighting=constant_weighting)
    for pred, gt in cloud_pairs(100, 32, 48):
        assert abs(evaluate(weighted, pred, gt) - evaluate(LossSpec("cd_l1"), pred, gt)) <= 1e-12


def test_mode_shift_changes_the_weight():
    """Without the shift a gamma weighting is evaluated near zero and gives a tiny loss."""
    f = WeightingFunction("gamma", None)
    shifted = evaluate(LossSpec("weighted_cd", weighting=f), ORIGIN, UNIT_X)
    unshifted = evaluate(LossSpec("weighted_cd", weighting=f, mode_shift=False), ORIGIN, UNIT_X)
    assert shifted == pytest.approx(2 * float(f.pdf(f.mode() + 1.0)))
    assert unshifted == pytest.approx(2 * float(f.pdf(1.0)))


def _same_assignment(a, b) -> bool:
    return np.array_equal(a.forward_idx, b.forward_idx) and np.array_equal(a.backward_idx, b.backward_idx)


def test_gradients_match_central_differences(cloud_pairs):
    """Analytic gradients agree with central differences away from assignment switches."""
    h, switch_margin = 1e-5, 1e-4
    checked = 0
    for pred, gt in cloud_pairs(20, 64):
        base = assign(pred, gt)
        analytic = [evaluate_with_grad(spec, pred, gt, base).grad for spec in GRADIENT_SPECS]
        for i in range(len(pred)):
            for axis in range(3):
                shifted = {}
                for step in (switch_margin, -switch_margin, h, -h):
                    moved = pred.points.copy()
                    moved[i, axis] += step
                    shifted[step] = PointCloud(moved)
                assignments = {step: assign(pc, gt) for step, pc in shifted.items()}
                if not all(_same_assignment(base, a) for a in assignments.values()):
                    continue
                checked += 1
                for spec, grad in zip(GRADIENT_SPECS, analytic):
                    plus = evaluate(spec, shifted[h], gt, assignments[h])
                    minus = evaluate(spec, shifted[-h], gt, assignments[-h])
                    numeric = (plus - minus) / (2 * h)
                    assert grad[i, axis] == pytest.approx(numeric, rel=1e-4, abs=1e-8), spec.describe()
    assert checked > 0.9 * 20 * 64 * 3


def test_f1_examples():
    """Identical clouds score 1, distant clouds 0, partial matches 2/3."""
    pc = PointCloud.from_points([[0, 0, 0], [1, 1, 1]])
    assert f1_score(pc, pc, 0.01) == 1.0
    assert f1_score(ORIGIN, UNIT_X, 0.01) == 0.0
    pred = PointCloud.from_points([[0, 0, 0], [1, 0, 0]])
    assert f1_score(pred, ORIGIN, 0.01) == pytest.approx(2 / 3)


def test_f1_threshold_is_strict():
    """A distance equal to tau does not count as a match."""
    assert f1_score(ORIGIN, UNIT_X, 1.0) == 0.0


@pytest.mark.parametrize("tau", [0.0, -0.1, float("nan")])
def test_f1_rejects_non_positive_tau(tau):
    with pytest.raises(InvalidArgumentError):
        f1_score(ORIGIN, UNIT_X, tau)


def test_cloud_metrics_bundle():
    metrics = cloud_metrics(ORIGIN, UNIT_X)
    assert metrics.l1cd == pytest.approx(2.0)
    assert metrics.l2cd == pytest.approx(2.0)
    assert metrics.f1 == 0.0


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_hypercd_weight_limit_and_monotonicity(alpha):
    """z tends to sqrt(2 alpha) at 0 and decreases strictly."""
    assert hypercd_weight(1e-8, alpha) == pytest.approx(math.sqrt(2 * alpha), abs=1e-4)
    assert hypercd_weight(0.0, alpha) == pytest.approx(math.sqrt(2 * alpha), rel=1e-15)
    z = hypercd_weight(np.arange(0.0, 0.01 + 1e-12, 2e-4), alpha)
    assert np.all(np.diff(z) < 0)


def test_hypercd_weight_matches_original_form():
    """The stable form equals 2 alpha d / sqrt((1 + alpha d^2)^2 - 1) away from zero."""
    d = np.array([0.05, 0.3, 1.0, 4.0])
    alpha = 1.5
    original = 2 * alpha * d / np.sqrt((1 + alpha * d * d) ** 2 - 1)
    np.testing.assert_allclose(hypercd_weight(d, alpha), original, rtol=1e-10)


def test_loss_spec_validation():
    with pytest.raises(InvalidArgumentError):
        LossSpec("hypercd", alpha=0.0)
    with pytest.raises(InvalidArgumentError):
        LossSpec("weighted_cd")
    with pytest.raises(InvalidArgumentError):
        LossSpec("cd_l3")


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_hypercd_grows_with_one_pair_distance(alpha):
    """Stretching one matched pair never lowers HyperCD."""
    pred = PointCloud.from_points([[0, 0, 0], [10, 0, 0], [20, 0, 0]])
    spec = LossSpec("hypercd", alpha=alpha)
    values = []
    for offset in [0.0, 0.05, 0.1, 0.5, 1.0, 2.0]:
        gt = PointCloud.from_points([[0.1, 0, 0], [10, offset, 0], [20, 0, 0.2]])
        assignment = assign(pred, gt)
        assert assignment.forward_idx.tolist() == [0, 1, 2]
        assert assignment.backward_idx.tolist() == [0, 1, 2]
        values.append(evaluate(spec, pred, gt))
    assert all(a < b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("spec", GRADIENT_SPECS, ids=spec_id)
def test_loss_is_zero_exactly_for_equal_point_sets(spec):
    """Duplicated points leave the loss at 0; moving any point makes it positive."""
    p, q = [0.1, -0.4, 0.7], [0.9, 0.3, -0.2]
    pair = PointCloud.from_points([p, q])
    assert evaluate(spec, pair, PointCloud.from_points([p, q, q])) == 0.0
    assert evaluate(spec, PointCloud.from_points([q, p, p, q]), pair) == 0.0
    moved = PointCloud.from_points([p, [0.9, 0.3, -0.199]])
    assert evaluate(spec, moved, PointCloud.from_points([p, q, q])) > 0.0
