"""Tests for gradient-matching distillation."""

import math

import numpy as np
import pytest

from cdd.distill import (
    build_reference_distribution,
    candidate_curve,
    constant_curve,
    distill_all,
    exp_decay_distribution,
    grid_search,
    histogram_distribution,
    objective,
    parse_distribution_csv,
    read_distribution,
    reference_curve,
    rescale,
    self_generated_distribution,
    summary_row,
    uniform_distribution,
    write_curves,
    write_summary,
)
from cdd.exceptions import CloudParseError, InvalidArgumentError
from cdd.models import DistillConfig, GradientWeightCurve, ReferenceDistribution
from cdd.pointcloud import make_rng
from cdd.resolve import ReferenceSource
from cdd.weightfns import WEIGHT_KINDS, ParamGrid, WeightingFunction, default_grid

CFG = DistillConfig()
LANDAU = WeightingFunction("landau", {})


def landau_objective_by_hand() -> float:
    """Uniform-weighted gap between the rescaled landau and HyperCD curves, from the formulas."""
    total = 0.0
    for i in range(51):
        d = i * 2e-4
        ref = (2.0 / math.sqrt(2.0 + d * d)) / math.sqrt(2.0)
        cand = math.exp(-(d + math.exp(-d)) / 2.0) / math.exp(-0.5)
        total += abs(ref - cand) / 51
    return total


def test_default_grid_has_51_points():
    d = CFG.grid()
    assert d.size == 51
    assert d[0] == 0.0
    assert d[-1] == pytest.approx(0.01)


def test_reference_curve_values():
    """sqrt(2) at zero, 2 / sqrt(2.0001) at the end, strictly decreasing."""
    ref = reference_curve(CFG)
    assert ref.z_values[0] == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert ref.z_values[-1] == pytest.approx(1.414178, abs=1e-6)
    assert np.all(np.diff(ref.z_values) < 0)
    assert not ref.rescaled


def test_landau_dominant_curve_starts_at_density():
    cand = candidate_curve(LANDAU, CFG)
    assert cand.z_values[0] == pytest.approx(0.241971, abs=1e-6)


@pytest.mark.parametrize("kind", WEIGHT_KINDS)
def test_finite_difference_agrees_with_dominant_at_zero(kind):
    """The correction term vanishes at d = 0."""
    f = WeightingFunction(kind, None)
    dominant = candidate_curve(f, CFG)
    fd = candidate_curve(f, DistillConfig(approx="finite_diff"))
    assert fd.z_values[0] == dominant.z_values[0]


def test_finite_difference_adds_slope_term():
    """z = (f(x + delta) - f(x)) / delta * d + f(x) with x = m + d."""
    f = WeightingFunction("normal", None)
    cfg = DistillConfig(approx="finite_diff", delta=1e-3)
    curve = candidate_curve(f, cfg)
    d = cfg.grid()[10]
    expected = (f.pdf(d + 1e-3) - f.pdf(d)) / 1e-3 * d + f.pdf(d)
    assert curve.z_values[10] == pytest.approx(expected, rel=1e-12)


def test_rescale_divides_by_maximum():
    curve = rescale(GradientWeightCurve([0.0, 1.0], [2.0, 1.0]))
    assert curve.z_values.tolist() == [1.0, 0.5]
    assert curve.rescaled
    assert rescale(curve) is curve


def test_rescaled_curve_must_peak_at_one():
    with pytest.raises(InvalidArgumentError):
        GradientWeightCurve([0.0, 1.0], [2.0, 1.0], rescaled=True)
    with pytest.raises(InvalidArgumentError):
        GradientWeightCurve([], [], rescaled=True)
    assert GradientWeightCurve([0.0, 1.0], [1.0, 0.5], rescaled=True).rescaled


def test_rescale_requires_positive_maximum():
    with pytest.raises(InvalidArgumentError):
        rescale(GradientWeightCurve([0.0, 1.0], [0.0, 0.0]))
    with pytest.raises(InvalidArgumentError):
        rescale(GradientWeightCurve([0.0, 1.0], [1.0, np.inf]))


@pytest.mark.parametrize("kind", WEIGHT_KINDS)
def test_rescaled_curves_peak_at_one(kind):
    curve = rescale(candidate_curve(WeightingFunction(kind, None), CFG))
    assert curve.z_values.max() == 1.0
    assert np.all(curve.z_values <= 1.0)


def test_objective_of_reference_against_itself_is_zero():
    ref = rescale(reference_curve(CFG))
    assert objective(ref, ref, uniform_distribution(CFG)) == 0.0


def test_objective_of_constant_baseline_is_positive():
    ref = rescale(reference_curve(CFG))
    assert objective(ref, constant_curve(CFG), uniform_distribution(CFG)) > 0.0


def test_objective_requires_shared_grid_and_rescaling():
    ref = rescale(reference_curve(CFG))
    other = DistillConfig(step=5e-4)
    with pytest.raises(InvalidArgumentError):
        objective(ref, constant_curve(other), uniform_distribution(CFG))
    with pytest.raises(InvalidArgumentError):
        objective(reference_curve(CFG), ref, uniform_distribution(CFG))


def test_landau_objective_matches_independent_evaluation():
    """The landau gap under a uniform distribution is about 2.1e-8."""
    dist = uniform_distribution(CFG)
    value = objective(rescale(reference_curve(CFG)), rescale(candidate_curve(LANDAU, CFG)), dist)
    assert value == pytest.approx(landau_objective_by_hand(), rel=1e-6)
    assert 2.0e-8 < value < 2.2e-8


def test_landau_grid_search_returns_its_only_candidate():
    result = grid_search("landau", dist=uniform_distribution(CFG))
    assert result.best_params == {}
    assert result.evaluated == 1
    assert result.objective == pytest.approx(landau_objective_by_hand(), rel=1e-6)


@pytest.mark.parametrize("kind", WEIGHT_KINDS)
def test_grid_search_beats_random_grid_points(kind):
    """No sampled grid point has a smaller objective than the winner."""
    dist = exp_decay_distribution(300.0, CFG)
    result = grid_search(kind, dist=dist)
    ref = rescale(reference_curve(CFG))
    points = list(default_grid(kind).points())
    rng = make_rng(7)
    for i in rng.choice(len(points), size=min(100, len(points)), replace=False):
        f = WeightingFunction(kind, points[i])
        assert result.objective <= objective(ref, rescale(candidate_curve(f, CFG)), dist)
    assert result.evaluated == len(points)
    assert result.best_params in default_grid(kind)


def test_normal_fit_is_no_worse_than_experiment_point():
    dist = exp_decay_distribution(300.0, CFG)
    ref = rescale(reference_curve(CFG))
    fixed = objective(ref, rescale(candidate_curve(WeightingFunction("normal", None), CFG)), dist)
    assert grid_search("normal", dist=dist).objective <= fixed


@pytest.mark.parametrize("kind", WEIGHT_KINDS)
def test_every_fitted_kind_beats_constant_weight(kind):
    """Each distilled weighting tracks HyperCD better than plain L1 weighting."""
    dist = exp_decay_distribution(300.0, CFG)
    baseline = objective(rescale(reference_curve(CFG)), constant_curve(CFG), dist)
    assert grid_search(kind, dist=dist).objective < baseline


def test_grid_search_repeated_candidates_collapse():
    """Repeated candidates are one grid point."""
    grid = ParamGrid("normal", {"sigma": [1.4, 1.4]})
    assert len(grid) == 1
    result = grid_search("normal", grid=grid)
    assert result.best_params == {"sigma": 1.4}
    assert result.evaluated == 1


@pytest.mark.parametrize("kind", ["normal", "weibull", "gamma"])
def test_grid_search_ignores_enumeration_order(kind):
    """Reversed and shuffled grids pick the same winner with the same objective."""
    grid = default_grid(kind)
    rng = np.random.default_rng(7)
    reordered = [
        ParamGrid(kind, {name: list(reversed(vs)) for name, vs in grid.values.items()}),
        ParamGrid(kind, {name: list(rng.permutation(vs)) for name, vs in grid.values.items()}),
    ]
    expected = grid_search(kind, grid=grid, cfg=CFG)
    for other in reordered:
        result = grid_search(kind, grid=other, cfg=CFG)
        assert result.best_params == expected.best_params
        assert result.objective == expected.objective


def test_grid_search_rejects_grid_of_other_kind():
    with pytest.raises(InvalidArgumentError):
        grid_search("normal", grid=default_grid("logistic"))


def test_distill_all_sorts_by_objective():
    results = distill_all(["normal", "landau", "gamma"])
    objectives = [r.objective for r in results]
    assert objectives == sorted(objectives)
    assert {r.kind for r in results} == {"normal", "landau", "gamma"}


def test_uniform_distribution():
    dist = uniform_distribution(CFG)
    assert np.all(dist.p_values == pytest.approx(1 / 51))


def test_exp_decay_with_zero_rate_is_uniform():
    np.testing.assert_allclose(exp_decay_distribution(0.0, CFG).p_values, uniform_distribution(CFG).p_values)


def test_exp_decay_is_decreasing_and_normalized():
    dist = exp_decay_distribution(300.0, CFG)
    assert np.all(np.diff(dist.p_values) < 0)
    assert dist.p_values.sum() == pytest.approx(1.0)
    with pytest.raises(InvalidArgumentError):
        exp_decay_distribution(-1.0, CFG)


def test_histogram_single_bin():
    """One distance on a grid point puts all mass in that bin."""
    dist = histogram_distribution([0.0042], CFG)
    assert dist.p_values[21] == 1.0
    assert dist.p_values.sum() == 1.0


def test_histogram_drops_distances_past_grid():
    dist = histogram_distribution([0.0, 0.5], CFG)
    assert dist.p_values[0] == 1.0
    with pytest.raises(InvalidArgumentError):
        histogram_distribution([0.5], CFG)
    with pytest.raises(InvalidArgumentError):
        histogram_distribution([-0.001], CFG)


def test_histogram_uses_weights():
    dist = histogram_distribution([0.0, 0.01], CFG, weights=[1.0, 3.0])
    assert dist.p_values[0] == pytest.approx(0.25)
    assert dist.p_values[-1] == pytest.approx(0.75)


def test_reference_distribution_validation():
    with pytest.raises(InvalidArgumentError):
        ReferenceDistribution([0.0, 0.1], [0.5, 0.6])
    with pytest.raises(InvalidArgumentError):
        ReferenceDistribution([0.1, 0.0], [0.5, 0.5])


def test_parse_distribution_csv():
    d, p = parse_distribution_csv("d,p\n0.001,3\n0.002,1\n\n")
    assert d.tolist() == [0.001, 0.002]
    assert p.tolist() == [3.0, 1.0]


@pytest.mark.parametrize(
    "text, line",
    [
        ("x,y\n0,1\n", 1),
        ("d,p\n0.1\n", 2),
        ("d,p\n0.1,abc\n", 2),
        ("d,p\n0.1,1\n0.2,-1\n", 3),
        ("d,p\n0.1,nan\n", 2),
    ],
)
def test_parse_distribution_csv_errors(text, line):
    with pytest.raises(CloudParseError) as exc_info:
        parse_distribution_csv(text, "dist.csv")
    assert exc_info.value.line == line


def test_read_distribution_file(temp_dir):
    path = temp_dir / "dist.csv"
    path.write_text("d,p\n0.002,1\n0.004,1\n")
    dist = read_distribution(path, CFG)
    assert dist.p_values[10] == pytest.approx(0.5)
    assert dist.p_values[20] == pytest.approx(0.5)


def test_build_reference_distribution_from_specs(temp_dir):
    path = temp_dir / "d.csv"
    path.write_text("d,p\n0.0,1\n")
    assert build_reference_distribution("uniform").p_values[0] == pytest.approx(1 / 51)
    expected = exp_decay_distribution(300.0, CFG).p_values
    np.testing.assert_array_equal(build_reference_distribution("expdecay").p_values, expected)
    np.testing.assert_array_equal(
        build_reference_distribution(ReferenceSource("exp_decay", rate=300.0)).p_values, expected
    )
    assert build_reference_distribution(f"file:{path}").p_values[0] == 1.0


def test_self_generated_distribution_lies_on_grid():
    """Distances from a short HyperCD run form a distribution on the grid."""
    dist = self_generated_distribution(CFG, iters=500)
    np.testing.assert_array_equal(dist.d_values, CFG.grid())
    assert dist.p_values.sum() == pytest.approx(1.0)


def test_summary_row_and_files(temp_dir):
    result = grid_search("gamma", grid=ParamGrid("gamma", {"k_shape": [2.0], "theta_scale": [2.5]}))
    kind, names, values, value = summary_row(result)
    assert (kind, names, values) == ("gamma", "k_shape;theta_scale", "2;2.5")
    assert value == result.objective

    curves = write_curves(result, temp_dir / "curves.csv")
    lines = curves.read_text().splitlines()
    assert lines[0] == "d,z_ref,z_fit"
    assert len(lines) == 52

    summary = write_summary([result], temp_dir / "summary.csv")
    assert summary.read_text().splitlines()[0] == "kind,param_names,param_values,objective"
