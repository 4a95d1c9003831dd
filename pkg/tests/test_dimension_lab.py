import numpy as np
import pytest

from bernoulli_model import BernoulliParams, renyi_annealed, renyi_quenched
from dimension_lab import (
    AtomSampler,
    BernoulliPointSampler,
    CirclePointSampler,
    CorrelationCurve,
    RadiusGrid,
    annealed_curve,
    correlation_sum,
    correlation_sums,
    fit_dimension,
    local_slopes,
    quenched_curve,
    renyi_from_cylinders,
    sample_annealed_sequence,
    sample_quenched_words,
)
from errors import DomainError, FitError, ResourceLimitError
from rds_core import SymbolicSpace, stream_seed


def _power_law(exponent, count=12):
    radii = np.geomspace(1e-1, 1e-4, count)
    return CorrelationCurve(radii=radii.tolist(), values=(radii ** exponent).tolist())


def test_hand_count_includes_boundary_pairs():
    assert correlation_sum([0.0, 0.1, 0.2], 0.1) == pytest.approx(4 / 6)


def test_large_radius_counts_every_pair():
    assert correlation_sum([0.0, 0.3, 0.7], 0.5) == 1.0


def test_needs_two_points():
    with pytest.raises(DomainError):
        correlation_sum([0.2], 0.1)


def test_uniform_circle_small_radius(rng):
    assert correlation_sum(rng.random(2000), 0.01) == pytest.approx(0.02, abs=0.003)


def test_monotone_and_permutation_invariant(rng):
    pts = rng.random(500)
    radii = np.geomspace(1e-3, 0.4, 20)
    values = correlation_sums(pts, radii)
    assert np.all(np.diff(values) >= 0)
    assert np.array_equal(values, correlation_sums(rng.permutation(pts), radii))


def test_wraparound_pairs_counted():
    assert correlation_sum([0.01, 0.99], 0.03) == 1.0


def test_symbolic_counts_match_pairwise_distances(rng):
    words = rng.integers(0, 2, size=(120, 10)).astype(np.uint8)
    words[5] = words[7]
    space = SymbolicSpace()
    radii = [1.0, 0.5, 0.3, 2.0 ** -4, 0.01, 2.0 ** -10, 1e-6]
    fast = correlation_sums(words, radii, space)
    for r, value in zip(radii, fast):
        close = sum(
            space.distance(words[a], words[b]) <= r for a in range(len(words)) for b in range(len(words)) if a != b
        )
        assert value == pytest.approx(close / (120 * 119), abs=1e-15)


def test_radius_grid():
    grid = RadiusGrid.spanning(1e-4, 1e-2, 5)
    radii = grid.radii()
    assert radii[0] == pytest.approx(1e-2)
    assert radii[-1] == pytest.approx(1e-4)
    assert np.all(np.diff(radii) < 0)
    with pytest.raises(DomainError):
        RadiusGrid.spanning(1e-2, 1e-4, 5)


def test_power_law_slope_exact():
    fit = fit_dimension(_power_law(1.7), fit_range=(1e-4, 1e-1))
    assert fit.slope == pytest.approx(1.7, abs=1e-12)
    assert fit.residual < 1e-12
    assert fit.points_used == 12


def test_constant_curve_slope_zero():
    curve = CorrelationCurve(radii=np.geomspace(1e-1, 1e-3, 8).tolist(), values=[1.0] * 8)
    assert fit_dimension(curve).slope == pytest.approx(0.0, abs=1e-12)


def test_fit_refuses_too_few_points():
    curve = CorrelationCurve(radii=[0.1, 0.05, 0.02, 0.01, 0.005], values=[0.2, 0.1, 0.0, 0.0, 0.0])
    with pytest.raises(FitError):
        fit_dimension(curve, fit_range=(0.005, 0.1))


def test_default_fit_range_is_middle_half():
    fit = fit_dimension(_power_law(2.0, count=16))
    assert fit.points_used == 8


def test_local_slopes_of_power_law():
    slopes = local_slopes(_power_law(0.8))
    assert len(slopes) == 11
    for _, s in slopes:
        assert s == pytest.approx(0.8, abs=1e-12)


def test_lebesgue_circle_slope(rng):
    pts = rng.random(20000)
    radii = np.geomspace(1e-2, 1e-4, 12)
    curve = CorrelationCurve(radii=radii.tolist(), values=correlation_sums(pts, radii).tolist())
    assert 0.97 <= fit_dimension(curve, fit_range=(1e-4, 1e-2)).slope <= 1.03


def test_annealed_uniform_bernoulli_slope(uniform_params):
    grid = RadiusGrid.spanning(2.0 ** -10, 0.5, 10)
    curve = annealed_curve(BernoulliPointSampler(uniform_params, depth=40), 2000, grid, seed=3)
    assert curve.kind == "annealed"
    assert fit_dimension(curve).slope == pytest.approx(1.0, abs=0.05)


def test_quenched_equals_annealed_for_equal_measures(uniform_params):
    grid = RadiusGrid.spanning(2.0 ** -10, 0.5, 10)
    sampler = BernoulliPointSampler(uniform_params, depth=40)
    annealed = fit_dimension(annealed_curve(sampler, 2000, grid, seed=4)).slope
    quenched = fit_dimension(quenched_curve(sampler, 10, 400, grid, seed=4)).slope
    assert quenched == pytest.approx(annealed, abs=0.05)


def test_circle_sampler_slope():
    grid = RadiusGrid.spanning(1e-4, 1e-2, 8)
    curve = quenched_curve(CirclePointSampler(), 10, 3000, grid, seed=5)
    assert fit_dimension(curve, fit_range=(1e-4, 1e-2)).slope == pytest.approx(1.0, abs=0.05)


def test_single_atom_has_dimension_zero():
    grid = RadiusGrid.spanning(1e-4, 1e-1, 6)
    curve = annealed_curve(AtomSampler(), 100, grid, seed=0)
    assert curve.values == [1.0] * 6
    assert fit_dimension(curve).slope == 0.0


def test_one_environment_is_a_plain_correlation_sum(asymmetric_params):
    grid = RadiusGrid.spanning(2.0 ** -8, 0.5, 8)
    sampler = BernoulliPointSampler(asymmetric_params, depth=20)
    curve = quenched_curve(sampler, 1, 150, grid, seed=9)
    env = sampler.environment(stream_seed(9, 0, "env"))
    points = sampler.points(env, stream_seed(9, 0, "x"), 150)
    assert curve.values == pytest.approx(correlation_sums(points, grid.radii(), sampler.space).tolist(), abs=0)


def test_exact_cylinders_uniform():
    values = renyi_from_cylinders(BernoulliParams(pA=0.5, pB=0.5), range(1, 9))
    assert all(v == 1.0 for v in values.values())


def test_exact_cylinders_asymmetric(asymmetric_params):
    an = renyi_from_cylinders(asymmetric_params, [10])[10]
    qu = renyi_from_cylinders(asymmetric_params, [10], quenched=True)[10]
    assert an == pytest.approx(0.985645, abs=1e-6)
    assert an == pytest.approx(renyi_annealed(asymmetric_params), abs=1e-9)
    assert qu == pytest.approx(0.862496, abs=1e-6)
    assert qu == pytest.approx(renyi_quenched(asymmetric_params), abs=1e-9)


def test_exact_cylinders_constant_in_k():
    p = BernoulliParams(pA=0.2, pB=0.7)
    for quenched in (False, True):
        values = list(renyi_from_cylinders(p, range(2, 13), quenched=quenched).values())
        assert max(values) - min(values) < 1e-9


def test_exact_cylinders_limit(uniform_params):
    with pytest.raises(ResourceLimitError):
        renyi_from_cylinders(uniform_params, [30])


def test_plug_in_uniform_sequence(uniform_params):
    seq = sample_annealed_sequence(uniform_params, 1_000_000, seed=21)
    assert renyi_from_cylinders(seq, [8])[8] == pytest.approx(1.0, abs=0.02)


def test_quenched_plug_in_below_annealed():
    blocks = sample_quenched_words(BernoulliParams(pA=0.1, pB=0.8), K=12, M=300, depth=16, seed=2)
    pooled = np.concatenate(blocks)
    for k in (2, 4, 6):
        quenched = renyi_from_cylinders(blocks, [k])[k]
        annealed = renyi_from_cylinders(pooled, [k])[k]
        assert quenched <= annealed + 1e-12


def test_word_sample_shorter_than_k():
    with pytest.raises(DomainError):
        renyi_from_cylinders(np.zeros((10, 4), dtype=np.uint8), [5])
