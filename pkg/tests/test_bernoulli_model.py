import math

import numpy as np
import pytest
from pydantic import ValidationError

from bernoulli_model import (
    BernoulliParams,
    Regime,
    annealed_cylinder_sum,
    closed_form_c_pm,
    cylinder_entropy,
    diagonal_scan,
    exponent,
    exponent_level_set,
    mu_cylinder_annealed,
    mu_cylinder_quenched,
    phase_boundary_diag,
    phase_grid,
    printed_c_pm,
    quenched_cylinder_sum,
    renyi_annealed,
    renyi_quenched,
    renyi_quenched_printed,
    sample_environment,
    sample_fiber_sequence,
    trace_boundary,
)
from errors import DomainError, ResourceLimitError


@pytest.mark.parametrize(
    "pA, pB, h_an, h_qu, value, regime",
    [
        (0.5, 0.5, 1.0, 1.0, 2.0, Regime.ANNEALED),
        (0.1, 0.9, 1.0, 0.286304, 3.49278, Regime.QUENCHED),
        (0.3, 0.6, 0.985645, 0.862496, 2.029129, Regime.ANNEALED),
        (0.05, 0.95, 1.0, 0.144010, 6.94395, Regime.QUENCHED),
    ],
)
def test_closed_forms(pA, pB, h_an, h_qu, value, regime):
    point = exponent(BernoulliParams(pA=pA, pB=pB))
    assert point.h2_an == pytest.approx(h_an, rel=1e-5)
    assert point.h2_qu == pytest.approx(h_qu, rel=1e-5)
    assert point.exponent == pytest.approx(value, rel=1e-5)
    assert point.regime is regime


@pytest.mark.parametrize("pA, pB", [(0.0, 0.5), (0.5, 1.0), (-0.1, 0.3)])
def test_params_must_be_open_interval(pA, pB):
    with pytest.raises(ValidationError):
        BernoulliParams(pA=pA, pB=pB)


def test_entropies_symmetric():
    p = BernoulliParams(pA=0.2, pB=0.7)
    for h in (renyi_annealed, renyi_quenched):
        assert h(p) == pytest.approx(h(p.swapped()), abs=1e-15)
        assert h(p) == pytest.approx(h(p.flipped()), abs=1e-15)


def test_quenched_never_exceeds_annealed():
    for p in phase_grid(16):
        assert p.h2_qu <= p.h2_an + 1e-12


def test_grid_matches_cylinder_enumeration():
    grid = [k / 10 for k in range(1, 10)]
    for a in grid:
        for b in grid:
            p = BernoulliParams(pA=a, pB=b)
            assert cylinder_entropy(annealed_cylinder_sum(p, 10), 10) == pytest.approx(renyi_annealed(p), abs=1e-9)
            assert cylinder_entropy(quenched_cylinder_sum(p, 10), 10) == pytest.approx(renyi_quenched(p), abs=1e-9)


def test_quenched_sum_equals_brute_environment_average():
    p = BernoulliParams(pA=0.3, pB=0.6)
    k = 4
    words = [format(w, f"0{k}b") for w in range(2 ** k)]
    total = 0.0
    for x in words:
        total += np.mean([mu_cylinder_quenched(p, e, x) ** 2 for e in words])
    assert quenched_cylinder_sum(p, k) == pytest.approx(total, rel=1e-12)


def test_cylinder_measures():
    p = BernoulliParams(pA=0.3, pB=0.6)
    assert mu_cylinder_quenched(p, "AB", "01") == pytest.approx(0.3 * 0.4)
    assert mu_cylinder_annealed(p, "0") == pytest.approx(0.45)
    assert sum(mu_cylinder_annealed(p, format(w, "03b")) for w in range(8)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        mu_cylinder_quenched(p, "AB", "011")


def test_exact_enumeration_limit():
    with pytest.raises(ResourceLimitError):
        annealed_cylinder_sum(BernoulliParams(pA=0.5, pB=0.5), 25)


def test_boundary_on_diagonal():
    c_minus, c_plus = phase_boundary_diag()
    assert c_minus == pytest.approx(0.178203, abs=1e-5)
    assert c_minus + c_plus == pytest.approx(1.0, abs=1e-9)
    assert (c_minus, c_plus) == pytest.approx(closed_form_c_pm(), abs=1e-8)


def test_boundary_same_from_cylinders():
    closed = phase_boundary_diag(source="closed")
    cylinders = phase_boundary_diag(source="cylinders", k=12)
    assert cylinders == pytest.approx(closed, abs=1e-6)


def test_printed_expression_differs():
    p = BernoulliParams(pA=0.5, pB=0.5)
    assert renyi_quenched(p) == pytest.approx(1.0)
    assert renyi_quenched_printed(p) == pytest.approx(-math.log2(5 / 8))
    assert printed_c_pm()[0] == pytest.approx(0.23205, abs=1e-5)


def test_boundary_points_balance_entropies():
    curve = trace_boundary(samples=16)
    assert curve.samples
    for pa, pb in curve.samples:
        p = BernoulliParams(pA=pa, pB=pb)
        assert renyi_annealed(p) == pytest.approx(2 * renyi_quenched(p), abs=1e-6)


def test_phase_grid_has_both_regimes():
    grid = phase_grid(32)
    assert len(grid) == 32 * 32
    regimes = {p.regime for p in grid}
    assert Regime.ANNEALED in regimes and Regime.QUENCHED in regimes


def test_phase_grid_resolution_floor():
    with pytest.raises(DomainError):
        phase_grid(8)


def test_diagonal_scan_symmetric():
    scan = diagonal_scan(99)
    values = [p.exponent for p in scan]
    assert values[49] == pytest.approx(2.0)
    for a, b in zip(values, reversed(values)):
        assert a == pytest.approx(b, abs=1e-12)


def test_fiber_sampler_frequencies():
    p = BernoulliParams(pA=0.1, pB=0.8)
    env = sample_environment(5, 200_000)
    x = sample_fiber_sequence(p, env, 6, 200_000)
    omega = env.window(0, 200_000)
    assert np.mean(x[omega == 0] == 0) == pytest.approx(0.1, abs=0.01)
    assert np.mean(x[omega == 1] == 0) == pytest.approx(0.8, abs=0.01)


def test_degenerate_fiber_sampler():
    p = BernoulliParams(pA=0.999, pB=0.999)
    x = sample_fiber_sequence(p, sample_environment(8, 100_000), 9, 100_000)
    assert np.mean(x == 0) >= 0.99


def test_environment_frequency_and_reproducibility():
    env = sample_environment(21, 1_000_000)
    assert 0.498 <= np.mean(env.symbols == 0) <= 0.502
    assert np.array_equal(sample_environment(21, 1_000_000).symbols, env.symbols)
    assert not np.array_equal(sample_environment(22, 64).symbols, env.symbols[:64])


def test_fiber_cylinder_frequencies_k3():
    p = BernoulliParams(pA=0.2, pB=0.7)
    blocks = 1_000_000 // 3
    env = sample_environment(31, 3 * blocks)
    x = sample_fiber_sequence(p, env, 32, 3 * blocks)
    weights = np.array([4, 2, 1])
    env_code = env.window(0, 3 * blocks).reshape(blocks, 3).astype(np.int64) @ weights
    word_code = x.reshape(blocks, 3).astype(np.int64) @ weights
    counts = np.bincount(8 * env_code + word_code, minlength=64).reshape(8, 8)
    for e in range(8):
        total = counts[e].sum()
        env_word = [(e >> 2) & 1, (e >> 1) & 1, e & 1]
        for w in range(8):
            prob = mu_cylinder_quenched(p, env_word, [(w >> 2) & 1, (w >> 1) & 1, w & 1])
            sigma = math.sqrt(total * prob * (1.0 - prob))
            assert abs(counts[e, w] - total * prob) <= 4.0 * sigma


def test_cylinder_measures_sum_to_one_k10():
    words = [format(w, "010b") for w in range(2 ** 10)]
    env_word = "ABBABAABBA"
    for pA, pB in ((0.3, 0.6), (0.05, 0.95), (0.5, 0.5), (0.8, 0.7)):
        p = BernoulliParams(pA=pA, pB=pB)
        assert sum(mu_cylinder_annealed(p, w) for w in words) == pytest.approx(1.0, abs=1e-12)
        assert sum(mu_cylinder_quenched(p, env_word, w) for w in words) == pytest.approx(1.0, abs=1e-12)


def test_entropy_invariants_on_fine_grid():
    values = [k / 100 for k in range(1, 100)]
    for a in values:
        for b in values:
            p = BernoulliParams(pA=a, pB=b)
            h_an, h_qu = renyi_annealed(p), renyi_quenched(p)
            assert h_qu <= h_an + 1e-12
            if a == b:
                assert abs(h_an - h_qu) <= 1e-12
            assert renyi_annealed(p.swapped()) == pytest.approx(h_an, abs=1e-12)
            assert renyi_quenched(p.swapped()) == pytest.approx(h_qu, abs=1e-12)
            assert renyi_annealed(p.flipped()) == pytest.approx(h_an, abs=1e-12)
            assert renyi_quenched(p.flipped()) == pytest.approx(h_qu, abs=1e-12)
            point = exponent(p)
            assert point.exponent >= 2.0 / h_an and point.exponent >= 1.0 / h_qu
            # close parameters never reach the quenched regime
            if abs(a - b) <= 0.5:
                assert point.regime is not Regime.QUENCHED


def _on_level_piece(level_set, pa, pb):
    on_line = any(abs(pa + pb - s) <= 1e-12 for s in level_set.line_sums)
    on_circle = abs(math.hypot(pa - 0.5, pb - 0.5) - level_set.radius) <= 1e-12
    return on_line or on_circle


@pytest.mark.parametrize("level", [2.0, 2.5, 3.0, 4.0, 6.94395, 10.0])
def test_level_set_geometry(level):
    level_set = exponent_level_set(level)
    assert level_set.segments
    for segment in level_set.segments:
        for pa, pb in segment:
            assert 0.0 < pa < 1.0 and 0.0 < pb < 1.0
            assert _on_level_piece(level_set, pa, pb)
            assert exponent(BernoulliParams(pA=pa, pB=pb)).exponent == pytest.approx(level, rel=1e-9)


def test_level_set_pieces():
    three = exponent_level_set(3.0)
    root = math.sqrt(2.0 ** (1.0 / 3.0) - 1.0)
    assert three.line_sums == pytest.approx([1.0 - root, 1.0 + root])
    assert three.radius == pytest.approx(math.sqrt(2.0 ** (-1.0 / 3.0) - 0.5))
    # the quenched corner point (0.05, 0.95) sits on the circle of its own level
    corner = exponent(BernoulliParams(pA=0.05, pB=0.95))
    assert exponent_level_set(corner.exponent).radius == pytest.approx(math.hypot(0.45, 0.45), rel=1e-12)
    two = exponent_level_set(2.0)
    assert two.line_sums == [1.0]


def test_level_set_domain():
    with pytest.raises(DomainError):
        exponent_level_set(1.5)
    with pytest.raises(DomainError):
        exponent_level_set(3.0, samples=4)
