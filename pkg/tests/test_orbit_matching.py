import math
from fractions import Fraction

import numpy as np
import pytest

import orbit_matching
from errors import DomainError, LengthError, SearchError
from orbit_matching import (
    MatchConstraint,
    exponent_statistic,
    lcs_brute,
    lcs_match,
    log_distance,
    metric_min_symbolic,
    min_dist_brute,
    min_dist_match,
    to_distance,
)
from rds_core import CircleSpace

CONSTRAINTS = [
    MatchConstraint.all(),
    MatchConstraint.diagonal(),
    MatchConstraint.band(0),
    MatchConstraint.band(3),
    MatchConstraint.offband(0),
    MatchConstraint.offband(4),
    MatchConstraint.far_thirds(),
]


def _check_witness(x, y, result):
    i, j = result.witness
    m = result.length
    assert result.constraint.admits(i, j, result.n)
    assert list(x[i:i + m]) == list(y[j:j + m])
    if not result.truncated:
        assert x[i + m] != y[j + m]


def test_small_all_instance():
    result = lcs_match("00101", "10100", 3)
    assert result.length == 3
    assert result.witness == (1, 1)
    assert not result.truncated


def test_identical_sequences_truncate():
    result = lcs_match("0110", "0110", 1)
    assert result.length == 4
    assert result.truncated


def test_diagonal_common_prefix():
    result = lcs_match("0010", "0011", 4, MatchConstraint.diagonal())
    assert result.length == 3
    assert result.witness == (0, 0)


def test_no_match_at_offset_zero():
    result = lcs_match("0011", "1100", 2)
    assert result.length == 0
    assert result.witness == (0, 0)


def test_sequences_shorter_than_n():
    with pytest.raises(LengthError):
        lcs_match("01", "011", 3)


def test_far_thirds_needs_three():
    with pytest.raises(DomainError):
        lcs_match("0101", "0101", 2, MatchConstraint.far_thirds())


def test_offband_without_pairs():
    with pytest.raises(DomainError):
        lcs_match("0101", "0101", 3, MatchConstraint.offband(2))


def test_far_thirds_window():
    c = MatchConstraint.far_thirds()
    admitted = {(i, j) for i in range(9) for j in range(9) if c.admits(i, j, 9)}
    assert admitted == {(i, j) for i in range(3) for j in range(6, 9)}


@pytest.mark.parametrize("constraint", CONSTRAINTS, ids=lambda c: c.label())
def test_matches_brute_force(constraint):
    rng = np.random.default_rng(11)
    for _ in range(60):
        n = int(rng.integers(8, 48))
        sigma = int(rng.integers(2, 4))
        x = rng.integers(0, sigma, size=n + int(rng.integers(0, 6)))
        y = rng.integers(0, sigma, size=n + int(rng.integers(0, 6)))
        fast = lcs_match(x, y, n, constraint)
        slow = lcs_brute(x, y, n, constraint)
        assert fast.length == slow.length
        assert fast.witness == slow.witness
        assert fast.truncated == slow.truncated
        _check_witness(x, y, fast)


@pytest.mark.parametrize("kind", ["all", "offband"])
def test_hash_engine_agrees(kind):
    rng = np.random.default_rng(12)
    for _ in range(40):
        n = int(rng.integers(10, 80))
        x = rng.integers(0, 2, size=n + 8)
        y = rng.integers(0, 2, size=n + 8)
        c = MatchConstraint.all() if kind == "all" else MatchConstraint.offband(3)
        assert lcs_match(x, y, n, c, method="hash").length == lcs_brute(x, y, n, c).length


def test_all_splits_into_band_and_offband():
    rng = np.random.default_rng(13)
    for _ in range(100):
        n = int(rng.integers(20, 64))
        x = rng.integers(0, 2, size=n + 10)
        y = rng.integers(0, 2, size=n + 10)
        total = lcs_match(x, y, n).length
        for alpha in (0, 1, 4, 16):
            near = lcs_match(x, y, n, MatchConstraint.band(alpha)).length
            far = lcs_match(x, y, n, MatchConstraint.offband(alpha)).length
            assert total == max(near, far)


def test_domination_and_monotone_in_n():
    rng = np.random.default_rng(14)
    x = rng.integers(0, 2, size=300)
    y = rng.integers(0, 2, size=300)
    previous = 0
    for n in (30, 60, 120, 240):
        total = lcs_match(x, y, n).length
        assert total >= lcs_match(x, y, n, MatchConstraint.diagonal()).length
        assert total >= lcs_match(x, y, n, MatchConstraint.far_thirds()).length
        assert total >= previous
        previous = total


def test_symbolic_metric_equivalence():
    rng = np.random.default_rng(15)
    for _ in range(50):
        n = int(rng.integers(4, 40))
        x = rng.integers(0, 2, size=n + 12)
        y = rng.integers(0, 2, size=n + 12)
        assert metric_min_symbolic(x, y, n) == 2.0 ** (-lcs_match(x, y, n).length)


def test_distance_conversions():
    assert to_distance(0) == 1.0
    assert to_distance(3) == 0.125
    assert -math.log2(to_distance(60)) == 60
    assert log_distance(2000) == pytest.approx(-2000 * math.log(2))
    with pytest.raises(DomainError):
        to_distance(-1)


def test_exponent_statistic_lengths():
    result = lcs_match([0] * 40, [0] * 40, 1)
    assert exponent_statistic(result.model_copy(update={"value": 36, "n": 2 ** 18})) == pytest.approx(2.0)
    assert exponent_statistic(result.model_copy(update={"value": 0, "n": 8})) == 0.0


def test_circle_small_instance():
    result = min_dist_match([0.1, 0.4], [0.45, 0.8])
    assert result.value == pytest.approx(0.05)
    assert result.witness == (1, 0)


def test_circle_identical_diagonal_collision():
    pts = [Fraction(1, 3), Fraction(1, 5), Fraction(2, 7)]
    result = min_dist_match(pts, pts, MatchConstraint.diagonal())
    assert result.value == 0.0
    assert result.witness == (0, 0)
    assert result.collision
    assert exponent_statistic(result) == math.inf


def test_circle_metric_exponent():
    n = 64
    space = CircleSpace(precision_bits=40)
    xs = [0] + [1 << 39] * (n - 1)
    ys = [(1 << 40) // (n * n)] + [3 << 37] * (n - 1)
    result = min_dist_match(xs, ys, MatchConstraint.all(), space)
    assert exponent_statistic(result) == pytest.approx(2.0)


def test_circle_empty_input():
    with pytest.raises(DomainError):
        min_dist_match([], [])


@pytest.mark.parametrize("constraint", CONSTRAINTS, ids=lambda c: c.label())
def test_circle_matches_brute_force(constraint):
    rng = np.random.default_rng(16)
    for _ in range(4):
        xs = rng.random(256).tolist()
        ys = rng.random(256).tolist()
        fast = min_dist_match(xs, ys, constraint)
        slow = min_dist_brute(xs, ys, constraint)
        assert fast.value == slow.value
        assert fast.witness == slow.witness


def test_circle_fixed_point_matches_brute_force():
    rng = np.random.default_rng(17)
    space = CircleSpace(precision_bits=100)
    xs = [int(v) << 40 for v in rng.integers(0, 2 ** 60, size=60, dtype=np.uint64)]
    ys = [int(v) << 40 for v in rng.integers(0, 2 ** 60, size=60, dtype=np.uint64)]
    for c in (MatchConstraint.all(), MatchConstraint.offband(5), MatchConstraint.far_thirds()):
        assert min_dist_match(xs, ys, c, space).witness == min_dist_brute(xs, ys, c, space).witness


def test_constraint_mask_matches_admits():
    for n in (1, 5, 9, 10):
        for c in CONSTRAINTS:
            table = c.mask(n)
            assert table.shape == (n, n)
            for i in range(n):
                for j in range(n):
                    assert table[i, j] == c.admits(i, j, n)


def test_circle_all_splits_into_band_and_offband():
    rng = np.random.default_rng(19)
    xs = rng.random(256).tolist()
    ys = rng.random(256).tolist()
    total = min_dist_match(xs, ys).value
    for alpha in (0, 1, 4, 16):
        near = min_dist_match(xs, ys, MatchConstraint.band(alpha)).value
        far = min_dist_match(xs, ys, MatchConstraint.offband(alpha)).value
        assert total == min(near, far)


def test_mixed_character_and_integer_symbols_rejected():
    with pytest.raises(DomainError):
        lcs_match("0101", [0, 1, 0, 1], 2)
    with pytest.raises(DomainError):
        lcs_match(["0", 1, 0], [0, 1, 0], 2)
    with pytest.raises(DomainError):
        lcs_match(["01", "1"], ["0", "1"], 1)


def test_missing_witness_is_reported(monkeypatch):
    monkeypatch.setattr(orbit_matching, "_rect_witness", lambda *args: None)
    with pytest.raises(SearchError):
        lcs_match("0110", "0110", 2)


@pytest.mark.slow
def test_split_statistics_exhaustive():
    rng = np.random.default_rng(18)
    for _ in range(1000):
        n = int(rng.integers(3, 257))
        x = rng.integers(0, 2, size=n + int(rng.integers(0, 16)))
        y = rng.integers(0, 2, size=n + int(rng.integers(0, 16)))
        for c in CONSTRAINTS:
            if c.kind.value == "offband" and c.alpha + 1 >= n:
                continue
            fast, slow = lcs_match(x, y, n, c), lcs_brute(x, y, n, c)
            assert (fast.length, fast.witness) == (slow.length, slow.witness)
        total = lcs_match(x, y, n).length
        for alpha in (0, 1, 4, 16):
            near = lcs_match(x, y, n, MatchConstraint.band(alpha)).length
            if alpha + 1 >= n:
                assert total == near
                continue
            far = lcs_match(x, y, n, MatchConstraint.offband(alpha)).length
            assert total == max(near, far)


@pytest.mark.slow
def test_symbolic_metric_equivalence_up_to_512():
    rng = np.random.default_rng(20)
    sizes = [512] + [int(2 ** rng.uniform(2, 9)) for _ in range(199)]
    for n in sizes:
        x = rng.integers(0, 2, size=n + 16)
        y = rng.integers(0, 2, size=n + 16)
        assert metric_min_symbolic(x, y, n) == 2.0 ** (-lcs_match(x, y, n).length)
