# orbit_matching.py
"""
Minimal-distance statistics between two orbit segments of length n.

Symbolic orbits are handled as longest-common-substring problems: on a shift
space with d = b^-k, -log_b min_{i,j<n} d(sigma^i x, sigma^j y) is the length
of the longest common substring of x and y whose starts are both below n.
Circle orbits are handled as constrained nearest pairs.

Constraints select the admissible index pairs (i, j):
    all        every i, j < n
    diagonal   i = j
    band(a)    |i - j| <= a
    offband(a) |i - j| > a
    farthirds  i < n/3 and 2n/3 <= j < n
"""

import bisect
import enum
import logging
import math
from fractions import Fraction
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from errors import DomainError, LengthError, SearchError
from rds_core import CircleSpace, SymbolicSpace
from suffix_automaton import SuffixAutomaton

log = logging.getLogger("orbitgap.orbit_matching")

# odd multipliers, hence invertible mod 2^64
HASH_BASES = (0x9E3779B97F4A7C15, 0xC2B2AE3D27D4EB4F)


class ConstraintKind(str, enum.Enum):
    ALL = "all"
    DIAGONAL = "diag"
    BAND = "band"
    OFFBAND = "offband"
    FAR_THIRDS = "farthirds"


class MatchConstraint(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ConstraintKind = ConstraintKind.ALL
    alpha: int = Field(0, ge=0)

    @classmethod
    def all(cls) -> "MatchConstraint":
        return cls(kind=ConstraintKind.ALL)

    @classmethod
    def diagonal(cls) -> "MatchConstraint":
        return cls(kind=ConstraintKind.DIAGONAL)

    @classmethod
    def band(cls, alpha: int) -> "MatchConstraint":
        return cls(kind=ConstraintKind.BAND, alpha=alpha)

    @classmethod
    def offband(cls, alpha: int) -> "MatchConstraint":
        return cls(kind=ConstraintKind.OFFBAND, alpha=alpha)

    @classmethod
    def far_thirds(cls) -> "MatchConstraint":
        return cls(kind=ConstraintKind.FAR_THIRDS)

    def label(self) -> str:
        if self.kind in (ConstraintKind.BAND, ConstraintKind.OFFBAND):
            return f"{self.kind.value}({self.alpha})"
        return self.kind.value

    def admits(self, i: int, j: int, n: int) -> bool:
        if not (0 <= i < n and 0 <= j < n):
            return False
        if self.kind is ConstraintKind.ALL:
            return True
        if self.kind is ConstraintKind.DIAGONAL:
            return i == j
        if self.kind is ConstraintKind.BAND:
            return abs(i - j) <= self.alpha
        if self.kind is ConstraintKind.OFFBAND:
            return abs(i - j) > self.alpha
        return 3 * i < n and 3 * j >= 2 * n

    def mask(self, n: int) -> np.ndarray:
        """Boolean n x n table of admits(i, j, n)."""
        i = np.arange(n)[:, None]
        j = np.arange(n)[None, :]
        if self.kind is ConstraintKind.ALL:
            return np.ones((n, n), dtype=bool)
        if self.kind is ConstraintKind.DIAGONAL:
            return i == j
        if self.kind is ConstraintKind.BAND:
            return np.abs(i - j) <= self.alpha
        if self.kind is ConstraintKind.OFFBAND:
            return np.abs(i - j) > self.alpha
        return (3 * i < n) & (3 * j >= 2 * n)

    def first_pair(self, n: int) -> Tuple[int, int]:
        """Lexicographically smallest admissible pair."""
        if self.kind is ConstraintKind.FAR_THIRDS:
            return 0, _far_thirds_bounds(n)[1]
        if self.kind is ConstraintKind.OFFBAND:
            if self.alpha + 1 >= n:
                raise DomainError(f"offband({self.alpha}) admits no pair for n={n}")
            return 0, self.alpha + 1
        return 0, 0

    def validate_for(self, n: int) -> None:
        if n < 1:
            raise DomainError(f"window count must be positive, got {n}")
        if self.kind is ConstraintKind.FAR_THIRDS and n < 3:
            raise DomainError(f"farthirds needs n >= 3, got {n}")
        self.first_pair(n)


class MatchResult(BaseModel):
    """
    A constrained match statistic with its witness pair.

    kind="length": value is the match length m (integer valued).
    kind="distance": value is the minimal circle distance; log_value is its
    natural log computed from the exact representation (-inf on collision).
    """

    value: float
    witness: Tuple[int, int]
    truncated: bool = False
    n: int
    kind: Literal["length", "distance"] = "length"
    constraint: MatchConstraint = MatchConstraint()
    log_value: Optional[float] = None
    collision: bool = False

    @property
    def length(self) -> int:
        return int(self.value)


def _far_thirds_bounds(n: int) -> Tuple[int, int]:
    """(a, b): i < n/3 <=> i < a and 2n/3 <= j <=> j >= b."""
    return (n + 2) // 3, (2 * n + 2) // 3


# ---------------- Symbolic inputs ----------------

def _codes(seq) -> Tuple[np.ndarray, bool]:
    """Integer codes of one sequence and whether it was given as characters."""
    if isinstance(seq, str):
        seq = list(seq)
    if isinstance(seq, (list, tuple)) and len({isinstance(s, str) for s in seq}) > 1:
        raise DomainError("a symbol sequence mixes characters and integers")
    arr = np.asarray(seq)
    if arr.dtype.kind not in "US":
        return arr, False
    chars = arr.tolist()
    if any(len(c) != 1 for c in chars):
        raise DomainError("character symbols must be single characters")
    return np.array([ord(c) for c in chars], dtype=np.int64), True


def _symbols(x, y) -> Tuple[np.ndarray, np.ndarray, int]:
    """Map both sequences onto a dense joint alphabet [0, sigma)."""
    xa, x_text = _codes(x)
    ya, y_text = _codes(y)
    # '0' and 0 would otherwise become different symbols
    if xa.size and ya.size and x_text != y_text:
        raise DomainError("one sequence is characters and the other integers")
    if xa.ndim != 1 or ya.ndim != 1:
        raise DomainError("symbol sequences must be one-dimensional")
    joint = np.concatenate((xa.astype(np.int64), ya.astype(np.int64)))
    if joint.size == 0:
        return xa.astype(np.uint8), ya.astype(np.uint8), 1
    alphabet, codes = np.unique(joint, return_inverse=True)
    dtype = np.uint8 if alphabet.size <= 256 else np.int32
    codes = codes.astype(dtype)
    return codes[:xa.size], codes[xa.size:], int(alphabet.size)


def _lce_table(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    """ext[i, j] = longest common extension of x[i..] and y[j..] for i, j < n."""
    ext = np.zeros((n, n), dtype=np.int64)
    row = np.zeros(y.size + 1, dtype=np.int64)
    for i in range(x.size - 1, -1, -1):
        below = row
        row = np.zeros(y.size + 1, dtype=np.int64)
        row[:-1] = np.where(y == x[i], below[1:] + 1, 0)
        if i < n:
            ext[i] = row[:n]
    return ext


def _runs_from(equal: np.ndarray) -> np.ndarray:
    """runs[k] = number of consecutive True values starting at k."""
    size = equal.size
    idx = np.arange(size)
    nxt_false = np.where(equal, size, idx)
    nxt_false = np.minimum.accumulate(nxt_false[::-1])[::-1]
    return nxt_false - idx


# -- band scan: diagonals d = j - i in [lo, hi] --

def _band_scan(x: np.ndarray, y: np.ndarray, n: int, lo: int, hi: int) -> Tuple[int, Tuple[int, int]]:
    best_m, best_pair = -1, (n, n)
    for d in range(lo, hi + 1):
        i0 = max(0, -d)
        i1 = min(n, n - d)
        if i1 <= i0:
            continue
        span = min(x.size - i0, y.size - (i0 + d))
        runs = _runs_from(x[i0:i0 + span] == y[i0 + d:i0 + d + span])[:i1 - i0]
        m = int(runs.max())
        k = int(np.argmax(runs))
        pair = (i0 + k, i0 + k + d)
        if m > best_m or (m == best_m and pair < best_pair):
            best_m, best_pair = m, pair
    return best_m, best_pair


# -- suffix automaton on reversed strings: x starts < a, y starts in [b, c) --

def _rect_automaton(x: np.ndarray, y: np.ndarray, sigma: int, a: int, b: int, c: int) -> int:
    sam = SuffixAutomaton(x[::-1].tolist(), sigma)
    # occurrence in reversed x ending at e starts at i = |x| - 1 - e in x
    stats = sam.matching_statistics(y[::-1].tolist(), min_end=x.size - a)
    # reversed position t is y start j = |y| - 1 - t
    lo_t, hi_t = y.size - c, y.size - b
    window = stats[lo_t:hi_t]
    return int(window.max()) if window.size else 0


# -- rolling hash binary search --

def _powers(base: int, size: int) -> np.ndarray:
    out = np.empty(size, dtype=np.uint64)
    out[0] = 1
    if size > 1:
        out[1:] = np.uint64(base)
        out[1:] = np.cumprod(out[1:], dtype=np.uint64)
    return out


class _GramHasher:
    """Two independent polynomial hashes mod 2^64 of every m-gram."""

    def __init__(self, seq: np.ndarray):
        self.seq = seq
        vals = seq.astype(np.uint64) + np.uint64(1)
        self.prefix = []
        self.inverse = []
        for base in HASH_BASES:
            pw = _powers(base, seq.size + 1)
            prefix = np.zeros(seq.size + 1, dtype=np.uint64)
            prefix[1:] = np.cumsum(vals * pw[:-1], dtype=np.uint64)
            self.prefix.append(prefix)
            self.inverse.append(_powers(pow(base, -1, 1 << 64), seq.size + 1))

    def grams(self, m: int, count: int) -> np.ndarray:
        """(count, 2) hash pairs of seq[i:i+m] for i < count."""
        cols = []
        for prefix, inv in zip(self.prefix, self.inverse):
            raw = prefix[m:m + count] - prefix[:count]
            cols.append(raw * inv[:count])
        return np.stack(cols, axis=1)


def _offband_exists_exact(x: np.ndarray, y: np.ndarray, n: int, alpha: int, m: int) -> bool:
    return _offband_witness(x, y, n, alpha, m) is not None


def _offband_exists(x, y, hx: _GramHasher, hy: _GramHasher, n: int, alpha: int, m: int) -> bool:
    cx = min(n, x.size - m + 1)
    cy = min(n, y.size - m + 1)
    if cx <= 0 or cy <= 0:
        return False
    keys = np.concatenate((hx.grams(m, cx), hy.grams(m, cy)))
    _, group = np.unique(keys, axis=0, return_inverse=True)
    group = group.reshape(-1)
    groups = int(group.max()) + 1
    gx, gy = group[:cx], group[cx:]
    lo = np.full(groups, np.iinfo(np.int64).max, dtype=np.int64)
    hi = np.full(groups, -1, dtype=np.int64)
    ix = np.arange(cx, dtype=np.int64)
    np.minimum.at(lo, gx, ix)
    np.maximum.at(hi, gx, ix)
    j = np.arange(cy, dtype=np.int64)
    left = lo[gy] < j - alpha
    right = hi[gy] > j + alpha
    candidates = np.flatnonzero(left | right)
    if candidates.size == 0:
        return False
    jj = int(candidates[0])
    ii = int(lo[gy[jj]]) if left[jj] else int(hi[gy[jj]])
    if np.array_equal(x[ii:ii + m], y[jj:jj + m]):
        return True
    log.warning("hash collision at m=%d (i=%d, j=%d); rechecking exactly", m, ii, jj)
    return _offband_exists_exact(x, y, n, alpha, m)


def _hash_search(x: np.ndarray, y: np.ndarray, n: int, alpha: int) -> int:
    """Largest m with an m-gram shared by starts |i - j| > alpha (alpha = -1: all pairs)."""
    hx, hy = _GramHasher(x), _GramHasher(y)

    def exists(m: int) -> bool:
        return _offband_exists(x, y, hx, hy, n, alpha, m)

    if not exists(1):
        return 0
    lo, hi = 1, 2
    limit = min(x.size, y.size)
    while hi <= limit and exists(hi):
        lo, hi = hi, hi * 2
    hi = min(hi, limit + 1)
    # exists(lo) holds, exists(hi) fails (or hi is past every possible length)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if exists(mid):
            lo = mid
        else:
            hi = mid
    return lo


# -- witnesses --

def _gram_groups(seq: np.ndarray, m: int, starts: range) -> dict:
    raw = seq.tobytes()
    w = seq.itemsize
    groups: dict = {}
    for i in starts:
        groups.setdefault(raw[i * w:(i + m) * w], []).append(i)
    return groups


def _offband_witness(x, y, n: int, alpha: int, m: int) -> Optional[Tuple[int, int]]:
    xs = _gram_groups(x, m, range(min(n, x.size - m + 1)))
    ys = _gram_groups(y, m, range(min(n, y.size - m + 1)))
    best = None
    for key, ilist in xs.items():
        jlist = ys.get(key)
        if not jlist:
            continue
        for i in ilist:
            if best is not None and i > best[0]:
                break
            if jlist[0] < i - alpha:
                j = jlist[0]
            else:
                k = bisect.bisect_right(jlist, i + alpha)
                if k == len(jlist):
                    continue
                j = jlist[k]
            if best is None or (i, j) < best:
                best = (i, j)
            break
    return best


def _rect_witness(x, y, m: int, a: int, b: int, c: int) -> Optional[Tuple[int, int]]:
    xs = _gram_groups(x, m, range(min(a, x.size - m + 1)))
    ys = _gram_groups(y, m, range(b, min(c, y.size - m + 1)))
    best = None
    for key, jlist in ys.items():
        ilist = xs.get(key)
        if ilist and (best is None or (ilist[0], jlist[0]) < best):
            best = (ilist[0], jlist[0])
    return best


# ---------------- Public symbolic API ----------------

def lcs_match(x, y, n: int, constraint: MatchConstraint = MatchConstraint(), method: str = "auto") -> MatchResult:
    """
    Longest common substring over admissible window starts (i, j), i, j < n.

    Matches may run past index n up to the end of either sequence; truncated
    is set when the witness match reaches an end. method: "auto" picks the
    engine by constraint, "hash" forces the rolling-hash search (all/offband),
    "brute" uses the quadratic reference.
    """
    xs, ys, sigma = _symbols(x, y)
    if xs.size < n or ys.size < n:
        raise LengthError(f"sequences of length {xs.size}, {ys.size} are shorter than n={n}")
    constraint.validate_for(n)
    if method == "brute":
        return lcs_brute(xs, ys, n, constraint)

    kind, alpha = constraint.kind, constraint.alpha
    if kind in (ConstraintKind.DIAGONAL, ConstraintKind.BAND):
        reach = 0 if kind is ConstraintKind.DIAGONAL else min(alpha, n - 1)
        m, pair = _band_scan(xs, ys, n, -reach, reach)
    else:
        if kind is ConstraintKind.FAR_THIRDS:
            a, b = _far_thirds_bounds(n)
            c = n
        else:
            a, b, c = n, 0, n
        if kind is ConstraintKind.OFFBAND or (method == "hash" and kind is ConstraintKind.ALL):
            m = _hash_search(xs, ys, n, alpha if kind is ConstraintKind.OFFBAND else -1)
        else:
            m = _rect_automaton(xs, ys, sigma, a, b, c)
        if m == 0:
            pair = constraint.first_pair(n)
        elif kind is ConstraintKind.OFFBAND:
            pair = _offband_witness(xs, ys, n, alpha, m)
        else:
            pair = _rect_witness(xs, ys, m, a, b, c)
        if pair is None:
            raise SearchError(f"no witness for a match of length {m}")
    i, j = pair
    truncated = m > 0 and (i + m == xs.size or j + m == ys.size)
    return MatchResult(value=m, witness=(i, j), truncated=truncated, n=n, kind="length", constraint=constraint)


def lcs_brute(x, y, n: int, constraint: MatchConstraint = MatchConstraint()) -> MatchResult:
    """Quadratic reference: longest common extension at every admissible pair."""
    xs, ys, _ = _symbols(x, y)
    if xs.size < n or ys.size < n:
        raise LengthError(f"sequences of length {xs.size}, {ys.size} are shorter than n={n}")
    constraint.validate_for(n)
    ext = np.where(constraint.mask(n), _lce_table(xs, ys, n), -1)
    # argmax returns the first maximum in row-major order: the smallest (i, j)
    i, j = divmod(int(np.argmax(ext)), n)
    best_m, best_pair = int(ext[i, j]), (i, j)
    truncated = best_m > 0 and (i + best_m == xs.size or j + best_m == ys.size)
    return MatchResult(value=best_m, witness=best_pair, truncated=truncated, n=n, constraint=constraint)


def metric_min_symbolic(x, y, n: int, base: float = 2.0) -> float:
    """Brute-force min_{i,j<n} d(sigma^i x, sigma^j y) on the shift space."""
    xs, ys, sigma = _symbols(x, y)
    space = SymbolicSpace(alphabet_size=sigma, metric_base=base)
    best = math.inf
    for i in range(n):
        for j in range(n):
            k = space.agreement(xs[i:], ys[j:])
            if k is None:
                # identical finite tails: resolution ends at their length
                k = xs.size - i
            best = min(best, base ** (-k))
    return best


def to_distance(m: int, base: float = 2.0) -> float:
    if m < 0:
        raise DomainError(f"match length must be nonnegative, got {m}")
    return float(base) ** (-m)


def log_distance(m: int, base: float = 2.0) -> float:
    """Natural log of base^-m, valid far below the float range."""
    if m < 0:
        raise DomainError(f"match length must be nonnegative, got {m}")
    return -m * math.log(base)


# ---------------- Circle inputs ----------------

def _exact_log(raw, space: CircleSpace) -> float:
    if raw == 0:
        return -math.inf
    if isinstance(raw, int) and space.precision_bits:
        return math.log(raw) - space.precision_bits * math.log(2.0)
    if isinstance(raw, Fraction):
        return math.log(raw.numerator) - math.log(raw.denominator)
    return math.log(raw)


def _as_float(raw, space: CircleSpace) -> float:
    if isinstance(raw, int) and space.precision_bits:
        return raw / space.modulus
    return float(raw)


def _walk_nearest(xv, order: List[int], vals: list, space: CircleSpace, skip) -> Tuple[object, int]:
    """Nearest admissible y to xv, smallest index on ties, by walking out from its sorted slot."""
    size = len(vals)
    period = space.modulus if space.precision_bits else 1
    best_d, best_j = None, -1
    pos = bisect.bisect_left(vals, xv)
    for direction in (1, -1):
        start = pos if direction == 1 else pos - 1
        for step in range(size):
            k = (start + direction * step) % size
            yv = vals[k]
            reach = (yv - xv) % period if direction == 1 else (xv - yv) % period
            if best_d is not None and reach > best_d:
                break
            j = order[k]
            if skip(j):
                continue
            d = space.raw_distance(xv, yv)
            if best_d is None or d < best_d or (d == best_d and j < best_j):
                best_d, best_j = d, j
    return best_d, best_j


def min_dist_match(xs: Sequence, ys: Sequence, constraint: MatchConstraint = MatchConstraint(),
                   space: Optional[CircleSpace] = None) -> MatchResult:
    """
    Minimal circle distance over admissible pairs, smallest (i, j) on ties.

    Points are floats, Fractions, or fixed-point integers (pass the space that
    carries their precision).
    """
    n = len(xs)
    if n == 0 or len(ys) == 0:
        raise DomainError("min_dist_match needs nonempty point sequences")
    if len(ys) != n:
        raise DomainError(f"point sequences differ in length: {n} vs {len(ys)}")
    constraint.validate_for(n)
    space = space or CircleSpace()
    kind, alpha = constraint.kind, constraint.alpha

    best_d, best_pair = None, None

    def offer(d, pair):
        nonlocal best_d, best_pair
        if best_d is None or d < best_d or (d == best_d and pair < best_pair):
            best_d, best_pair = d, pair

    if kind in (ConstraintKind.DIAGONAL, ConstraintKind.BAND):
        reach = 0 if kind is ConstraintKind.DIAGONAL else min(alpha, n - 1)
        for i in range(n):
            for j in range(max(0, i - reach), min(n, i + reach + 1)):
                offer(space.raw_distance(xs[i], ys[j]), (i, j))
    else:
        if kind is ConstraintKind.FAR_THIRDS:
            a, b = _far_thirds_bounds(n)
        else:
            a, b = n, 0
        order = sorted(range(b, n), key=lambda j: ys[j])
        vals = [ys[j] for j in order]
        if kind is ConstraintKind.OFFBAND:
            for i in range(a):
                d, j = _walk_nearest(xs[i], order, vals, space, lambda j, i=i: abs(i - j) <= alpha)
                if d is not None:
                    offer(d, (i, j))
        else:
            for i in range(a):
                d, j = _walk_nearest(xs[i], order, vals, space, lambda j: False)
                offer(d, (i, j))

    return MatchResult(
        value=_as_float(best_d, space),
        witness=best_pair,
        n=n,
        kind="distance",
        constraint=constraint,
        log_value=_exact_log(best_d, space),
        collision=best_d == 0,
    )


def min_dist_brute(xs: Sequence, ys: Sequence, constraint: MatchConstraint = MatchConstraint(),
                   space: Optional[CircleSpace] = None) -> MatchResult:
    n = len(xs)
    if n == 0 or len(ys) != n:
        raise DomainError("min_dist_brute needs two nonempty sequences of equal length")
    constraint.validate_for(n)
    space = space or CircleSpace()
    best_d, best_pair = None, None
    for i in range(n):
        for j in range(n):
            if constraint.admits(i, j, n):
                d = space.raw_distance(xs[i], ys[j])
                if best_d is None or d < best_d:
                    best_d, best_pair = d, (i, j)
    return MatchResult(
        value=_as_float(best_d, space),
        witness=best_pair,
        n=n,
        kind="distance",
        constraint=constraint,
        log_value=_exact_log(best_d, space),
        collision=best_d == 0,
    )


# ---------------- Exponent statistic ----------------

def exponent_statistic(result: MatchResult, n: Optional[int] = None, base: float = 2.0) -> float:
    """
    -log(min distance) / log n. Lengths convert through m log b; an exact
    collision (distance 0) gives +inf, and result.collision is set.
    """
    n = result.n if n is None else n
    if n < 2:
        raise DomainError(f"exponent statistic needs n >= 2, got {n}")
    if result.kind == "length":
        return result.value * math.log(base) / math.log(n)
    if result.collision:
        return math.inf
    log_value = result.log_value if result.log_value is not None else math.log(result.value)
    return -log_value / math.log(n)
