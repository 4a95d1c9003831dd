# dimension_lab.py
"""
Correlation dimensions from samples and Renyi entropies from cylinder counts.

C(r) is the fraction of ordered pairs (a, b), a != b, at distance <= r. The
annealed curve pools points whose environments are drawn independently; the
quenched curve averages per-environment correlation sums over K environments.
"""

import logging
import math
from typing import Dict, Iterable, List, Literal, Optional, Protocol, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import linregress

from bernoulli_model import (
    ENV_MODEL_ID,
    BernoulliParams,
    annealed_cylinder_sum,
    cylinder_entropy,
    quenched_cylinder_sum,
    sample_fiber_sequence,
)
from errors import DomainError, FitError
from rds_core import CircleSpace, EnvPath, SymbolicSpace, metric_distance, sample_env_path, seed64, stream_seed

log = logging.getLogger("orbitgap.dimension_lab")

PAIR_BLOCK = 1 << 16


class RadiusGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    r_max: float = Field(..., gt=0.0)
    ratio: float = Field(..., gt=0.0, lt=1.0)
    count: int = Field(..., ge=4)

    @classmethod
    def spanning(cls, r_min: float, r_max: float, count: int) -> "RadiusGrid":
        """Geometric grid from r_max down to r_min inclusive."""
        if not 0 < r_min < r_max:
            raise DomainError(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
        return cls(r_max=r_max, ratio=(r_min / r_max) ** (1.0 / (count - 1)), count=count)

    def radii(self) -> np.ndarray:
        return self.r_max * self.ratio ** np.arange(self.count)


class CorrelationCurve(BaseModel):
    radii: List[float]
    values: List[float]
    kind: Literal["annealed", "quenched", "single"] = "single"
    environments: int = 1
    points_per_environment: int = 0

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.radii, self.values))


class SlopeFit(BaseModel):
    slope: float
    intercept: float
    fit_range: Tuple[float, float]
    residual: float
    points_used: int


# ---------------- Correlation sums ----------------

def _circle_pair_counts(points: np.ndarray, radii: np.ndarray) -> np.ndarray:
    p = np.sort(np.mod(np.asarray(points, dtype=float), 1.0))
    wrapped = np.concatenate((p - 1.0, p, p + 1.0))
    counts = np.zeros(radii.size, dtype=np.int64)
    total = p.size * (p.size - 1)
    for idx, r in enumerate(radii):
        if r >= 0.5:
            counts[idx] = total
            continue
        acc = 0
        # anchors in blocks; the sum does not depend on the blocking
        for lo in range(0, p.size, PAIR_BLOCK):
            anchor = p[lo:lo + PAIR_BLOCK]
            upper = np.searchsorted(wrapped, anchor + r, side="right")
            lower = np.searchsorted(wrapped, anchor - r, side="left")
            acc += int(np.sum(upper - lower - 1))
        counts[idx] = acc
    return counts


def _symbolic_pair_counts(words: np.ndarray, radii: np.ndarray, base: float) -> np.ndarray:
    words = np.asarray(words)
    size, depth = words.shape
    order = np.lexsort(words.T[::-1])
    ordered = words[order]
    mismatch = ordered[1:] != ordered[:-1]
    # identical neighbours get depth + 1: closer than any radius can resolve
    adjacent = np.where(mismatch.any(axis=1), mismatch.argmax(axis=1), depth + 1)
    counts = np.zeros(radii.size, dtype=np.int64)
    for idx, r in enumerate(radii):
        if r >= 1.0:
            counts[idx] = size * (size - 1)
            continue
        # d <= r iff the common prefix has length >= k_r; identical words always qualify
        k_r = min(math.ceil(math.log(1.0 / r) / math.log(base) - 1e-12), depth + 1)
        cuts = np.flatnonzero(adjacent < k_r) + 1
        bounds = np.concatenate(([0], cuts, [size]))
        groups = np.diff(bounds)
        counts[idx] = int(np.sum(groups * (groups - 1)))
    return counts


def correlation_sums(points, radii: Iterable[float], space=None) -> np.ndarray:
    """C(r) for every radius; ordered pairs, diagonal excluded, boundary included."""
    radii = np.asarray(list(radii), dtype=float)
    space = space if space is not None else CircleSpace()
    size = len(points)
    if size < 2:
        raise DomainError(f"correlation sums need at least 2 points, got {size}")
    if isinstance(space, CircleSpace) and space.precision_bits is None and not _is_exact(points):
        counts = _circle_pair_counts(np.asarray(points, dtype=float), radii)
    elif isinstance(space, SymbolicSpace):
        counts = _symbolic_pair_counts(np.asarray(points), radii, space.metric_base)
    else:
        counts = _generic_pair_counts(points, radii, space)
    return counts / float(size * (size - 1))


def correlation_sum(points, r: float, space=None) -> float:
    return float(correlation_sums(points, [r], space)[0])


def _is_exact(points) -> bool:
    first = points[0]
    return not isinstance(first, (float, np.floating))


def _generic_pair_counts(points, radii: np.ndarray, space) -> np.ndarray:
    dists = []
    for a in range(len(points)):
        for b in range(len(points)):
            if a != b:
                dists.append(float(metric_distance(space, points[a], points[b])))
    dists = np.sort(np.asarray(dists))
    return np.searchsorted(dists, radii, side="right").astype(np.int64)


# ---------------- Samplers ----------------

class PointSampler(Protocol):
    space: object

    def environment(self, seq: np.random.SeedSequence) -> EnvPath: ...

    def points(self, env: EnvPath, seq: np.random.SeedSequence, count: int): ...


class BernoulliPointSampler:
    """Words of length `depth` drawn from mu_omega of the random Bernoulli shift."""

    def __init__(self, params: BernoulliParams, depth: int = 40):
        self.params = params
        self.depth = depth
        self.space = SymbolicSpace(alphabet_size=2)

    def environment(self, seq: np.random.SeedSequence) -> EnvPath:
        return sample_env_path(seed64(seq), ENV_MODEL_ID, 2, 0, self.depth)

    def points(self, env: EnvPath, seq: np.random.SeedSequence, count: int) -> np.ndarray:
        p0 = np.where(env.window(0, self.depth) == 0, self.params.pA, self.params.pB)
        u = np.random.Generator(np.random.PCG64(seq)).random((count, self.depth))
        return (u >= p0).astype(np.uint8)


class CirclePointSampler:
    """Uniform circle points; every fiber measure of a conformal family is Lebesgue."""

    def __init__(self):
        self.space = CircleSpace()

    def environment(self, seq: np.random.SeedSequence) -> EnvPath:
        return EnvPath(symbols=np.zeros(1, dtype=np.uint8), seed=seed64(seq), model_id="lebesgue")

    def points(self, env: EnvPath, seq: np.random.SeedSequence, count: int) -> np.ndarray:
        return np.random.Generator(np.random.PCG64(seq)).random(count)


class AtomSampler:
    """Every point at the same location (a single atom)."""

    def __init__(self, location: float = 0.25):
        self.location = location
        self.space = CircleSpace()

    def environment(self, seq: np.random.SeedSequence) -> EnvPath:
        return EnvPath(symbols=np.zeros(1, dtype=np.uint8), model_id="atom")

    def points(self, env: EnvPath, seq: np.random.SeedSequence, count: int) -> np.ndarray:
        return np.full(count, self.location)


def _pool(batches: List) -> Union[np.ndarray, list]:
    if isinstance(batches[0], np.ndarray):
        return np.concatenate(batches)
    pooled: list = []
    for batch in batches:
        pooled.extend(batch)
    return pooled


def _check_sizes(M: int, K: int = 1) -> None:
    if M < 2 or K < 1:
        raise DomainError(f"need M >= 2 and K >= 1, got M={M}, K={K}")
    if M < 100:
        log.warning("correlation curve from only %d points per environment", M)


# ---------------- Curves ----------------

def annealed_curve(sampler: PointSampler, M: int, grid: RadiusGrid, seed: int) -> CorrelationCurve:
    """Pooled sample: point a uses its own environment stream and point stream."""
    _check_sizes(M)
    batches = []
    for a in range(M):
        env = sampler.environment(stream_seed(seed, a, "env"))
        batches.append(sampler.points(env, stream_seed(seed, a, "x"), 1))
    points = _pool(batches)
    radii = grid.radii()
    values = correlation_sums(points, radii, sampler.space)
    return CorrelationCurve(
        radii=radii.tolist(), values=values.tolist(), kind="annealed", environments=M, points_per_environment=1
    )


def quenched_curve(sampler: PointSampler, K: int, M: int, grid: RadiusGrid, seed: int) -> CorrelationCurve:
    """Per-environment correlation sums averaged over K environments."""
    _check_sizes(M, K)
    if K < 10:
        log.warning("quenched curve averages over only %d environments", K)
    radii = grid.radii()
    acc = np.zeros(radii.size)
    for k in range(K):
        env = sampler.environment(stream_seed(seed, k, "env"))
        points = sampler.points(env, stream_seed(seed, k, "x"), M)
        acc += correlation_sums(points, radii, sampler.space)
    return CorrelationCurve(
        radii=radii.tolist(), values=(acc / K).tolist(), kind="quenched", environments=K, points_per_environment=M
    )


# ---------------- Cylinder entropies ----------------

def _plug_in_square_sum(words: np.ndarray) -> float:
    """sum_C mu_hat(C)^2 for the rows of `words` (one k-gram per row)."""
    size, k = words.shape
    _, counts = np.unique(words, axis=0, return_counts=True)
    freq = counts / float(size)
    return float(np.sum(freq * freq))


def _kgrams(sample: np.ndarray, k: int) -> np.ndarray:
    if sample.ndim == 1:
        if sample.size < k:
            raise DomainError(f"sample of length {sample.size} has no {k}-grams")
        return sliding_window_view(sample, k)
    if sample.shape[1] < k:
        raise DomainError(f"words of length {sample.shape[1]} are shorter than k={k}")
    return sample[:, :k]


def renyi_from_cylinders(source, k_range: Iterable[int], quenched: bool = False) -> Dict[int, float]:
    """
    -(1/k) log2 sum_C mu(C_k)^2 for each k.

    source is one of:
      BernoulliParams    exact enumeration of all 2^k cylinders
      1-d array          one long sample; sliding k-grams give a plug-in mu_hat
      2-d array          independent words (rows); their first k symbols
      list of 2-d arrays one block of words per sampled environment (quenched
                         plug-in: per-environment square sums averaged before the log)
    Plug-in estimates are biased upward in entropy at small sample sizes.
    """
    ks = list(k_range)
    if any(k < 1 for k in ks):
        raise DomainError(f"cylinder lengths must be positive, got {ks}")
    out: Dict[int, float] = {}
    if isinstance(source, BernoulliParams):
        total = quenched_cylinder_sum if quenched else annealed_cylinder_sum
        for k in ks:
            out[k] = cylinder_entropy(total(source, k), k)
        return out
    if isinstance(source, (list, tuple)):
        blocks = [np.asarray(b) for b in source]
        for k in ks:
            mean_sq = float(np.mean([_plug_in_square_sum(_kgrams(b, k)) for b in blocks]))
            out[k] = cylinder_entropy(mean_sq, k)
        return out
    sample = np.asarray(source)
    for k in ks:
        out[k] = cylinder_entropy(_plug_in_square_sum(_kgrams(sample, k)), k)
    return out


def sample_quenched_words(params: BernoulliParams, K: int, M: int, depth: int, seed: int) -> List[np.ndarray]:
    """K environments with M words each, the input of the quenched plug-in estimator."""
    sampler = BernoulliPointSampler(params, depth)
    blocks = []
    for k in range(K):
        env = sampler.environment(stream_seed(seed, k, "env"))
        blocks.append(sampler.points(env, stream_seed(seed, k, "x"), M))
    return blocks


def sample_annealed_sequence(params: BernoulliParams, length: int, seed: int) -> np.ndarray:
    """One long fiber sequence under a random environment (stationary annealed sample)."""
    env = sample_env_path(seed64(stream_seed(seed, 0, "env")), ENV_MODEL_ID, 2, 0, length)
    return sample_fiber_sequence(params, env, stream_seed(seed, 0, "fiber"), length)


# ---------------- Slopes ----------------

def default_fit_range(curve: CorrelationCurve) -> Tuple[float, float]:
    """Middle half of the radius grid."""
    radii = sorted(curve.radii)
    quarter = len(radii) // 4
    inner = radii[quarter:len(radii) - quarter]
    return inner[0], inner[-1]


def fit_dimension(curve: CorrelationCurve, fit_range: Optional[Tuple[float, float]] = None) -> SlopeFit:
    """Least squares of log C(r) on log r over fit_range, points with C(r) = 0 dropped."""
    r_lo, r_hi = fit_range or default_fit_range(curve)
    r = np.asarray(curve.radii)
    c = np.asarray(curve.values)
    keep = (r >= r_lo * (1 - 1e-12)) & (r <= r_hi * (1 + 1e-12)) & (c > 0)
    if int(keep.sum()) < 4:
        raise FitError(f"only {int(keep.sum())} usable points in [{r_lo:.3g}, {r_hi:.3g}], need 4")
    lx, ly = np.log(r[keep]), np.log(c[keep])
    fit = linregress(lx, ly)
    resid = ly - (fit.intercept + fit.slope * lx)
    return SlopeFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        fit_range=(float(r_lo), float(r_hi)),
        residual=float(np.sqrt(np.mean(resid * resid))),
        points_used=int(keep.sum()),
    )


def local_slopes(curve: CorrelationCurve) -> List[Tuple[float, float]]:
    """Secant slopes between neighbouring radii, at their geometric midpoint."""
    pts = sorted((r, c) for r, c in curve.points if c > 0)
    out = []
    for (r0, c0), (r1, c1) in zip(pts, pts[1:]):
        if r1 > r0:
            out.append((math.sqrt(r0 * r1), (math.log(c1) - math.log(c0)) / (math.log(r1) - math.log(r0))))
    return out
