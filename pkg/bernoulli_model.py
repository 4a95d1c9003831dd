# bernoulli_model.py
"""
Random Bernoulli shift: the environment omega is an i.i.d. fair sequence over
{A, B} and the fiber measure is mu_omega = prod_i mu_{omega_i} with
mu_A(0) = pA, mu_B(0) = pB.

Entropies are in bits per symbol. The exponent of the minimal orbit distance
is max(2 / H2_an, 1 / H2_qu); which term wins splits the (pA, pB) square into
an annealed and a quenched region.
"""

import enum
import logging
import math
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize

from errors import DomainError, LengthError, ResourceLimitError, SolverError
from rds_core import EnvPath, sample_env_path

log = logging.getLogger("orbitgap.bernoulli_model")

ENV_MODEL_ID = "bernoulli-env"
BOUNDARY_TOL = 1e-9
MAX_EXACT_K = 24

DISCREPANCY_NOTE = (
    "H2_qu is computed from the cylinder sum -log2((pA^2 + pB^2 + (1-pA)^2 + (1-pB)^2) / 2). "
    "The simplified expression -log2((pA^2 - 1/2)^2 + (pB^2 - 1/2)^2 + 1/2) that often accompanies it "
    "is not equal to it (at pA = pB = 1/2 the arguments are 1/2 and 5/8). "
    "The diagonal boundary c- = 1/2 - sqrt(2*sqrt(sqrt(2)-1) - 1)/2 = 0.23205 belongs to the simplified "
    "expression; the cylinder-sum form gives c- = 1/2 - sqrt(sqrt(2)-1)/2 = 0.178203."
)

Word = Union[str, Sequence[int], np.ndarray]


class Regime(str, enum.Enum):
    ANNEALED = "annealed"
    QUENCHED = "quenched"
    BOUNDARY = "boundary"


class BernoulliParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    pA: float = Field(..., gt=0.0, lt=1.0)
    pB: float = Field(..., gt=0.0, lt=1.0)

    @property
    def s(self) -> float:
        return self.pA + self.pB

    def swapped(self) -> "BernoulliParams":
        return BernoulliParams(pA=self.pB, pB=self.pA)

    def flipped(self) -> "BernoulliParams":
        return BernoulliParams(pA=1.0 - self.pA, pB=1.0 - self.pB)


class PhasePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: BernoulliParams
    h2_an: float
    h2_qu: float
    exponent: float
    regime: Regime


class BoundaryCurve(BaseModel):
    samples: List[Tuple[float, float]]
    tol: float


# ---------------- Cylinder measures ----------------

def _bits(word: Word) -> np.ndarray:
    if isinstance(word, str):
        if set(word) - {"0", "1"}:
            raise DomainError(f"fiber word must be over {{0,1}}, got {word!r}")
        return np.frombuffer(word.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(word, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise DomainError("fiber word must be over {0,1}")
    return arr.astype(np.uint8)


def _env_bits(env_word: Word) -> np.ndarray:
    if isinstance(env_word, str):
        table = {"A": 0, "B": 1, "0": 0, "1": 1}
        try:
            return np.array([table[c] for c in env_word], dtype=np.uint8)
        except KeyError:
            raise DomainError(f"environment word must be over {{A,B}}, got {env_word!r}")
    return _bits(env_word)


def mu_cylinder_annealed(params: BernoulliParams, word: Word) -> float:
    """mu(C) = 2^-k (pA + pB)^#0 (2 - pA - pB)^#1."""
    bits = _bits(word)
    k = bits.size
    if k == 0:
        raise DomainError("cylinder word must be nonempty")
    ones = int(bits.sum())
    zeros = k - ones
    return (params.s ** zeros) * ((2.0 - params.s) ** ones) / (2.0 ** k)


def mu_cylinder_quenched(params: BernoulliParams, env_word: Word, word: Word) -> float:
    env = _env_bits(env_word)
    bits = _bits(word)
    if env.size != bits.size:
        raise DomainError(f"environment word has length {env.size}, fiber word {bits.size}")
    p0 = np.where(env == 0, params.pA, params.pB)
    return float(np.prod(np.where(bits == 0, p0, 1.0 - p0)))


def _enumerate_products(weight0: float, weight1: float, k: int) -> np.ndarray:
    """All 2^k products w_{x_0} ... w_{x_{k-1}}, word index read as binary."""
    if k > MAX_EXACT_K:
        raise ResourceLimitError(f"exact enumeration limited to k <= {MAX_EXACT_K}, got {k}")
    values = np.ones(1)
    for _ in range(k):
        values = np.concatenate((values * weight0, values * weight1))
    return values


def annealed_cylinder_sum(params: BernoulliParams, k: int) -> float:
    """Sum over all k-cylinders of mu(C)^2, by enumeration."""
    probs = _enumerate_products(params.s / 2.0, (2.0 - params.s) / 2.0, k)
    return float(np.sum(probs * probs))


def quenched_cylinder_sum(params: BernoulliParams, k: int) -> float:
    """
    Sum over all k-cylinders of the environment average of mu_omega(C)^2.

    The average over the 2^k environment words factorises per symbol, so each
    cylinder contributes prod_i (mu_A(x_i)^2 + mu_B(x_i)^2) / 2.
    """
    q0 = (params.pA ** 2 + params.pB ** 2) / 2.0
    q1 = ((1.0 - params.pA) ** 2 + (1.0 - params.pB) ** 2) / 2.0
    return float(np.sum(_enumerate_products(q0, q1, k)))


def cylinder_entropy(cylinder_sum: float, k: int) -> float:
    return -math.log2(cylinder_sum) / k


# ---------------- Closed forms ----------------

def renyi_annealed(params: BernoulliParams) -> float:
    s = params.s
    return -math.log2((s * s - 2.0 * s + 2.0) / 2.0)


def renyi_quenched(params: BernoulliParams) -> float:
    a, b = params.pA, params.pB
    return -math.log2((a * a + b * b + (1.0 - a) ** 2 + (1.0 - b) ** 2) / 2.0)


def renyi_quenched_printed(params: BernoulliParams) -> float:
    """The simplified expression; kept only to document the discrepancy."""
    a, b = params.pA, params.pB
    return -math.log2((a * a - 0.5) ** 2 + (b * b - 0.5) ** 2 + 0.5)


def classify(h2_an: float, h2_qu: float, tol: float = BOUNDARY_TOL) -> Tuple[float, Regime]:
    annealed, quenched = 2.0 / h2_an, 1.0 / h2_qu
    value = max(annealed, quenched)
    if abs(annealed - quenched) <= tol * value:
        return value, Regime.BOUNDARY
    return value, (Regime.ANNEALED if annealed > quenched else Regime.QUENCHED)


def exponent(params: BernoulliParams, tol: float = BOUNDARY_TOL) -> PhasePoint:
    h_an = renyi_annealed(params)
    h_qu = renyi_quenched(params)
    value, regime = classify(h_an, h_qu, tol)
    return PhasePoint(params=params, h2_an=h_an, h2_qu=h_qu, exponent=value, regime=regime)


# ---------------- Phase boundary ----------------

def _bisect(g: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if (g_lo > 0) == (g_hi > 0):
        raise SolverError(f"no sign change on [{lo}, {hi}]: g={g_lo:.3g}, {g_hi:.3g}")
    return float(optimize.bisect(g, lo, hi, xtol=tol * 1e-3, maxiter=200))


def _entropy_pair(source: str, k: int) -> Callable[[BernoulliParams], Tuple[float, float]]:
    if source == "closed":
        return lambda p: (renyi_annealed(p), renyi_quenched(p))
    if source == "cylinders":
        return lambda p: (
            cylinder_entropy(annealed_cylinder_sum(p, k), k),
            cylinder_entropy(quenched_cylinder_sum(p, k), k),
        )
    raise DomainError(f"unknown entropy source {source!r}")


def phase_boundary_diag(tol: float = 1e-9, source: str = "closed", k: int = 12) -> Tuple[float, float]:
    """
    Roots c- < 1/2 < c+ of 2 H2_qu(p, 1-p) - H2_an(p, 1-p) on the anti-diagonal.

    `source="cylinders"` evaluates both entropies by exact k-cylinder sums
    instead of the closed forms.
    """
    if tol < 1e-12:
        raise DomainError(f"tolerance must be >= 1e-12, got {tol}")
    entropies = _entropy_pair(source, k)

    def g(p: float) -> float:
        h_an, h_qu = entropies(BernoulliParams(pA=p, pB=1.0 - p))
        return 2.0 * h_qu - h_an

    edge = 1e-9
    c_minus = _bisect(g, edge, 0.5, tol)
    c_plus = _bisect(g, 0.5, 1.0 - edge, tol)
    log.info("diagonal boundary (%s): c- = %.9f, c+ = %.9f", source, c_minus, c_plus)
    return c_minus, c_plus


def closed_form_c_pm() -> Tuple[float, float]:
    r = 0.5 * math.sqrt(math.sqrt(2.0) - 1.0)
    return 0.5 - r, 0.5 + r


def printed_c_pm() -> Tuple[float, float]:
    r = 0.5 * math.sqrt(2.0 * math.sqrt(math.sqrt(2.0) - 1.0) - 1.0)
    return 0.5 - r, 0.5 + r


def trace_boundary(samples: int = 64, tol: float = 1e-9) -> BoundaryCurve:
    """Points of the curve H2_an = 2 H2_qu, found by bisection in pB for each pA."""

    def f(pa: float, pb: float) -> float:
        p = BernoulliParams(pA=pa, pB=pb)
        return renyi_annealed(p) - 2.0 * renyi_quenched(p)

    edge = 1e-9
    points: List[Tuple[float, float]] = []
    for k in range(samples):
        pa = (k + 0.5) / samples
        # f < 0 on the diagonal (annealed); look for a positive end on each side
        for lo, hi in ((edge, pa), (pa, 1.0 - edge)):
            far = lo if hi == pa else hi
            if f(pa, far) <= 0:
                continue
            pb = _bisect(lambda q: f(pa, q), lo, hi, tol)
            points.append((pa, pb))
    return BoundaryCurve(samples=points, tol=tol)


# ---------------- Level sets of the exponent ----------------

class LevelSet(BaseModel):
    level: float
    line_sums: List[float]
    radius: float
    segments: List[List[Tuple[float, float]]]


def _exponent_pieces(pa: np.ndarray, pb: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(2 / H2_an, 1 / H2_qu) evaluated pointwise."""
    s = pa + pb
    h_an = -np.log2((s * s - 2.0 * s + 2.0) / 2.0)
    h_qu = -np.log2((pa * pa + pb * pb + (1.0 - pa) ** 2 + (1.0 - pb) ** 2) / 2.0)
    return 2.0 / h_an, 1.0 / h_qu


def _runs(keep: np.ndarray, pa: np.ndarray, pb: np.ndarray) -> List[List[Tuple[float, float]]]:
    out: List[List[Tuple[float, float]]] = []
    current: List[Tuple[float, float]] = []
    for k, x, y in zip(keep.tolist(), pa.tolist(), pb.tolist()):
        if k:
            current.append((x, y))
        elif current:
            out.append(current)
            current = []
    if current:
        out.append(current)
    return [seg for seg in out if len(seg) >= 2]


def exponent_level_set(level: float, samples: int = 256) -> LevelSet:
    """
    Sampled level set {max(2/H2_an, 1/H2_qu) = level} in the open unit square.

    2/H2_an depends on pA + pB only, so its level sets are lines of slope -1.
    1/H2_qu depends on the distance to (1/2, 1/2), so its level sets are
    circles around that point. Each piece is kept where its own term is the
    larger one; the pieces meet on the regime boundary.
    """
    if level < 2.0:
        raise DomainError(f"the exponent is at least 2 on the whole square, got level {level}")
    if samples < 8:
        raise DomainError(f"need at least 8 samples per piece, got {samples}")
    root = math.sqrt(max(2.0 ** (1.0 - 2.0 / level) - 1.0, 0.0))
    sums = sorted({1.0 - root, 1.0 + root})
    radius = math.sqrt(2.0 ** (-1.0 / level) - 0.5)
    t = (np.arange(samples) + 0.5) / samples

    segments: List[List[Tuple[float, float]]] = []
    for s in sums:
        lo, hi = max(0.0, s - 1.0), min(1.0, s)
        pa = lo + (hi - lo) * t
        pb = s - pa
        annealed, quenched = _exponent_pieces(pa, pb)
        segments += _runs(annealed >= quenched, pa, pb)

    theta = 2.0 * np.pi * t
    pa = 0.5 + radius * np.cos(theta)
    pb = 0.5 + radius * np.sin(theta)
    inside = (pa > 0.0) & (pa < 1.0) & (pb > 0.0) & (pb < 1.0)
    annealed, quenched = _exponent_pieces(np.clip(pa, 1e-12, 1.0), np.clip(pb, 1e-12, 1.0))
    segments += _runs(inside & (quenched >= annealed), pa, pb)
    log.debug("level %.4g: %d segments", level, len(segments))
    return LevelSet(level=level, line_sums=sums, radius=radius, segments=segments)


# ---------------- Grids ----------------

def phase_grid(resolution: int) -> List[PhasePoint]:
    """Cell-centred grid on the open unit square, pA-major."""
    if resolution < 16:
        raise DomainError(f"resolution must be >= 16, got {resolution}")
    centres = [(k + 0.5) / resolution for k in range(resolution)]
    return [exponent(BernoulliParams(pA=a, pB=b)) for a in centres for b in centres]


def diagonal_scan(steps: int) -> List[PhasePoint]:
    """pA = k / (steps + 1), k = 1..steps, on the line pB = 1 - pA."""
    if steps < 1:
        raise DomainError(f"steps must be positive, got {steps}")
    points = []
    for k in range(1, steps + 1):
        pa = k / (steps + 1)
        points.append(exponent(BernoulliParams(pA=pa, pB=1.0 - pa)))
    return points


# ---------------- Samplers ----------------

def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def sample_environment(seed: int, length: int) -> EnvPath:
    """Fair i.i.d. {A, B} path, A = 0 and B = 1."""
    return sample_env_path(seed, ENV_MODEL_ID, 2, 0, length)


def sample_fiber_sequence(params: BernoulliParams, env: EnvPath, seed, length: int) -> np.ndarray:
    """x_0 .. x_{length-1} independent with P(x_i = 0) = p_{omega_i}."""
    if not env.covers(0, length):
        raise LengthError(f"environment covers [{env.start}, {env.stop}), fiber needs [0, {length})")
    omega = env.window(0, length)
    p0 = np.where(omega == 0, params.pA, params.pB)
    u = _generator(seed).random(length)
    return (u >= p0).astype(np.uint8)
