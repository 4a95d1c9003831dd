# rds_core.py
"""
Shared pieces for random dynamical systems: metric spaces, environment paths,
fiber maps, orbit generation and the gap function alpha(n).

A random system is a skew product S(omega, x) = (theta omega, T_omega x). The
environment omega is stored as a finite window of symbols (EnvPath) and theta
is an index shift on that window.
"""

import hashlib
import logging
import math
from fractions import Fraction
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from errors import DomainError, LengthError

log = logging.getLogger("orbitgap.rds_core")

ENV_BLOCK = 4096
DEFAULT_C4 = 2.0
GUARD_BITS = 64

# fixed codes so that derived streams never depend on dict ordering
STREAM_LABELS = {"env": 0, "x": 1, "y": 2, "fiber": 3, "points": 4}

CirclePoint = Union[int, Fraction]
SymbolicPoint = np.ndarray


# ---------------- Seed streams ----------------

def stream_seed(seed: int, replica: int, label: str) -> np.random.SeedSequence:
    """Independent stream for (seed, replica, label); same inputs, same stream."""
    if label not in STREAM_LABELS:
        raise DomainError(f"unknown stream label {label!r}")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replica), STREAM_LABELS[label]))


def seed64(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, np.uint64)[0])


def _model_code(model_id: str) -> int:
    return int.from_bytes(hashlib.blake2b(model_id.encode("utf-8"), digest_size=4).digest(), "little")


def _zigzag(k: int) -> int:
    return 2 * k if k >= 0 else -2 * k - 1


# ---------------- Metric spaces ----------------

class SymbolicSpace(BaseModel):
    """Full shift A^N with d(x, y) = b^-k, k the first index of disagreement."""

    model_config = ConfigDict(frozen=True)

    alphabet_size: int = Field(2, ge=1)
    metric_base: float = Field(2.0, gt=1.0)

    def contains(self, x) -> bool:
        arr = np.asarray(x)
        if arr.ndim != 1:
            return False
        if arr.size == 0:
            return True
        return bool(arr.min() >= 0 and arr.max() < self.alphabet_size)

    def agreement(self, x: SymbolicPoint, y: SymbolicPoint) -> Optional[int]:
        """First index of disagreement, or None when x and y are identical."""
        x = np.asarray(x)
        y = np.asarray(y)
        common = min(x.size, y.size)
        diff = np.flatnonzero(x[:common] != y[:common])
        if diff.size:
            return int(diff[0])
        if x.size == y.size:
            return None
        # one stored prefix ends early: the distance is only known up to b^-common
        return common

    def distance(self, x: SymbolicPoint, y: SymbolicPoint) -> float:
        k = self.agreement(x, y)
        if k is None:
            return 0.0
        return float(self.metric_base) ** (-k)


class CircleSpace(BaseModel):
    """
    The circle R/Z with d(x, y) = min(|x - y|, 1 - |x - y|).

    Points are Fractions in [0, 1) or, when precision_bits is set, integers k in
    [0, 2^precision_bits) standing for k / 2^precision_bits. Floats are accepted
    for distances and sampling, never for orbit generation.
    """

    model_config = ConfigDict(frozen=True)

    precision_bits: Optional[int] = Field(None, ge=1)

    @property
    def modulus(self) -> int:
        return 1 << self.precision_bits if self.precision_bits else 1

    def contains(self, x) -> bool:
        if isinstance(x, bool):
            return False
        if isinstance(x, int):
            return self.precision_bits is not None and 0 <= x < self.modulus
        if isinstance(x, (Fraction, float, np.floating)):
            return 0 <= x < 1
        return False

    def raw_distance(self, x, y):
        """Circle distance in the representation's own units (exact for ints and Fractions)."""
        if isinstance(x, int) and isinstance(y, int) and self.precision_bits:
            d = abs(x - y)
            return min(d, self.modulus - d)
        d = abs(x - y) % 1
        return min(d, 1 - d)

    def distance(self, x, y):
        d = self.raw_distance(x, y)
        if isinstance(d, int) and self.precision_bits:
            return d / self.modulus
        return d


Space = Union[SymbolicSpace, CircleSpace]


def metric_distance(space: Space, x, y):
    return space.distance(x, y)


# ---------------- Environment paths ----------------

class EnvPath(BaseModel):
    """
    Finite realisation of the driving sequence omega on indices [start, start + len).

    theta^k omega is `shift(k)`: the same symbols with the origin moved k steps
    to the right.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, protected_namespaces=())

    symbols: np.ndarray
    start: int = 0
    seed: int = 0
    model_id: str = "iid"
    alphabet_size: int = Field(2, ge=1)

    @field_validator("symbols", mode="before")
    @classmethod
    def freeze_symbols(cls, v):
        arr = np.ascontiguousarray(np.asarray(v, dtype=np.uint8))
        if arr.ndim != 1:
            raise DomainError("environment symbols must be one-dimensional")
        arr.setflags(write=False)
        return arr

    def __len__(self) -> int:
        return int(self.symbols.size)

    @property
    def stop(self) -> int:
        return self.start + len(self)

    @property
    def n_back(self) -> int:
        return max(0, -self.start)

    def covers(self, lo: int, hi: int) -> bool:
        return self.start <= lo and hi <= self.stop

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Symbols omega_lo .. omega_{hi-1}."""
        if not self.covers(lo, hi):
            raise LengthError(
                f"environment covers [{self.start}, {self.stop}) but [{lo}, {hi}) was requested"
            )
        return self.symbols[lo - self.start:hi - self.start]

    def at(self, i: int) -> int:
        return int(self.window(i, i + 1)[0])

    def shift(self, k: int) -> "EnvPath":
        return self.model_copy(update={"start": self.start - k})

    def regenerate(self, lo: Optional[int] = None, hi: Optional[int] = None) -> "EnvPath":
        lo = self.start if lo is None else lo
        hi = self.stop if hi is None else hi
        return sample_env_path(self.seed, self.model_id, self.alphabet_size, lo, hi)


def sample_env_path(seed: int, model_id: str, alphabet_size: int, lo: int, hi: int) -> EnvPath:
    """
    i.i.d. uniform environment on [lo, hi).

    Symbols are produced in blocks of ENV_BLOCK keyed by block index, so any
    sub-range of a path regenerates bit-identically from (seed, model_id).
    """
    if hi < lo:
        raise DomainError(f"invalid environment range [{lo}, {hi})")
    code = _model_code(model_id)
    first = lo // ENV_BLOCK
    last = (hi - 1) // ENV_BLOCK if hi > lo else first
    blocks = []
    for b in range(first, last + 1):
        seq = np.random.SeedSequence(entropy=[int(seed), code], spawn_key=(_zigzag(b),))
        rng = np.random.Generator(np.random.PCG64(seq))
        blocks.append(rng.integers(0, alphabet_size, size=ENV_BLOCK, dtype=np.uint8))
    joined = np.concatenate(blocks)
    offset = lo - first * ENV_BLOCK
    return EnvPath(
        symbols=joined[offset:offset + (hi - lo)],
        start=lo,
        seed=int(seed),
        model_id=model_id,
        alphabet_size=alphabet_size,
    )


def constant_env(length: int, symbol: int = 0, start: int = 0, model_id: str = "singleton") -> EnvPath:
    """Environment of a singleton Omega (deterministic system)."""
    return EnvPath(
        symbols=np.full(length, symbol, dtype=np.uint8),
        start=start,
        model_id=model_id,
        alphabet_size=symbol + 1,
    )


# ---------------- Random systems ----------------

class ShiftSystem(BaseModel):
    """One-sided full shift; the environment only selects measures, not maps."""

    model_config = ConfigDict(frozen=True, protected_namespaces=())

    space: SymbolicSpace = SymbolicSpace()
    model_id: str = "shift"

    def apply(self, symbol: int, x: SymbolicPoint) -> SymbolicPoint:
        return x[1:]


class CircleMapSystem(BaseModel):
    """Random composition of the full-branch maps x -> l_i x mod 1, i = env symbol."""

    model_config = ConfigDict(frozen=True, protected_namespaces=())

    degrees: Tuple[int, ...] = (2,)
    space: CircleSpace = CircleSpace()
    model_id: str = "circle"

    @field_validator("degrees")
    @classmethod
    def check_degrees(cls, v):
        if not v or any(d < 2 for d in v):
            raise DomainError(f"circle map degrees must all be >= 2, got {v}")
        return tuple(int(d) for d in v)

    def precision_for(self, n: int) -> int:
        return int(math.ceil(n * math.log2(max(self.degrees)))) + GUARD_BITS

    def with_precision(self, bits: int) -> "CircleMapSystem":
        return self.model_copy(update={"space": CircleSpace(precision_bits=bits)})

    def apply(self, symbol: int, x: CirclePoint) -> CirclePoint:
        if symbol >= len(self.degrees):
            raise DomainError(f"environment symbol {symbol} has no fiber map")
        ell = self.degrees[symbol]
        if isinstance(x, int):
            return (ell * x) % self.space.modulus
        return (ell * x) % 1


RandomSystem = Union[ShiftSystem, CircleMapSystem]


class OrbitWindow(BaseModel):
    """Orbit segment x, T_omega x, ..., T_omega^{n-1} x."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: List
    space: Space

    def __len__(self) -> int:
        return len(self.points)


def iterate_orbit(system: RandomSystem, omega: EnvPath, x, n: int) -> OrbitWindow:
    """
    First n points of the orbit of x under the random composition driven by omega.

    Arithmetic is exact: symbolic points are array views and circle points are
    Fractions or fixed-point integers.
    """
    if n < 1:
        raise DomainError(f"orbit length must be positive, got {n}")
    if not omega.covers(0, n):
        raise LengthError(f"environment covers [{omega.start}, {omega.stop}), orbit needs [0, {n})")
    if isinstance(x, float):
        raise DomainError("floating-point circle points are not allowed in orbit generation")
    if isinstance(system, ShiftSystem):
        x = np.asarray(x, dtype=np.uint8)
        if x.size < n:
            raise LengthError(f"symbolic point of length {x.size} cannot produce {n} shifts")
    if not system.space.contains(x):
        raise DomainError(f"point {x!r} is outside {type(system.space).__name__}")

    symbols = omega.window(0, n)
    points = [x]
    for i in range(n - 1):
        x = system.apply(int(symbols[i]), x)
        points.append(x)
    return OrbitWindow(points=points, space=system.space)


def sample_circle_point(rng: np.random.Generator, precision_bits: int) -> int:
    """Uniform point k / 2^precision_bits, drawn exactly from rng bytes."""
    nbytes = (precision_bits + 7) // 8
    raw = int.from_bytes(rng.bytes(nbytes), "little")
    return raw >> (8 * nbytes - precision_bits)


# ---------------- Gap function ----------------

def gap_alpha(n: int, c4: float = DEFAULT_C4) -> int:
    """alpha(n) = floor((ln n)^C4), clamped to [0, n]."""
    if n < 3:
        raise DomainError(f"gap_alpha needs n >= 3, got {n}")
    if c4 <= 0:
        raise DomainError(f"C4 must be positive, got {c4}")
    value = math.log(n) ** c4
    if value >= n:
        return n
    return max(0, int(math.floor(value)))
