# transfer_operator.py
"""
Transfer operators of finitely many full-branch expanding circle maps
T_i(x) = l_i x mod 1 with potentials phi_i, discretised on G nodes.

(L_i f)(x) = sum over the l_i preimages y = (x + m) / l_i of exp(phi_i(y)) f(y),
with f and phi_i evaluated between nodes by periodic linear interpolation.
Fiber measures mu_omega come from the quotient

    L_{w_m} ... L_{w_0}(f * L_{w_-1} ... L_{w_-n}(1)) / L_{w_m} ... L_{w_-n}(1)

evaluated at a node. The numerator is linear in f, so it is computed once as a
weight vector on the nodes: the backward half is transported forward from 1,
the forward half is transported in the dual (transposed operators) starting
from the evaluation node.
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import sparse
from scipy.stats import linregress

from errors import ConvergenceError, DomainError, FitError, LengthError
from rds_core import CircleSpace, EnvPath, sample_env_path, seed64

log = logging.getLogger("orbitgap.transfer_operator")

MIN_GRID = 256
MIN_BINS = 64
PROBE_NODES = 8
DOUBLING_PATIENCE = 5
MIXING_FLOOR = 1e-13
QUADRATURE_REFINE = 8
PRESETS = ("conformal", "cosine-doubling", "mixed")


class GridFunction(BaseModel):
    """Values at nodes k/G; periodic linear interpolation in between."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def check_values(cls, v):
        arr = np.ascontiguousarray(np.asarray(v, dtype=float))
        if arr.ndim != 1 or arr.size < 2:
            raise DomainError("grid function needs a one-dimensional array of at least 2 values")
        if not np.all(np.isfinite(arr)):
            raise DomainError("grid function values must be finite")
        arr.setflags(write=False)
        return arr

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], np.ndarray], grid_size: int) -> "GridFunction":
        return cls(values=fn(nodes(grid_size)))

    @classmethod
    def constant(cls, c: float, grid_size: int) -> "GridFunction":
        return cls(values=np.full(grid_size, float(c)))

    @property
    def grid_size(self) -> int:
        return int(self.values.size)

    def __call__(self, x) -> np.ndarray:
        g = self.grid_size
        pos = np.mod(np.asarray(x, dtype=float), 1.0) * g
        lo = np.floor(pos).astype(np.int64)
        frac = pos - lo
        lo %= g
        return (1.0 - frac) * self.values[lo] + frac * self.values[(lo + 1) % g]

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(values=self.values + other.values)

    def __mul__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(values=self.values * other.values)


def nodes(grid_size: int) -> np.ndarray:
    return np.arange(grid_size) / float(grid_size)


def smoothed_step(lo: float, hi: float, width: float, grid_size: int) -> GridFunction:
    """Indicator of [lo, hi] with raised-cosine ramps of the given width on the inside."""
    if not 0.0 <= lo < hi <= 1.0 or width <= 0 or 2 * width > hi - lo:
        raise DomainError(f"bad step [{lo}, {hi}] with ramp {width}")
    x = nodes(grid_size)
    up = np.clip((x - lo) / width, 0.0, 1.0)
    down = np.clip((hi - x) / width, 0.0, 1.0)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.minimum(up, down))
    return GridFunction(values=ramp)


def trig(kind: str, frequency: int, grid_size: int) -> GridFunction:
    fn = np.cos if kind == "cos" else np.sin
    return GridFunction(values=fn(2.0 * np.pi * frequency * nodes(grid_size)))


def default_probes(grid_size: int) -> List[GridFunction]:
    """Low trigonometric modes; their node sums over any subgrid are exact."""
    return [
        trig("cos", 1, grid_size),
        trig("sin", 1, grid_size),
        trig("sin", 2, grid_size),
        trig("cos", 3, grid_size),
    ]


# ---------------- Family ----------------

class CircleMapFamily:
    """Maps x -> l_i x mod 1 with potentials phi_i, and their discretised operators."""

    def __init__(self, degrees: Sequence[int], potentials: Sequence[GridFunction], grid_size: int = 4096):
        degrees = [int(d) for d in degrees]
        if not degrees:
            raise DomainError("a family needs at least one map")
        if any(d < 2 for d in degrees):
            raise DomainError(f"every degree must be >= 2, got {degrees}")
        if len(potentials) != len(degrees):
            raise DomainError(f"{len(degrees)} degrees but {len(potentials)} potentials")
        if grid_size < MIN_GRID:
            raise DomainError(f"grid size must be >= {MIN_GRID}, got {grid_size}")
        self.degrees = degrees
        self.potentials = list(potentials)
        self.grid_size = int(grid_size)
        self._operators = [self._assemble(i) for i in range(len(degrees))]
        self._transposed = [op.T.tocsr() for op in self._operators]
        log.debug("family degrees=%s assembled on %d nodes", degrees, grid_size)

    def __len__(self) -> int:
        return len(self.degrees)

    def _assemble(self, i: int) -> sparse.csr_matrix:
        g, ell = self.grid_size, self.degrees[i]
        x = nodes(g)
        rows, cols, vals = [], [], []
        for m in range(ell):
            y = (x + m) / ell
            weight = np.exp(self.potentials[i](y))
            pos = y * g
            lo = np.floor(pos).astype(np.int64)
            frac = pos - lo
            rows += [np.arange(g), np.arange(g)]
            cols += [lo % g, (lo + 1) % g]
            vals += [weight * (1.0 - frac), weight * frac]
        # duplicates (frac == 0 twice, or shared neighbours) are summed
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(g, g)
        )

    def operator(self, i: int) -> sparse.csr_matrix:
        self._check_index(i)
        return self._operators[i]

    def dual(self, i: int) -> sparse.csr_matrix:
        self._check_index(i)
        return self._transposed[i]

    def _check_index(self, i: int) -> None:
        if not 0 <= int(i) < len(self.degrees):
            raise DomainError(f"map index {i} outside [0, {len(self.degrees)})")

    def image_nodes(self, i: int) -> np.ndarray:
        """Node index of T_i(k/G) for every node k; exact on the grid."""
        self._check_index(i)
        return (np.arange(self.grid_size) * self.degrees[i]) % self.grid_size

    def compose(self, i: int, f: GridFunction) -> GridFunction:
        """f o T_i sampled on the nodes."""
        return GridFunction(values=f.values[self.image_nodes(i)])

    @property
    def model_id(self) -> str:
        return "transfer-" + "-".join(str(d) for d in self.degrees)

    def is_conformal(self, atol: float = 1e-15) -> bool:
        return all(
            np.allclose(p.values, -math.log(d), rtol=0.0, atol=atol) for p, d in zip(self.potentials, self.degrees)
        )


def apply_transfer(family: CircleMapFamily, i: int, f: GridFunction) -> GridFunction:
    if f.grid_size != family.grid_size:
        raise DomainError(f"function on {f.grid_size} nodes, family on {family.grid_size}")
    return GridFunction(values=family.operator(i) @ f.values)


def preset_family(name: str, grid_size: int = 4096) -> CircleMapFamily:
    """Shipped full-branch families (jointly mixing by construction)."""
    x = nodes(grid_size)
    if name == "conformal":
        return CircleMapFamily(
            [2, 3], [GridFunction.constant(-math.log(2), grid_size), GridFunction.constant(-math.log(3), grid_size)],
            grid_size,
        )
    if name == "cosine-doubling":
        return CircleMapFamily([2], [GridFunction(values=-math.log(2) + 0.1 * np.cos(2 * np.pi * x))], grid_size)
    if name == "mixed":
        return CircleMapFamily(
            [2, 3],
            [
                GridFunction(values=-math.log(2) + 0.1 * np.cos(2 * np.pi * x)),
                GridFunction(values=-math.log(3) + 0.2 * np.sin(2 * np.pi * x)),
            ],
            grid_size,
        )
    raise DomainError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def random_family(seed: int, degrees: Sequence[int], grid_size: int = 1024, amplitude: float = 0.3,
                  harmonics: int = 3) -> CircleMapFamily:
    """Potentials -log l_i plus a random trigonometric polynomial."""
    rng = np.random.default_rng(seed)
    x = nodes(grid_size)
    potentials = []
    for d in degrees:
        phi = np.full(grid_size, -math.log(d))
        for h in range(1, harmonics + 1):
            a, b = rng.uniform(-amplitude, amplitude, size=2) / h
            phi += a * np.cos(2 * np.pi * h * x) + b * np.sin(2 * np.pi * h * x)
        potentials.append(GridFunction(values=phi))
    return CircleMapFamily(degrees, potentials, grid_size)


def sample_family_env(family: CircleMapFamily, seed: int, lo: int, hi: int) -> EnvPath:
    """i.i.d. uniform choice among the family's maps on indices [lo, hi)."""
    return sample_env_path(seed, family.model_id, len(family), lo, hi)


# ---------------- Fiber measures ----------------

class FiberMeasureApprox(BaseModel):
    """mu_omega(f) ~ sum_k weights[k] f(k/G)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    window: List[int]
    n: int
    m: int
    weights: np.ndarray
    residual: float = Field(..., ge=0.0)
    node_weights: Optional[np.ndarray] = None

    def integrate(self, f, refine: int = QUADRATURE_REFINE) -> float:
        """
        Integral of a GridFunction (node sums) or of a callable on the circle.

        Callables are integrated against the piecewise-linear density through
        the weights with the midpoint rule on a grid `refine` times finer, so
        functions with a jump at 0 (such as x itself) are handled exactly.
        """
        if isinstance(f, GridFunction):
            return float(self.weights @ f.values) / float(self.weights @ np.ones(self.weights.size))
        g = self.weights.size
        x = (np.arange(g * refine) + 0.5) / float(g * refine)
        density = GridFunction(values=self.weights * g)(x)
        return float(np.sum(density * np.asarray(f(x), dtype=float))) / float(np.sum(density))

    def node_spread(self, f: GridFunction) -> float:
        """Largest difference of the quotient across evaluation nodes."""
        if self.node_weights is None:
            return 0.0
        vals = (self.node_weights.T @ f.values) / self.node_weights.sum(axis=0)
        return float(np.max(np.abs(vals - vals[0])))


def _check_window(family: CircleMapFamily, env: EnvPath, lo: int, hi: int) -> np.ndarray:
    if not env.covers(lo, hi):
        raise LengthError(f"environment covers [{env.start}, {env.stop}), need [{lo}, {hi})")
    omega = env.window(lo, hi)
    if omega.size and int(omega.max()) >= len(family):
        raise DomainError(f"environment symbol {int(omega.max())} has no map in a family of {len(family)}")
    return omega


def _backward_density(family: CircleMapFamily, omega_back: np.ndarray) -> np.ndarray:
    """L_{w_-1} ... L_{w_-n}(1), rescaled to max 1 after each step."""
    h = np.ones(family.grid_size)
    for sym in omega_back:
        h = family.operator(int(sym)) @ h
        h /= h.max()
    return h


def _dual_rows(family: CircleMapFamily, omega_fwd: np.ndarray, probe_nodes: np.ndarray) -> np.ndarray:
    """Columns e_node^T L_{w_m} ... L_{w_0}, one per evaluation node."""
    v = np.zeros((family.grid_size, probe_nodes.size))
    v[probe_nodes, np.arange(probe_nodes.size)] = 1.0
    for sym in omega_fwd[::-1]:
        v = family.dual(int(sym)) @ v
        v /= v.max(axis=0)
    return v


def fiber_weights(family: CircleMapFamily, env: EnvPath, n: int, m: int,
                  probes: Optional[Sequence[GridFunction]] = None) -> FiberMeasureApprox:
    """Weights of mu_omega from symbols omega_{-n} .. omega_m, evaluated at node 0."""
    if n < 1 or m < 1:
        raise DomainError(f"need n, m >= 1, got n={n}, m={m}")
    omega = _check_window(family, env, -n, m + 1)
    g = family.grid_size
    probe_nodes = (np.arange(PROBE_NODES) * g) // PROBE_NODES
    h = _backward_density(family, omega[:n])
    node_weights = _dual_rows(family, omega[n:], probe_nodes) * h[:, None]
    totals = node_weights.sum(axis=0)
    if not np.all(totals > 0):
        raise ConvergenceError("quotient denominator vanished")
    node_weights = node_weights / totals
    approx = FiberMeasureApprox(
        window=[int(s) for s in omega],
        n=n,
        m=m,
        weights=node_weights[:, 0].copy(),
        residual=0.0,
        node_weights=node_weights,
    )
    probes = default_probes(g) if probes is None else probes
    approx.residual = max(approx.node_spread(p) for p in probes)
    return approx


class FiberValue(BaseModel):
    value: float
    residual: float
    n: int
    m: int


def _fiber_value(family: CircleMapFamily, env: EnvPath, n: int, m: int, f) -> FiberValue:
    probe = f if isinstance(f, GridFunction) else GridFunction.from_callable(f, family.grid_size)
    approx = fiber_weights(family, env, n, m, probes=[probe])
    return FiberValue(value=approx.integrate(f), residual=approx.residual, n=n, m=m)


def fiber_measure(family: CircleMapFamily, env: EnvPath, n: int, m: int, f,
                  tol: Optional[float] = None, max_depth: int = 1024) -> FiberValue:
    """
    mu_omega(f) by the normalised quotient; residual is the spread across evaluation nodes.

    With tol set, n = m = min(n, m) is doubled until the residual is at most
    tol (see fiber_measure_converged), and ConvergenceError is raised when it
    does not get there.
    """
    if tol is None:
        return _fiber_value(family, env, n, m, f)
    return fiber_measure_converged(family, env, f, tol=tol, start=min(n, m), max_depth=max_depth)


def fiber_measure_converged(family: CircleMapFamily, env: EnvPath, f, tol: float = 1e-10,
                            start: int = 4, max_depth: int = 1024) -> FiberValue:
    """
    Double n = m from `start` until the residual drops below tol.

    The environment is regenerated from its seed when the window grows past it.
    Raises ConvergenceError when the residual stops decreasing for
    DOUBLING_PATIENCE doublings or max_depth is reached.
    """
    if start < 1 or start > max_depth:
        raise DomainError(f"need 1 <= start <= max_depth, got start={start}, max_depth={max_depth}")
    residuals: List[float] = []
    depth = start
    while depth <= max_depth:
        if not env.covers(-depth, depth + 1):
            env = env.regenerate(min(env.start, -depth), max(env.stop, depth + 1))
        est = _fiber_value(family, env, depth, depth, f)
        residuals.append(est.residual)
        log.debug("depth %d residual %.3e", depth, est.residual)
        if est.residual <= tol:
            return est
        if len(residuals) > DOUBLING_PATIENCE and min(residuals[-DOUBLING_PATIENCE:]) >= residuals[-DOUBLING_PATIENCE - 1]:
            raise ConvergenceError(
                f"residual not decreasing over {DOUBLING_PATIENCE} doublings", residuals=residuals
            )
        depth *= 2
    raise ConvergenceError(f"residual {residuals[-1]:.3e} above {tol:.1e} at depth {max_depth}", residuals=residuals)


def convergence_profile(family: CircleMapFamily, env: EnvPath, f: GridFunction,
                        depths: Sequence[int]) -> List[float]:
    """Node-spread residual of mu_omega(f) at n = m = d for each depth d."""
    return [_fiber_value(family, env, d, d, f).residual for d in depths]


def fit_contraction(depths: Sequence[int], residuals: Sequence[float], floor: float = 1e-15) -> float:
    """Fitted per-step contraction factor of the residuals (residual ~ C theta^depth)."""
    pts = [(d, r) for d, r in zip(depths, residuals) if r > floor]
    if len(pts) < 2:
        raise FitError("fewer than 2 residuals above the numerical floor")
    d, r = zip(*pts)
    fit = linregress(np.asarray(d, dtype=float), np.log(np.asarray(r)))
    return float(math.exp(fit.slope))


# ---------------- CDF and sampling ----------------

class FiberCDF(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: np.ndarray
    F: np.ndarray
    node_t: np.ndarray
    node_F: np.ndarray
    residual: float

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.node_t, self.node_F)

    def inverse(self, u) -> np.ndarray:
        return np.interp(u, self.node_F, self.node_t)


def _node_cdf(weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """CDF of the piecewise-linear density through the node weights (trapezoid rule)."""
    g = weights.size
    w = weights / weights.sum()
    cell = 0.5 * (w + np.roll(w, -1))
    F = np.concatenate(([0.0], np.cumsum(cell)))
    F[-1] = 1.0
    # guard against rounding making the last step negative
    F = np.maximum.accumulate(np.minimum(F, 1.0))
    return np.arange(g + 1) / float(g), F


def fiber_cdf(family: CircleMapFamily, env: EnvPath, n: int, m: int, bins: int = 256) -> FiberCDF:
    if bins < MIN_BINS:
        raise DomainError(f"need at least {MIN_BINS} bins, got {bins}")
    approx = fiber_weights(family, env, n, m)
    node_t, node_F = _node_cdf(approx.weights)
    t = np.arange(bins + 1) / float(bins)
    F = np.interp(t, node_t, node_F)
    F[-1] = 1.0
    return FiberCDF(t=t, F=F, node_t=node_t, node_F=node_F, residual=approx.residual)


def sample_fiber_points(family: CircleMapFamily, env: EnvPath, count: int, seed, n: int = 40, m: int = 40,
                        bins: int = 256) -> np.ndarray:
    """Inverse-CDF samples from mu_omega."""
    cdf = fiber_cdf(family, env, n, m, bins)
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    u = np.random.Generator(np.random.PCG64(seq)).random(count)
    return np.mod(cdf.inverse(u), 1.0)


class FiberMeasureSampler:
    """Point sampler over fiber measures, for the correlation-dimension curves."""

    def __init__(self, family: CircleMapFamily, n: int = 40, m: int = 40, bins: int = 256):
        self.family = family
        self.n, self.m, self.bins = n, m, bins
        self.space = CircleSpace()

    def environment(self, seq: np.random.SeedSequence) -> EnvPath:
        return sample_family_env(self.family, seed64(seq), -self.n, self.m + 1)

    def points(self, env: EnvPath, seq: np.random.SeedSequence, count: int) -> np.ndarray:
        return sample_fiber_points(self.family, env, count, seq, self.n, self.m, self.bins)


# ---------------- Equivariance and mixing ----------------

def pushforward_residual(family: CircleMapFamily, env: EnvPath, n: int, m: int,
                         tests: Optional[Sequence[GridFunction]] = None) -> float:
    """max_f |mu_omega(f o T_{omega_0}) - mu_{theta omega}(f)|; needs omega_{-n} .. omega_{m+1}."""
    _check_window(family, env, -n, m + 2)
    tests = default_probes(family.grid_size) if tests is None else tests
    here = fiber_weights(family, env, n, m, probes=tests)
    there = fiber_weights(family, env.shift(1), n, m, probes=tests)
    first = env.at(0)
    return max(abs(here.integrate(family.compose(first, f)) - there.integrate(f)) for f in tests)


def _transport(family: CircleMapFamily, i: int, mass: np.ndarray) -> np.ndarray:
    """Push a node measure forward by T_i; node k moves to node l_i k mod G."""
    return np.bincount(family.image_nodes(i), weights=mass, minlength=family.grid_size)


def fiber_mixing_curve(family: CircleMapFamily, env: EnvPath, n: int, m: int, f: GridFunction, g: GridFunction,
                       k_max: int) -> List[float]:
    """
    |mu_omega(f * g o T^k_omega) - mu_omega(f) mu_{theta^k omega}(g)| for k = 0 .. k_max.

    Both terms are computed by transporting measures forward: f mu_omega for
    the first, mu_omega itself for the second (which is mu_{theta^k omega}).
    """
    omega = _check_window(family, env, 0, k_max)
    approx = fiber_weights(family, env, n, m, probes=[f, g])
    w = approx.weights / approx.weights.sum()
    mean_f = float(w @ f.values)
    weighted = w * f.values
    plain = w.copy()
    curve = []
    for k in range(k_max + 1):
        curve.append(abs(float(weighted @ g.values) - mean_f * float(plain @ g.values)))
        if k < k_max:
            sym = int(omega[k])
            weighted = _transport(family, sym, weighted)
            plain = _transport(family, sym, plain)
    return curve


def mixing_rate(curve: Sequence[float], floor: float = MIXING_FLOOR) -> float:
    """Fitted natural-log slope of the curve over its leading run above `floor`."""
    values = np.asarray(curve, dtype=float)
    below = np.flatnonzero(values <= floor)
    run = values[:below[0]] if below.size else values
    if run.size < 2:
        return -math.inf
    fit = linregress(np.arange(run.size, dtype=float), np.log(run))
    return float(fit.slope)


def conformal_check(family: CircleMapFamily) -> Dict[str, float]:
    """sup |L_i 1 - 1| over the maps; zero up to rounding for conformal potentials."""
    one = GridFunction.constant(1.0, family.grid_size)
    return {
        f"map_{i}": float(np.max(np.abs(apply_transfer(family, i, one).values - 1.0))) for i in range(len(family))
    }
