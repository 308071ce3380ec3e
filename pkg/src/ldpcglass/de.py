"""Density evolution by population dynamics and the BP GEXIT curve.

The population holds samples of check-to-variable messages on the infinite
tree ensemble. Noise is indexed by the field mean ``m``; integrals over noise
run over ``m`` from 0 (useless channel) upwards, so "from n to infinity" in
noise terms is "from 0 to m" here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from ldpcglass import kernels
from ldpcglass.bp import MSG_CLIP, PRODUCT_CLAMP
from ldpcglass.channel import NoiseScale, gaussian_expectation_adaptive, shannon_threshold, single_spin_gexit
from ldpcglass.errors import ParameterError, SearchError
from ldpcglass.graph import DegreeDistribution
from ldpcglass.seeding import chunk_sizes, derive_seed, parallel_map, rng_for
from ldpcglass.stats import mean_and_se

DE_CHUNK = 1 << 14
LN2 = math.log(2.0)


@dataclass
class Population:
    samples: np.ndarray
    generation: int
    dd: DegreeDistribution
    scale: NoiseScale
    seed: int

    @property
    def size(self) -> int:
        return int(self.samples.shape[0])


def initial_population(size: int, dd: DegreeDistribution, scale: NoiseScale, seed: int) -> Population:
    """Generation 0: all check messages zero, so variables send their raw fields."""
    if size < 1:
        raise ParameterError("population size must be >= 1")
    return Population(np.zeros(size), 0, dd, scale, seed)


def _law_arrays(law: dict):
    return np.array(list(law), dtype=np.int64), np.array(list(law.values()), dtype=np.float64)


def _draw_degrees(rng, law, count):
    degs, probs = law
    if degs.size == 1:
        return np.full(count, degs[0], dtype=np.int64)
    return degs[rng.choice(degs.size, size=count, p=probs)]


def _fields(rng, m, count):
    return m + math.sqrt(m) * rng.standard_normal(count)


def _sum_of_messages(rng, pop, counts):
    """Per slot, the sum of ``counts[k]`` messages drawn with replacement."""
    total = int(counts.sum())
    if total == 0:
        return np.zeros(counts.shape[0])
    idx = rng.integers(pop.shape[0], size=total)
    owner = np.repeat(np.arange(counts.shape[0]), counts)
    return np.bincount(owner, weights=pop[idx], minlength=counts.shape[0])


def _new_messages(rng, pop, count, m, check_law, var_law):
    k = _draw_degrees(rng, check_law, count)
    n_in = k - 1
    n_var = int(n_in.sum())
    if var_law[0].size:
        l = _draw_degrees(rng, var_law, n_var)
        v = _fields(rng, m, n_var) + _sum_of_messages(rng, pop, l - 1)
    else:
        v = _fields(rng, m, n_var)
    v = np.clip(v, -MSG_CLIP, MSG_CLIP)
    ptr = np.zeros(count + 1, dtype=np.int64)
    np.cumsum(n_in, out=ptr[1:])
    return kernels.segment_combine(v, ptr, PRODUCT_CLAMP)


def de_step(pop: Population, seed: int | None = None, threads: int = 1) -> Population:
    """One generation of population dynamics.

    Each new check message draws an edge-perspective check degree, builds
    that many minus one variable messages (fresh field plus edge-degree minus
    one messages resampled from ``pop``), and combines them with the check
    rule. Chunk ``k`` of generation ``t`` is seeded from ``(seed, t, k)``.
    """
    seed = pop.seed if seed is None else seed
    check_law = _law_arrays(pop.dd.edge_check())
    var_law = _law_arrays(pop.dd.edge_variable())
    sizes = chunk_sizes(pop.size, DE_CHUNK)
    gen = pop.generation + 1

    def run(k):
        rng = rng_for(seed, "de-step", gen, k)
        return _new_messages(rng, pop.samples, sizes[k], pop.scale.m, check_law, var_law)

    samples = np.concatenate(parallel_map(run, range(len(sizes)), threads))
    return replace(pop, samples=samples, generation=gen)


def belief_samples(pop: Population, rng, count: int | None = None) -> np.ndarray:
    """Root beliefs ``h + sum_{c<=l} u_c`` with ``l`` from the node-perspective variable law."""
    count = pop.size if count is None else count
    l = _draw_degrees(rng, _law_arrays(pop.dd.node_variable()), count)
    return _fields(rng, pop.scale.m, count) + _sum_of_messages(rng, pop.samples, l)


def error_estimate(beliefs) -> float:
    """Bit error probability from belief samples.

    Uses ``E[1 / (1 + e^{2|b|})]``, which equals ``P(b < 0)`` for symmetric
    belief densities and stays resolvable far below ``1 / len(beliefs)``.
    """
    a = np.abs(beliefs)
    return float(np.mean(np.exp(-2 * a) / (1 + np.exp(-2 * a))))


# ---------------------------------------------------------------------------
# GEXIT


@dataclass
class GexitPoint:
    scale: NoiseScale
    value: float
    std_error: float
    depth: int
    stationary: bool


def _gexit_sample(pop, rng):
    b = belief_samples(pop, rng)
    return mean_and_se(0.5 * (1.0 - np.tanh(b)))


def g_bp_point(
    scale: NoiseScale,
    dd: DegreeDistribution,
    depth: int = 200,
    population: int = 100_000,
    seed: int = 0,
    auto_depth: bool = True,
    max_depth: int = 3200,
    threads: int = 1,
    start: Population | None = None,
) -> GexitPoint:
    """BP GEXIT value ``(1/2) E[1 - tanh(h + sum_{c<=l} u_c)]`` after ``depth`` generations.

    With ``auto_depth`` the depth doubles until the values at ``d`` and ``2d``
    agree within 3 combined standard errors, or ``max_depth`` is reached.
    """
    if depth < 0:
        raise ParameterError("depth must be >= 0")
    if dd.mean_variable == 0:
        # no checks: the belief is the bare field, so quadrature is exact
        return GexitPoint(scale, single_spin_gexit(scale.m), 0.0, 0, True)
    pop = start if start is not None else initial_population(population, dd, scale, seed)

    def advance(p, target):
        while p.generation < target:
            p = de_step(p, threads=threads)
        return p

    pop = advance(pop, depth)
    val, se = _gexit_sample(pop, rng_for(seed, "gexit-sample", pop.generation))
    stationary = not auto_depth
    while auto_depth:
        if 2 * max(pop.generation, 1) > max_depth:
            break
        nxt = advance(pop, 2 * max(pop.generation, 1))
        v2, s2 = _gexit_sample(nxt, rng_for(seed, "gexit-sample", nxt.generation))
        pop, val, prev, se_prev, se = nxt, v2, val, se, s2
        if abs(v2 - prev) <= 3 * math.hypot(s2, se_prev):
            stationary = True
            break
    return GexitPoint(scale, val, se, pop.generation, stationary)


@dataclass
class GexitCurve:
    """GEXIT values on an increasing m-grid (nats per bit per unit m)."""

    grid: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    depth: object = None
    population: int | None = None
    seed: int | None = None
    tail_model: str = "single-spin envelope below grid[0]; zero above grid[-1]"

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.std_errors = np.asarray(self.std_errors, dtype=np.float64)
        if self.grid.ndim != 1 or self.grid.size == 0 or np.any(np.diff(self.grid) <= 0):
            raise ParameterError("grid must be a non-empty increasing sequence")
        if np.any(self.grid < 0):
            raise ParameterError("grid values must be >= 0")

    def scaled(self, factor: float) -> "GexitCurve":
        return replace(self, values=self.values * factor, std_errors=self.std_errors * abs(factor))

    def paper_axes(self) -> dict:
        """The curve re-expressed against the two alternative noise axes.

        With ``n_a = 1/m`` the Jacobian is ``m^2``; with ``n_b = m^-2`` it is ``m^3 / 2``.
        """
        m = self.grid
        with np.errstate(divide="ignore"):
            return {
                "paper_n_a": 1.0 / m,
                "g_n_a": self.values * m**2,
                "paper_n_b": m**-2.0,
                "g_n_b": self.values * m**3 / 2,
            }


def g_bp_curve(
    grid,
    dd: DegreeDistribution,
    depth: int = 200,
    population: int = 100_000,
    seed: int = 0,
    auto_depth: bool = True,
    max_depth: int = 3200,
    threads: int = 1,
) -> tuple[GexitCurve, list[GexitPoint]]:
    """BP GEXIT curve; each grid point draws from its own seed stream keyed by ``m``."""
    grid = np.asarray(grid, dtype=np.float64)
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be increasing")
    points = [
        g_bp_point(
            NoiseScale(float(m)),
            dd,
            depth,
            population,
            derive_seed(seed, "g-bp", repr(float(m))),
            auto_depth,
            max_depth,
            threads,
        )
        for m in grid
    ]
    curve = GexitCurve(
        grid,
        [p.value for p in points],
        [p.std_error for p in points],
        depth=[p.depth for p in points],
        population=population,
        seed=seed,
    )
    return curve, points


# ---------------------------------------------------------------------------
# Thresholds


def decodes(
    scale: NoiseScale,
    dd: DegreeDistribution,
    population: int,
    seed: int,
    d_max: int = 2000,
    target: float = 1e-6,
    check_every: int = 10,
    threads: int = 1,
    history: list | None = None,
) -> bool:
    """True when the belief error estimate drops below ``target`` within ``d_max`` generations."""
    if dd.mean_variable == 0:
        # no checks: the belief is the bare field at every depth
        err = gaussian_expectation_adaptive(lambda h: 1.0 / (1.0 + np.exp(2 * np.abs(h))), scale.m)
        return err < target
    pop = initial_population(population, dd, scale, seed)
    while pop.generation < d_max:
        pop = de_step(pop, threads=threads)
        if pop.generation % check_every == 0 or pop.generation == d_max:
            err = error_estimate(belief_samples(pop, rng_for(seed, "de-error", pop.generation)))
            if history is not None:
                history.append((pop.generation, err))
            if err < target:
                return True
    return False


@dataclass(frozen=True)
class ThresholdBracket:
    """``lo`` decodes, ``hi`` does not; both as noise scales (``lo.m > hi.m``)."""

    lo: NoiseScale
    hi: NoiseScale
    axis: str

    @property
    def sigma(self) -> tuple[float, float]:
        return (self.lo.sigma, self.hi.sigma)

    @property
    def m(self) -> tuple[float, float]:
        return (self.hi.m, self.lo.m)

    @property
    def width_sigma(self) -> float:
        return self.hi.sigma - self.lo.sigma

    def contains_sigma(self, sigma: float) -> bool:
        return self.lo.sigma <= sigma <= self.hi.sigma

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "sigma": list(self.sigma),
            "m": list(self.m),
            "paper_n_a": [self.lo.paper_n_a, self.hi.paper_n_a],
            "paper_n_b": [self.lo.paper_n_b, self.hi.paper_n_b],
        }


def bp_threshold(
    dd: DegreeDistribution,
    tol: float = 0.01,
    population: int = 100_000,
    seed: int = 0,
    lo: NoiseScale | None = None,
    hi: NoiseScale | None = None,
    d_max: int = 2000,
    axis: str = "sigma",
    threads: int = 1,
) -> ThresholdBracket:
    """Bisect the noise scale on the density-evolution decoding indicator.

    ``lo`` must decode and ``hi`` must not. The default bracket is
    ``[sigma_sh / 2, sigma_sh]`` with ``sigma_sh`` the Shannon threshold of the
    design rate. ``tol`` is the final width on ``axis`` (``"sigma"`` or ``"m"``).
    Every probe uses the same seed.
    """
    if tol <= 0:
        raise ParameterError("tol must be > 0")
    if axis not in ("sigma", "m"):
        raise ParameterError("axis must be 'sigma' or 'm'")
    if hi is None or lo is None:
        rate = dd.design_rate
        if not 0 < rate < 1:
            raise SearchError(f"design rate {rate:g} has no Shannon threshold to anchor the search")
        sh = shannon_threshold(rate)
        if hi is None:
            hi = sh
        if lo is None:
            lo = NoiseScale.from_sigma(sh.sigma / 2)

    def ok(s):
        return decodes(s, dd, population, seed, d_max, threads=threads)

    if not ok(lo):
        raise SearchError(f"no decoding at the low-noise end sigma={lo.sigma:g}")
    if ok(hi):
        raise SearchError(f"decoding still succeeds at the high-noise end sigma={hi.sigma:g}")
    coord = (lambda s: s.sigma) if axis == "sigma" else (lambda s: s.m)
    make = NoiseScale.from_sigma if axis == "sigma" else NoiseScale
    while abs(coord(hi) - coord(lo)) > tol:
        mid = make(0.5 * (coord(lo) + coord(hi)))
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdBracket(lo, hi, axis)


# ---------------------------------------------------------------------------
# Area integrals


def envelope_integral(x: float) -> float:
    """Integral over m in [0, x] of the single-spin GEXIT envelope."""
    if x <= 0:
        return 0.0
    val, _ = integrate.quad(single_spin_gexit, 0.0, x, epsabs=1e-11, epsrel=1e-10, limit=200)
    return val


def _partial_integral(curve: GexitCurve):
    """Return ``A(m)`` = integral of the curve over [0, m] and its standard error at the top."""
    grid, vals = curve.grid, curve.values
    head = envelope_integral(grid[0])
    seg = 0.5 * (vals[1:] + vals[:-1]) * np.diff(grid)
    cum = np.concatenate([[0.0], np.cumsum(seg)])

    def area(m):
        if m <= grid[0]:
            return envelope_integral(m)
        m = min(m, grid[-1])
        k = int(np.searchsorted(grid, m, side="right")) - 1
        k = min(k, grid.size - 2) if grid.size > 1 else 0
        if grid.size == 1:
            return head
        x0, x1 = grid[k], grid[k + 1]
        frac = (m - x0) / (x1 - x0)
        g_m = vals[k] + frac * (vals[k + 1] - vals[k])
        return head + cum[k] + 0.5 * (vals[k] + g_m) * (m - x0)

    return area


def _trapezoid_se(curve: GexitCurve, lo_idx=0, hi_idx=None) -> float:
    grid, se = curve.grid, curve.std_errors
    hi_idx = grid.size - 1 if hi_idx is None else hi_idx
    if hi_idx <= lo_idx:
        return 0.0
    w = np.zeros(grid.size)
    dx = np.diff(grid)[lo_idx:hi_idx]
    w[lo_idx:hi_idx] += 0.5 * dx
    w[lo_idx + 1 : hi_idx + 1] += 0.5 * dx
    return float(np.sqrt(np.sum((w * se) ** 2)))


@dataclass(frozen=True)
class AreaResult:
    nats: float
    std_error: float
    tail_nats: float

    @property
    def bits(self) -> float:
        return self.nats / LN2

    def to_dict(self) -> dict:
        return {"nats": self.nats, "bits": self.bits, "std_error_nats": self.std_error, "tail_nats": self.tail_nats}


def area_integral(curve: GexitCurve, m_lo: float = 0.0, m_hi: float = math.inf) -> AreaResult:
    """Trapezoid integral of the curve over ``[m_lo, m_hi]``.

    Below ``grid[0]`` the single-spin envelope ``(1/2) E[1 - tanh h]`` is
    integrated by quadrature; ``m_hi = inf`` ends at ``grid[-1]``, where the
    curve must already have decayed.
    """
    if m_lo < 0 or m_hi < m_lo:
        raise ParameterError("need 0 <= m_lo <= m_hi")
    if math.isfinite(m_hi) and m_hi > curve.grid[-1]:
        raise ParameterError(f"grid ends at m={curve.grid[-1]:g}, below m_hi={m_hi:g}")
    if not math.isfinite(m_hi):
        m_hi = float(curve.grid[-1])
    if m_lo > curve.grid[0] and m_lo > curve.grid[-1]:
        raise ParameterError("m_lo beyond the grid")
    area = _partial_integral(curve)
    total = area(m_hi) - area(m_lo)
    tail = max(0.0, envelope_integral(min(curve.grid[0], m_hi)) - envelope_integral(min(curve.grid[0], m_lo)))
    lo_idx = int(np.searchsorted(curve.grid, m_lo))
    hi_idx = int(np.searchsorted(curve.grid, m_hi, side="right")) - 1
    return AreaResult(total, _trapezoid_se(curve, lo_idx, hi_idx), tail)


@dataclass(frozen=True)
class MapBound:
    """``m_map >= m_lo``: the MAP threshold cannot lie at more noise than ``sigma_hi``."""

    m_lo: float
    m_hi: float
    target_nats: float

    @property
    def sigma(self) -> tuple[float, float]:
        to_sigma = lambda m: math.inf if m == 0 else m**-0.5  # noqa: E731
        return (to_sigma(self.m_hi), to_sigma(self.m_lo))

    def to_dict(self) -> dict:
        return {"m": [self.m_lo, self.m_hi], "sigma": list(self.sigma), "target_nats": self.target_nats}


def map_threshold_lower_bound(
    curve: GexitCurve, rate: float, tol: float = 1e-6, k_se: float = 0.0
) -> MapBound | None:
    """Noise level where the BP area accumulated from the useless end reaches ``rate * ln 2``.

    With ``k_se > 0`` the bracket is widened to where the partial area crosses
    the target shifted by ``k_se`` standard errors of the trapezoid sum.
    Returns ``None`` when the whole curve has less area than the target.
    """
    target = float(rate) * LN2
    area = _partial_integral(curve)
    top = float(curve.grid[-1])
    if area(top) < target:
        return None
    if target <= 0:
        return MapBound(0.0, 0.0, target)

    def solve(level):
        lo, hi = 0.0, top
        if area(hi) < level:
            return top, top
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if area(mid) >= level:
                hi = mid
            else:
                lo = mid
        return lo, hi

    lo, hi = solve(target)
    if k_se > 0:
        k = int(np.searchsorted(curve.grid, hi, side="right"))
        se = _trapezoid_se(curve, 0, min(k, curve.grid.size - 1))
        lo, hi = solve(target - k_se * se)[0], solve(target + k_se * se)[1]
    return MapBound(lo, hi, target)


def trapezoid_error(curve: GexitCurve) -> float:
    """Richardson estimate of the trapezoid error over the grid (full grid vs every other point)."""
    grid, vals = curve.grid, curve.values
    if grid.size < 3:
        return math.inf
    fine = float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid)))
    g2, v2 = grid[::2], vals[::2]
    coarse = float(np.sum(0.5 * (v2[1:] + v2[:-1]) * np.diff(g2)))
    if (grid.size - 1) % 2:
        # odd number of intervals: the coarse rule ends one point early, add the last piece
        coarse += 0.5 * (vals[-1] + vals[-2]) * (grid[-1] - grid[-2])
    return abs(fine - coarse) / 3.0


@dataclass
class EntropyBounds:
    grid: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    defect: float
    defect_se: float
    rate: float
    quad_error: float = 0.0

    @property
    def gap(self) -> np.ndarray:
        return self.upper - self.lower


def entropy_bounds(curve: GexitCurve, rate: float) -> EntropyBounds:
    """Per-bit conditional entropy bounds (nats) at each grid point.

    ``upper(m)`` integrates the curve from ``m`` to the zero-entropy end;
    ``lower(m) = R ln 2 - `` the integral from the useless end up to ``m``.
    ``defect = R ln 2 -`` the full integral.
    """
    area = _partial_integral(curve)
    full = area(float(curve.grid[-1]))
    partial = np.array([area(float(m)) for m in curve.grid])
    upper = full - partial
    lower = rate * LN2 - partial
    return EntropyBounds(
        curve.grid.copy(), upper, lower, rate * LN2 - full, _trapezoid_se(curve), rate, trapezoid_error(curve)
    )
