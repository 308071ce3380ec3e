import math

import numpy as np
import pytest
from scipy import integrate

from ldpcglass.bp import MSG_CLIP
from ldpcglass.channel import NoiseScale, gaussian_expectation_adaptive, single_spin_gexit
from ldpcglass.de import (
    GexitCurve,
    area_integral,
    belief_samples,
    bp_threshold,
    de_step,
    decodes,
    entropy_bounds,
    error_estimate,
    g_bp_curve,
    g_bp_point,
    initial_population,
    map_threshold_lower_bound,
    trapezoid_error,
)
from ldpcglass.errors import ParameterError, SearchError
from ldpcglass.graph import DegreeDistribution
from ldpcglass.seeding import rng_for

REG36 = DegreeDistribution({3: 1.0}, {6: 1.0})
CHECKLESS = DegreeDistribution({0: 1.0}, {1: 1.0})
LN2 = math.log(2)


def single_spin_curve(grid):
    return GexitCurve(grid, [single_spin_gexit(m) for m in grid], np.zeros(len(grid)))


def test_first_step_uses_raw_fields():
    # generation 0 sends raw fields, so E[tanh u] = E[tanh h]^(dc - 1) by independence
    m = 1.0
    pop = de_step(initial_population(200_000, REG36, NoiseScale(m), seed=3))
    t = np.tanh(pop.samples)
    oracle = gaussian_expectation_adaptive(np.tanh, m) ** 5
    assert abs(t.mean() - oracle) <= 4 * t.std(ddof=1) / math.sqrt(t.size)
    assert pop.generation == 1 and pop.size == 200_000


def test_population_saturates_at_low_noise():
    pop = initial_population(20_000, REG36, NoiseScale(40.0), seed=1)
    for _ in range(5):
        pop = de_step(pop)
    assert np.mean(pop.samples < 0) == 0
    assert np.max(np.abs(pop.samples)) <= MSG_CLIP
    assert np.median(pop.samples) > 17


def test_error_contracts_below_threshold():
    pop = initial_population(50_000, REG36, NoiseScale.from_sigma(0.5), seed=2)
    errs = []
    for d in range(200):
        pop = de_step(pop)
        errs.append(error_estimate(belief_samples(pop, rng_for(2, "audit", d))))
        if errs[-1] < 1e-12:
            break
    assert errs[-1] < 1e-6
    assert np.all(np.diff(errs) < 0)


def test_de_step_deterministic_and_thread_invariant():
    pop = initial_population(40_000, REG36, NoiseScale(1.1), seed=9)
    a = de_step(de_step(pop, threads=1), threads=1)
    b = de_step(de_step(pop, threads=4), threads=4)
    assert np.array_equal(a.samples, b.samples)


def test_error_estimate_symmetric_density():
    b = 2.0 + math.sqrt(2.0) * np.random.default_rng(0).standard_normal(10**6)
    assert error_estimate(b) == pytest.approx(np.mean(b < 0), abs=5e-4)


def test_g_bp_point_limits():
    assert g_bp_point(NoiseScale(50.0), REG36, depth=5, population=5000, auto_depth=False).value < 1e-9
    for m in (0.1, 1.0, 3.0):
        p = g_bp_point(NoiseScale(m), CHECKLESS, depth=10, population=1000)
        assert p.value == pytest.approx(single_spin_gexit(m), abs=1e-12)
    with pytest.raises(ParameterError):
        g_bp_point(NoiseScale(1.0), REG36, depth=-1)


def test_g_bp_point_matches_single_spin_on_one_check_tree():
    # degree-1 variables on degree-1 checks: each check sends the clamp maximum
    dd = DegreeDistribution({1: 1.0}, {1: 1.0})
    p = g_bp_point(NoiseScale(0.5), dd, depth=3, population=2000, auto_depth=False)
    assert p.value < 1e-6


@pytest.mark.slow
def test_plateau_above_threshold():
    s = NoiseScale.from_sigma(1.2)
    a = g_bp_point(s, REG36, depth=200, population=100_000, seed=1, auto_depth=False)
    b = g_bp_point(s, REG36, depth=400, population=100_000, seed=1, auto_depth=False)
    assert a.value > 0.05
    assert abs(a.value - b.value) <= 3 * math.hypot(a.std_error, b.std_error)


def test_exchangeability():
    s = NoiseScale(0.9)
    a = g_bp_point(s, REG36, depth=60, population=20_000, seed=1, auto_depth=False)
    b = g_bp_point(s, REG36, depth=60, population=20_000, seed=2, auto_depth=False)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.std_error, b.std_error)


def test_g_bp_curve_shape():
    single, pts = g_bp_curve([1.0], REG36, depth=20, population=2000, auto_depth=False)
    assert single.grid.tolist() == [1.0] and len(pts) == 1
    grid = [0.5, 0.8, 1.1, 1.6, 2.2, 3.0]
    curve, pts = g_bp_curve(grid, REG36, depth=100, population=20_000, seed=4, max_depth=400)
    se = curve.std_errors
    above = curve.grid > 1.35  # below the BP threshold in noise
    assert np.all(curve.values[above] <= 3 * se[above] + 1e-6)
    assert np.all(curve.values[~above] > 0.05)
    assert np.all(np.diff(curve.values[~above]) < 0)
    assert np.all(curve.values <= [single_spin_gexit(m) + 3 * s for m, s in zip(grid, se)])
    with pytest.raises(ParameterError):
        g_bp_curve([1.0, 0.5], REG36)


def test_paper_axes():
    curve = GexitCurve([0.5, 2.0], [0.2, 0.1], [0.0, 0.0])
    ax = curve.paper_axes()
    assert ax["paper_n_a"].tolist() == [2.0, 0.5]
    assert ax["g_n_a"] == pytest.approx([0.2 * 0.25, 0.1 * 4.0])
    assert ax["paper_n_b"] == pytest.approx([4.0, 0.25])
    assert ax["g_n_b"] == pytest.approx([0.2 * 0.125 / 2, 0.1 * 8 / 2])
    # the area is invariant under the change of axis
    n, g = ax["paper_n_a"][::-1], ax["g_n_a"][::-1]
    m = curve.grid
    fine_m = np.linspace(0.5, 2.0, 2001)
    fine_g = np.interp(fine_m, m, curve.values)
    a_m = integrate.trapezoid(fine_g, fine_m)
    fine_n = 1 / fine_m[::-1]
    a_n = integrate.trapezoid(fine_g[::-1] * fine_m[::-1] ** 2, fine_n)
    assert a_n == pytest.approx(a_m, rel=1e-5)
    assert n[0] < n[1] and g.shape == (2,)


def test_decodes_and_threshold_small():
    assert decodes(NoiseScale.from_sigma(0.7), REG36, 10_000, seed=1, d_max=300)
    assert not decodes(NoiseScale.from_sigma(1.0), REG36, 10_000, seed=1, d_max=300)
    br = bp_threshold(REG36, tol=0.02, population=10_000, seed=1, d_max=400)
    assert br.width_sigma <= 0.02 and br.lo.sigma < br.hi.sigma
    assert 0.85 < br.lo.sigma and br.hi.sigma < 0.91
    assert br.hi.sigma < 0.9787
    br_m = bp_threshold(REG36, tol=0.02, population=10_000, seed=1, d_max=400, axis="m")
    # both searches bracket the same crossing
    assert br_m.lo.sigma <= br.hi.sigma and br.lo.sigma <= br_m.hi.sigma


def test_threshold_errors():
    with pytest.raises(SearchError):
        bp_threshold(CHECKLESS, population=1000)
    with pytest.raises(SearchError):
        bp_threshold(REG36, population=5000, d_max=200, lo=NoiseScale.from_sigma(1.0), hi=NoiseScale.from_sigma(1.2))
    with pytest.raises(ParameterError):
        bp_threshold(REG36, tol=0)


def test_area_single_spin_is_ln2():
    grid = np.geomspace(0.01, 60, 300)
    res = area_integral(single_spin_curve(grid))
    assert res.nats == pytest.approx(LN2, rel=0.005)
    assert res.bits == pytest.approx(1.0, rel=0.005)
    direct, _ = integrate.quad(single_spin_gexit, 0, 80, limit=200)
    assert direct == pytest.approx(LN2, rel=1e-6)


def test_area_edge_cases():
    zero = GexitCurve([0.5, 1.0, 2.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    assert area_integral(zero, 0.5, 2.0).nats == 0
    with pytest.raises(ParameterError):
        area_integral(zero, 0.0, 3.0)
    with pytest.raises(ParameterError):
        area_integral(zero, 2.0, 1.0)
    with pytest.raises(ParameterError):
        GexitCurve([1.0, 0.5], [0, 0], [0, 0])


def test_map_bound_monotone_and_zero_rate():
    grid = np.geomspace(0.01, 60, 200)
    curve = single_spin_curve(grid)
    zero = map_threshold_lower_bound(curve, 0.0)
    assert zero.m_lo == 0 and zero.m_hi == 0
    full = map_threshold_lower_bound(curve, 0.5)
    half = map_threshold_lower_bound(curve.scaled(0.5), 0.5)
    assert half.m_lo > full.m_hi
    assert map_threshold_lower_bound(curve.scaled(0.1), 0.5) is None
    wide = map_threshold_lower_bound(
        GexitCurve(grid, curve.values, np.full(grid.size, 1e-3)), 0.5, k_se=3.0
    )
    assert wide.m_lo <= full.m_lo and wide.m_hi >= full.m_hi


def test_entropy_bounds_single_spin():
    grid = np.geomspace(0.01, 60, 400)
    eb = entropy_bounds(single_spin_curve(grid), 1.0)
    tol = 2 * trapezoid_error(single_spin_curve(grid)) + 1e-9
    assert abs(eb.defect) <= tol
    assert np.all(np.abs(eb.gap) <= tol)
    assert eb.upper[-1] == 0
    assert abs(eb.lower[-1]) <= tol
    assert np.all(np.diff(eb.upper) <= 0)


def test_trapezoid_error_estimate():
    grid = np.linspace(0, 2, 41)
    curve = GexitCurve(grid, np.exp(-grid), np.zeros(41))
    exact = 1 - math.exp(-2)
    trap = float(np.sum(0.5 * (curve.values[1:] + curve.values[:-1]) * np.diff(grid)))
    assert abs(trap - exact) == pytest.approx(trapezoid_error(curve), rel=0.01)
