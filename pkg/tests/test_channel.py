import math

import numpy as np
import pytest
from scipy import integrate, stats

from ldpcglass.channel import (
    NoiseScale,
    capacity,
    draw_fields,
    gaussian_expectation,
    gaussian_expectation_adaptive,
    llr_of_observation,
    sample_llr_field,
    shannon_threshold,
    single_spin_gexit,
)
from ldpcglass.errors import ParameterError
from ldpcglass.seeding import rng_for


def capacity_oracle(sigma):
    # mutual information of the BIAWGN channel by direct integration over y
    def integrand(y):
        p_plus = stats.norm.pdf(y, 1, sigma)
        p_minus = stats.norm.pdf(y, -1, sigma)
        mix = 0.5 * (p_plus + p_minus)
        out = 0.0
        for p in (p_plus, p_minus):
            if p > 0:
                out += 0.5 * p * math.log2(p / mix)
        return out

    val, _ = integrate.quad(integrand, -1 - 12 * sigma, 1 + 12 * sigma, limit=200, epsabs=1e-12)
    return val


def test_noise_scale_views():
    s = NoiseScale.from_sigma(0.5)
    assert s.m == pytest.approx(4.0)
    assert s.sigma2 == pytest.approx(0.25)
    assert s.paper_n_a == pytest.approx(0.25)
    assert s.paper_n_b == pytest.approx(1 / 16)
    assert NoiseScale.from_paper_n_a(0.25).m == pytest.approx(4.0)
    assert NoiseScale.from_paper_n_b(1 / 16).m == pytest.approx(4.0)
    assert NoiseScale.parse("sigma2=0.25").m == pytest.approx(4.0)
    assert NoiseScale.parse("m=4") == NoiseScale(4.0)
    with pytest.raises(ParameterError):
        NoiseScale.parse("n=4")
    with pytest.raises(ParameterError):
        NoiseScale(-1.0)


def test_views_monotone():
    ms = np.linspace(0.1, 10, 50)
    views = [NoiseScale(m).views() for m in ms]
    for key in ("sigma", "sigma2", "paper_n_a", "paper_n_b"):
        assert np.all(np.diff([v[key] for v in views]) < 0)


def test_sample_llr_field_moments():
    f = sample_llr_field(NoiseScale(4.0), 10**6, seed=1)
    assert abs(f.values.mean() - 4) < 0.01
    assert abs(f.values.var() - 4) < 0.03
    assert np.array_equal(f.values, sample_llr_field(NoiseScale(4.0), 10**6, seed=1).values)
    big = sample_llr_field(NoiseScale(100.0), 10**6, seed=2)
    # tail oracle: P(h < 0) = Phi(-sqrt(m)) ~ 7.6e-24
    assert np.mean(big.values < 0) < 1e-6
    with pytest.raises(ParameterError):
        sample_llr_field(NoiseScale(0.0), 5, seed=0)


def test_llr_of_observation():
    assert llr_of_observation(0.0, 1.0) == 0
    assert llr_of_observation(1.0, 1.0) == 1
    sigma2 = 0.64
    mean = integrate.quad(lambda y: llr_of_observation(y, sigma2) * stats.norm.pdf(y, 1, math.sqrt(sigma2)), -20, 20)[0]
    second = integrate.quad(
        lambda y: llr_of_observation(y, sigma2) ** 2 * stats.norm.pdf(y, 1, math.sqrt(sigma2)), -20, 20
    )[0]
    assert mean == pytest.approx(1 / sigma2, rel=1e-10)
    assert second - mean**2 == pytest.approx(1 / sigma2, rel=1e-8)
    with pytest.raises(ParameterError):
        llr_of_observation(1.0, 0.0)


@pytest.mark.parametrize("m", [0.3, 1.0, 3.0])
def test_symmetry_identity(m):
    h = draw_fields(rng_for(7, "sym", m), m, 10**6)
    for f in (lambda x: x, lambda x: x * x, np.tanh):
        diff = f(-h) - np.exp(-2 * h) * f(h)
        se = diff.std(ddof=1) / math.sqrt(h.size)
        assert abs(diff.mean()) <= 4 * se


@pytest.mark.parametrize("m", [0.25, 1.0, 4.0])
def test_single_spin_nishimori_quadrature(m):
    a = gaussian_expectation_adaptive(np.tanh, m)
    b = gaussian_expectation_adaptive(lambda x: np.tanh(x) ** 2, m)
    assert abs(a - b) < 1e-8


def test_hermite_matches_adaptive():
    for m in (0.5, 2.0, 8.0):
        f = lambda x: np.logaddexp(0.0, -2 * x)  # noqa: E731
        # the kink of logaddexp limits Gauss-Hermite to ~1e-8 at large m
        assert gaussian_expectation(f, m) == pytest.approx(gaussian_expectation_adaptive(f, m), abs=1e-7)


def test_capacity_against_direct_integral():
    for sigma in (0.5, 0.8, 0.9787, 1.5, 3.0):
        assert capacity(sigma**2) == pytest.approx(capacity_oracle(sigma), abs=1e-7)


def test_capacity_limits_and_monotone():
    assert capacity(1e-4) == pytest.approx(1.0, abs=1e-9)
    assert capacity(1e4) < 1e-3
    caps = [capacity(s2) for s2 in np.geomspace(0.05, 20, 60)]
    assert np.all(np.diff(caps) < 0)


def test_shannon_threshold():
    s = shannon_threshold(0.5)
    assert abs(s.sigma - 0.9787) < 0.0005
    assert capacity_oracle(s.sigma) == pytest.approx(0.5, abs=1e-6)
    assert shannon_threshold(0.99).sigma < shannon_threshold(0.9).sigma < s.sigma < shannon_threshold(0.1).sigma
    assert shannon_threshold(0.999999).sigma < 0.3


def test_single_spin_gexit_limits():
    assert single_spin_gexit(1e-8) == pytest.approx(0.5, abs=1e-6)
    assert single_spin_gexit(60.0) < 1e-12
    vals = [single_spin_gexit(m) for m in np.linspace(0.01, 10, 30)]
    assert np.all(np.diff(vals) < 0)
