"""Binary-input AWGN channel and the gaussian half-LLR field it induces.

With +/-1 signalling and noise variance ``sigma2`` the half-LLR
``h = y / sigma2`` of a transmitted +1 is normal with mean and variance both
equal to ``m = 1 / sigma2``. ``m`` is the canonical noise coordinate here;
large ``m`` means little noise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ldpcglass.errors import ParameterError
from ldpcglass.seeding import rng_for

HERMITE_NODES = 101


@dataclass(frozen=True, order=True)
class NoiseScale:
    """Noise level stored as the field mean ``m`` (= field variance).

    ``m = 0`` is the zero-information endpoint (``sigma = inf``); it is allowed
    on integration axes but cannot be sampled.
    """

    m: float

    def __post_init__(self):
        if not (self.m >= 0) or math.isinf(self.m):
            raise ParameterError(f"field mean m must be finite and >= 0, got {self.m!r}")

    @classmethod
    def from_sigma(cls, sigma: float) -> "NoiseScale":
        if sigma <= 0:
            raise ParameterError("sigma must be > 0")
        return cls(1.0 / sigma**2)

    @classmethod
    def from_sigma2(cls, sigma2: float) -> "NoiseScale":
        if sigma2 <= 0:
            raise ParameterError("sigma2 must be > 0")
        return cls(1.0 / sigma2)

    @classmethod
    def from_paper_n_a(cls, n: float) -> "NoiseScale":
        return cls(1.0 / n)

    @classmethod
    def from_paper_n_b(cls, n: float) -> "NoiseScale":
        return cls(n**-0.5)

    @classmethod
    def parse(cls, text: str) -> "NoiseScale":
        """Parse ``m=1.2``, ``sigma=0.9`` or ``sigma2=0.81``."""
        match = re.fullmatch(r"\s*(m|sigma|sigma2)\s*=\s*([^\s]+)\s*", text)
        if not match:
            raise ParameterError(f"cannot parse noise scale {text!r}; use m=, sigma= or sigma2=")
        key, value = match.group(1), float(match.group(2))
        return {"m": cls, "sigma": cls.from_sigma, "sigma2": cls.from_sigma2}[key](value)

    @property
    def sigma2(self) -> float:
        return math.inf if self.m == 0 else 1.0 / self.m

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def paper_n_a(self) -> float:
        """Noise parameter under the reading W ~ N(0, n): n = 1/m."""
        return self.sigma2

    @property
    def paper_n_b(self) -> float:
        """Noise parameter under the reading E[h] = n^(-1/2): n = m^(-2)."""
        return math.inf if self.m == 0 else self.m**-2

    def views(self) -> dict:
        return {
            "m": self.m,
            "sigma": self.sigma,
            "sigma2": self.sigma2,
            "paper_n_a": self.paper_n_a,
            "paper_n_b": self.paper_n_b,
        }


@dataclass(frozen=True, eq=False)
class LLRField:
    values: np.ndarray
    scale: NoiseScale
    seed: int | None = None

    @property
    def n(self) -> int:
        return int(self.values.shape[-1])


def draw_fields(rng: np.random.Generator, m: float, shape) -> np.ndarray:
    """Half-LLRs under the all-zero codeword: Normal(m, m). ``m = 0`` gives zeros."""
    z = rng.standard_normal(shape)
    return m + math.sqrt(m) * z


def sample_llr_field(scale: NoiseScale, n: int, seed: int) -> LLRField:
    if scale.m <= 0:
        raise ParameterError("cannot sample a field at m <= 0")
    values = draw_fields(rng_for(seed, "llr-field"), scale.m, n)
    return LLRField(values, scale, seed)


def llr_of_observation(y, sigma2):
    """Half-LLR ``(1/2) ln p(y|+1)/p(y|-1)`` for gaussian noise of variance ``sigma2``."""
    if np.any(np.asarray(sigma2) <= 0):
        raise ParameterError("sigma2 must be > 0")
    return np.asarray(y) / sigma2


def gaussian_expectation(f, m: float, nodes: int = HERMITE_NODES) -> float:
    """E[f(h)] for h ~ Normal(m, m) by Gauss-Hermite quadrature."""
    x, w = np.polynomial.hermite.hermgauss(nodes)
    h = m + math.sqrt(2.0 * m) * x
    return float(np.dot(w, f(h)) / math.sqrt(math.pi))


def gaussian_expectation_adaptive(f, m: float, tol: float = 1e-13) -> float:
    """E[f(h)] for h ~ Normal(m, m) by adaptive quadrature (for tight oracles)."""
    if m == 0:
        return float(f(np.array(0.0)))
    s = math.sqrt(m)

    def integrand(z):
        return float(f(np.array(m + s * z))) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    val, _ = integrate.quad(integrand, -40.0, 40.0, epsabs=tol, epsrel=tol, limit=400, points=[-m / s])
    return val


def capacity(sigma2: float, nodes: int = HERMITE_NODES) -> float:
    """BIAWGN capacity in bits per channel use for uniform +/-1 input."""
    if sigma2 <= 0:
        raise ParameterError("sigma2 must be > 0")
    m = 1.0 / sigma2
    loss = gaussian_expectation(lambda h: np.logaddexp(0.0, -2.0 * h), m, nodes)
    return 1.0 - loss / math.log(2.0)


def shannon_threshold(rate: float, rtol: float = 1e-6) -> NoiseScale:
    """Noise scale at which the BIAWGN capacity equals ``rate``."""
    if not 0 < rate < 1:
        raise ParameterError("rate must lie in (0, 1)")
    lo, hi = math.log(1e-3), math.log(1e3)  # log sigma; capacity decreasing in sigma
    while hi - lo > rtol:
        mid = 0.5 * (lo + hi)
        if capacity(math.exp(2 * mid)) > rate:
            lo = mid
        else:
            hi = mid
    return NoiseScale.from_sigma(math.exp(0.5 * (lo + hi)))


def single_spin_gexit(m: float) -> float:
    """(1/2) E[1 - tanh h] for h ~ Normal(m, m): GEXIT of one uncoded bit."""
    return 0.5 * (1.0 - gaussian_expectation_adaptive(np.tanh, m, tol=1e-12))
