"""Exact Gibbs measure of a code viewed as a diluted spin glass.

Spins are ``s_i = (-1)^{x_i}``. The posterior weight of a configuration is
``exp(sum_A J_A (s_A - 1) + sum_i h_i s_i)`` where ``s_A`` is the product of
the spins of check ``A``; hard checks (``J_A = +inf``) restrict the sum to
codewords. Everything here is brute-force enumeration, used as an oracle for
the message-passing code and to check the disorder identities and
inequalities numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ldpcglass.bp import hard_decision_error, tree_magnetization
from ldpcglass.channel import LLRField, NoiseScale, draw_fields
from ldpcglass.errors import ParameterError
from ldpcglass.graph import (
    ENUMERATION_LIMIT,
    TannerGraph,
    all_spin_states,
    enumerate_codewords,
    extract_neighborhood,
)
from ldpcglass.seeding import derive_seed
from ldpcglass.stats import DisorderAverage, average, disorder_samples

_MAX_CELLS = 1 << 22


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Per-check coupling variance/mean ``t_A``; ``inf`` marks a hard check."""

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        if np.any(t < 0) or np.any(np.isnan(t)):
            raise ParameterError("coupling parameters must be >= 0")
        object.__setattr__(self, "t", t)

    @classmethod
    def hard(cls, n_checks: int) -> "CouplingSpec":
        return cls(np.full(n_checks, np.inf))

    @classmethod
    def soft(cls, t) -> "CouplingSpec":
        return cls(np.asarray(t, dtype=np.float64))

    @property
    def hard_mask(self) -> np.ndarray:
        return np.isinf(self.t)

    def with_t(self, index: int, value: float) -> "CouplingSpec":
        t = self.t.copy()
        t[index] = value
        return CouplingSpec(t)

    def couplings(self, z: np.ndarray) -> np.ndarray:
        """Couplings ``J = t + sqrt(t) z`` from standard normals; hard entries are 0 (unused)."""
        t = np.where(self.hard_mask, 0.0, self.t)
        return t + np.sqrt(t) * z

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.couplings(rng.standard_normal((count, self.t.shape[0])))


@dataclass
class GibbsReport:
    magnetizations: np.ndarray
    log_partition: float
    gibbs_entropy: float
    bit_error: float


class GibbsSystem:
    """Enumerated state space of a graph under a coupling spec.

    Hard checks restrict the states to their joint kernel; soft checks enter
    through their parities ``s_A`` in the energy.
    """

    def __init__(self, g: TannerGraph, spec: CouplingSpec | None = None, limit: int = ENUMERATION_LIMIT):
        self.graph = g
        self.spec = spec if spec is not None else CouplingSpec.hard(g.n_checks)
        if self.spec.t.shape != (g.n_checks,):
            raise ParameterError("coupling spec length must equal the number of checks")
        hard = np.flatnonzero(self.spec.hard_mask)
        self.soft = np.flatnonzero(~self.spec.hard_mask)
        if hard.size == g.n_checks:
            states = enumerate_codewords(g, limit)
        elif hard.size:
            keep = np.isin(g.edge_check, hard)
            remap = np.full(g.n_checks, -1)
            remap[hard] = np.arange(hard.size)
            sub = TannerGraph(g.n_vars, hard.size, g.edge_var[keep], remap[g.edge_check[keep]])
            states = enumerate_codewords(sub, limit)
        else:
            states = all_spin_states(g.n_vars, limit)
        self.states = states.astype(np.float64)
        if self.soft.size:
            par = np.ones((states.shape[0], self.soft.size))
            for k, a in enumerate(self.soft):
                par[:, k] = np.prod(self.states[:, g.check_vars(a)], axis=1)
            self.parity_minus_one = par - 1.0
        else:
            self.parity_minus_one = None

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    def evaluate(self, fields, J=None, observables=None):
        """Log partition, magnetizations and entropy for a batch of realizations.

        ``fields`` is ``(T, N)``; ``J`` is ``(T, M)`` (hard columns ignored);
        ``observables`` is an optional ``(C, k)`` matrix of state functions whose
        Gibbs averages are also returned.
        """
        fields = np.atleast_2d(np.asarray(fields, dtype=np.float64))
        T = fields.shape[0]
        if J is not None:
            J = np.atleast_2d(np.asarray(J, dtype=np.float64))
        log_z = np.empty(T)
        entropy = np.empty(T)
        mags = np.empty((T, self.graph.n_vars))
        obs = None if observables is None else np.empty((T, observables.shape[1]))
        step = max(1, _MAX_CELLS // max(1, self.n_states))
        for s in range(0, T, step):
            sl = slice(s, s + step)
            energy = fields[sl] @ self.states.T
            if self.parity_minus_one is not None and J is not None:
                energy += J[sl][:, self.soft] @ self.parity_minus_one.T
            top = energy.max(axis=1, keepdims=True)
            w = np.exp(energy - top)
            z = w.sum(axis=1)
            p = w / z[:, None]
            log_z[sl] = top[:, 0] + np.log(z)
            # entropy = ln Z - <E> from the same pass
            entropy[sl] = log_z[sl] - np.einsum("tc,tc->t", p, energy)
            mags[sl] = p @ self.states
            if obs is not None:
                obs[sl] = p @ observables
        return log_z, mags, entropy, obs

    def report(self, fields, J=None) -> GibbsReport:
        log_z, mags, entropy, _ = self.evaluate(fields, J)
        return GibbsReport(mags[0], float(log_z[0]), float(entropy[0]), float(hard_decision_error(mags[0]).mean()))


def _values(field):
    return np.asarray(field.values if isinstance(field, LLRField) else field, dtype=np.float64)


def exact_marginals_hard(g: TannerGraph, field) -> GibbsReport:
    """Exact posterior marginals with every check enforced."""
    return GibbsSystem(g).report(_values(field))


def exact_gibbs_soft(g: TannerGraph, field, spec: CouplingSpec, J) -> GibbsReport:
    """Exact Gibbs averages with soft couplings ``J`` on the non-hard checks."""
    return GibbsSystem(g, spec).report(_values(field), np.asarray(J, dtype=np.float64))


def map_estimate_and_error(report) -> tuple[np.ndarray, float]:
    """MAP bit decisions ``sign <s_i>`` (0 = tie) and the bit error against all-(+1)."""
    mags = report.magnetizations if isinstance(report, GibbsReport) else np.asarray(report)
    return np.sign(mags).astype(np.int8), float(hard_decision_error(mags).mean())


def binary_entropy_bits(p):
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    return np.where((p == 0) | (p == 1), 0.0, h)


# ---------------------------------------------------------------------------
# Reports


@dataclass
class VerificationReport:
    """Outcome of one numerical check; ``margin`` is the quantity tested against 0."""

    name: str
    margin: DisorderAverage
    passed: bool
    instance_digest: str
    quantities: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    two_sided: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "estimate": self.margin.estimate,
            "std_error": self.margin.std_error,
            "trials": self.margin.trials,
            "seed": self.margin.seed,
            "instance_digest": self.instance_digest,
            "passed": bool(self.passed),
            "test": "two-sided |margin| <= 3 SE" if self.two_sided else "one-sided margin >= -3 SE",
            "quantities": {k: v.to_dict() for k, v in self.quantities.items()},
            "params": self.params,
        }


# rounding allowance: exact identities can leave ~1e-18 residues with ~1e-18 SEs
FLOAT_SLACK = 1e-12


def _one_sided(avg: DisorderAverage, k: float = 3.0) -> bool:
    return avg.estimate >= -k * avg.std_error - FLOAT_SLACK


def _two_sided(avg: DisorderAverage, k: float = 3.0) -> bool:
    return abs(avg.estimate) <= k * avg.std_error + FLOAT_SLACK


def _col(samples, j, seed):
    return average(samples[:, j], seed)


# ---------------------------------------------------------------------------
# Disorder-averaged checks


@dataclass
class GexitPointExact:
    scale: NoiseScale
    g_closed: DisorderAverage
    g_fd: DisorderAverage
    entropy_per_bit: DisorderAverage
    bit_error: DisorderAverage

    @property
    def combined_se(self) -> float:
        return math.hypot(self.g_closed.std_error, self.g_fd.std_error)

    @property
    def agree(self) -> bool:
        return abs(self.g_closed.estimate - self.g_fd.estimate) <= 3 * self.combined_se + FLOAT_SLACK


def gexit_point_exact(
    g: TannerGraph, scale: NoiseScale, trials: int, seed: int, rel_delta: float = 1e-3, threads: int = 1
) -> GexitPointExact:
    """Exact-enumeration GEXIT value at one noise level, two ways.

    ``g_closed`` is ``(1/2) E[1 - (1/N) sum_i <s_i>]``; ``g_fd`` is the central
    finite difference ``-(1/N) dH/dm`` of the exact conditional entropy with
    the same standard normals driving ``h = m + sqrt(m) z`` at ``m +- delta``.
    """
    system = GibbsSystem(g)
    m, n = scale.m, g.n_vars
    delta = rel_delta * m

    def draw(rng, count):
        z = rng.standard_normal((count, n))
        _, mags, h0, _ = system.evaluate(m + math.sqrt(m) * z)
        _, _, h_plus, _ = system.evaluate((m + delta) + math.sqrt(m + delta) * z)
        _, _, h_minus, _ = system.evaluate((m - delta) + math.sqrt(m - delta) * z)
        closed = 0.5 * (1.0 - mags.mean(axis=1))
        fd = -(h_plus - h_minus) / (2 * delta * n)
        ber = hard_decision_error(mags).mean(axis=1)
        return np.column_stack([closed, fd, h0 / n, ber])

    s = disorder_samples(draw, trials, seed, label="gexit-exact", threads=threads)
    return GexitPointExact(scale, _col(s, 0, seed), _col(s, 1, seed), _col(s, 2, seed), _col(s, 3, seed))


def gexit_curve_exact(g: TannerGraph, grid, trials: int, seed: int, threads: int = 1):
    """Finite-difference MAP GEXIT curve of a small code on an m-grid."""
    from ldpcglass.de import GexitCurve

    points = [
        gexit_point_exact(g, NoiseScale(float(m)), trials, _grid_seed(seed, m), threads=threads) for m in grid
    ]
    return (
        GexitCurve(
            grid=np.asarray(grid, dtype=np.float64),
            values=np.array([p.g_fd.estimate for p in points]),
            std_errors=np.array([p.g_fd.std_error for p in points]),
            depth=None,
            population=None,
            seed=seed,
        ),
        points,
    )


def _grid_seed(seed, m):
    return derive_seed(seed, "grid", repr(float(m)))


def verify_nishimori(g: TannerGraph, scale: NoiseScale, trials: int, seed: int, root: int = 0, threads: int = 1):
    """Compare E[<s_o>] with E[<s_o>^2] on common realizations."""
    system = GibbsSystem(g)

    def draw(rng, count):
        _, mags, _, _ = system.evaluate(draw_fields(rng, scale.m, (count, g.n_vars)))
        s = mags[:, root]
        return np.column_stack([s, s * s, s * s - s])

    s = disorder_samples(draw, trials, seed, label="nishimori", threads=threads)
    diff = _col(s, 2, seed)
    return VerificationReport(
        name="nishimori",
        margin=diff,
        passed=_two_sided(diff),
        instance_digest=g.digest(seed, scale.m, root),
        quantities={"mean_s": _col(s, 0, seed), "mean_s2": _col(s, 1, seed), "difference": diff},
        params={"m": scale.m, "root": root},
        two_sided=True,
    )


def verify_cgn(
    g: TannerGraph,
    scale: NoiseScale,
    spec: CouplingSpec,
    X,
    Y: int,
    trials: int,
    seed: int,
    delta: float = 0.1,
    threads: int = 1,
):
    """Both correlation inequalities for the soft-coupled code.

    Estimates ``E[<s_X>]`` and the forward-difference slope of that average in
    ``t_Y``, with common standard normals for fields and couplings.
    """
    X = [int(i) for i in X]
    if not X:
        raise ParameterError("X must be nonempty")
    if spec.hard_mask[Y]:
        raise ParameterError(f"check {Y} is hard; CGN needs a soft coupling")
    base = GibbsSystem(g, spec)
    observable = np.prod(base.states[:, X], axis=1, keepdims=True)
    bumped = spec.with_t(Y, spec.t[Y] + delta)

    def draw(rng, count):
        zh = rng.standard_normal((count, g.n_vars))
        zj = rng.standard_normal((count, g.n_checks))
        fields = scale.m + math.sqrt(scale.m) * zh
        *_, a0 = base.evaluate(fields, spec.couplings(zj), observable)
        *_, a1 = base.evaluate(fields, bumped.couplings(zj), observable)
        return np.column_stack([a0[:, 0], (a1[:, 0] - a0[:, 0]) / delta])

    s = disorder_samples(draw, trials, seed, label="cgn", threads=threads)
    est, slope = _col(s, 0, seed), _col(s, 1, seed)
    worst = est if est.z_score() < slope.z_score() else slope
    return VerificationReport(
        name="cgn",
        margin=worst,
        passed=_one_sided(est) and _one_sided(slope),
        instance_digest=g.digest(seed, scale.m, tuple(spec.t), tuple(X), Y),
        quantities={"correlation": est, "slope": slope},
        params={"m": scale.m, "X": X, "Y": int(Y), "t": spec.t.tolist(), "delta": delta},
    )


def verify_check_erasing(
    g: TannerGraph,
    o: int,
    d: int,
    scale: NoiseScale,
    trials: int,
    seed: int,
    threads: int = 1,
    corrupt: bool = False,
):
    """Full-graph root magnetization versus the tree-neighborhood one.

    The right-hand side is the exact tree magnetization when the depth-``d``
    neighborhood of ``o`` is a tree and zero otherwise.
    """
    system = GibbsSystem(g)
    nbhd = extract_neighborhood(g, o, d)

    def draw(rng, count):
        fields = draw_fields(rng, scale.m, (count, g.n_vars))
        _, mags, _, _ = system.evaluate(fields)
        lhs = mags[:, o]
        rhs = tree_magnetization(nbhd, fields, corrupt=corrupt) if nbhd.is_tree else np.zeros(count)
        return np.column_stack([lhs, rhs, lhs - rhs])

    s = disorder_samples(draw, trials, seed, label="check-erasing", threads=threads)
    diff = _col(s, 2, seed)
    return VerificationReport(
        name="check-erasing",
        margin=diff,
        passed=_one_sided(diff),
        instance_digest=g.digest(seed, scale.m, o, d),
        quantities={"lhs": _col(s, 0, seed), "rhs": _col(s, 1, seed), "difference": diff},
        params={"m": scale.m, "root": o, "depth": d, "is_tree": nbhd.is_tree},
    )


def fano_gap(g: TannerGraph, scale: NoiseScale, trials: int, seed: int, threads: int = 1):
    """``h2(P_error) - (1/N) E[H(X|Y)]`` in bits, with a delta-method standard error."""
    system = GibbsSystem(g)

    def draw(rng, count):
        _, mags, entropy, _ = system.evaluate(draw_fields(rng, scale.m, (count, g.n_vars)))
        return np.column_stack([hard_decision_error(mags).mean(axis=1), entropy / (g.n_vars * math.log(2))])

    s = disorder_samples(draw, trials, seed, label="fano", threads=threads)
    p_err, h_bits = _col(s, 0, seed), _col(s, 1, seed)
    p = p_err.estimate
    gap = float(binary_entropy_bits(p)) - h_bits.estimate
    if 0 < p < 1:
        slope = math.log2((1 - p) / p)
        se = float(np.std(slope * s[:, 0] - s[:, 1], ddof=1) / math.sqrt(trials))
    else:
        se = h_bits.std_error
    margin = DisorderAverage(gap, se, trials, seed)
    return VerificationReport(
        name="fano",
        margin=margin,
        passed=_one_sided(margin),
        instance_digest=g.digest(seed, scale.m),
        quantities={"bit_error": p_err, "entropy_per_bit_bits": h_bits, "gap": margin},
        params={"m": scale.m},
    )
