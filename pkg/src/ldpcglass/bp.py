"""Belief propagation on Tanner graphs and on tree neighborhoods.

Messages are half-LLRs. A check sends ``atanh(prod tanh(incoming))`` and a
variable sends its channel field plus the other incoming check messages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ldpcglass import kernels
from ldpcglass.channel import LLRField, NoiseScale, draw_fields
from ldpcglass.errors import ParameterError, PreconditionError
from ldpcglass.graph import DegreeDistribution, Neighborhood, TannerGraph, sample_irregular, sample_regular
from ldpcglass.seeding import derive_seed, parallel_map, rng_for
from ldpcglass.stats import DisorderAverage, mean_and_se

MSG_CLIP = 30.0
PRODUCT_CLAMP = 1.0 - 1e-15
# largest check message: atanh of the clamped empty product
MSG_CLIP_EFFECTIVE = math.atanh(PRODUCT_CLAMP)


def check_update(incoming) -> float:
    """Check-to-variable message from the other variable-to-check messages."""
    p = float(np.prod(np.tanh(np.asarray(incoming, dtype=np.float64))))
    return math.atanh(min(max(p, -PRODUCT_CLAMP), PRODUCT_CLAMP))


def variable_update(channel_h: float, incoming, exclude: int | None = None) -> float:
    """Variable-to-check message; ``exclude`` indexes the target check's own message."""
    incoming = np.asarray(incoming, dtype=np.float64)
    if exclude is not None:
        incoming = np.delete(incoming, exclude)
    return float(np.clip(channel_h + incoming.sum(), -MSG_CLIP, MSG_CLIP))


def hard_decision_error(values) -> np.ndarray:
    """Per-entry error against the all-(+1) word; a zero counts as half an error."""
    return 0.5 * (1.0 - np.sign(values))


@dataclass
class MessageState:
    check_to_var: np.ndarray  # per edge, check-major order
    var_to_check: np.ndarray  # per edge, check-major order
    iteration: int


@dataclass
class BPResult:
    beliefs: np.ndarray
    estimates: np.ndarray  # sign of beliefs; 0 marks an undecided bit
    iterations: int
    converged: bool
    bit_error: float
    messages: MessageState


def _parity_ok(g: TannerGraph, beliefs: np.ndarray) -> bool:
    if g.n_checks == 0:
        return True
    bits = (beliefs[g.edge_var] < 0).astype(np.int64)
    ones = np.bincount(g.edge_check, weights=bits, minlength=g.n_checks)
    return not np.any(ones.astype(np.int64) % 2)


def run_bp(
    g: TannerGraph,
    field: LLRField | np.ndarray,
    max_iters: int = 50,
    stop_eps: float = 1e-8,
    stop_on_parity: bool = True,
) -> BPResult:
    """Flooding-schedule BP.

    Each iteration updates every check message, then every variable message.
    Stops when the largest check-message change drops below ``stop_eps``, when
    the hard decisions satisfy every check (if ``stop_on_parity``), or after
    ``max_iters`` iterations.
    """
    if max_iters < 1:
        raise ParameterError("max_iters must be >= 1")
    h = np.asarray(field.values if isinstance(field, LLRField) else field, dtype=np.float64)
    if h.shape != (g.n_vars,):
        raise ParameterError(f"field has shape {h.shape}, graph has {g.n_vars} variables")
    order = g.var_order
    v2c = np.clip(h[g.edge_var], -MSG_CLIP, MSG_CLIP)
    c2v = np.zeros(g.n_edges)
    beliefs = h.copy()
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        new_c2v = kernels.check_extrinsic(v2c, g.check_ptr, PRODUCT_CLAMP)
        delta = float(np.max(np.abs(new_c2v - c2v))) if g.n_edges else 0.0
        c2v = new_c2v
        out, beliefs = kernels.variable_extrinsic(c2v[order], g.var_ptr, h, MSG_CLIP)
        v2c = np.empty_like(out)
        v2c[order] = out
        if delta < stop_eps:
            converged = True
            break
        if stop_on_parity and _parity_ok(g, beliefs):
            converged = True
            break
    estimates = np.sign(beliefs).astype(np.int8)
    return BPResult(
        beliefs=beliefs,
        estimates=estimates,
        iterations=it,
        converged=converged,
        bit_error=float(hard_decision_error(beliefs).mean()),
        messages=MessageState(c2v, v2c, it),
    )


def _tree_check_update(values, corrupt):
    p = np.prod(np.tanh(values), axis=0) if len(values) else np.ones(())
    u = np.arctanh(np.clip(p, -PRODUCT_CLAMP, PRODUCT_CLAMP))
    return 2.0 * u if corrupt else u


def tree_magnetization(nbhd: Neighborhood, fields, d: int | None = None, *, corrupt: bool = False):
    """Exact root magnetization on a tree neighborhood via leaves-to-root sweeps.

    ``fields`` is indexed by the original variable ids; a trailing batch of
    realizations is supported as shape ``(T, N)``. ``corrupt`` doubles every
    check message and exists only as a negative control for the verifiers.
    """
    if not nbhd.is_tree:
        raise PreconditionError("tree_magnetization needs a tree neighborhood")
    if d is not None and d != nbhd.depth:
        raise PreconditionError(f"depth {d} does not match neighborhood depth {nbhd.depth}")
    h = np.asarray(fields.values if isinstance(fields, LLRField) else fields, dtype=np.float64)
    hv = lambda i: h[..., i]  # noqa: E731
    dist = nbhd.distance
    check_vars: dict[int, list[int]] = {}
    var_checks: dict[int, list[int]] = {}
    for i, a in nbhd.edges:
        check_vars.setdefault(a, []).append(i)
        var_checks.setdefault(i, []).append(a)

    def var_to_check(i, parent):
        msg = hv(i)
        for a in var_checks.get(i, []):
            if a != parent:
                msg = msg + check_to_var(a, i)
        return np.clip(msg, -MSG_CLIP, MSG_CLIP)

    def check_to_var(a, parent):
        children = [j for j in check_vars[a] if j != parent]
        assert all(dist[("v", j)] > dist[("c", a)] for j in children)
        return _tree_check_update([var_to_check(j, a) for j in children], corrupt)

    o = nbhd.root
    total = hv(o)
    for a in var_checks.get(o, []):
        total = total + check_to_var(a, o)
    return np.tanh(total)


def _ensemble_sampler(n, dd):
    if isinstance(dd, TannerGraph):
        return lambda seed: dd
    if isinstance(dd, tuple):
        dv, dc = dd
        return lambda seed: sample_regular(n, dv, dc, seed)
    if isinstance(dd, DegreeDistribution):
        return lambda seed: sample_irregular(n, dd, seed)
    raise ParameterError("ensemble must be (dv, dc), a DegreeDistribution or a fixed TannerGraph")


@dataclass
class BERResult:
    ber: DisorderAverage
    iters_mean: float


def ber_simulation(
    n: int,
    ensemble,
    scale: NoiseScale,
    trials: int,
    max_iters: int = 50,
    seed: int = 0,
    threads: int = 1,
) -> BERResult:
    """Average BP bit error over fresh (graph, field) draws.

    ``ensemble`` is ``(dv, dc)`` or a :class:`DegreeDistribution`; a fixed
    :class:`TannerGraph` keeps the code and redraws only the noise. Trial ``k``
    uses seeds derived from ``(seed, k)`` only.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    sample = _ensemble_sampler(n, ensemble)

    def one(k):
        g = sample(derive_seed(seed, "ber-graph", k))
        h = draw_fields(rng_for(seed, "ber-field", k), scale.m, g.n_vars)
        res = run_bp(g, h, max_iters=max_iters)
        return res.bit_error, res.iterations

    out = np.array(parallel_map(one, range(trials), threads))
    est, se = mean_and_se(out[:, 0])
    return BERResult(DisorderAverage(est, se, trials, seed), float(out[:, 1].mean()))
