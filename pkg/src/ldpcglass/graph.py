"""Parity-check matrices, Tanner graphs and random LDPC ensembles.

Variables and checks are 0-indexed internally. Edges are stored in
check-major order (sorted by check, then variable); ``var_order`` is the
permutation that regroups them by variable.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ldpcglass.errors import CapacityError, MalformedCodeError, ParameterError
from ldpcglass.seeding import rng_for

ENUMERATION_LIMIT = 24


@dataclass(frozen=True, eq=False)
class TannerGraph:
    n_vars: int
    n_checks: int
    edge_var: np.ndarray
    edge_check: np.ndarray
    check_ptr: np.ndarray = field(init=False, repr=False)
    var_order: np.ndarray = field(init=False, repr=False)
    var_ptr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ev = np.asarray(self.edge_var, dtype=np.int64)
        ec = np.asarray(self.edge_check, dtype=np.int64)
        order = np.lexsort((ev, ec))
        ev, ec = ev[order], ec[order]
        if ev.size and (ev.min() < 0 or ev.max() >= self.n_vars or ec.min() < 0 or ec.max() >= self.n_checks):
            raise MalformedCodeError("edge endpoint out of range")
        if ev.size > 1 and np.any((np.diff(ec) == 0) & (np.diff(ev) == 0)):
            raise MalformedCodeError("duplicate edge")
        var_order = np.lexsort((ec, ev))
        set_ = object.__setattr__
        set_(self, "edge_var", ev)
        set_(self, "edge_check", ec)
        set_(self, "check_ptr", _ptr(np.bincount(ec, minlength=self.n_checks)))
        set_(self, "var_order", var_order)
        set_(self, "var_ptr", _ptr(np.bincount(ev, minlength=self.n_vars)))

    @property
    def n_edges(self) -> int:
        return int(self.edge_var.shape[0])

    @property
    def var_degrees(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    @property
    def check_degrees(self) -> np.ndarray:
        return np.diff(self.check_ptr)

    def check_vars(self, a: int) -> np.ndarray:
        return self.edge_var[self.check_ptr[a] : self.check_ptr[a + 1]]

    def var_checks(self, i: int) -> np.ndarray:
        return self.edge_check[self.var_order[self.var_ptr[i] : self.var_ptr[i + 1]]]

    def to_matrix(self) -> np.ndarray:
        H = np.zeros((self.n_checks, self.n_vars), dtype=np.uint8)
        H[self.edge_check, self.edge_var] = 1
        return H

    def digest(self, *extra) -> str:
        """Stable hash of the incidence structure plus any seed inputs."""
        h = hashlib.sha256()
        h.update(np.array([self.n_vars, self.n_checks], dtype="<i8").tobytes())
        h.update(self.edge_var.astype("<i8").tobytes())
        h.update(self.edge_check.astype("<i8").tobytes())
        h.update(repr(extra).encode())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (
            self.n_vars == other.n_vars
            and self.n_checks == other.n_checks
            and np.array_equal(self.edge_var, other.edge_var)
            and np.array_equal(self.edge_check, other.edge_check)
        )

    __hash__ = None


def _ptr(counts):
    ptr = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr


def from_matrix(H) -> TannerGraph:
    """Tanner graph whose edges are the nonzero entries of ``H``."""
    H = np.asarray(H)
    if H.ndim != 2 or H.size == 0:
        raise MalformedCodeError("parity-check matrix must be a non-empty 2-D array")
    if not np.isin(H, (0, 1)).all():
        raise MalformedCodeError("parity-check matrix must be binary")
    if not H.any(axis=1).all():
        raise MalformedCodeError(f"empty row(s): {np.flatnonzero(~H.any(axis=1)).tolist()}")
    if not H.any(axis=0).all():
        raise MalformedCodeError(f"empty column(s): {np.flatnonzero(~H.any(axis=0)).tolist()}")
    ec, ev = np.nonzero(H)
    return TannerGraph(H.shape[1], H.shape[0], ev, ec)


def checkless_graph(n: int) -> TannerGraph:
    """N free bits and no parity checks (the uncoded, rate-1 family)."""
    return TannerGraph(n, 0, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))


# ---------------------------------------------------------------------------
# Degree distributions and the configuration model


@dataclass(frozen=True)
class DegreeDistribution:
    """Variable and check degree laws.

    With ``node_perspective=True`` (the default) the maps give the fraction of
    nodes with each degree; otherwise the fraction of edges.
    """

    variable: dict
    check: dict
    node_perspective: bool = True

    def __post_init__(self):
        for name in ("variable", "check"):
            law = {int(k): float(v) for k, v in getattr(self, name).items() if v != 0}
            if not law:
                raise ParameterError(f"{name} degree law is empty")
            if any(k < 0 for k in law) or any(v < 0 for v in law.values()):
                raise ParameterError(f"{name} degree law has negative entries")
            if abs(sum(law.values()) - 1.0) > 1e-12:
                raise ParameterError(f"{name} degree law sums to {sum(law.values())!r}, not 1")
            if not self.node_perspective and 0 in law:
                raise ParameterError("edge-perspective laws cannot contain degree 0")
            object.__setattr__(self, name, dict(sorted(law.items())))

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDistribution":
        return cls({dv: 1.0}, {dc: 1.0})

    def node_variable(self) -> dict:
        return self.variable if self.node_perspective else _edge_to_node(self.variable)

    def node_check(self) -> dict:
        return self.check if self.node_perspective else _edge_to_node(self.check)

    def edge_variable(self) -> dict:
        return _node_to_edge(self.variable) if self.node_perspective else self.variable

    def edge_check(self) -> dict:
        return _node_to_edge(self.check) if self.node_perspective else self.check

    @property
    def mean_variable(self) -> float:
        return sum(k * p for k, p in self.node_variable().items())

    @property
    def mean_check(self) -> float:
        return sum(k * p for k, p in self.node_check().items())

    @property
    def design_rate(self) -> float:
        return 1.0 - self.mean_variable / self.mean_check

    def to_dict(self) -> dict:
        return {
            "variable": {str(k): v for k, v in self.variable.items()},
            "check": {str(k): v for k, v in self.check.items()},
            "node_perspective": self.node_perspective,
        }


def _node_to_edge(law):
    mean = sum(k * p for k, p in law.items())
    if mean == 0:
        return {}
    return {k: k * p / mean for k, p in law.items() if k > 0}


def _edge_to_node(law):
    norm = sum(p / k for k, p in law.items())
    return {k: (p / k) / norm for k, p in law.items()}


def largest_remainder(law: dict, total: int) -> dict:
    """Integer node counts per degree summing to ``total``."""
    degrees = list(law)
    quotas = np.array([law[k] * total for k in degrees])
    counts = np.floor(quotas + 1e-9).astype(int)
    short = total - int(counts.sum())
    if short > 0:
        frac = quotas - counts
        # largest fractional part first; ties go to the smaller degree
        order = sorted(range(len(degrees)), key=lambda j: (-frac[j], degrees[j]))
        for j in order[:short]:
            counts[j] += 1
    return {k: int(c) for k, c in zip(degrees, counts)}


def _degree_sequence(counts: dict) -> np.ndarray:
    return np.repeat(np.array(list(counts), dtype=np.int64), list(counts.values()))


def configuration_model(var_degrees, check_degrees, rng) -> TannerGraph:
    """Uniform stub matching; parallel edges cancel in pairs (mod 2)."""
    var_degrees = np.asarray(var_degrees, dtype=np.int64)
    check_degrees = np.asarray(check_degrees, dtype=np.int64)
    n, m = var_degrees.size, check_degrees.size
    if var_degrees.sum() != check_degrees.sum():
        raise ParameterError(
            f"stub counts differ: {int(var_degrees.sum())} variable vs {int(check_degrees.sum())} check"
        )
    v_stubs = np.repeat(np.arange(n), var_degrees)
    c_stubs = np.repeat(np.arange(m), check_degrees)
    v_stubs = v_stubs[rng.permutation(v_stubs.size)]
    keys, mult = np.unique(c_stubs * n + v_stubs, return_counts=True)
    keys = keys[mult % 2 == 1]
    return TannerGraph(n, m, keys % n, keys // n)


def sample_regular(n: int, dv: int, dc: int, seed: int) -> TannerGraph:
    """Random (dv, dc)-regular graph from the configuration model."""
    if dv < 2 or dc < 2:
        raise ParameterError("need dv >= 2 and dc >= 2")
    if (n * dv) % dc or (n * dv) % 2:
        raise ParameterError(f"N*dv = {n * dv} must be even and divisible by dc = {dc}")
    m = n * dv // dc
    rng = rng_for(seed, "configuration-model")
    return configuration_model(np.full(n, dv), np.full(m, dc), rng)


def sample_irregular(n: int, dd: DegreeDistribution, seed: int, n_checks: int | None = None) -> TannerGraph:
    """Configuration model over the largest-remainder rounding of ``dd``.

    If ``n_checks`` is omitted it is chosen to balance the edge counts. Any
    residual stub mismatch is repaired by changing the degree of one node in
    the highest check-degree class.
    """
    var_counts = largest_remainder(dd.node_variable(), n)
    n_edges = sum(k * c for k, c in var_counts.items())
    check_law = dd.node_check()
    if n_checks is None:
        n_checks = max(1, int(round(n_edges / dd.mean_check)))
    elif abs(n_edges - n_checks * dd.mean_check) > max(check_law):
        raise ParameterError(
            f"mean-degree mismatch: N*mean_dv = {n_edges} but M*mean_dc = {n_checks * dd.mean_check:g}"
        )
    check_counts = largest_remainder(check_law, n_checks)
    var_deg = _degree_sequence(var_counts)
    check_deg = _degree_sequence(check_counts)
    delta = n_edges - int(check_deg.sum())
    if delta:
        top = int(np.argmax(check_deg))
        if check_deg[top] + delta < 1:
            raise ParameterError(f"degree distribution not realizable at N={n} (stub mismatch {delta})")
        check_deg[top] += delta
    rng = rng_for(seed, "configuration-model")
    return configuration_model(var_deg, check_deg, rng)


# ---------------------------------------------------------------------------
# GF(2) linear algebra


def gf2_rref(H):
    """Reduced row-echelon form over GF(2); returns ``(R, pivot_cols)``."""
    R = (np.asarray(H, dtype=np.uint8) % 2).copy()
    n_rows, n_cols = R.shape
    pivots = []
    row = 0
    for col in range(n_cols):
        if row == n_rows:
            break
        hits = np.flatnonzero(R[row:, col])
        if hits.size == 0:
            continue
        p = row + hits[0]
        if p != row:
            R[[row, p]] = R[[p, row]]
        others = np.flatnonzero(R[:, col])
        others = others[others != row]
        R[others] ^= R[row]
        pivots.append(col)
        row += 1
    return R[:row], pivots


def gf2_rank_rate(H) -> tuple[int, Fraction]:
    """GF(2) rank of ``H`` and the true code rate ``(N - rank) / N``."""
    if isinstance(H, TannerGraph):
        H = H.to_matrix()
    H = np.asarray(H)
    _, pivots = gf2_rref(H)
    rank = len(pivots)
    return rank, Fraction(H.shape[1] - rank, H.shape[1])


def true_rate(g: TannerGraph) -> float:
    return float(gf2_rank_rate(g)[1])


def gf2_nullspace(H) -> np.ndarray:
    """Basis of the kernel of ``H`` over GF(2), one codeword per row."""
    H = np.asarray(H, dtype=np.uint8)
    n = H.shape[1]
    R, pivots = gf2_rref(H) if H.shape[0] else (np.zeros((0, n), np.uint8), [])
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for r, p in enumerate(pivots):
            basis[k, p] = R[r, f]
    return basis


def enumerate_codewords(g: TannerGraph, limit: int = ENUMERATION_LIMIT) -> np.ndarray:
    """All spin configurations satisfying every check, as a ``(2^K, N)`` int8 array.

    Row 0 is the all-(+1) configuration (the zero codeword).
    """
    if g.n_vars > limit:
        raise CapacityError(f"N = {g.n_vars} exceeds the enumeration limit {limit}")
    basis = gf2_nullspace(g.to_matrix()) if g.n_checks else np.eye(g.n_vars, dtype=np.uint8)
    k = basis.shape[0]
    idx = np.arange(2**k, dtype=np.int64)
    coeffs = ((idx[:, None] >> np.arange(k)) & 1).astype(np.uint8)
    words = (coeffs.astype(np.int64) @ basis.astype(np.int64)) % 2
    return (1 - 2 * words).astype(np.int8)


def all_spin_states(n: int, limit: int = ENUMERATION_LIMIT) -> np.ndarray:
    """Every configuration in {-1,+1}^n as a ``(2^n, n)`` int8 array."""
    if n > limit:
        raise CapacityError(f"N = {n} exceeds the enumeration limit {limit}")
    idx = np.arange(2**n, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


# ---------------------------------------------------------------------------
# Local neighborhoods


@dataclass(frozen=True)
class Neighborhood:
    root: int
    depth: int
    variables: tuple
    checks: tuple
    edges: tuple
    boundary: tuple
    is_tree: bool
    distance: dict = field(repr=False, compare=False, default_factory=dict)

    def subgraph(self) -> tuple[TannerGraph, dict]:
        """Relabelled Tanner graph of the neighborhood and its variable index map."""
        vmap = {v: k for k, v in enumerate(self.variables)}
        cmap = {c: k for k, c in enumerate(self.checks)}
        ev = np.array([vmap[v] for v, _ in self.edges], dtype=np.int64)
        ec = np.array([cmap[c] for _, c in self.edges], dtype=np.int64)
        return TannerGraph(len(self.variables), len(self.checks), ev, ec), vmap


def extract_neighborhood(g: TannerGraph, o: int, d: int) -> Neighborhood:
    """Induced subgraph of all nodes within ``d`` check layers of variable ``o``."""
    if not 0 <= o < g.n_vars:
        raise ParameterError(f"root {o} out of range")
    if d < 0:
        raise ParameterError("depth must be >= 0")
    # node keys: ("v", i) / ("c", a); bipartite distance in edges
    dist = {("v", o): 0}
    queue = deque([("v", o)])
    while queue:
        node = queue.popleft()
        k = dist[node]
        if k == 2 * d:
            continue
        kind, x = node
        nbrs = [("c", int(a)) for a in g.var_checks(x)] if kind == "v" else [("v", int(i)) for i in g.check_vars(x)]
        for nb in nbrs:
            if nb not in dist:
                dist[nb] = k + 1
                queue.append(nb)
    variables = tuple(sorted(x for kind, x in dist if kind == "v"))
    checks = tuple(sorted(x for kind, x in dist if kind == "c"))
    vset = set(variables)
    edges = tuple((int(i), a) for a in checks for i in g.check_vars(a) if int(i) in vset)
    boundary = tuple(sorted(x for (kind, x), k in dist.items() if kind == "v" and k == 2 * d))
    n_nodes = len(variables) + len(checks)
    # BFS reached every node, so connectivity holds and the edge count decides
    is_tree = len(edges) == n_nodes - 1
    return Neighborhood(o, d, variables, checks, edges, boundary, is_tree, dist)
