"""Monte-Carlo averaging over quenched disorder (fields, couplings, graphs)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ldpcglass.channel import draw_fields
from ldpcglass.errors import ParameterError
from ldpcglass.seeding import CHUNK, chunk_sizes, parallel_map, rng_for


@dataclass(frozen=True)
class DisorderAverage:
    estimate: float
    std_error: float
    trials: int
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def z_score(self, reference: float = 0.0) -> float:
        if self.std_error == 0:
            return math.inf if self.estimate > reference else (0.0 if self.estimate == reference else -math.inf)
        return (self.estimate - reference) / self.std_error


def mean_and_se(samples) -> tuple[float, float]:
    """Mean and sample-std / sqrt(n) standard error (pairwise summation)."""
    x = np.asarray(samples, dtype=np.float64)
    n = x.shape[0]
    mean = float(np.mean(x))
    if n < 2:
        return mean, math.nan
    return mean, float(np.std(x, ddof=1) / math.sqrt(n))


def average(samples, seed=None) -> DisorderAverage:
    est, se = mean_and_se(samples)
    return DisorderAverage(est, se, int(np.asarray(samples).shape[0]), seed)


def disorder_samples(draw, trials: int, seed: int, label: str = "disorder", threads: int = 1, chunk: int = CHUNK):
    """Per-trial values from ``draw(rng, count)``, concatenated in trial order.

    Chunk ``k`` of the trial range gets its own generator seeded from
    ``(seed, label, k)``, so the result does not depend on ``threads``.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    sizes = chunk_sizes(trials, chunk)

    def run(k):
        return np.asarray(draw(rng_for(seed, label, k), sizes[k]), dtype=np.float64)

    return np.concatenate(parallel_map(run, range(len(sizes)), threads), axis=0)


def disorder_average(estimator, graph, scale, trials: int, seed: int, couplings=None, threads: int = 1, label="disorder"):
    """Average a per-realization estimator over the quenched disorder.

    ``graph`` is a fixed :class:`TannerGraph` or a callable ``seed -> TannerGraph``
    describing an ensemble. ``estimator(graph, fields, J)`` receives a batch of
    field rows ``(T, N)`` and coupling rows ``(T, M)`` (``None`` without soft
    couplings) and returns ``T`` values.
    """
    if trials < 2:
        raise ParameterError("trials must be >= 2")

    def draw(rng, count):
        if callable(graph):
            out = []
            for _ in range(count):
                g = graph(int(rng.integers(2**63)))
                h = draw_fields(rng, scale.m, (1, g.n_vars))
                J = couplings.sample(rng, 1) if couplings is not None else None
                out.append(np.asarray(estimator(g, h, J)).reshape(-1)[0])
            return np.array(out)
        h = draw_fields(rng, scale.m, (count, graph.n_vars))
        J = couplings.sample(rng, count) if couplings is not None else None
        return estimator(graph, h, J)

    values = disorder_samples(draw, trials, seed, label=label, threads=threads)
    return average(values, seed)
