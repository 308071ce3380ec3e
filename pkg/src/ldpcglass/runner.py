"""Experiment runner: one validated config in, CSV/JSON tables and a manifest out."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ldpcglass import __version__, kernels
from ldpcglass.bp import ber_simulation
from ldpcglass.channel import NoiseScale, shannon_threshold
from ldpcglass.config import build_graph, degree_distribution, digest, graph_seed, noise_grid
from ldpcglass.de import area_integral, bp_threshold, entropy_bounds, g_bp_curve, map_threshold_lower_bound
from ldpcglass.errors import CapacityError, ConfigError
from ldpcglass.gibbs import (
    CouplingSpec,
    fano_gap,
    gexit_curve_exact,
    gexit_point_exact,
    verify_cgn,
    verify_check_erasing,
    verify_nishimori,
)
from ldpcglass.graph import TannerGraph, gf2_rank_rate
from ldpcglass.io import atomic_write, csv_bytes, dumps_json, file_digest, write_alist
from ldpcglass.seeding import derive_seed
from ldpcglass.stats import DisorderAverage

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
MANIFEST = "manifest.json"

# the desk-scale battery used when a verify-suite config names no instances
DEFAULT_BATTERY = [
    {"ensemble": "regular", "n": 12, "dv": 3, "dc": 6},
    {"ensemble": "regular", "n": 8, "dv": 2, "dc": 4},
    # ten-bit cycle code: the radius-1 neighborhood of any bit is a tree
    {"ensemble": "matrix", "matrix": [[1 if j in (a, (a + 1) % 10) else 0 for j in range(10)] for a in range(10)]},
    # star tree: bit 0 in three weight-3 checks, so radius 1 covers the whole graph
    {"ensemble": "matrix", "matrix": [[1, 1, 1, 0, 0, 0, 0], [1, 0, 0, 1, 1, 0, 0], [1, 0, 0, 0, 0, 1, 1]]},
]
DEFAULT_SUITE_M = [0.5, 1.0, 2.0]


@dataclass
class RunManifest:
    kind: str
    config_digest: str
    code_version: str
    backend: str
    wall_time: float
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config_digest": self.config_digest,
            "code_version": self.code_version,
            "backend": self.backend,
            "wall_time_s": self.wall_time,
            "files": dict(sorted(self.files.items())),
            "summary": self.summary,
        }


class _Outputs:
    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, str] = {}

    def write(self, name: str, data: bytes):
        self.files[name] = atomic_write(self.out / name, data)

    def json(self, name: str, obj):
        self.write(name, dumps_json(obj))

    def csv(self, name: str, header, rows):
        self.write(name, csv_bytes(header, rows))


def _graph(cfg, code=None, index=0):
    code = code if code is not None else cfg.get("code")
    if code is None:
        raise ConfigError("a code section is required for this experiment", "code")
    return build_graph(cfg, code, index, cfg.get("_base_dir"))


def _rate(cfg, dd) -> float:
    return float(cfg["rate"]) if "rate" in cfg else dd.design_rate


def _is_instance(code) -> bool:
    return code["ensemble"] in ("matrix", "alist", "checkless") or "n" in code


def _seed(cfg, label):
    return derive_seed(cfg["seed"], label)


# ---------------------------------------------------------------------------
# Pipelines


def _gen(cfg, out: _Outputs):
    code = cfg.get("code")
    g = _graph(cfg)
    rank, rate = gf2_rank_rate(g)
    meta = {
        "seed": graph_seed(cfg, code) if code["ensemble"] in ("regular", "irregular") else None,
        "ensemble": code["ensemble"],
        "dv": code.get("dv"),
        "dc": code.get("dc"),
        "n": g.n_vars,
        "m": g.n_checks,
        "rank": rank,
        "true_rate": float(rate),
        "true_rate_fraction": str(rate),
        "digest": g.digest(),
    }
    for name, dig in write_alist(out.out / "code.alist", g, meta).items():
        out.files[name] = dig
    return {"n": g.n_vars, "m": g.n_checks, "true_rate": float(rate)}


def _decode(cfg, out: _Outputs):
    code = cfg.get("code") or {}
    if code.get("ensemble") in ("regular", "irregular") and "seed" not in code:
        if "n" not in code:
            raise ConfigError("n is required for a BER sweep", "code.n")
        ensemble = (code["dv"], code["dc"]) if code["ensemble"] == "regular" else degree_distribution(code)
        n = code["n"]
    else:
        ensemble = _graph(cfg)
        n = ensemble.n_vars
    rows = []
    for s in noise_grid(cfg):
        seed = derive_seed(cfg["seed"], "decode", repr(s.m))
        res = ber_simulation(n, ensemble, s, cfg["trials"], cfg["max_iters"], seed, cfg["threads"])
        rows.append([s.m, s.sigma, cfg["trials"], res.iters_mean, res.ber.estimate, res.ber.std_error, seed])
    out.csv("ber.csv", ["m", "sigma", "trials", "iters_mean", "ber", "ber_se", "seed"], rows)
    return {"points": len(rows)}


def _exact_points(cfg):
    g = _graph(cfg)
    pts = []
    for s in noise_grid(cfg):
        seed = derive_seed(cfg["seed"], "exact", repr(s.m))
        pts.append((seed, gexit_point_exact(g, s, cfg["trials"], seed, threads=cfg["threads"])))
    return g, pts


def _exact(cfg, out: _Outputs):
    g, pts = _exact_points(cfg)
    rows = [
        [
            p.scale.m,
            p.scale.sigma,
            cfg["trials"],
            p.bit_error.estimate,
            p.bit_error.std_error,
            p.entropy_per_bit.estimate,
            p.entropy_per_bit.std_error,
            seed,
        ]
        for seed, p in pts
    ]
    header = ["m", "sigma", "trials", "map_ber", "map_ber_se", "entropy", "entropy_se", "seed"]
    out.csv("exact.csv", header, rows)
    return {"points": len(rows), "instance_digest": g.digest()}


def _gexit_exact(cfg, out: _Outputs):
    g, pts = _exact_points(cfg)
    rows = [
        [
            p.scale.m,
            p.scale.sigma,
            p.g_closed.estimate,
            p.g_closed.std_error,
            p.g_fd.estimate,
            p.g_fd.std_error,
            p.agree,
            cfg["trials"],
            seed,
        ]
        for seed, p in pts
    ]
    header = ["m", "sigma", "g_closed", "g_closed_se", "g_fd", "g_fd_se", "agree", "trials", "seed"]
    out.csv("gexit_exact.csv", header, rows)
    return {"points": len(rows), "all_agree": all(p.agree for _, p in pts)}


def _cgn_spec(cfg, g: TannerGraph) -> CouplingSpec:
    t = cfg.get("cgn", {}).get("t", 1.0)
    if isinstance(t, list):
        if len(t) != g.n_checks:
            raise ConfigError(f"{len(t)} couplings given for {g.n_checks} checks", "cgn.t")
        return CouplingSpec.soft(t)
    return CouplingSpec.soft([t] * g.n_checks)


def _reports(reports) -> dict:
    dicts = [r.to_dict() for r in reports]
    return {"reports": dicts, "passed": all(r.passed for r in reports)}


def _verify_single(cfg, out: _Outputs):
    kind = cfg["kind"]
    g = _graph(cfg)
    reports = []
    for s in noise_grid(cfg):
        seed = derive_seed(cfg["seed"], kind, repr(s.m))
        if kind == "verify-nishimori":
            reports.append(verify_nishimori(g, s, cfg["trials"], seed, cfg["root"], cfg["threads"]))
        elif kind == "verify-cgn":
            c = cfg.get("cgn", {})
            reports.append(
                verify_cgn(
                    g,
                    s,
                    _cgn_spec(cfg, g),
                    c.get("X", [cfg["root"]]),
                    c.get("Y", 0),
                    cfg["trials"],
                    seed,
                    c.get("delta", 0.1),
                    cfg["threads"],
                )
            )
        else:
            reports.append(
                verify_check_erasing(
                    g,
                    cfg["root"],
                    cfg["radius"],
                    s,
                    cfg["trials"],
                    seed,
                    cfg["threads"],
                    corrupt=cfg["fixture"]["corrupt_check_update"],
                )
            )
    name = {"verify-nishimori": "nishimori", "verify-cgn": "cgn", "verify-erasing": "check_erasing"}[kind]
    body = _reports(reports)
    out.json(f"{name}.json", body)
    return {"passed": body["passed"]}


def verify_suite(cfg, out: _Outputs | None = None) -> dict:
    """Run the whole inequality battery over the configured instances.

    ``passed`` is False iff a one-sided test (CGN, check-erasing, Fano) falls
    below -3 SE. The two-sided identities (Nishimori, GEXIT calibration) are
    reported alongside and summarized in ``identities_passed``.
    """
    instances = cfg.get("instances", DEFAULT_BATTERY)
    grid = noise_grid(cfg) if "noise" in cfg else [NoiseScale(m) for m in DEFAULT_SUITE_M]
    corrupt = cfg["fixture"]["corrupt_check_update"]
    trials, threads = cfg["trials"], cfg["threads"]
    if not instances:
        log.warning("verify-suite: empty instance set, nothing to check")
    rows, one_sided, two_sided = [], [], []
    for idx, code in enumerate(instances):
        g = _graph(cfg, code, idx)
        spec = CouplingSpec.soft([cfg.get("cgn", {}).get("t", 1.0)] * g.n_checks)
        for s in grid:
            seed = derive_seed(cfg["seed"], "suite", idx, repr(s.m))
            batch = [
                verify_cgn(g, s, spec, [0], 0, trials, derive_seed(seed, "cgn"), threads=threads),
                verify_check_erasing(
                    g, 0, cfg["radius"], s, trials, derive_seed(seed, "erasing"), threads, corrupt=corrupt
                ),
                fano_gap(g, s, trials, derive_seed(seed, "fano"), threads),
            ]
            ident = [verify_nishimori(g, s, trials, derive_seed(seed, "nishimori"), 0, threads)]
            gx = gexit_point_exact(g, s, trials, derive_seed(seed, "gexit"), threads=threads)
            diff = DisorderAverage(gx.g_closed.estimate - gx.g_fd.estimate, gx.combined_se, trials, seed)
            one_sided += [r.passed for r in batch]
            two_sided += [ident[0].passed, gx.agree]
            for r in batch + ident:
                d = r.to_dict()
                d["instance"] = idx
                rows.append(d)
            rows.append(
                {
                    "name": "gexit-calibration",
                    "instance": idx,
                    "estimate": diff.estimate,
                    "std_error": diff.std_error,
                    "trials": trials,
                    "seed": seed,
                    "instance_digest": g.digest(seed, s.m),
                    "passed": bool(gx.agree),
                    "test": "two-sided |margin| <= 3 SE",
                    "params": {"m": s.m},
                }
            )
    summary = {
        "instances": len(instances),
        "checks": len(rows),
        "passed": all(one_sided),
        "identities_passed": all(two_sided),
        "vacuous": not instances,
        "failures": [
            {"name": r["name"], "instance": r["instance"], "m": r["params"]["m"]} for r in rows if not r["passed"]
        ],
    }
    if out is not None:
        out.json("verify_suite.json", {"summary": summary, "reports": rows})
    return summary


def _de_curve(cfg):
    dd = degree_distribution(cfg.get("code") or {"ensemble": None})
    grid = [s.m for s in noise_grid(cfg)]
    curve, points = g_bp_curve(
        grid,
        dd,
        cfg["depth"],
        cfg["population"],
        _seed(cfg, "de-curve"),
        max_depth=cfg["max_depth"],
        threads=cfg["threads"],
    )
    return dd, curve, points


def _write_curve(out: _Outputs, curve, points, name="gexit_bp"):
    seeds = [derive_seed(curve.seed, "g-bp", repr(float(m))) for m in curve.grid]
    rows = [
        [p.scale.m, p.scale.sigma, p.value, p.std_error, p.depth, curve.population, sd] for p, sd in zip(points, seeds)
    ]
    out.csv(f"{name}.csv", ["m", "sigma", "g", "g_se", "d", "P", "seed"], rows)
    ax = curve.paper_axes()
    rows = [
        [m, ax["paper_n_a"][k], ax["g_n_a"][k], ax["paper_n_b"][k], ax["g_n_b"][k]]
        for k, m in enumerate(curve.grid)
    ]
    out.csv(f"{name}_paper_axes.csv", ["m", "paper_n_a", "g_n_a", "paper_n_b", "g_n_b"], rows)


def _de(cfg, out: _Outputs):
    _, curve, points = _de_curve(cfg)
    _write_curve(out, curve, points)
    return {"points": len(points), "all_stationary": all(p.stationary for p in points)}


def _thresholds(cfg, out: _Outputs):
    dd, curve, points = _de_curve(cfg)
    _write_curve(out, curve, points)
    rate = _rate(cfg, dd)
    lo = hi = None
    if "bracket_sigma" in cfg:
        lo, hi = (NoiseScale.from_sigma(x) for x in sorted(cfg["bracket_sigma"]))
    bp = bp_threshold(
        dd, cfg["tol"], cfg["population"], _seed(cfg, "bp-threshold"), lo, hi, cfg["d_max"], threads=cfg["threads"]
    )
    mb = map_threshold_lower_bound(curve, rate)
    sh = shannon_threshold(rate)
    ordering = {
        "bp_below_map": mb is not None and bp.sigma[1] < mb.sigma[0],
        "map_below_shannon": mb is not None and mb.sigma[1] < sh.sigma,
    }
    ordering["ordered"] = ordering["bp_below_map"] and ordering["map_below_shannon"]
    body = {
        "rate": rate,
        "bp": bp.to_dict(),
        "map_lower_bound": mb.to_dict() if mb is not None else None,
        "shannon": sh.views(),
        "ordering": ordering,
        "population": cfg["population"],
        "d_max": cfg["d_max"],
    }
    out.json("thresholds.json", body)
    return ordering


def _bounds(cfg, out: _Outputs):
    dd, curve, points = _de_curve(cfg)
    _write_curve(out, curve, points)
    eb = entropy_bounds(curve, _rate(cfg, dd))
    rows = [[m, NoiseScale(m).sigma, u, lo, u - lo] for m, u, lo in zip(eb.grid, eb.upper, eb.lower)]
    out.csv("bounds.csv", ["m", "sigma", "upper", "lower", "gap"], rows)
    # the gap is -defect at every point; allow 3 SE plus the trapezoid error
    allowance = 3 * eb.defect_se + eb.quad_error
    body = {
        "rate": eb.rate,
        "defect_nats": eb.defect,
        "defect_se": eb.defect_se,
        "quad_error_nats": eb.quad_error,
        "min_gap_nats": float(eb.gap.min()),
        "upper_ge_lower": bool(np.all(eb.gap >= -allowance)),
        "tail_model": curve.tail_model,
    }
    out.json("bounds.json", body)
    return body


def _area(cfg, out: _Outputs):
    code = cfg.get("code")
    if code is None:
        raise ConfigError("a code section is required for this experiment", "code")
    grid = [s.m for s in noise_grid(cfg)]
    if _is_instance(code):
        g = _graph(cfg)
        _, rate = gf2_rank_rate(g)
        rate = float(rate)
        curve, points = gexit_curve_exact(g, grid, cfg["trials"], _seed(cfg, "area"), cfg["threads"])
        rows = [[p.scale.m, p.scale.sigma, p.g_fd.estimate, p.g_fd.std_error, p.g_closed.estimate] for p in points]
        out.csv("gexit_exact_curve.csv", ["m", "sigma", "g_fd", "g_fd_se", "g_closed"], rows)
        source = "exact finite-difference GEXIT"
    else:
        dd, curve, points = _de_curve(cfg)
        rate = _rate(cfg, dd)
        _write_curve(out, curve, points)
        source = "density-evolution BP GEXIT"
    res = area_integral(curve)
    target = rate * LN2
    body = {
        "source": source,
        "rate": rate,
        "target_nats": target,
        "area": res.to_dict(),
        "relative_error": (res.nats - target) / target if target else None,
        "tail_model": curve.tail_model,
    }
    out.json("area.json", body)
    return {"relative_error": body["relative_error"]}


PIPELINES = {
    "gen": _gen,
    "decode": _decode,
    "exact": _exact,
    "gexit-exact": _gexit_exact,
    "verify-nishimori": _verify_single,
    "verify-cgn": _verify_single,
    "verify-erasing": _verify_single,
    "verify-suite": verify_suite,
    "de-curve": _de,
    "thresholds": _thresholds,
    "entropy-bounds": _bounds,
    "area-check": _area,
}


def run(cfg: dict, out_dir=None) -> RunManifest:
    """Execute the pipeline of ``cfg['kind']`` and write outputs plus ``manifest.json``.

    Every file in the output directory, including leftovers from earlier runs,
    is listed in the manifest with its sha256 digest.
    """
    out_dir = Path(out_dir if out_dir is not None else cfg.get("out", "results"))
    out_dir.mkdir(parents=True, exist_ok=True)
    out = _Outputs(out_dir)
    t0 = time.perf_counter()
    out.json("config.json", {k: v for k, v in cfg.items() if not k.startswith("_") and k not in ("out", "threads")})
    try:
        summary = PIPELINES[cfg["kind"]](cfg, out)
    except CapacityError as exc:
        code = cfg.get("code", {})
        where = f"code.ensemble={code.get('ensemble')}, n={code.get('n')}" if code else "instances"
        raise CapacityError(f"{cfg['kind']} ({where}): {exc}") from exc
    wall = time.perf_counter() - t0
    files = dict(out.files)
    for p in sorted(out_dir.rglob("*")):
        rel = p.relative_to(out_dir).as_posix()
        if p.is_file() and rel != MANIFEST and rel not in files and not p.name.endswith(".tmp"):
            files[rel] = file_digest(p)
    manifest = RunManifest(
        kind=cfg["kind"],
        config_digest=digest({k: v for k, v in cfg.items() if not k.startswith("_")}),
        code_version=__version__,
        backend=kernels.BACKEND,
        wall_time=wall,
        files=files,
        summary=summary,
    )
    atomic_write(out_dir / MANIFEST, dumps_json(manifest.to_dict()))
    return manifest
