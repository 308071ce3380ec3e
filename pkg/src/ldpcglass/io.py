"""File formats: alist parity-check files, population snapshots, CSV/JSON outputs.

All writers go through :func:`atomic_write` (temp file in the target
directory, then ``os.replace``).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ldpcglass.channel import NoiseScale
from ldpcglass.de import Population
from ldpcglass.errors import MalformedCodeError
from ldpcglass.graph import DegreeDistribution, TannerGraph

POPULATION_MAGIC = b"LDPCPOP1"


def atomic_write(path, data: bytes) -> str:
    """Write ``data`` to ``path`` atomically and return its sha256 hex digest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(data).hexdigest()


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# alist


def alist_text(g: TannerGraph) -> str:
    """MacKay alist text (1-indexed, zero-padded neighbor lists)."""
    vdeg, cdeg = g.var_degrees, g.check_degrees
    max_v = int(vdeg.max()) if g.n_vars else 0
    max_c = int(cdeg.max()) if g.n_checks else 0
    lines = [f"{g.n_vars} {g.n_checks}", f"{max_v} {max_c}"]
    lines.append(" ".join(str(int(d)) for d in vdeg))
    lines.append(" ".join(str(int(d)) for d in cdeg))
    for i in range(g.n_vars):
        nb = [int(a) + 1 for a in g.var_checks(i)]
        lines.append(" ".join(str(x) for x in nb + [0] * (max_v - len(nb))))
    for a in range(g.n_checks):
        nb = [int(i) + 1 for i in g.check_vars(a)]
        lines.append(" ".join(str(x) for x in nb + [0] * (max_c - len(nb))))
    return "\n".join(lines) + "\n"


def parse_alist(text: str) -> TannerGraph:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
        # blank lines (a side with no nodes, or degree-0 nodes) were dropped above
        cursor = 2
        vdeg = [int(x) for x in rows[cursor]] if n else []
        cursor += n > 0
        cdeg = [int(x) for x in rows[cursor]] if m else []
        cursor += m > 0
        body = rows[cursor:]
        var_rows, check_rows = body[:n], body[n : n + m]
    except (IndexError, ValueError) as exc:
        raise MalformedCodeError(f"bad alist header: {exc}") from exc
    if len(vdeg) != n or len(cdeg) != m or len(var_rows) != n or len(check_rows) != m:
        raise MalformedCodeError("alist sizes do not match the header")
    ev, ec = [], []
    for a, row in enumerate(check_rows):
        nb = [int(x) - 1 for x in row if int(x) != 0]
        if len(nb) != cdeg[a]:
            raise MalformedCodeError(f"check {a + 1}: degree {cdeg[a]} but {len(nb)} neighbors")
        ev += nb
        ec += [a] * len(nb)
    g = TannerGraph(n, m, np.array(ev, dtype=np.int64), np.array(ec, dtype=np.int64))
    for i, row in enumerate(var_rows):
        nb = sorted(int(x) - 1 for x in row if int(x) != 0)
        if nb != sorted(int(a) for a in g.var_checks(i)) or len(nb) != vdeg[i]:
            raise MalformedCodeError(f"variable {i + 1}: neighbor list disagrees with the check lists")
    return g


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_alist(path, g: TannerGraph, meta: dict | None = None) -> dict:
    """Write the graph and its JSON sidecar; returns ``{filename: digest}``."""
    path = Path(path)
    out = {path.name: atomic_write(path, alist_text(g).encode())}
    if meta is not None:
        side = sidecar_path(path)
        out[side.name] = atomic_write(side, dumps_json(meta))
    return out


def read_alist(path) -> tuple[TannerGraph, dict | None]:
    path = Path(path)
    g = parse_alist(path.read_text())
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else None
    return g, meta


# ---------------------------------------------------------------------------
# Population snapshots: magic, u64 header length, JSON header, float64 LE samples


def population_bytes(pop: Population) -> bytes:
    header = json.dumps(
        {"P": pop.size, "d": pop.generation, "m": pop.scale.m, "dd": pop.dd.to_dict(), "seed": pop.seed},
        sort_keys=True,
    ).encode()
    return POPULATION_MAGIC + struct.pack("<Q", len(header)) + header + pop.samples.astype("<f8").tobytes()


def write_population(path, pop: Population) -> str:
    return atomic_write(path, population_bytes(pop))


def read_population(path) -> Population:
    raw = Path(path).read_bytes()
    if raw[:8] != POPULATION_MAGIC:
        raise ValueError("not a population snapshot")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16 : 16 + hlen])
    samples = np.frombuffer(raw[16 + hlen :], dtype="<f8").astype(np.float64)
    if samples.size != header["P"]:
        raise ValueError(f"snapshot holds {samples.size} samples, header says {header['P']}")
    dd_raw = header["dd"]
    dd = DegreeDistribution(
        {int(k): v for k, v in dd_raw["variable"].items()},
        {int(k): v for k, v in dd_raw["check"].items()},
        dd_raw["node_perspective"],
    )
    return Population(samples, int(header["d"]), dd, NoiseScale(header["m"]), int(header["seed"]))


# ---------------------------------------------------------------------------
# CSV / JSON


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return "" if x is None else str(x)


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue().encode()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return obj


def dumps_json(obj) -> bytes:
    return (json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")
