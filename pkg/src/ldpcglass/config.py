"""Experiment configuration: YAML files checked against ``schema.json``."""

from __future__ import annotations

import copy
import hashlib
import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from ldpcglass.channel import NoiseScale
from ldpcglass.errors import ConfigError
from ldpcglass.graph import DegreeDistribution, TannerGraph, checkless_graph, from_matrix, sample_irregular, sample_regular
from ldpcglass.seeding import derive_seed

DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "trials": 10_000,
    "max_iters": 50,
    "depth": 200,
    "max_depth": 3200,
    "population": 100_000,
    "d_max": 2000,
    "tol": 0.01,
    "root": 0,
    "radius": 1,
    "fixture": {"corrupt_check_update": False},
}


def schema() -> dict:
    return json.loads(resources.files("ldpcglass").joinpath("schema.json").read_text())


def _path_str(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def validate(raw: dict) -> dict:
    """Validate against the schema and fill defaults; raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _path_str(err.absolute_path))
    cfg = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key] = {**cfg[key], **value}
        else:
            cfg[key] = value
    return cfg


def set_dotted(raw: dict, key: str, value) -> None:
    parts = key.split(".")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def load_config(path=None, overrides: dict | None = None) -> dict:
    raw = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse YAML: {exc}") from exc
    for key, value in (overrides or {}).items():
        set_dotted(raw, key, value)
    return validate(raw)


def digest(cfg: dict) -> str:
    payload = {k: v for k, v in cfg.items() if k not in ("out", "threads")}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def noise_grid(cfg: dict, key: str = "noise") -> list[NoiseScale]:
    """Noise points of the config, sorted by increasing m."""
    spec = cfg.get(key)
    if spec is None:
        raise ConfigError("a noise grid is required for this experiment", key)
    if "values" in spec:
        values = np.asarray(spec["values"], dtype=np.float64)
    else:
        if spec.get("spacing", "linear") == "log":
            values = np.geomspace(spec["start"], spec["stop"], spec["num"])
        else:
            values = np.linspace(spec["start"], spec["stop"], spec["num"])
    make = {"m": NoiseScale, "sigma": NoiseScale.from_sigma, "sigma2": NoiseScale.from_sigma2}[spec["axis"]]
    scales = sorted({make(float(v)) for v in values})
    return scales


def degree_distribution(code: dict) -> DegreeDistribution:
    if code["ensemble"] == "regular":
        return DegreeDistribution({code["dv"]: 1.0}, {code["dc"]: 1.0})
    if code["ensemble"] == "irregular":
        return DegreeDistribution(
            {int(k): v for k, v in code["variable"].items()}, {int(k): v for k, v in code["check"].items()}
        )
    if code["ensemble"] == "checkless":
        return DegreeDistribution({0: 1.0}, {1: 1.0})
    raise ConfigError("density evolution needs a regular, irregular or checkless ensemble", "code.ensemble")


def graph_seed(cfg: dict, code: dict, index: int = 0) -> int:
    return int(code["seed"]) if "seed" in code else derive_seed(cfg["seed"], "graph", index)


def build_graph(cfg: dict, code: dict, index: int = 0, base_dir: Path | None = None) -> TannerGraph:
    """One concrete graph for a code spec."""
    from ldpcglass.io import read_alist

    kind = code["ensemble"]
    seed = graph_seed(cfg, code, index)
    if kind in ("regular", "irregular") and "n" not in code:
        raise ConfigError("n is required to sample a graph", "code.n")
    if kind == "regular":
        return sample_regular(code["n"], code["dv"], code["dc"], seed)
    if kind == "irregular":
        return sample_irregular(code["n"], degree_distribution(code), seed, code.get("n_checks"))
    if kind == "checkless":
        return checkless_graph(code["n"])
    if kind == "matrix":
        return from_matrix(np.array(code["matrix"]))
    path = Path(code["path"])
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return read_alist(path)[0]
