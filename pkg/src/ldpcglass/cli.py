"""Command-line entry point: ``ldpcglass [global flags] SUBCOMMAND [--set key=value ...]``."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import yaml

from ldpcglass import __version__
from ldpcglass.config import load_config
from ldpcglass.errors import CapacityError, ConfigError, ParameterError, PreconditionError, SearchError
from ldpcglass.runner import run

# subcommand -> config kinds it accepts (first one is the default)
KINDS = {
    "gen": ["gen"],
    "decode": ["decode"],
    "exact": ["exact"],
    "verify": ["verify-suite", "verify-nishimori", "verify-cgn", "verify-erasing"],
    "de": ["de-curve"],
    "gexit": ["gexit-exact"],
    "thresholds": ["thresholds"],
    "bounds": ["entropy-bounds"],
    "area": ["area-check"],
}


def _parse_sets(pairs) -> dict:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"expected KEY=VALUE, got {pair!r}", param_hint="--set")
        out[key.strip()] = yaml.safe_load(value)
    return out


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML experiment file.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Master seed (overrides the config).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory.")
@click.option("--threads", type=click.IntRange(min=1), help="Worker threads; changes speed only.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, config_path, seed, out_dir, threads, verbose):
    """Experiments on LDPC codes viewed as spin glasses."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    ctx.obj = {"config": config_path, "seed": seed, "out": out_dir, "threads": threads}


def _command(name):
    @main.command(name, help=f"Run a config of kind {' | '.join(KINDS[name])}.")
    @click.option("--set", "sets", multiple=True, metavar="KEY=VALUE", help="Override a config field (dotted path).")
    @click.pass_obj
    def cmd(obj, sets):
        overrides = _parse_sets(sets)
        for key in ("seed", "threads", "out"):
            if obj[key] is not None:
                overrides[key] = obj[key]
        try:
            raw_kind = None
            if obj["config"] is not None:
                raw_kind = (yaml.safe_load(Path(obj["config"]).read_text()) or {}).get("kind")
            overrides.setdefault("kind", raw_kind or KINDS[name][0])
            cfg = load_config(obj["config"], overrides)
            if cfg["kind"] not in KINDS[name]:
                raise ConfigError(f"kind {cfg['kind']!r} does not belong to '{name}'", "kind")
            if obj["config"] is not None:
                cfg["_base_dir"] = Path(obj["config"]).resolve().parent
            manifest = run(cfg, cfg.get("out", "results"))
        except (ConfigError, CapacityError, ParameterError, PreconditionError, SearchError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        click.echo(json.dumps(manifest.summary, sort_keys=True, default=str))
        if name == "verify" and not manifest.summary.get("passed", True):
            sys.exit(1)

    return cmd


for _name in KINDS:
    _command(_name)


if __name__ == "__main__":
    main()
