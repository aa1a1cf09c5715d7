"""Command-line experiment driver.

``qlt <subcommand> --config path [--seed N] [--out dir]``

Every CSV starts with ``#`` comment lines that carry the artifact version,
the subcommand, the seed, the SHA-256 of the canonical config and the
canonical config JSON itself.  Passing a previous output file as
``--config`` re-runs exactly that experiment.

Exit codes: 0 ok, 1 IO error, 2 config error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np
import tomli
from pydantic import ValidationError

from qlt import __version__, experiments as ex

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3
CONFIG_PREFIX = "# config: "


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ config


def _read_raw(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".toml":
        try:
            return tomli.loads(text)
        except tomli.TOMLDecodeError as err:
            raise ConfigError(f"{path}: {err}") from None
    if path.suffix == ".csv" or text.startswith("#"):
        for line in text.splitlines():
            if line.startswith(CONFIG_PREFIX):
                return json.loads(line[len(CONFIG_PREFIX) :])
        raise ConfigError(f"{path}: no embedded config line")
    try:
        return json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: {err}") from None


def load_config(subcommand: str, path: str | None, seed: int | None):
    raw = {} if path is None else _read_raw(Path(path))
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    if seed is not None:
        raw["seed"] = seed
    try:
        return ex.CONFIGS[subcommand].model_validate(raw)
    except ValidationError as err:
        lines = []
        for e in err.errors():
            loc = ".".join(str(p) for p in e["loc"]) or "<root>"
            lines.append(f"{loc}: {e['msg']}")
        raise ConfigError("invalid config\n  " + "\n  ".join(lines)) from None


def canonical_json(cfg) -> str:
    return json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def config_hash(cfg) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


# ------------------------------------------------------------------ output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def render_table(table: ex.Table, subcommand: str, cfg) -> str:
    buf = io.StringIO()
    buf.write(f"# qlt {__version__}\n")
    buf.write(f"# subcommand: {subcommand}\n")
    buf.write(f"# seed: {cfg.seed}\n")
    buf.write(f"# config_sha256: {config_hash(cfg)}\n")
    buf.write(f"{CONFIG_PREFIX}{canonical_json(cfg)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_outputs(out: Path, subcommand: str, cfg, tables, extra: dict | None = None) -> list:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for t in tables:
        p = out / f"{t.name}.csv"
        p.write_text(render_table(t, subcommand, cfg))
        written.append(p)
    for name, payload in (extra or {}).items():
        p = out / name
        p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        written.append(p)
    return written


# ------------------------------------------------------------------ threads


def apply_thread_cap() -> None:
    value = os.environ.get("QLT_THREADS")
    if not value:
        return
    try:
        n = int(value)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"QLT_THREADS must be a positive integer, got {value!r}") from None
    from threadpoolctl import threadpool_limits

    threadpool_limits(n)
    try:
        import numba

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # threading-layer probing is noisy and irrelevant here
            numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover
        pass


# ------------------------------------------------------------------ driver


def run(subcommand: str, cfg) -> tuple[list, dict, bool]:
    """Dispatch one subcommand; returns ``(tables, extra json files, verified)``."""
    if subcommand == "env-check":
        t = ex.run_env_check(cfg)
        return [t], {}, t.passed
    if subcommand == "tomo-bench":
        return [ex.run_tomo_bench(cfg)], {}, True
    if subcommand == "optgate-bench":
        return [ex.run_optgate_bench(cfg)], {}, True
    if subcommand == "gateset-overhead":
        return [ex.run_gateset_overhead(cfg)], {}, True
    if subcommand == "cover-search":
        cover, t = ex.run_cover_search(cfg)
        payload = cover.to_json()
        payload["config_sha256"] = config_hash(cfg)
        payload["qlt_version"] = __version__
        return [t], {"cover.json": payload}, t.passed
    if subcommand == "vqe":
        return ex.run_vqe(cfg), {}, True
    raise ConfigError(f"unknown subcommand {subcommand!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qlt", description="Landscape tomography experiments.")
    p.add_argument("--version", action="version", version=f"qlt {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in ex.CONFIGS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON or TOML config, or a previous output CSV")
        sp.add_argument("--seed", type=int, help="overrides the seed in the config")
        sp.add_argument("--out", default=f"results/{name}", help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        apply_thread_cap()
        cfg = load_config(args.subcommand, args.config, args.seed)
    except ConfigError as err:
        print(f"qlt: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"qlt: cannot read config: {err}", file=sys.stderr)
        return EXIT_IO
    try:
        tables, extra, verified = run(args.subcommand, cfg)
    except (ValueError, ConfigError) as err:
        print(f"qlt: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        paths = write_outputs(Path(args.out), args.subcommand, cfg, tables, extra)
    except OSError as err:
        print(f"qlt: cannot write output: {err}", file=sys.stderr)
        return EXIT_IO
    for path in paths:
        print(path)
    if not verified:
        print("qlt: verification failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
