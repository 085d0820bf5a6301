"""Command-line driver: ``hjentropy <subcommand> [--config PATH] [--out DIR] ...``.

Exit status is 0 when every check passes, 1 when a numerical check fails and 2 for
configuration or usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from ..errors import ConfigurationError, HJEntropyError
from .config import ENV_PREFIX, ExperimentConfig, load_config
from .experiments import RUNNERS, Runner
from .report import ReportRow, read_csv, render_csv, render_json

__all__ = ["main", "build_parser", "run", "ExperimentConfig", "ReportRow", "load_config",
           "read_csv"]

_HELP = {
    "solve": "evolve preset initial data and check the solution's regularity",
    "legendre": "conjugate the Hamiltonian and check the inversion identities",
    "verify": "regularity, Poincare and monotonicity checks on random semiconcave data",
    "cover-upper": "build quantized covers and check every member lands in its element",
    "pack-lower": "exact packing counts of bump families against Hoeffding",
    "reach": "reconstruct initial data for admissible targets and check the residual",
    "scaling": "fit log2 packing counts against 1/eps^N",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjentropy",
        description="Hopf-Lax solver and entropy experiments.",
        epilog=f"Environment overrides: {ENV_PREFIX}<SECTION>_<KEY>, e.g. {ENV_PREFIX}CLASS_SUPPORT=2.",
    )
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.required = True
    for name, help_text in _HELP.items():
        cmd = sub.add_parser(name, help=help_text, description=help_text)
        cmd.add_argument("--config", metavar="PATH", help="INI configuration file")
        cmd.add_argument("--out", metavar="DIR", default=".", help="output directory")
        cmd.add_argument("--seed", type=int, metavar="U64", help="override [run] seed")
        cmd.add_argument("--threads", type=int, metavar="K", help="worker threads")
        cmd.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return parser


def run(command: str, config: ExperimentConfig, out_dir: Path, threads: int | None = None):
    """Execute one subcommand and write ``<command>.csv`` and ``<command>.json``.

    Returns ``(rows, paths)``.
    """
    runner = Runner(config, threads)
    start = time.perf_counter()
    rows = RUNNERS[command](runner)
    total = time.perf_counter() - start
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = command.replace("-", "_")
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    csv_path.write_text(render_csv(rows, command), encoding="utf-8")
    json_path.write_text(render_json(rows, command, config.summary(), total), encoding="utf-8")
    paths = [csv_path, json_path]
    for name, text in sorted(runner.artifacts.items()):
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return rows, paths


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    log = logging.getLogger("hjentropy")
    try:
        config = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigurationError("--seed must be an unsigned 64-bit integer")
            config.seed = args.seed
        if args.threads is not None and args.threads < 1:
            raise ConfigurationError("--threads must be at least 1")
        config.hamiltonian()
    except ConfigurationError as exc:
        print(f"hjentropy: configuration error: {exc}", file=sys.stderr)
        return 2
    log.info("running %s with config %s", args.command, config.source)
    try:
        rows, paths = run(args.command, config, Path(args.out), args.threads)
    except ConfigurationError as exc:
        print(f"hjentropy: configuration error: {exc}", file=sys.stderr)
        return 2
    except HJEntropyError as exc:
        print(f"hjentropy: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    failures = [r for r in rows if not r.passed]
    for path in paths:
        log.info("wrote %s", path)
    print(f"{args.command}: {len(rows) - len(failures)}/{len(rows)} checks passed")
    for row in failures:
        print("FAILED " + ",".join(row.csv_fields()), file=sys.stderr)
    return 1 if failures else 0
