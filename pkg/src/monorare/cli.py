"""Command line entry point: ``monorare run|compare|bootstrap|volume``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure. On
failure a JSON error object is printed to stderr and, when an output
directory is known, written to ``error.json``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError, MonorareError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monorare",
        description="Bounds and estimates of failure probabilities for monotone models.",
    )
    parser.add_argument("command", choices=["run", "compare", "bootstrap", "volume"])
    parser.add_argument("--config", required=True, help="JSON config (a vertex list for 'volume')")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for replications")
    parser.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    return parser


def _fail(code: int, exc: BaseException, out: str | None) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    text = json.dumps(payload, indent=2) + "\n"
    sys.stderr.write(text)
    if out:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(text)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out
    if args.jobs < 1:
        return _fail(EXIT_CONFIG, ConfigError("--jobs must be >= 1"), out)
    try:
        if args.command == "volume":
            result = harness.cmd_volume(args.config, out_dir=out)
            print(f"exact  {result['exact']!r}")
            print(f"mc     {result['mc']!r} +- {result['mc_std_error']!r} (Q={result['Q']})")
            print(f"diff   {result['discrepancy']!r}")
            return EXIT_OK
        config = harness.load_config(args.config)
        out = out or config.output.dir
        command = {"run": harness.cmd_run, "compare": harness.cmd_compare, "bootstrap": harness.cmd_bootstrap}
        result = command[args.command](config, Path(out), args.jobs)
        print(harness.dumps(result), end="")
        return EXIT_OK
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc, out)
    except (MonorareError, ValueError, ArithmeticError, OSError) as exc:
        return _fail(EXIT_RUNTIME, exc, out)


if __name__ == "__main__":
    sys.exit(main())
