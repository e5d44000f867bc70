"""Command-line entry point.

Usage
-----
```bash
gridscc run --config run.json [--out results/] [--seed 42] [--threads 4]
gridscc validate --config run.json
gridscc pulse --year 2010 --size 1.0 --span 100
```

`run` executes the configured ensemble and writes table1.csv, table2.csv,
scuhi.csv, percentiles.csv and manifest.json into the output directory.
`validate` resolves the configuration (applying defaults) and echoes it.
`pulse` prints the temperature response of a CO2 pulse for inspection.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, DataError
from .pulse import PulseParams, pulse_delta_t
from .runner import load_config, run

log = logging.getLogger("gridscc")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridscc",
        description=(
            "Gridded climate-economy kernel: social cost of carbon, urban "
            "decomposition, and heat-island reduction benefits."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a configured run and emit reports")
    run_p.add_argument("--config", required=True, help="JSON run configuration")
    run_p.add_argument("--out", help="output directory (overrides the config)")
    run_p.add_argument("--seed", type=int, help="ensemble seed (overrides the config)")
    run_p.add_argument("--threads", type=int, default=1,
                       help="parallel ensemble workers (default 1)")

    val_p = sub.add_parser("validate", help="resolve and echo a configuration")
    val_p.add_argument("--config", required=True, help="JSON run configuration")

    pulse_p = sub.add_parser("pulse", help="print the pulse temperature response")
    pulse_p.add_argument("--year", type=int, default=2010, help="pulse year")
    pulse_p.add_argument("--size", type=float, default=1.0, help="pulse size in GtC")
    pulse_p.add_argument("--span", type=int, default=100,
                         help="years past the pulse to print")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.out:
        from pathlib import Path

        config.output_dir = Path(args.out)
    if args.seed is not None:
        config.seed = args.seed
    result = run(config, threads=max(1, args.threads))
    print(f"wrote {len(result.members)} member(s) to {config.output_dir}")
    return 0


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(json.dumps(config.echo(), indent=2, sort_keys=True))
    return 0


def _cmd_pulse(args) -> int:
    params = PulseParams(t0=args.year, size_gtc=args.size)
    print("year,delta_mk,delta_degc")
    for year in range(args.year, args.year + args.span + 1):
        delta = pulse_delta_t(params, year)
        print(f"{year},{delta * 1e3!r},{delta!r}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="[%(levelname)s] %(message)s")
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "pulse": _cmd_pulse}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 2
    except DataError as exc:
        log.error("data error: %s", exc)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.error("run failed: %s", exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
