"""Command-line entry point: ``dplinreg {fit,sweep,datagen,ledger}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import BudgetExceeded, ConfigError, DPRegressionError, ParseError
from .experiment import (
    ExperimentConfig,
    apply_overrides,
    generate_datasets,
    read_config_json,
    run_fit,
    run_sweep,
)


def _epsilons(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="root seed (overrides config)")
    p.add_argument("--trials", type=int, help="trials per dataset, algorithm and epsilon")
    p.add_argument("--epsilon", type=_epsilons, help="comma-separated epsilon values")
    p.add_argument("--algo", action="append", help="algorithm name; repeat for several")
    p.add_argument("--out", type=str, help="output directory")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--input", type=str, help="x,y CSV file to run on instead of the config input")
    p.add_argument("--strict-csv", action="store_true", default=None,
                   help="reject out-of-range CSV values instead of clipping")
    p.add_argument("--no-header-timestamp", action="store_true",
                   help="omit the generation timestamp so outputs are byte-identical across runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dplinreg", description="DP simple linear regression benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("fit", "run every algorithm on the configured datasets"),
        ("sweep", "vary one synthetic parameter and report mean relative error"),
        ("datagen", "write synthetic or tract datasets as CSV"),
    ):
        _common(sub.add_parser(name, help=text))
    led = sub.add_parser("ledger", help="print the budget ledger of a finished run")
    led.add_argument("--out", type=str, default="results", help="directory holding summary.json")
    return parser


def load_config(args) -> ExperimentConfig:
    raw = read_config_json(args.config) if args.config is not None else {}
    raw = apply_overrides(
        raw,
        seed=args.seed,
        trials=args.trials,
        epsilon=args.epsilon,
        algorithms=args.algo,
        out=args.out,
        workers=args.workers,
        strict_csv=args.strict_csv,
    )
    if args.input is not None:
        raw["input"] = {"type": "csv", "path": args.input}
    if args.no_header_timestamp:
        raw["header_timestamp"] = False
    return ExperimentConfig.from_dict(raw)


def _print_ledger(out: Path) -> int:
    path = out / "summary.json"
    if not path.exists():
        raise ConfigError(f"no summary.json in {out}")
    summary = json.loads(path.read_text())
    for entry in summary.get("algorithms", []):
        ledger = entry.get("ledger")
        head = f"{entry['algorithm']} epsilon={entry['epsilon']}"
        if ledger is None:
            print(f"{head}: non-private, no budget")
            continue
        total, spent = ledger["total"], ledger["spent"]
        print(f"{head}: total {total['flavor']} eps={total['epsilon']:g} delta={total['delta']:g} "
              f"rho={total['rho']:g}; spent eps={spent['epsilon']:g} delta={spent['delta']:g} "
              f"rho={spent['rho']:g} in {len(ledger['entries'])} entries")
        for e in ledger["entries"]:
            note = f"  [{e['note']}]" if e.get("note") else ""
            print(f"  {e['name']}: eps={e['epsilon']:g} delta={e['delta']:g} rho={e['rho']:g}{note}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "ledger":
            return _print_ledger(Path(args.out))
        cfg = load_config(args)
        if args.command == "fit":
            summary = run_fit(cfg)
            print(f"wrote {len(summary['files'])} files to {cfg.out}")
        elif args.command == "sweep":
            if cfg.sweep is None:
                raise ConfigError("sweep needs a 'sweep' section in the config")
            run_sweep(cfg)
            print(f"wrote sweep.csv and summary.json to {cfg.out}")
        else:
            paths = generate_datasets(cfg)
            print(f"wrote {len(paths)} files to {cfg.out}")
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 3
    except BudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return 4
    except (ConfigError, DPRegressionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
