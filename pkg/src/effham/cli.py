"""Command-line front end.

Verbs: jch-mott, driven-qubit, spin-chain, bench-givens, bench-magnus.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from numpy.linalg import LinAlgError

from .errors import ConfigError, EffHamError
from .experiments import (
    BenchGivensConfig,
    BenchMagnusConfig,
    DrivenQubitConfig,
    JchMottConfig,
    SpinChainConfig,
    bench_givens,
    bench_magnus,
    config_from_dict,
    run_driven_qubit,
    run_jch_mott,
    run_spin_chain,
    write_csv,
)

EXPERIMENTS = {
    "jch-mott": (JchMottConfig, run_jch_mott, "jch_mott.csv"),
    "driven-qubit": (DrivenQubitConfig, run_driven_qubit, "driven_qubit.csv"),
    "spin-chain": (SpinChainConfig, run_spin_chain, "spin_chain.csv"),
    "bench-givens": (BenchGivensConfig, bench_givens, "bench_givens.csv"),
    "bench-magnus": (BenchMagnusConfig, bench_magnus, "bench_magnus.csv"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="effham",
        description="Effective-Hamiltonian experiments and benchmarks (CSV output).",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--out", metavar="PATH", help="output CSV path")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--repeats", type=int, help="override timing repeats")
        p.add_argument("--parallelism", type=int, help="worker threads for batch steps")
    return parser


def _load_config(args) -> dict:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    cls = EXPERIMENTS[args.experiment][0]
    known = {f.name for f in dataclasses.fields(cls)}
    for key in ("seed", "repeats", "parallelism"):
        value = getattr(args, key)
        if value is not None:
            if key not in known:
                raise ConfigError(f"--{key} does not apply to {args.experiment}")
            data[key] = value
    return data


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cls, runner, default_out = EXPERIMENTS[args.experiment]
    try:
        cfg = config_from_dict(cls, _load_config(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_path = args.out or default_out
    try:
        fieldnames, rows = runner(cfg)
    except (EffHamError, FloatingPointError, LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    write_csv(out_path, fieldnames, rows)
    print(f"wrote {len(rows)} rows to {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
