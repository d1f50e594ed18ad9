"""Command line interface.

Subcommands: validate, scatter, expectation-table, ser. Shared flags
mirror the ExperimentConfig keys; --config points at a flat key = value
file whose entries the flags override. SNR values are given in dB here
and converted to linear scale at this boundary only.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

import argparse
import os
import sys
from dataclasses import replace

from . import harness, theorem1
from ._kernels import backend
from .errors import ConfigError


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("-M", "--antennas", type=int, dest="M", help="BS antennas")
    parser.add_argument("-K", "--users", type=int, dest="K", help="number of UEs")
    parser.add_argument("--tau", type=int, help="pilot length (odd prime)")
    parser.add_argument("--constellation", choices=("qam16", "qpsk"))
    parser.add_argument("--scenario", choices=("two_ue", "three_ue"))
    parser.add_argument("--snr-db", help="comma-separated SNR grid in dB")
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials")
    parser.add_argument("--seed", type=int, dest="master_seed", help="master seed")
    parser.add_argument("--strategies", help="comma-separated detection strategies")
    parser.add_argument("--zc-root", type=int, dest="zc_root", help="Zadoff-Chu root")
    parser.add_argument("--out-dir", dest="out_dir", help="output directory for CSVs")
    parser.add_argument(
        "--allow-large",
        action="store_true",
        default=None,
        help="opt in to M*tau beyond the memory guard",
    )
    parser.add_argument("--cache-dir", dest="cache_dir", help="estimator cache directory")


def _build_config(args) -> harness.ExperimentConfig:
    cfg = harness.ExperimentConfig()
    if args.config:
        cfg = harness.config_from_file(args.config, cfg)
    overrides = {}
    for key in ("M", "K", "tau", "constellation", "scenario", "trials",
                "master_seed", "zc_root", "out_dir", "cache_dir"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "snr_db", None) is not None:
        overrides["snr_grid_db"] = tuple(
            float(v) for v in args.snr_db.split(",") if v.strip()
        )
    if getattr(args, "strategies", None) is not None:
        overrides["strategies"] = tuple(
            v.strip() for v in args.strategies.split(",") if v.strip()
        )
    if getattr(args, "allow_large", None) is not None:
        overrides["allow_large"] = args.allow_large
    return replace(cfg, **overrides).validated()


def _out_path(cfg, name):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _cmd_validate(args) -> int:
    report = harness.validate(seed=args.oracle_seed)
    print(f"kernel backend: {backend()}")
    for line in report.lines():
        print(line)
    return 0 if report.ok else 1


def _cmd_scatter(args) -> int:
    cfg = _build_config(args)
    interferers = None
    if args.interferers:
        interferers = tuple(int(v) for v in args.interferers.split(",") if v.strip())
    result = harness.run_scatter(
        cfg, ue=args.ue, mode=args.mode, interferer_indices=interferers, snr_db=args.at_db
    )
    if result.mode == "fixed_interferers":
        scatter_path = _out_path(cfg, "scatter.csv")
        harness.write_scatter_csv(result, scatter_path)
        print(f"wrote {scatter_path} ({result.soft_symbols.size} soft symbols)")
    else:
        theorem1.export_class_means_csv(result.table, _out_path(cfg, "class_means.csv"))
        print(f"wrote {_out_path(cfg, 'class_means.csv')}")
    expect_path = _out_path(cfg, "expectations.csv")
    harness.write_scatter_expectations_csv(result, expect_path)
    print(f"wrote {expect_path} ({result.expectations.size} expected values)")
    return 0


def _cmd_expectation_table(args) -> int:
    cfg = _build_config(args)
    result = harness.run_scatter(cfg, ue=args.ue, mode="all_combinations", snr_db=args.at_db)
    table_path = _out_path(cfg, "expectations.csv")
    means_path = _out_path(cfg, "class_means.csv")
    theorem1.export_expectation_csv(result.table, table_path)
    theorem1.export_class_means_csv(result.table, means_path)
    print(f"wrote {table_path} ({result.table.entries.size} rows)")
    print(f"wrote {means_path} ({result.table.class_means.size} rows)")
    return 0


def _cmd_ser(args) -> int:
    cfg = _build_config(args)
    result = harness.run_ser(cfg)
    ser_path = _out_path(cfg, "ser.csv")
    per_ue_path = _out_path(cfg, "ser_per_ue.csv")
    harness.write_ser_csv(result, ser_path)
    harness.write_per_ue_csv(result, per_ue_path)
    for s_idx, strategy in enumerate(result.strategies):
        row = ", ".join(
            f"{db:g} dB: {v:.4f}" for db, v in zip(result.snr_db, result.ser[s_idx])
        )
        print(f"{strategy}: {row}")
    print(f"wrote {ser_path} and {per_ue_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebit-mimo",
        description="1-bit ADC massive MIMO uplink detection toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="run the closed-form-vs-oracle suite")
    p_val.add_argument("--oracle-seed", type=int, default=2024)
    p_val.set_defaults(func=_cmd_validate)

    p_scatter = sub.add_parser("scatter", help="soft-symbol scatter data for one UE")
    _add_config_flags(p_scatter)
    p_scatter.add_argument("--ue", type=int, default=1, help="target UE (1-based)")
    p_scatter.add_argument(
        "--mode", choices=("fixed_interferers", "all_combinations"),
        default="fixed_interferers",
    )
    p_scatter.add_argument(
        "--interferers", help="comma-separated interferer symbol indices (fixed mode)"
    )
    p_scatter.add_argument("--at-db", type=float, default=0.0, dest="at_db",
                           help="SNR of the scatter run in dB")
    p_scatter.set_defaults(func=_cmd_scatter)

    p_table = sub.add_parser(
        "expectation-table", help="full expectation table and class means"
    )
    _add_config_flags(p_table)
    p_table.add_argument("--ue", type=int, default=1, help="target UE (1-based)")
    p_table.add_argument("--at-db", type=float, default=0.0, dest="at_db",
                         help="SNR of the table in dB")
    p_table.set_defaults(func=_cmd_expectation_table)

    p_ser = sub.add_parser("ser", help="SER sweep over the SNR grid")
    _add_config_flags(p_ser)
    p_ser.set_defaults(func=_cmd_ser)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
