"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration or arguments, 1 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config, parse_range
from .errors import ConfigError
from .harness import ee_from_ber, run_ber_sweep, run_papr, write_outputs

log = logging.getLogger("mdofdm")

PLOT_SCRIPT = '''\
"""Plot the CSVs written next to this file. Requires matplotlib."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def load(name):
    path = HERE / name
    if not path.exists():
        return None
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def series(rows, x, y):
    out = defaultdict(lambda: ([], []))
    for r in rows:
        xs, ys = out[r["scheme"]]
        xs.append(float(r[x]))
        ys.append(float(r[y]))
    return out


figures = [
    ("ber.csv", "snr_db", "ber", "SNR (dB)", "BER", True),
    ("ee.csv", "snr_db", "ee_bits_per_joule", "SNR (dB)", "EE (bits/J)", False),
    ("papr_ccdf.csv", "papr0_db", "ccdf", "PAPR0 (dB)", "CCDF", True),
]
for name, x, y, xlabel, ylabel, logy in figures:
    rows = load(name)
    if not rows:
        continue
    fig, ax = plt.subplots()
    for scheme, (xs, ys) in series(rows, x, y).items():
        if logy:
            keep = [(a, b) for a, b in zip(xs, ys) if b > 0]
            xs, ys = [a for a, _ in keep], [b for _, b in keep]
        ax.plot(xs, ys, marker="o", label=scheme)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(HERE / name.replace(".csv", ".png"), dpi=150, bbox_inches="tight")
    print("wrote", HERE / name.replace(".csv", ".png"))
'''


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key: value config file")
    common.add_argument("--seed", type=int, help="master seed (overrides config and $MDOFDM_SEED)")
    common.add_argument("--out", metavar="DIR", default="results", help="output directory (default: results)")
    common.add_argument("--workers", type=int, default=1, metavar="N", help="worker threads (default: 1)")
    common.add_argument("--snr", metavar="LO:STEP:HI", help="override the SNR grid in dB")
    common.add_argument("--plot-script", action="store_true", help="also write plot_figures.py next to the CSVs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mdofdm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ber", parents=[common], help="BER vs SNR sweep -> ber.csv")
    sub.add_parser("ee", parents=[common], help="energy efficiency vs SNR -> ee.csv")
    sub.add_parser("papr", parents=[common], help="PAPR CCDF -> papr_ccdf.csv")
    sub.add_parser("all", parents=[common], help="all three outputs")
    return parser


def _resolve_config(args):
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.snr is not None:
        try:
            changes["snr_grid_db"] = parse_range(args.snr)
        except ValueError as exc:
            raise ConfigError("--snr", str(exc)) from None
    if args.workers < 1:
        raise ConfigError("--workers", "must be >= 1")
    return cfg.replace(**changes) if changes else cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"mdofdm: invalid configuration: {exc}", file=sys.stderr)
        return 2

    try:
        results = {}
        if args.command in ("ber", "ee", "all"):
            points = run_ber_sweep(cfg, workers=args.workers)
            if args.command in ("ber", "all"):
                results["ber"] = points
            if args.command in ("ee", "all"):
                results["ee"] = ee_from_ber(cfg, points)
        if args.command in ("papr", "all"):
            results["ccdf"] = run_papr(cfg, workers=args.workers)
        written = write_outputs(args.out, cfg, **results)
        if args.plot_script:
            script = Path(args.out) / "plot_figures.py"
            script.write_text(PLOT_SCRIPT)
            written["plot_figures.py"] = script
    except ConfigError as exc:
        print(f"mdofdm: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 1
        print(f"mdofdm: error: {exc}", file=sys.stderr)
        return 1

    for path in written.values():
        print(path)
    return 0
