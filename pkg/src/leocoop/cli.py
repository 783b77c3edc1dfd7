"""Command-line entry point: ``leocoop <simulate|sweep|analyze|sync-demo|oracle>``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiment as ex
from .config import (ASSOCIATION_MODES, INTERFERENCE_MODES, SYNC_MODES, ConfigError, PRESETS,
                     ScenarioConfig, load_config, preset)


def parse_values(text: str, axis: str = "") -> tuple:
    """``start:step:stop`` (inclusive) or a comma list."""
    if axis == "sync_mode":
        return tuple(v.strip() for v in text.split(","))
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"expected start:step:stop, got {text!r}")
        start, step, stop = (int(p) for p in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return tuple(range(start, stop + 1, step))
    return tuple(int(v) for v in text.split(","))


def _config(args) -> ScenarioConfig:
    base = preset(args.preset) if args.preset else None
    config = load_config(args.config, base) if args.config else (base or preset("desk"))
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "sync", None):
        changes["sync_mode"] = args.sync
    if getattr(args, "interference", None):
        changes["interference_mode"] = args.interference
    return config.with_(**changes) if changes else config


def _schemes(args) -> tuple[str, ...]:
    if not args.mode:
        return ("single", "full", "proposed")
    return tuple(dict.fromkeys(m for chunk in args.mode for m in chunk.split(",")))


def _common(p: argparse.ArgumentParser, drops: int | None = 20) -> None:
    p.add_argument("--config", type=Path, help="key = value scenario file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="starting preset (default desk)")
    p.add_argument("--seed", type=int)
    if drops is not None:
        p.add_argument("--drops", type=int, default=drops)


def _campaign_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", action="append",
                   help=f"scheme(s): {', '.join(ex.SCHEMES)}; repeat or comma-separate")
    p.add_argument("--sync", choices=SYNC_MODES)
    p.add_argument("--interference", choices=INTERFERENCE_MODES)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--plots", action="store_true", help="also write SVG charts")
    p.add_argument("--workers", type=int)
    p.add_argument("--pair-points", action="store_true", help="reuse drop seeds across sweep points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leocoop", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo throughput for one scenario")
    _common(p)
    _campaign_args(p)

    p = sub.add_parser("sweep", help="throughput across a parameter sweep")
    _common(p)
    _campaign_args(p)
    p.add_argument("--axis", required=True, choices=[a for a in ex.AXES if a != "none"])
    p.add_argument("--values", required=True, help="start:step:stop or comma list")

    p = sub.add_parser("analyze", help="closed-form bound versus additional CP length")
    _common(p, drops=None)
    p.add_argument("--grid", help="start:step:stop of L_add (default 0:N/16:N-L_CP-1)")
    p.add_argument("--include-cp", action="store_true", help="count L_CP in the symbol length")
    p.add_argument("--out", type=Path, help="CSV file (default stdout)")

    p = sub.add_parser("sync-demo", help="attach-count histograms, random vs optimized sync")
    _common(p, drops=1000)
    p.add_argument("--out", type=Path, help="output directory (default stdout)")
    p.add_argument("--plots", action="store_true")

    p = sub.add_parser("oracle", help="exact interference terms versus time-domain simulation")
    p.add_argument("--n", type=int, default=64, help="subcarriers (<= 256)")
    p.add_argument("--symbols", type=int, default=10_000)
    p.add_argument("--mode", action="append", choices=ASSOCIATION_MODES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="CSV file (default stdout)")
    return parser


def _emit_rows(rows, fields, out: Path | None) -> None:
    if out is None:
        import csv

        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([ex._fmt(row[f]) for f in fields])
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        ex.write_csv(out, fields, rows)


def _print_summary(result) -> None:
    for row in result.summary():
        label = f"{row['value']} " if row["value"] != "" else ""
        print(f"{label}{row['mode']:>18s}  median {row['median_R'] / 1e6:9.4f} Mbit/s  "
              f"mean {row['mean_R'] / 1e6:9.4f} ± {row['stderr'] / 1e6:.4f}  "
              f"attach {row['mean_attach']:.2f}")


def cmd_campaign(args, axis="none", values=()) -> int:
    spec = ex.CampaignSpec(base=_config(args), axis=axis, values=values, drops=args.drops,
                           out_dir=args.out, emit_plots=args.plots, schemes=_schemes(args),
                           pair_points=args.pair_points, workers=args.workers)
    result = ex.run_campaign(spec)
    _print_summary(result)
    return 0


def cmd_analyze(args) -> int:
    config = _config(args)
    N = config.n_subcarriers
    grid = parse_values(args.grid) if args.grid else tuple(range(0, N - config.cp_len, max(N // 16, 1)))
    rows = ex.analyze_rows(config, grid, include_cp=args.include_cp)
    _emit_rows(rows, ("L_add", "p_cp", "bound", "bound_per_hz", "desired", "mui", "ici", "isi"), args.out)
    best = max(rows, key=lambda r: (r["bound"], -r["L_add"]))
    print(f"best L_add on grid: {best['L_add']}", file=sys.stderr)
    return 0


def cmd_sync_demo(args) -> int:
    config = _config(args)
    rand, opt = ex.run_sync_demo(config, args.drops)
    rows = ex.sync_histogram_rows(rand, opt, config.n_sats)
    fields = ("attach", "random", "optimized")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        ex.write_csv(args.out / "sync_histogram.csv", fields, rows)
        per_drop = [{"drop": d, "random": int(r), "optimized": int(o)}
                    for d, (r, o) in enumerate(zip(rand, opt))]
        ex.write_csv(args.out / "sync_counts.csv", ("drop", "random", "optimized"), per_drop)
        if args.plots:
            plt = ex._pyplot()
            fig, ax = plt.subplots(figsize=(6, 4))
            bins = np.arange(config.n_sats + 2) - 0.5
            ax.hist(rand, bins=bins, alpha=0.6, label="random sync")
            ax.hist(opt, bins=bins, alpha=0.6, label="optimized sync")
            ax.set_xlabel("attached satellites")
            ax.set_ylabel("drops")
            ax.legend()
            ex.save_svg(fig, args.out / "sync_histogram.svg")
            plt.close(fig)
    else:
        _emit_rows(rows, fields, None)
    print(f"random: mean {rand.mean():.2f} range {rand.min()}-{rand.max()}; "
          f"optimized: mean {opt.mean():.2f} range {opt.min()}-{opt.max()}", file=sys.stderr)
    return 0


def cmd_oracle(args) -> int:
    if args.n > 256:
        raise ConfigError("oracle runs are limited to n <= 256")
    config = ex.oracle_config(args.n, seed=args.seed)
    rows = []
    for mode in args.mode or list(ASSOCIATION_MODES):
        sync = "optimized" if mode == "proposed" else "random"
        rows.extend(ex.oracle_check(config, mode, args.symbols, seed=args.seed, sync_mode=sync))
    _emit_rows(rows, ("mode", "term", "exact", "oracle", "stderr", "z"), args.out)
    worst = max(abs(r["z"]) for r in rows)
    print(f"largest |z| = {worst:.2f}", file=sys.stderr)
    return 0 if worst <= 3.0 else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return cmd_campaign(args)
        if args.command == "sweep":
            return cmd_campaign(args, args.axis, parse_values(args.values, args.axis))
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "sync-demo":
            return cmd_sync_demo(args)
        return cmd_oracle(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"leocoop: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
