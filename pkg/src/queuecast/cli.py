"""Command-line entry point.

Subcommands mirror the pipeline stages so each can be rerun on its own:

    queuecast simulate  --preset large-tick --seed 7 --out simdata --days 3
    queuecast ingest    --config run.cfg --out outdir
    queuecast sample    --config run.cfg --out outdir
    queuecast fit       --config run.cfg --out outdir
    queuecast evaluate  --config run.cfg --out outdir
    queuecast report    --config run.cfg --out outdir
    queuecast pipeline  --config run.cfg --out outdir

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import book as bk
from . import lobster as lb
from . import pipeline as pl
from . import reports as rp
from . import seeds
from . import simulate as sim
from .errors import ConfigError, DataError, NumericalError, QueuecastError

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="queuecast",
        description="Queue-imbalance analytics over limit-order-book event streams",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("simulate", "emit LOBSTER-format synthetic days"),
        ("ingest", "replay message files, verify, and summarize"),
        ("sample", "build the imbalance/direction sample table"),
        ("fit", "split and fit the configured classifiers"),
        ("evaluate", "score fitted classifiers in and out of sample"),
        ("report", "tabulate evaluation reports"),
        ("pipeline", "run every stage into one artifact directory"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", metavar="PATH", help="key=value run configuration")
        p.add_argument("--seed", type=int, metavar="U64", help="master seed override")
        p.add_argument("--out", metavar="DIR", help="output directory override")
        p.add_argument("--mode", choices=["uniform", "event"], help="sampling mode override")
        p.add_argument(
            "--preset", choices=["large-tick", "small-tick"], help="simulator preset override"
        )
        p.add_argument("--jobs", type=int, metavar="N", help="parallel instrument-days")
        if name == "simulate":
            p.add_argument("--days", type=int, metavar="N", help="number of days override")
    return parser


def _config_from_args(args) -> pl.RunConfig:
    overrides = {
        "seed": args.seed,
        "out_dir": args.out,
        "sampling_mode": args.mode,
        "preset": args.preset,
        "jobs": args.jobs,
    }
    if getattr(args, "days", None) is not None:
        overrides["days"] = args.days
    return pl.load_config(args.config, overrides)


def cmd_simulate(cfg: pl.RunConfig) -> None:
    """Write per-day message and level-1 orderbook CSVs plus a manifest."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pl.write_resolved_config(cfg, out)
    manifest = {"preset": cfg.preset, "seed": cfg.seed, "days": []}
    for day in range(cfg.days):
        zi = sim.regime_preset(
            cfg.preset, seed=seeds.seed_for(cfg.seed, seeds.SIMULATE, day), horizon=cfg.horizon
        )
        zi = replace(zi, tick_size=cfg.tick_size, start_time_s=cfg.window.open_s)
        res = sim.simulate(zi)
        msg_name = f"day{day:03d}_message.csv"
        l1_name = f"day{day:03d}_orderbook.csv"
        lb.write_messages(out / msg_name, res.messages)
        lb.write_l1_file(out / l1_name, res.l1_rows)
        manifest["days"].append(
            {
                "day": day,
                "message_file": msg_name,
                "orderbook_file": l1_name,
                "messages": len(res.messages),
                "side_depleted": res.side_depleted,
            }
        )
    rp.write_json(out / "manifest.json", manifest)


def cmd_ingest(cfg: pl.RunConfig) -> None:
    """Replay message files into normalized event logs, verify against any
    orderbook references, and write the summary-statistics record."""
    if cfg.source != "lobster":
        raise ConfigError("ingest requires source = lobster with message_files")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pl.write_resolved_config(cfg, out)
    day_stats = []
    verification = {}
    for day, msg_path in enumerate(cfg.message_files):
        msgs = list(lb.parse_messages(msg_path))
        want_l1 = bool(cfg.orderbook_files)
        res = lb.replay(
            msgs, tick_size=cfg.tick_size, window=cfg.window,
            record_l1=want_l1, keep_events=True,
        )
        day_stats.append(res.stats)
        with open(out / f"day{day:03d}_events.csv", "w", encoding="ascii", newline="\n") as fh:
            fh.write("seq,t_ns,kind,order_id,price_ticks,size_delta\n")
            for ev_ in res.events:
                if ev_.kind == bk.SUBMIT:
                    price, delta, oid = ev_.order.price, ev_.order.size, ev_.order.id
                else:
                    oid, delta, price = ev_.order_id, ev_.delta, ""
                fh.write(f"{ev_.seq},{ev_.t_ns},{ev_.kind},{oid},{price},{delta}\n")
        if want_l1:
            ref = lb.parse_l1_file(cfg.orderbook_files[day])
            report = lb.verify_against_l1(res.l1_rows, ref)
            verification[f"day{day:03d}"] = {
                "checked": report.checked,
                "mismatches": [
                    {"index": m.index, "reconstructed": m.reconstructed, "reference": m.reference}
                    for m in report.mismatches[:100]
                ],
                "mismatch_count": len(report.mismatches),
            }
    summary = lb.summary_stats(day_stats, tick_size=cfg.tick_size)
    rp.write_json(
        out / "summary.json",
        {
            "days": summary.days,
            "executed_volume": summary.executed_volume,
            "best_quote_limit_volume": summary.best_quote_limit_volume,
            "trade_price_min": summary.trade_price_min,
            "trade_price_max": summary.trade_price_max,
            "mean_nb": summary.mean_nb,
            "mean_na": summary.mean_na,
            "mean_spread": summary.mean_spread,
        },
    )
    if verification:
        rp.write_json(out / "verification.json", verification)


def _staged(stage_fn):
    def run(cfg: pl.RunConfig) -> None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        pl.write_resolved_config(cfg, out)
        stage_fn(cfg, out)

    return run


COMMANDS = {
    "simulate": cmd_simulate,
    "ingest": cmd_ingest,
    "sample": _staged(pl.stage_sample),
    "fit": _staged(pl.stage_fit),
    "evaluate": _staged(pl.stage_evaluate),
    "report": _staged(pl.stage_report),
    "pipeline": lambda cfg: pl.run_pipeline(cfg),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, QueuecastError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
