"""`simlab` command line: run the desk-scale experiment or analyze a log."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analytics, simlab
from .config import load_experiment_config
from .eventlog import load_records


def _cmd_run(args) -> int:
    config = load_experiment_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "events.ndjson"
    if log_path.exists():
        log_path.unlink()
    result = simlab.run_experiment(config, log_path=log_path)
    result.service.log.close()
    simlab.write_outputs(result, out)
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    failures = simlab.evaluate_assertions(result.summary, config.assertions)
    for failure in failures:
        print(f"ASSERTION FAILED: {failure}", file=sys.stderr)
    return 1 if failures else 0


def _cmd_analyze(args) -> int:
    records = load_records(args.log)
    corr = analytics.analyze_views(records)
    curves = analytics.group_curves(records)
    last_day = max((row["day"] for row in curves), default=None)
    print(json.dumps({
        "users": len(corr.pairs),
        "view_correlation": {"r": corr.r, "p": corr.p,
                             "r_distinct_days": corr.r_distinct_days,
                             "p_distinct_days": corr.p_distinct_days},
        "final_day": last_day,
        "final_rows": [row for row in curves if row["day"] == last_day],
    }, indent=2, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="simlab",
                                     description="Agent-based training-experiment lab")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a full two-arm experiment")
    run.add_argument("--config", default=None, help="TOML config file (defaults built in)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", required=True, help="output directory for CSVs and the event log")
    run.set_defaults(fn=_cmd_run)

    analyze = sub.add_parser("analyze", help="analyze a persisted event log")
    analyze.add_argument("--log", required=True, help="NDJSON event log")
    analyze.set_defaults(fn=_cmd_analyze)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
