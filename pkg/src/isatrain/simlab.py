"""Experiment lab: run the two-arm, five-week protocol against a fresh platform.

A run drives daily delivery, agent actions, and the midnight tick for every
day of the horizon, then derives the analysis artifacts: per-group score
curves, per-criterion delta curves, and the view/delta correlation.  Runs are
fully deterministic in (config, seed).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from . import analytics
from .agents import Agent, spawn_cohort
from .challenges import load_templates
from .config import ExperimentConfig
from .eventlog import dump_records
from .gamification import load_catalog
from .service import PlatformService
from .stats import ZeroVarianceError, pearson  # pearson re-exported: the lab's analytics entry point
from .taxonomy import load_registry

__all__ = ["run_experiment", "ExperimentResult", "pearson", "evaluate_assertions"]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    service: PlatformService
    agents: list[Agent]
    curves: list[dict]
    per_criterion: list[dict]
    correlation: analytics.ViewCorrelation | None
    summary: dict


def build_service(config: ExperimentConfig, log_path=None) -> PlatformService:
    return PlatformService(
        registry=load_registry(),
        templates=load_templates(),
        catalog=load_catalog(),
        config=config.platform,
        log_path=log_path,
    )


def run_experiment(config: ExperimentConfig | None = None,
                   log_path: str | Path | None = None) -> ExperimentResult:
    config = config or ExperimentConfig()
    service = build_service(config, log_path)
    agents = spawn_cohort(config)
    for agent in agents:
        service.register_user(agent.user_id, agent.group)
    for day in range(config.platform.total_days):
        service.deliver_due()
        for agent in agents:
            agent.act(day, service)
        service.midnight_tick(day)
    records = service.log.records
    curves = analytics.group_curves(records)
    per_criterion = analytics.per_criterion_curves(records)
    try:
        correlation = analytics.analyze_views(records)
    except (analytics.AnalyticsError, ZeroVarianceError):
        correlation = None  # e.g. engagement-0 control runs have no views
    summary = _summarize(config, curves, correlation)
    return ExperimentResult(config=config, service=service, agents=agents,
                            curves=curves, per_criterion=per_criterion,
                            correlation=correlation, summary=summary)


def _curve_value(curves, group: str, day: int, key: str):
    for row in curves:
        if row["group"] == group and row["day"] == day:
            return row[key]
    return None


def _summarize(config: ExperimentConfig, curves, correlation) -> dict:
    final_day = config.platform.total_days - 1
    groups = sorted({row["group"] for row in curves})
    summary: dict = {
        "final_day": final_day,
        "cohort_size": config.cohort_size,
        "seed": config.seed,
        "groups": {},
        "view_correlation": None if correlation is None else {
            "r": correlation.r, "p": correlation.p,
            "r_distinct_days": correlation.r_distinct_days,
            "p_distinct_days": correlation.p_distinct_days},
    }
    for group in groups:
        days_active = [row["day"] for row in curves
                       if row["group"] == group and row["mean_active"] is not None]
        first_active_day = min(days_active) if days_active else None
        summary["groups"][group] = {
            "final_cum_passive_delta": _curve_value(curves, group, final_day,
                                                    "mean_cum_passive_delta"),
            "final_active": _curve_value(curves, group, final_day, "mean_active"),
            "first_active_day": first_active_day,
            "day13_active": _curve_value(curves, group, 13, "mean_active"),
        }
    return summary


def evaluate_assertions(summary: dict, assertions: dict) -> list[str]:
    """Check the config's acceptance assertions; returns failure messages."""
    failures = []
    groups = summary["groups"]
    adaptive = groups.get("adaptive", {})
    baseline = groups.get("baseline", {})

    minimum = assertions.get("adaptive_final_delta_min")
    if minimum is not None:
        value = adaptive.get("final_cum_passive_delta")
        if value is None or value <= minimum:
            failures.append(f"adaptive final passive delta {value} <= {minimum}")
    cap = assertions.get("baseline_final_delta_abs_max")
    if cap is not None:
        value = baseline.get("final_cum_passive_delta")
        if value is None or abs(value) > cap:
            failures.append(f"baseline final passive delta {value} outside +/-{cap}")
    ratio = assertions.get("adaptive_vs_baseline_ratio_min")
    if ratio is not None:
        a = adaptive.get("final_cum_passive_delta")
        b = baseline.get("final_cum_passive_delta")
        if a is None or b is None or a <= ratio * abs(b):
            failures.append(f"adaptive delta {a} not > {ratio}x baseline |{b}|")
    p_max = assertions.get("view_corr_p_max")
    if p_max is not None:
        corr = summary["view_correlation"]
        if corr is None:
            failures.append("view correlation undefined (no view variance)")
        elif corr["r"] <= 0 or corr["p"] >= p_max:
            failures.append(f"view correlation r={corr['r']:.3f} p={corr['p']:.2e} "
                            f"not positive at p<{p_max}")
    if assertions.get("active_no_regression"):
        for group, stats in groups.items():
            final, day13 = stats.get("final_active"), stats.get("day13_active")
            if final is None or day13 is None or final < day13:
                failures.append(f"{group} active final {final} < day-13 {day13}")
    return failures


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "curves.csv", result.curves)
    _write_csv(out / "per_criterion.csv", result.per_criterion)
    _write_csv(out / "correlation.csv",
               result.correlation.pairs if result.correlation else [])
    if not (out / "events.ndjson").exists():
        dump_records(result.service.log.records, out / "events.ndjson")
    with open(out / "summary.json", "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
