"""Experiment analytics: per-group score curves and view/delta correlation.

Works off event-log records (the `score_record` and `view_recorded` kinds), so
the same code serves the live platform endpoint, the experiment runner, and
`simlab analyze` over a persisted NDJSON file.
"""

from __future__ import annotations

from dataclasses import dataclass

from .stats import pearson


class AnalyticsError(ValueError):
    pass


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def _score_rows(records) -> list[dict]:
    return [r["payload"] for r in records if r["kind"] == "score_record"]


def _group_of(records) -> dict[str, str]:
    return {r["payload"]["user_id"]: r["payload"]["group"]
            for r in records if r["kind"] == "user_registered"}


def group_curves(records) -> list[dict]:
    """Per-day, per-group means: passive, cumulative passive delta, active.

    Cumulative delta is measured against each user's first scored day, so the
    day a group's curve reaches at the end is its mean total improvement.
    """
    groups = _group_of(records)
    rows = _score_rows(records)
    first_passive: dict[str, float] = {}
    by_day: dict[int, dict[str, list[dict]]] = {}
    for row in rows:
        uid = row["user_id"]
        first_passive.setdefault(uid, row["passive"])
        by_day.setdefault(row["day"], {}).setdefault(groups.get(uid, "?"), []).append(row)
    curves = []
    for day in sorted(by_day):
        for group in sorted(by_day[day]):
            members = by_day[day][group]
            curves.append({
                "day": day,
                "group": group,
                "n": len(members),
                "mean_passive": _mean([m["passive"] for m in members]),
                "mean_cum_passive_delta": _mean(
                    [m["passive"] - first_passive[m["user_id"]] for m in members]),
                "mean_active": _mean([m["active"] for m in members]),
                "n_active_defined": sum(1 for m in members if m["active"] is not None),
            })
    return curves


def per_criterion_curves(records) -> list[dict]:
    """Cumulative per-criterion scaled-score change per group per day."""
    groups = _group_of(records)
    rows = _score_rows(records)
    first: dict[tuple[str, str], float] = {}
    acc: dict[tuple[int, str, str], list[float]] = {}
    for row in rows:
        uid = row["user_id"]
        for cid, cell in row["criteria"].items():
            key = (uid, cid)
            first.setdefault(key, cell["scaled"])
            acc.setdefault((row["day"], groups.get(uid, "?"), cid), []).append(
                cell["scaled"] - first[key])
    return [{"day": day, "group": group, "criterion": cid,
             "mean_cum_delta": sum(vals) / len(vals), "n": len(vals)}
            for (day, group, cid), vals in sorted(acc.items())]


@dataclass(frozen=True)
class ViewCorrelation:
    pairs: list[dict]
    r: float
    p: float
    r_distinct_days: float
    p_distinct_days: float


def analyze_views(records) -> ViewCorrelation:
    """Correlate learning-screen view counts with total passive-score change.

    Emits both the raw view-count variant and the distinct-days variant; the
    count variant distinguishes users who check several times a day.
    """
    rows = _score_rows(records)
    if not rows:
        raise AnalyticsError("log contains no score records")
    first: dict[str, float] = {}
    last: dict[str, float] = {}
    for row in rows:
        first.setdefault(row["user_id"], row["passive"])
        last[row["user_id"]] = row["passive"]
    views: dict[str, int] = {uid: 0 for uid in first}
    view_days: dict[str, set[int]] = {uid: set() for uid in first}
    for rec in records:
        if rec["kind"] == "view_recorded" and rec["payload"]["screen"] == "learning":
            uid = rec["payload"]["user_id"]
            if uid in views:
                views[uid] += 1
                view_days[uid].add(rec["payload"]["day"])
    users = sorted(first)
    if len(users) < 3:
        raise AnalyticsError("need at least 3 scored users")
    deltas = [last[u] - first[u] for u in users]
    counts = [float(views[u]) for u in users]
    day_counts = [float(len(view_days[u])) for u in users]
    r, p = pearson(counts, deltas)
    r_days, p_days = pearson(day_counts, deltas)
    pairs = [{"user_id": u, "views": views[u], "view_days": len(view_days[u]),
              "passive_delta": last[u] - first[u]} for u in users]
    return ViewCorrelation(pairs=pairs, r=r, p=p,
                           r_distinct_days=r_days, p_distinct_days=p_days)
