"""Gamification: levels, leaderboard, inaction penalties, article recommendation.

Two recommendation modes exist, one per study arm:
  * adaptive  - the full passive-topic catalog, reordered daily so the weakest
    topics (most negative delta, then lowest score) come first;
  * baseline  - attack-vector articles unlocked twice a week, escalating in
    comprehensiveness after repeated failures in the same vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .scoring import ScoreRecord, ScoringError
from .taxonomy import Direction, MetricKind, Registry

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

VECTOR_PRIORITY = ("phishing", "permission", "impersonation")
GRADE_RANGE = (1, 5)


class GamificationError(ValueError):
    pass


class Group(Enum):
    ADAPTIVE = "adaptive"   # sensor-personalized feedback arm
    BASELINE = "baseline"   # challenge-performance feedback arm


class Level(Enum):
    BEGINNER = "beginner"
    INTERMEDIATE = "intermediate"
    PRO = "pro"


@dataclass(frozen=True)
class LevelThresholds:
    intermediate_at: float = 50.0
    pro_at: float = 75.0

    def __post_init__(self):
        if self.intermediate_at >= self.pro_at:
            raise GamificationError("level thresholds must be strictly increasing")


def assign_level(points: float, thresholds: LevelThresholds = LevelThresholds()) -> Level:
    if not 0.0 <= points <= 100.0:
        raise GamificationError(f"points must lie in [0, 100], got {points}")
    if points < thresholds.intermediate_at:
        return Level.BEGINNER
    if points < thresholds.pro_at:
        return Level.INTERMEDIATE
    return Level.PRO


@dataclass
class PlayerState:
    user_id: str
    group: Group
    points: float | None = None          # current overall (or passive pre-warm-up) score
    level: Level | None = None
    points_reached_day: int | None = None  # first day the current points value held
    unlocked_articles: tuple["Unlock", ...] = ()


def leaderboard(states: Iterable[PlayerState]) -> list[PlayerState]:
    """Rank by points descending; ties go to whoever reached them first, then id.

    Users without any score yet sink to the bottom.
    """
    def key(s: PlayerState):
        has_points = s.points is not None
        return (
            0 if has_points else 1,
            -(s.points if has_points else 0.0),
            s.points_reached_day if s.points_reached_day is not None else 0,
            s.user_id,
        )
    return sorted(states, key=key)


@dataclass(frozen=True)
class PenaltyEvent:
    user_id: str
    day: int
    criterion_id: str
    reason: str        # "missing_safeguard" or "score_drop"
    description: str
    points_effect: float  # non-positive; surfaced on the learning screen

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "day": self.day,
            "criterion_id": self.criterion_id,
            "reason": self.reason,
            "description": self.description,
            "points_effect": self.points_effect,
        }


def prt_penalties(yesterday: ScoreRecord, today: ScoreRecord,
                  registry: Registry) -> list[PenaltyEvent]:
    """Daily penalty events that turn passive risk-taking into visible loss.

    A binary safeguard still switched off penalizes every day it persists;
    any criterion whose scaled score dropped penalizes once.  At most one
    event per criterion per day (the standing-safeguard reason wins), so
    persistence counts stay exact.  The points effect explains the criterion's
    drag on the passive score; the z pipeline already applies it, so it is
    never deducted a second time.
    """
    if today.user_id != yesterday.user_id or today.day != yesterday.day + 1:
        raise ScoringError("penalties need consecutive records of one user")
    deltas = today.deltas or {}
    events: list[PenaltyEvent] = []
    for criterion in registry.active_criteria():
        cs = today.criteria.get(criterion.id)
        if (criterion.kind is MetricKind.BINARY
                and criterion.direction is Direction.HIGHER_IS_BETTER
                and cs is not None and cs.raw == 0):
            events.append(PenaltyEvent(
                user_id=today.user_id, day=today.day, criterion_id=criterion.id,
                reason="missing_safeguard",
                description=f"Safeguard still missing: {criterion.description}",
                points_effect=min(0.0, cs.scaled - 50.0)))
            continue
        delta = deltas.get(criterion.id)
        if delta is not None and delta < 0:
            events.append(PenaltyEvent(
                user_id=today.user_id, day=today.day, criterion_id=criterion.id,
                reason="score_drop",
                description=f"Score dropped {delta:+.1f} points: {criterion.description}",
                points_effect=delta))
    return events


@dataclass(frozen=True)
class ArticleItem:
    article_id: str
    topic: str                 # criterion code (adaptive) or attack vector (baseline)
    url: str
    grade: int | None = None   # comprehensiveness 1-5, baseline items only
    group: Group = Group.ADAPTIVE


class ArticleCatalog:
    def __init__(self, items: Sequence[ArticleItem]):
        self.adaptive = tuple(i for i in items if i.group is Group.ADAPTIVE)
        self.baseline = tuple(i for i in items if i.group is Group.BASELINE)
        ids = [i.article_id for i in items]
        if len(set(ids)) != len(ids):
            raise GamificationError("duplicate article id")
        for item in self.adaptive:
            if item.grade is not None:
                raise GamificationError(f"{item.article_id}: adaptive items carry no grade")
        for item in self.baseline:
            if item.grade is None or not GRADE_RANGE[0] <= item.grade <= GRADE_RANGE[1]:
                raise GamificationError(f"{item.article_id}: baseline grade must be 1-5")
            if item.topic not in VECTOR_PRIORITY:
                raise GamificationError(f"{item.article_id}: unknown vector {item.topic!r}")
        self._by_id = {i.article_id: i for i in items}

    def get(self, article_id: str) -> ArticleItem:
        return self._by_id[article_id]

    def baseline_for(self, vector: str) -> tuple[ArticleItem, ...]:
        return tuple(i for i in self.baseline if i.topic == vector)


def default_catalog_path() -> Path:
    return Path(__file__).parent / "data" / "articles.toml"


def load_catalog(source: str | Path | None = None) -> ArticleCatalog:
    path = Path(source) if source else default_catalog_path()
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    items = []
    for row in data.get("adaptive", []):
        items.append(ArticleItem(row["id"], row["topic"], row["url"], None, Group.ADAPTIVE))
    for row in data.get("baseline", []):
        items.append(ArticleItem(row["id"], row["topic"], row["url"], row["grade"], Group.BASELINE))
    return ArticleCatalog(items)


@dataclass(frozen=True)
class Recommendation:
    article: ArticleItem
    score: float | None   # the topic's scaled score that triggered the ranking
    delta: float | None


def recommend_adaptive(record: ScoreRecord, catalog: ArticleCatalog,
                       availability_week: int = 1,
                       days_per_week: int = 7) -> list[Recommendation]:
    """Order the full adaptive catalog by how badly each topic needs work.

    Empty before the availability week (the catalog opens in week 2).  Sort
    key: most negative delta, then lowest score, then topic code.
    """
    if record.day // days_per_week < availability_week:
        return []
    recs = []
    for item in catalog.adaptive:
        cs = record.criteria.get(item.topic)
        delta = (record.deltas or {}).get(item.topic)
        recs.append(Recommendation(article=item,
                                   score=cs.scaled if cs else None,
                                   delta=delta))
    def key(r: Recommendation):
        return (
            r.delta if r.delta is not None else 0.0,
            r.score if r.score is not None else float("inf"),
            r.article.topic,
        )
    recs.sort(key=key)
    return recs


@dataclass(frozen=True)
class VectorResult:
    """A resolved challenge as the baseline article policy sees it."""

    vector: str
    fraction: float
    day: int
    order: int  # global resolution sequence


@dataclass(frozen=True)
class Unlock:
    article_id: str
    vector: str
    grade: int
    day: int
    reason: str

    def to_dict(self) -> dict:
        return {"article_id": self.article_id, "vector": self.vector,
                "grade": self.grade, "day": self.day, "reason": self.reason}


def is_release_day(day: int, release_offsets: Sequence[int] = (2, 5),
                   days_per_week: int = 7, first_week: int = 1) -> bool:
    return day // days_per_week >= first_week and day % days_per_week in release_offsets


def _grade_pool(catalog: ArticleCatalog, vector: str,
                unlocked_ids: set[str]) -> list[ArticleItem]:
    pool = [i for i in catalog.baseline_for(vector) if i.article_id not in unlocked_ids]
    pool.sort(key=lambda i: (i.grade, i.article_id))
    return pool


def select_baseline_article(day: int, results: Sequence[VectorResult],
                            unlocked: Sequence[Unlock], catalog: ArticleCatalog,
                            max_unlocks: int = 8) -> tuple[ArticleItem, str] | None:
    """Pick the one article to unlock on a release day, or None when capped.

    A failure (fraction < 1) is unaddressed while no unlock of its vector is
    at least as recent.  The neediest vector gets the next-higher grade than
    its last unlocked article (lowest grade on first unlock); without any
    unaddressed failures, vectors rotate in fixed order starting from the
    lowest grade.  When a vector's pool is exhausted the next-neediest takes
    its place.
    """
    if len(unlocked) >= max_unlocks:
        return None
    unlocked_ids = {u.article_id for u in unlocked}
    last_unlock_day = {v: max((u.day for u in unlocked if u.vector == v), default=None)
                       for v in VECTOR_PRIORITY}
    failures = [r for r in results if r.fraction < 1.0]

    def unaddressed(vector: str) -> list[VectorResult]:
        cutoff = last_unlock_day[vector]
        return [f for f in failures if f.vector == vector
                and (cutoff is None or f.day > cutoff)]

    needy = [v for v in VECTOR_PRIORITY if unaddressed(v)]
    needy.sort(key=lambda v: (
        -max((f.day, f.order) for f in unaddressed(v))[0],
        -max((f.day, f.order) for f in unaddressed(v))[1],
        -sum(1 for f in failures if f.vector == v),
        VECTOR_PRIORITY.index(v),
    ))

    for vector in needy:
        pool = _grade_pool(catalog, vector, unlocked_ids)
        prev = [u for u in unlocked if u.vector == vector]
        if prev:
            last_grade = prev[-1].grade
            pool = [i for i in pool if i.grade > last_grade]
        if pool:
            return pool[0], f"escalation:{vector}"

    # No unaddressed failures (or their pools ran dry): rotate vectors.
    start = len(unlocked) % len(VECTOR_PRIORITY)
    rotation = [VECTOR_PRIORITY[(start + i) % len(VECTOR_PRIORITY)]
                for i in range(len(VECTOR_PRIORITY))]
    for vector in rotation:
        pool = _grade_pool(catalog, vector, unlocked_ids)
        if pool:
            return pool[0], f"rotation:{vector}"
    return None
