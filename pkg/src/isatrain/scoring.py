"""Score pipeline: calibration stats, daily z-scores, passive/active/overall scores.

All operations are pure functions; the caller owns persistence and ordering.
Day indices are 0-based integers counted from experiment start.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .stats import normal_cdf
from .taxonomy import Direction, Registry, SensorSnapshot

logger = logging.getLogger(__name__)

VECTORS = ("phishing", "permission", "impersonation")


class ScoringError(ValueError):
    pass


class CalibrationError(ScoringError):
    pass


@dataclass(frozen=True)
class CriterionStats:
    mu: float
    sigma: float  # population standard deviation, same units as mu


@dataclass(frozen=True)
class CalibrationStats:
    """Cohort mean/std per criterion, frozen at the end of the calibration period."""

    per_criterion: Mapping[str, CriterionStats]
    cohort_size: int
    inactive: tuple[str, ...] = ()  # criteria observed for no user

    def stats_for(self, criterion_id: str) -> CriterionStats:
        try:
            return self.per_criterion[criterion_id]
        except KeyError:
            raise ScoringError(f"no calibration stats for criterion {criterion_id!r}") from None


def compute_calibration(snapshots: Iterable[SensorSnapshot], registry: Registry) -> CalibrationStats:
    """Freeze cohort statistics from the calibration-period snapshots.

    Each user contributes one value per criterion: the mean of their daily raw
    values over the calibration window.  Sigma is the population standard
    deviation over those per-user values.
    """
    per_user: dict[str, dict[str, list[float]]] = {}
    for snap in snapshots:
        bucket = per_user.setdefault(snap.user_id, {})
        for metric in snap.metrics:
            bucket.setdefault(metric.criterion_id, []).append(float(metric.value))
    if len(per_user) < 2:
        raise CalibrationError(f"calibration needs a cohort of >= 2 users, got {len(per_user)}")
    stats: dict[str, CriterionStats] = {}
    inactive: list[str] = []
    for criterion in registry.active_criteria():
        values = [sum(vs) / len(vs)
                  for user in per_user.values()
                  if (vs := user.get(criterion.id))]
        if not values:
            inactive.append(criterion.id)
            logger.warning("criterion %s observed for no user; marked inactive", criterion.id)
            continue
        mu = sum(values) / len(values)
        var = sum((v - mu) ** 2 for v in values) / len(values)
        stats[criterion.id] = CriterionStats(mu=mu, sigma=var ** 0.5)
    return CalibrationStats(per_criterion=stats, cohort_size=len(per_user), inactive=tuple(inactive))


def criterion_z(raw: float, criterion, stats: CalibrationStats | CriterionStats) -> float:
    """Direction-corrected standard score of a raw value.

    A zero-variance criterion scores a neutral z=0 rather than +/-inf.
    """
    cs = stats.stats_for(criterion.id) if isinstance(stats, CalibrationStats) else stats
    if cs.sigma == 0.0:
        return 0.0
    z = (float(raw) - cs.mu) / cs.sigma
    return -z if criterion.direction is Direction.LOWER_IS_BETTER else z


def z_to_scale(z: float) -> float:
    """Map a z-score onto the user-facing 0-100 scale via the normal CDF."""
    return 100.0 * normal_cdf(z)


@dataclass(frozen=True)
class CriterionScore:
    criterion_id: str
    raw: float
    z: float
    scaled: float


@dataclass(frozen=True)
class PassiveScores:
    area_z: Mapping[str, float]
    area_scaled: Mapping[str, float]
    z: float
    scaled: float


def passive_score(z_by_criterion: Mapping[str, float], registry: Registry) -> PassiveScores:
    """Average z per focus area, then across areas, and rescale both levels.

    Criteria absent from the map (inactive or never observed) are skipped;
    focus areas left with no member are excluded from the outer mean.
    """
    area_z: dict[str, float] = {}
    for area in registry.focus_areas:
        zs = [z_by_criterion[cid] for cid in area.criterion_ids if cid in z_by_criterion]
        if zs:
            area_z[area.id] = sum(zs) / len(zs)
    if not area_z:
        raise ScoringError("no active criteria available for passive scoring")
    overall_z = sum(area_z.values()) / len(area_z)
    return PassiveScores(
        area_z=area_z,
        area_scaled={aid: z_to_scale(z) for aid, z in area_z.items()},
        z=overall_z,
        scaled=z_to_scale(overall_z),
    )


@dataclass(frozen=True)
class ActiveWindowConfig:
    window_size: int = 5       # X: number of most recent challenges scored
    min_challenges: int = 5    # warm-up: resolved challenges needed before scoring
    require_all_vectors: bool = True
    vectors: tuple[str, ...] = VECTORS

    def __post_init__(self):
        if self.window_size < 1:
            raise ScoringError("window_size must be >= 1")
        if self.min_challenges < self.window_size:
            raise ScoringError("min_challenges must cover the scoring window")


@dataclass(frozen=True)
class ResolvedChallenge:
    """Minimal view of a resolved challenge as the active score needs it."""

    vector: str
    fraction: float  # 0, 0.5, or 1


def active_score(outcomes: Sequence[ResolvedChallenge], config: ActiveWindowConfig) -> float | None:
    """Score the moving window of the last X challenges; None during warm-up.

    Each of the X window slots is worth 100/X points, scaled by the outcome
    fraction.  Warm-up holds until `min_challenges` outcomes exist and (when
    required) every attack vector has been seen at least once.
    """
    resolved = list(outcomes)
    if len(resolved) < config.min_challenges:
        return None
    if config.require_all_vectors:
        seen = {o.vector for o in resolved}
        if not set(config.vectors) <= seen:
            return None
    window = resolved[-config.window_size:]
    per_slot = 100.0 / config.window_size
    return sum(o.fraction * per_slot for o in window)


def overall_score(passive: float, active: float | None) -> float | None:
    """Mean of passive and active; undefined while the active score warms up."""
    if passive is None:
        raise ScoringError("passive score must be defined")
    if active is None:
        return None
    return (passive + active) / 2.0


@dataclass
class ScoreRecord:
    """Per-user-per-day scores in canonical form.

    `active`/`overall` are None during warm-up; `deltas`/`passive_delta` are
    None on the first scored day.
    """

    user_id: str
    day: int
    criteria: dict[str, CriterionScore]
    area_scaled: dict[str, float]
    passive: float
    active: float | None
    overall: float | None
    deltas: dict[str, float] | None = None
    passive_delta: float | None = None

    def to_json_dict(self) -> dict:
        deltas = self.deltas or {}
        return {
            "user_id": self.user_id,
            "day": self.day,
            "criteria": {
                cid: {
                    "raw": cs.raw,
                    "z": cs.z,
                    "scaled": cs.scaled,
                    "delta": deltas.get(cid),
                }
                for cid, cs in self.criteria.items()
            },
            "focus_areas": dict(self.area_scaled),
            "passive": self.passive,
            "active": self.active,
            "overall": self.overall,
            "passive_delta": self.passive_delta,
        }


def daily_deltas(today: ScoreRecord, yesterday: ScoreRecord) -> tuple[dict[str, float], float]:
    """Day-over-day change per criterion and in the total passive score.

    Negative deltas mark behavioral weaknesses.  Only consecutive day indices
    of the same user are comparable.
    """
    if today.user_id != yesterday.user_id:
        raise ScoringError("delta requires records of the same user")
    if today.day != yesterday.day + 1:
        raise ScoringError(
            f"delta requires consecutive days, got {yesterday.day} -> {today.day}")
    per_criterion = {
        cid: cs.scaled - yesterday.criteria[cid].scaled
        for cid, cs in today.criteria.items()
        if cid in yesterday.criteria
    }
    return per_criterion, today.passive - yesterday.passive
