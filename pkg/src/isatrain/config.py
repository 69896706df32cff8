"""Dataclass configuration for the platform and the experiment lab.

One TOML file configures everything: cohort, calibration length, challenge
window, level thresholds, schedule windows, release days, seeds, and the
simulated-cohort behavior model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .challenges import ScheduleConfig
from .gamification import LevelThresholds
from .scoring import ActiveWindowConfig

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib


@dataclass(frozen=True)
class PlatformConfig:
    calibration_days: int = 7
    weeks: int = 5
    seed: int = 0
    window: ActiveWindowConfig = field(default_factory=ActiveWindowConfig)
    thresholds: LevelThresholds = field(default_factory=LevelThresholds)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    release_offsets: tuple[int, ...] = (2, 5)   # baseline unlock days within a week
    article_availability_week: int = 1          # adaptive catalog opens in week 2
    baseline_max_unlocks: int = 8

    @property
    def total_days(self) -> int:
        return self.weeks * 7

    @property
    def last_calibration_day(self) -> int:
        return self.calibration_days - 1


@dataclass(frozen=True)
class BehaviorConfig:
    """Distribution parameters for the synthetic cohort's behavior profiles."""

    engagement_range: tuple[float, float] = (0.02, 0.98)
    improvement_range: tuple[float, float] = (0.86, 0.88)
    cross_effect: float = 0.95        # susceptibility multiplier per adaptive read
    revisit_factor: float = 0.8       # chance of a second same-day view is this * engagement
    count_noise_sd: float = 0.15      # observation noise on latent counts (stationary)
    ignore_probability: float = 0.1   # chance a delivered challenge is never answered
    click_susceptibility: tuple[float, float] = (0.3, 0.8)
    submit_susceptibility: tuple[float, float] = (0.3, 0.7)
    # Latent count state ranges (lower is better criteria).
    count_ranges: dict = field(default_factory=lambda: {
        "AI1": (0, 4), "AI2": (2, 10), "AI3": (0, 5), "AH1": (3, 15), "AH3": (2, 12),
        "B1": (0, 3), "VC2": (0, 3), "N1": (0, 4), "PC1": (0, 6),
    })
    # Initial adoption probability of each binary safeguard.
    adoption_probs: dict = field(default_factory=lambda: {
        "A2": 0.4, "A3": 0.25, "OS2": 0.97, "SS2": 0.3, "SS5": 0.7, "N3": 0.2,
    })
    daily_adoption: float = 0.0       # spontaneous adoption; reads raise it per user
    rate_range: tuple[float, float] = (5.0, 60.0)  # VC1 sub-metric open rates
    rate_noise: float = 2.0


@dataclass(frozen=True)
class ExperimentConfig:
    cohort_size: int = 60
    seed: int = 4
    platform: PlatformConfig = field(default_factory=PlatformConfig)
    behavior: BehaviorConfig = field(default_factory=BehaviorConfig)
    assertions: dict = field(default_factory=dict)

    def __post_init__(self):
        # One seed rules both the cohort draw and the platform scheduler.
        if self.platform.seed != self.seed:
            object.__setattr__(self, "platform", replace(self.platform, seed=self.seed))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed, platform=replace(self.platform, seed=seed))


def _pair(value) -> tuple[float, float]:
    lo, hi = value
    return float(lo), float(hi)


def load_experiment_config(source: str | Path | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from a TOML file; absent keys keep defaults."""
    if source is None:
        return ExperimentConfig()
    with open(source, "rb") as fh:
        data = tomllib.load(fh)
    exp = data.get("experiment", {})
    scoring = data.get("scoring", {})
    levels = data.get("levels", {})
    schedule = data.get("schedule", {})
    articles = data.get("articles", {})
    behavior = data.get("behavior", {})

    window = ActiveWindowConfig(
        window_size=scoring.get("window_size", 5),
        min_challenges=scoring.get("min_challenges", 5),
        require_all_vectors=scoring.get("require_all_vectors", True),
    )
    thresholds = LevelThresholds(
        intermediate_at=levels.get("intermediate_at", 50.0),
        pro_at=levels.get("pro_at", 75.0),
    )
    sched = ScheduleConfig(
        start_minute=schedule.get("start_minute", 9 * 60),
        end_minute=schedule.get("end_minute", 21 * 60),
        min_gap_minutes=schedule.get("min_gap_minutes", 120),
    )
    seed = exp.get("seed", 7)
    platform = PlatformConfig(
        calibration_days=exp.get("calibration_days", 7),
        weeks=exp.get("weeks", 5),
        seed=seed,
        window=window,
        thresholds=thresholds,
        schedule=sched,
        release_offsets=tuple(articles.get("release_offsets", (2, 5))),
        article_availability_week=articles.get("availability_week", 1),
        baseline_max_unlocks=articles.get("baseline_max_unlocks", 8),
    )
    defaults = BehaviorConfig()
    behavior_cfg = BehaviorConfig(
        engagement_range=_pair(behavior.get("engagement_range", defaults.engagement_range)),
        improvement_range=_pair(behavior.get("improvement_range", defaults.improvement_range)),
        cross_effect=behavior.get("cross_effect", defaults.cross_effect),
        revisit_factor=behavior.get("revisit_factor", defaults.revisit_factor),
        count_noise_sd=behavior.get("count_noise_sd", defaults.count_noise_sd),
        ignore_probability=behavior.get("ignore_probability", defaults.ignore_probability),
        click_susceptibility=_pair(behavior.get("click_susceptibility", defaults.click_susceptibility)),
        submit_susceptibility=_pair(behavior.get("submit_susceptibility", defaults.submit_susceptibility)),
        daily_adoption=behavior.get("daily_adoption", defaults.daily_adoption),
        rate_noise=behavior.get("rate_noise", defaults.rate_noise),
    )
    return ExperimentConfig(
        cohort_size=exp.get("cohort_size", 60),
        seed=seed,
        platform=platform,
        behavior=behavior_cfg,
        assertions=dict(data.get("assertions", {})),
    )
