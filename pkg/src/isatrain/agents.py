"""Synthetic cohort: latent behavior profiles and their daily actions.

The behavior model is deliberately simple and documented as the simulator's
own, not a measured human model:

  * count criteria hold a latent state (apps installed, etc.) observed daily
    with small rounding noise - stationary, so an untrained user's scores
    have no systematic trend;
  * binary safeguards persist once adopted; reading a matching article lifts
    the daily adoption probability p to 1 - f*(1-p) for improvement factor f;
  * reading shrinks count states and message-open rates multiplicatively
    by f (toward the safe end);
  * challenge decisions sample per-decision-point susceptibilities; passive
    reading also multiplies susceptibilities by the cross-effect factor,
    baseline (vector-topic) reading multiplies the matching vector's by f.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .config import BehaviorConfig, ExperimentConfig
from .gamification import Group
from .service import NotReadyError, PlatformService
from .taxonomy import RawMetric

BINARY_CRITERIA = ("A2", "A3", "OS2", "SS2", "SS5", "N3")
VECTORS = ("phishing", "permission", "impersonation")


class CohortError(ValueError):
    pass


def _rng(*parts) -> random.Random:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass
class BehaviorProfile:
    count_state: dict[str, float]          # latent count per lower-is-better criterion
    rates: dict[str, float]                # VC1 sub-metric open rates (percent)
    binary_state: dict[str, int]           # adopted safeguards
    binary_daily: dict[str, float]         # daily adoption probability
    susceptibility: dict[str, tuple[float, ...]]  # per vector, per decision point
    improvement: float                     # multiplicative factor per read, in (0, 1]
    cross_effect: float                    # susceptibility factor per passive read
    engagement: float                      # daily probability of opening the learning screen

    def snapshot_params(self) -> dict:
        """Frozen view of everything a read can change (for no-change tests)."""
        return {
            "counts": dict(self.count_state),
            "rates": dict(self.rates),
            "binary_state": dict(self.binary_state),
            "binary_daily": dict(self.binary_daily),
            "susceptibility": {k: tuple(v) for k, v in self.susceptibility.items()},
        }


def draw_profile(rng: random.Random, cfg: BehaviorConfig) -> BehaviorProfile:
    counts = {cid: rng.uniform(lo, hi) for cid, (lo, hi) in sorted(cfg.count_ranges.items())}
    rates = {"sms": rng.uniform(*cfg.rate_range), "gmail": rng.uniform(*cfg.rate_range)}
    binary_state = {cid: 1 if rng.random() < p else 0
                    for cid, p in sorted(cfg.adoption_probs.items())}
    binary_daily = {cid: cfg.daily_adoption for cid in sorted(cfg.adoption_probs)}
    susceptibility = {
        "phishing": (rng.uniform(*cfg.click_susceptibility),
                     rng.uniform(*cfg.submit_susceptibility)),
        "permission": (rng.uniform(*cfg.click_susceptibility),),
        "impersonation": (rng.uniform(*cfg.click_susceptibility),
                          rng.uniform(*cfg.submit_susceptibility)),
    }
    return BehaviorProfile(
        count_state=counts, rates=rates,
        binary_state=binary_state, binary_daily=binary_daily,
        susceptibility=susceptibility,
        improvement=rng.uniform(*cfg.improvement_range),
        cross_effect=cfg.cross_effect,
        engagement=rng.uniform(*cfg.engagement_range),
    )


def apply_read(profile: BehaviorProfile, topic: str) -> None:
    """Modify behavior after reading an article on `topic`.

    Passive topics are criterion codes; they improve the matching latent
    parameter and nudge all susceptibilities by the cross effect.  Vector
    topics (baseline arm) improve only that vector's susceptibilities.
    """
    f = profile.improvement
    if topic in VECTORS:
        profile.susceptibility[topic] = tuple(s * f for s in profile.susceptibility[topic])
        return
    if topic in profile.count_state:
        profile.count_state[topic] *= f
    elif topic == "VC1":
        for key in profile.rates:
            profile.rates[key] *= f
    elif topic in profile.binary_daily:
        profile.binary_daily[topic] = 1.0 - f * (1.0 - profile.binary_daily[topic])
    for vector, subs in profile.susceptibility.items():
        profile.susceptibility[vector] = tuple(s * profile.cross_effect for s in subs)


class Agent:
    """One simulated trainee driving the platform through its public surface."""

    def __init__(self, user_id: str, group: Group, profile: BehaviorProfile,
                 seed: int, cfg: BehaviorConfig):
        self.user_id = user_id
        self.group = group
        self.profile = profile
        self.cfg = cfg
        self.rng = _rng("agent", seed, user_id)
        self._ignored: set[str] = set()

    # -- sensing --------------------------------------------------------------

    def daily_metrics(self) -> list[RawMetric]:
        p, rng = self.profile, self.rng
        # Spontaneous adoption of safeguards (usually only after reads).
        for cid in BINARY_CRITERIA:
            if p.binary_state[cid] == 0 and rng.random() < p.binary_daily[cid]:
                p.binary_state[cid] = 1
        metrics = []
        for cid, state in p.count_state.items():
            observed = max(0, round(state + rng.gauss(0.0, self.cfg.count_noise_sd)))
            metrics.append(RawMetric(criterion_id=cid, value=float(observed)))
        for cid in BINARY_CRITERIA:
            metrics.append(RawMetric(criterion_id=cid, value=float(p.binary_state[cid])))
        subs = {key: min(100.0, max(0.0, rate + rng.gauss(0.0, self.cfg.rate_noise)))
                for key, rate in p.rates.items()}
        metrics.append(RawMetric(criterion_id="VC1", value=0.0, sub_values=subs))
        return metrics

    # -- challenges -----------------------------------------------------------

    def decide(self, message: dict) -> tuple[list[str], dict | None] | None:
        """Sample a decision tuple for a delivered challenge; None = ignore it."""
        instance_id = message["instance_id"]
        if instance_id in self._ignored:
            return None
        if self.rng.random() < self.cfg.ignore_probability:
            self._ignored.add(instance_id)
            return None
        vector = instance_id.rsplit(":", 1)[-1]
        subs = self.profile.susceptibility[vector]
        if message["decision_points"] == 1:
            unsafe = self.rng.random() < subs[0]
            return (["unsafe"] if unsafe else ["safe"], None)
        if self.rng.random() >= subs[0]:
            return (["safe", "not_reached"], None)
        if self.rng.random() < subs[1]:
            # Fully vulnerable: the mock login form got real-looking text.
            credentials = {"username": self.user_id,
                           "password": f"hunter2-{self.user_id}"}
            return (["unsafe", "unsafe"], credentials)
        return (["unsafe", "safe"], None)

    # -- the daily loop --------------------------------------------------------

    def act(self, day: int, service: PlatformService) -> None:
        service.ingest_snapshot(self.user_id, day, self.daily_metrics())
        for message in service.pending_challenges(self.user_id):
            choice = self.decide(message)
            if choice is None:
                continue
            decisions, credentials = choice
            service.submit_response(self.user_id, message["instance_id"],
                                    decisions, credentials)
        if self.rng.random() >= self.profile.engagement:
            return
        self._view_and_read(service)
        # Thorough users go through the screen more than once a day.
        if self.rng.random() < self.cfg.revisit_factor * self.profile.engagement:
            self._view_and_read(service)

    def _view_and_read(self, service: PlatformService) -> None:
        try:
            screen = service.serve_learning(self.user_id, log_view=True)
        except NotReadyError:
            return
        topic = None
        if self.group is Group.ADAPTIVE:
            if screen["recommendations"]:
                topic = screen["recommendations"][0]["topic"]
        elif screen["unlocked"]:
            topic = screen["unlocked"][-1]["topic"]
        if topic is not None:
            apply_read(self.profile, topic)


def spawn_cohort(config: ExperimentConfig, seed: int | None = None) -> list[Agent]:
    """Deterministically draw the cohort: ids, groups (even split), profiles."""
    seed = config.seed if seed is None else seed
    n = config.cohort_size
    if n < 2:
        raise CohortError("cohort must have at least 2 users (calibration needs variance)")
    labels = [Group.ADAPTIVE] * (n // 2 + n % 2) + [Group.BASELINE] * (n // 2)
    _rng("groups", seed).shuffle(labels)
    agents = []
    for i, group in enumerate(labels):
        user_id = f"u{i:03d}"
        profile = draw_profile(_rng("profile", seed, user_id), config.behavior)
        agents.append(Agent(user_id, group, profile, seed, config.behavior))
    return agents
