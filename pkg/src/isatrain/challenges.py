"""Attack-simulation challenges: template library, weekly scheduler, outcomes.

The scheduler is deterministic: identical (user, week, seed, config) inputs
produce byte-identical plans.  Instance state transitions are single-writer;
the platform service serializes them.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol, Sequence

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

DAYS_PER_WEEK = 7
MINUTES_PER_DAY = 24 * 60


class ChallengeError(ValueError):
    pass


class SchedulingError(ChallengeError):
    pass


class OutcomeError(ChallengeError):
    pass


class ChannelError(RuntimeError):
    """Delivery channel failure; the instance stays Scheduled for retry."""


class Vector(Enum):
    PHISHING = "phishing"
    PERMISSION = "permission"
    IMPERSONATION = "impersonation"


class Decision(Enum):
    SAFE = "safe"
    UNSAFE = "unsafe"
    NOT_REACHED = "not_reached"


class InstanceState(Enum):
    SCHEDULED = "scheduled"
    DELIVERED = "delivered"
    RESOLVED = "resolved"
    EXPIRED = "expired"


# Two decision points: engage with the lure, then hand over credentials.
# Permission prompts have a single grant/deny decision.
DECISION_POINTS = {Vector.PHISHING: 2, Vector.PERMISSION: 1, Vector.IMPERSONATION: 2}

MESSAGE_KIND = {
    Vector.PHISHING: "email",
    Vector.PERMISSION: "permission_prompt",
    Vector.IMPERSONATION: "push_notification",
}


@dataclass(frozen=True)
class ChallengeTemplate:
    template_id: str
    vector: Vector
    payload: Mapping[str, str]

    @property
    def decision_points(self) -> int:
        return DECISION_POINTS[self.vector]


@dataclass
class ChallengeInstance:
    instance_id: str
    user_id: str
    template_id: str
    vector: Vector
    week: int
    day: int      # absolute day index from experiment start
    minute: int   # minute of day within the active-hours window
    decision_points: int
    state: InstanceState = InstanceState.SCHEDULED
    delivered_at: tuple[int, int] | None = None  # (day, minute)

    def to_plan_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "user_id": self.user_id,
            "template_id": self.template_id,
            "vector": self.vector.value,
            "week": self.week,
            "day": self.day,
            "minute": self.minute,
            "decision_points": self.decision_points,
        }


@dataclass(frozen=True)
class ChallengeOutcome:
    instance_id: str
    decisions: tuple[Decision, ...]
    fraction: float
    resolved_at: tuple[int, int]  # (day, resolution sequence)
    expired: bool = False


@dataclass(frozen=True)
class ScheduleConfig:
    start_minute: int = 9 * 60    # deliveries begin 09:00
    end_minute: int = 21 * 60     # and end 21:00
    min_gap_minutes: int = 120
    days_per_week: int = DAYS_PER_WEEK
    max_attempts: int = 1000

    @property
    def window_span(self) -> int:
        return self.end_minute - self.start_minute

    def __post_init__(self):
        if not 0 <= self.start_minute < self.end_minute <= MINUTES_PER_DAY:
            raise SchedulingError("active-hours window is empty or out of range")
        if self.min_gap_minutes < 0:
            raise SchedulingError("gap must be non-negative")


class TemplateLibrary:
    def __init__(self, templates: Sequence[ChallengeTemplate]):
        self.templates = tuple(templates)
        self._by_id = {t.template_id: t for t in self.templates}
        if len(self._by_id) != len(self.templates):
            raise ChallengeError("duplicate template id")
        self.pools: dict[Vector, tuple[ChallengeTemplate, ...]] = {
            v: tuple(t for t in self.templates if t.vector is v) for v in Vector
        }
        empty = [v.value for v, pool in self.pools.items() if not pool]
        if empty:
            raise ChallengeError(f"no templates for vectors: {empty}")

    def get(self, template_id: str) -> ChallengeTemplate:
        try:
            return self._by_id[template_id]
        except KeyError:
            raise ChallengeError(f"unknown template {template_id!r}") from None


def default_template_path() -> Path:
    return Path(__file__).parent / "data" / "challenge_templates.toml"


def load_templates(source: str | Path | None = None) -> TemplateLibrary:
    path = Path(source) if source else default_template_path()
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    templates = []
    for item in data.get("templates", []):
        try:
            vector = Vector(item["vector"])
            payload = {k: v for k, v in item.items() if k not in ("id", "vector")}
            templates.append(ChallengeTemplate(item["id"], vector, payload))
        except (KeyError, ValueError) as exc:
            raise ChallengeError(f"bad template entry {item!r}: {exc}") from None
    return TemplateLibrary(templates)


def _derived_rng(*parts) -> random.Random:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _template_for_week(user_id: str, week: int, seed: int,
                       pool: Sequence[ChallengeTemplate]) -> ChallengeTemplate:
    # Round-robin without repetition: each cycle through the pool uses a fresh
    # per-user shuffle, so nothing repeats before the pool is exhausted.
    cycle, idx = divmod(week, len(pool))
    order = list(range(len(pool)))
    _derived_rng("rotation", seed, user_id, pool[0].vector.value, cycle).shuffle(order)
    return pool[order[idx]]


def plan_week(user_id: str, week_index: int, seed: int,
              library: TemplateLibrary,
              config: ScheduleConfig = ScheduleConfig()) -> list[ChallengeInstance]:
    """Schedule one challenge per vector at a random day/time of the week.

    Deterministic in (user_id, week_index, seed, config).  Any two instances
    are at least `min_gap_minutes` apart in absolute time.
    """
    if config.min_gap_minutes > config.window_span:
        raise SchedulingError(
            f"gap {config.min_gap_minutes}min cannot fit twice in a "
            f"{config.window_span}min active window")
    rng = _derived_rng("plan", seed, user_id, week_index)
    vectors = list(Vector)
    for _ in range(config.max_attempts):
        slots = [(rng.randrange(config.days_per_week),
                  rng.randint(config.start_minute, config.end_minute - 1))
                 for _ in vectors]
        stamps = [d * MINUTES_PER_DAY + m for d, m in slots]
        if all(abs(a - b) >= config.min_gap_minutes
               for i, a in enumerate(stamps) for b in stamps[i + 1:]):
            break
    else:
        raise SchedulingError("could not satisfy gap constraint within attempt budget")
    instances = []
    for vector, (day_in_week, minute) in zip(vectors, slots):
        template = _template_for_week(user_id, week_index, seed, library.pools[vector])
        instances.append(ChallengeInstance(
            instance_id=f"{user_id}:w{week_index}:{vector.value}",
            user_id=user_id,
            template_id=template.template_id,
            vector=vector,
            week=week_index,
            day=week_index * config.days_per_week + day_in_week,
            minute=minute,
            decision_points=template.decision_points,
        ))
    instances.sort(key=lambda i: (i.day, i.minute, i.instance_id))
    return instances


def evaluate_outcome(instance: ChallengeInstance, decisions: Sequence[Decision],
                     resolved_at: tuple[int, int], expired: bool = False) -> ChallengeOutcome:
    """Grade a decision tuple: 1 full credit, 0.5 for one of two, 0 otherwise.

    Point 2 is NotReached exactly when point 1 was Safe - credentials cannot
    be submitted on a page that was never opened.
    """
    decisions = tuple(decisions)
    if len(decisions) != instance.decision_points:
        raise OutcomeError(
            f"{instance.instance_id}: expected {instance.decision_points} "
            f"decisions, got {len(decisions)}")
    if instance.decision_points == 1:
        first, = decisions
        if first is Decision.NOT_REACHED:
            raise OutcomeError("decision point 1 is always reached")
        fraction = 1.0 if first is Decision.SAFE else 0.0
    else:
        first, second = decisions
        if first is Decision.NOT_REACHED:
            raise OutcomeError("decision point 1 is always reached")
        if (second is Decision.NOT_REACHED) != (first is Decision.SAFE):
            raise OutcomeError("decision point 2 is reached iff point 1 was unsafe")
        if first is Decision.SAFE:
            fraction = 1.0
        elif second is Decision.SAFE:
            fraction = 0.5
        else:
            fraction = 0.0
    return ChallengeOutcome(instance_id=instance.instance_id, decisions=decisions,
                            fraction=fraction, resolved_at=resolved_at, expired=expired)


def safe_decisions(decision_points: int) -> tuple[Decision, ...]:
    if decision_points == 1:
        return (Decision.SAFE,)
    return (Decision.SAFE, Decision.NOT_REACHED)


def expiry_day(instance: ChallengeInstance, days_per_week: int = DAYS_PER_WEEK) -> int:
    """Default horizon: the last day of the instance's week."""
    return (instance.week + 1) * days_per_week - 1


def expire_unanswered(instance: ChallengeInstance, now_day: int,
                      horizon_day: int | None = None,
                      resolved_at: tuple[int, int] | None = None) -> ChallengeOutcome | None:
    """Resolve an ignored challenge as safe behavior once its horizon passes.

    Ignoring a lure is not vulnerability; the outcome gets full credit.
    Resolved/expired instances are left untouched (idempotent).
    """
    if instance.state in (InstanceState.RESOLVED, InstanceState.EXPIRED):
        return None
    horizon = expiry_day(instance) if horizon_day is None else horizon_day
    if now_day < horizon:
        return None
    instance.state = InstanceState.EXPIRED
    outcome = evaluate_outcome(
        instance, safe_decisions(instance.decision_points),
        resolved_at=resolved_at if resolved_at is not None else (now_day, 0),
        expired=True)
    return outcome


class DeliveryChannel(Protocol):
    def send(self, message: dict) -> None: ...


class InMemoryChannel:
    """Collects delivered messages; the default for tests and simulation."""

    def __init__(self):
        self.messages: list[dict] = []

    def send(self, message: dict) -> None:
        self.messages.append(message)


class CallbackChannel:
    """Adapts any callable (webhook poster, file writer) into a channel."""

    def __init__(self, fn):
        self._fn = fn

    def send(self, message: dict) -> None:
        self._fn(message)


def build_message(instance: ChallengeInstance, template: ChallengeTemplate) -> dict:
    return {
        "instance_id": instance.instance_id,
        "user_id": instance.user_id,
        "kind": MESSAGE_KIND[instance.vector],
        "payload": dict(template.payload),
        "delivered_at": list(instance.delivered_at) if instance.delivered_at else None,
    }


def deliver(instance: ChallengeInstance, template: ChallengeTemplate,
            channel: DeliveryChannel, now: tuple[int, int]) -> dict:
    """Emit the vector-appropriate message; on channel failure the instance
    stays Scheduled and the caller retries with backoff."""
    if instance.state is not InstanceState.SCHEDULED:
        raise ChallengeError(f"{instance.instance_id} already {instance.state.value}")
    message = build_message(instance, template)
    message["delivered_at"] = list(now)
    channel.send(message)  # may raise ChannelError; state untouched in that case
    instance.state = InstanceState.DELIVERED
    instance.delivered_at = now
    return message
