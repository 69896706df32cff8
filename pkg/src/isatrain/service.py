"""Platform service: telemetry ingestion, daily tick, screens, event-sourced state.

The event log is the single serialization point.  Input records (registration,
snapshots, challenge responses, views, ticks) fully determine derived state:
`PlatformService.replay` rebuilds a service from a log and verifies the state
hash recorded at every tick.  No wall clocks - timestamps are logical
(day, sequence) pairs, so replays are bit-identical.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import challenges as ch
from . import gamification as gm
from .config import PlatformConfig
from .eventlog import EventLog, state_hash
from .scoring import (CalibrationStats, CriterionScore, ResolvedChallenge, ScoreRecord,
                      active_score, compute_calibration, criterion_z, daily_deltas,
                      overall_score, passive_score, z_to_scale)
from .taxonomy import RawMetric, Registry, SensorSnapshot, validate_snapshot

logger = logging.getLogger(__name__)


class PlatformError(Exception):
    pass


class UnknownUserError(PlatformError):
    pass


class UnknownInstanceError(PlatformError):
    pass


class AuthorizationError(PlatformError):
    pass


class ConflictError(PlatformError):
    pass


class NotReadyError(PlatformError):
    pass


class TickOrderError(PlatformError):
    pass


class ValidationFailed(PlatformError):
    def __init__(self, report: dict):
        super().__init__(str(report))
        self.report = report


class ReplayError(PlatformError):
    pass


@dataclass(frozen=True)
class UserAccount:
    user_id: str
    group: gm.Group
    token: str


@dataclass
class TickSummary:
    day: int
    repeated: bool = False
    records: dict[str, ScoreRecord] = field(default_factory=dict)
    penalties: dict[str, list[gm.PenaltyEvent]] = field(default_factory=dict)
    unlocks: list[dict] = field(default_factory=list)
    calibrated: bool = False


class PlatformService:
    """Single-timeline training platform; one instance per experiment/cohort."""

    def __init__(self, registry: Registry, templates: ch.TemplateLibrary,
                 catalog: gm.ArticleCatalog, config: PlatformConfig,
                 log_path=None, channel: ch.DeliveryChannel | None = None):
        self.registry = registry
        self.active_registry = registry
        self.templates = templates
        self.catalog = catalog
        self.config = config
        self.log = EventLog(log_path)
        self.channel = channel or ch.InMemoryChannel()
        self.users: dict[str, UserAccount] = {}
        self.players: dict[str, gm.PlayerState] = {}
        self.snapshots: dict[tuple[str, int], dict[str, RawMetric]] = {}
        self._snapshot_seq: dict[tuple[str, int], int] = {}
        self.current_raw: dict[str, dict[str, float]] = {}
        self.instances: dict[str, ch.ChallengeInstance] = {}
        self.user_instances: dict[str, list[str]] = {}
        self.outcomes: dict[str, ch.ChallengeOutcome] = {}
        self.resolution_order: list[str] = []
        self.views: list[dict] = []
        self.records: dict[tuple[str, int], ScoreRecord] = {}
        self.last_record: dict[str, ScoreRecord] = {}
        self.penalties_today: dict[str, list[gm.PenaltyEvent]] = {}
        self.notifications: list[dict] = []
        self.calibration: CalibrationStats | None = None
        self.ticks_done = 0
        self._delivery_attempts: dict[str, int] = {}

    # -- registration -------------------------------------------------------

    @property
    def current_day(self) -> int:
        """The in-progress day index (number of completed ticks)."""
        return self.ticks_done

    def _token_for(self, user_id: str) -> str:
        digest = hashlib.sha256(f"token|{self.config.seed}|{user_id}".encode()).hexdigest()
        return digest[:32]

    def register_user(self, user_id: str, group: gm.Group | None = None) -> UserAccount:
        if user_id in self.users:
            raise ConflictError(f"user {user_id!r} already registered")
        if self.ticks_done > 0:
            raise ConflictError("cohort is fixed once the first day has been scored")
        if group is None:
            coin = hashlib.sha256(f"group|{self.config.seed}|{user_id}".encode()).digest()[0]
            group = gm.Group.ADAPTIVE if coin % 2 == 0 else gm.Group.BASELINE
        account = UserAccount(user_id=user_id, group=group, token=self._token_for(user_id))
        self.users[user_id] = account
        self.players[user_id] = gm.PlayerState(user_id=user_id, group=group)
        self.user_instances[user_id] = []
        for week in range(self.config.weeks):
            for inst in ch.plan_week(user_id, week, self.config.seed,
                                     self.templates, self.config.schedule):
                self.instances[inst.instance_id] = inst
                self.user_instances[user_id].append(inst.instance_id)
        self.log.append("user_registered",
                        {"user_id": user_id, "group": group.value, "token": account.token})
        return account

    def user_by_token(self, token: str) -> UserAccount | None:
        return next((u for u in self.users.values() if u.token == token), None)

    # -- telemetry ----------------------------------------------------------

    def ingest_snapshot(self, user_id: str, day: int,
                        metrics: Sequence[RawMetric], revision: bool = False) -> int:
        if user_id not in self.users:
            raise UnknownUserError(user_id)
        if day != self.current_day:
            raise ValidationFailed({"valid": False, "problems": [
                f"snapshot day {day} is not the in-progress day {self.current_day}"]})
        snapshot = SensorSnapshot(user_id=user_id, day=day, metrics=tuple(metrics))
        report = validate_snapshot(snapshot, self.registry)
        if not report.valid:
            raise ValidationFailed(report.to_dict())
        normalized = {m.criterion_id: m for m in report.normalized}
        key = (user_id, day)
        if key in self.snapshots:
            if self.snapshots[key] == normalized:
                return self._snapshot_seq[key]  # exact duplicate: idempotent no-op
            if not revision:
                raise ConflictError(
                    f"snapshot for {user_id} day {day} exists; resubmit with revision flag")
        self.snapshots[key] = normalized
        seq = self.log.append("snapshot_accepted", {
            "user_id": user_id, "day": day, "revision": revision,
            "metrics": [{"criterion_id": m.criterion_id, "value": m.value,
                         "sub_values": dict(m.sub_values) if m.sub_values else None}
                        for m in normalized.values()],
        }, day=day)
        self._snapshot_seq[key] = seq
        return seq

    # -- views ----------------------------------------------------------------

    def record_view(self, user_id: str, screen: str) -> int:
        if user_id not in self.users:
            raise UnknownUserError(user_id)
        if screen not in ("home", "learning", "leaderboard"):
            raise ValidationFailed({"valid": False, "problems": [f"unknown screen {screen!r}"]})
        # The view counter, not the log position, is the timestamp: log
        # positions shift on replay as derived records regenerate.
        seq = len(self.views)
        self.views.append({"user_id": user_id, "screen": screen,
                           "day": self.current_day, "seq": seq})
        self.log.append("view_recorded",
                        {"user_id": user_id, "screen": screen, "day": self.current_day},
                        day=self.current_day)
        return seq

    # -- challenges -----------------------------------------------------------

    def _ordered_instances(self):
        return sorted(self.instances.values(), key=lambda i: (i.day, i.minute, i.instance_id))

    def deliver_due(self) -> list[dict]:
        """Deliver every scheduled instance whose time has come; retried on failure."""
        delivered = []
        for inst in self._ordered_instances():
            if inst.state is not ch.InstanceState.SCHEDULED or inst.day > self.current_day:
                continue
            template = self.templates.get(inst.template_id)
            try:
                message = ch.deliver(inst, template, self.channel,
                                     now=(self.current_day, inst.minute))
            except ch.ChannelError as exc:
                attempts = self._delivery_attempts.get(inst.instance_id, 0) + 1
                self._delivery_attempts[inst.instance_id] = attempts
                logger.warning("delivery of %s failed (attempt %d): %s",
                               inst.instance_id, attempts, exc)
                continue
            delivered.append(message)
        return delivered

    def pending_challenges(self, user_id: str) -> list[dict]:
        if user_id not in self.users:
            raise UnknownUserError(user_id)
        self.deliver_due()
        pending = []
        for iid in self.user_instances[user_id]:
            inst = self.instances[iid]
            if inst.state is ch.InstanceState.DELIVERED:
                message = ch.build_message(inst, self.templates.get(inst.template_id))
                message["decision_points"] = inst.decision_points
                pending.append(message)
        pending.sort(key=lambda m: m["instance_id"])
        return pending

    def submit_response(self, user_id: str, instance_id: str,
                        decisions: Sequence[str],
                        credentials: Mapping | None = None) -> dict:
        """Record a challenge response.  Credential fields are reduced to a
        boolean before anything is persisted."""
        if user_id not in self.users:
            raise UnknownUserError(user_id)
        inst = self.instances.get(instance_id)
        if inst is None:
            raise UnknownInstanceError(instance_id)
        if inst.user_id != user_id:
            raise AuthorizationError(f"instance {instance_id} belongs to another user")
        self.deliver_due()
        if inst.state in (ch.InstanceState.RESOLVED, ch.InstanceState.EXPIRED):
            raise ConflictError(f"instance {instance_id} already resolved")
        if inst.state is ch.InstanceState.SCHEDULED:
            raise ConflictError(f"instance {instance_id} has not been delivered yet")
        try:
            parsed = tuple(ch.Decision(d) for d in decisions)
            outcome = ch.evaluate_outcome(inst, parsed,
                                          resolved_at=(self.current_day, len(self.resolution_order)))
        except (ValueError, ch.OutcomeError) as exc:
            raise ValidationFailed({"valid": False, "problems": [str(exc)]}) from None
        inst.state = ch.InstanceState.RESOLVED
        self.outcomes[instance_id] = outcome
        self.resolution_order.append(instance_id)
        self.log.append("response_submitted", {
            "user_id": user_id, "instance_id": instance_id,
            "decisions": [d.value for d in outcome.decisions],
            "credentials_submitted": bool(credentials),
        }, day=self.current_day)
        return {"instance_id": instance_id, "fraction": outcome.fraction,
                "decisions": [d.value for d in outcome.decisions]}

    def _expire_due(self, day: int) -> None:
        # Instances stuck in Scheduled (persistent channel failure) expire too.
        for inst in self._ordered_instances():
            if inst.state not in (ch.InstanceState.DELIVERED, ch.InstanceState.SCHEDULED):
                continue
            outcome = ch.expire_unanswered(inst, now_day=day,
                                           resolved_at=(day, len(self.resolution_order)))
            if outcome is not None:
                self.outcomes[inst.instance_id] = outcome
                self.resolution_order.append(inst.instance_id)
                self.log.append("challenge_expired",
                                {"instance_id": inst.instance_id, "user_id": inst.user_id},
                                day=day)

    def _resolved_for(self, user_id: str) -> list[ResolvedChallenge]:
        return [ResolvedChallenge(vector=self.instances[iid].vector.value,
                                  fraction=self.outcomes[iid].fraction)
                for iid in self.resolution_order
                if self.instances[iid].user_id == user_id]

    def _vector_results_for(self, user_id: str) -> list[gm.VectorResult]:
        results = []
        for order, iid in enumerate(self.resolution_order):
            inst = self.instances[iid]
            if inst.user_id != user_id:
                continue
            outcome = self.outcomes[iid]
            results.append(gm.VectorResult(vector=inst.vector.value,
                                           fraction=outcome.fraction,
                                           day=outcome.resolved_at[0], order=order))
        return results

    # -- the daily tick ------------------------------------------------------

    def _score_user(self, user_id: str, day: int, raws: Mapping[str, float]) -> ScoreRecord:
        z_map: dict[str, float] = {}
        criteria: dict[str, CriterionScore] = {}
        assert self.calibration is not None
        for criterion in self.active_registry.active_criteria():
            if criterion.id not in raws or criterion.id not in self.calibration.per_criterion:
                continue
            raw = raws[criterion.id]
            z = criterion_z(raw, criterion, self.calibration)
            z_map[criterion.id] = z
            criteria[criterion.id] = CriterionScore(criterion.id, raw, z, z_to_scale(z))
        passive = passive_score(z_map, self.active_registry)
        active = active_score(self._resolved_for(user_id), self.config.window)
        record = ScoreRecord(
            user_id=user_id, day=day, criteria=criteria,
            area_scaled=dict(passive.area_scaled), passive=passive.scaled,
            active=active, overall=overall_score(passive.scaled, active))
        prev = self.records.get((user_id, day - 1))
        if prev is not None:
            record.deltas, record.passive_delta = daily_deltas(record, prev)
        return record

    def _calibration_snapshots(self) -> list[SensorSnapshot]:
        snaps = []
        for (user_id, day), metrics in self.snapshots.items():
            if day <= self.config.last_calibration_day:
                snaps.append(SensorSnapshot(user_id=user_id, day=day,
                                            metrics=tuple(metrics.values())))
        return snaps

    def _freeze_calibration(self) -> dict[str, dict[str, float]]:
        snaps = self._calibration_snapshots()
        with_data = {s.user_id for s in snaps}
        missing = sorted(set(self.users) - with_data)
        if missing:
            logger.warning("users without calibration data are not scored: %s", missing)
        self.calibration = compute_calibration(snaps, self.registry)
        self.active_registry = self.registry.deactivate(self.calibration.inactive)
        self.log.append("calibration_frozen", {
            "stats": {cid: {"mu": s.mu, "sigma": s.sigma}
                      for cid, s in sorted(self.calibration.per_criterion.items())},
            "inactive": list(self.calibration.inactive),
            "cohort_size": self.calibration.cohort_size,
        }, day=self.config.last_calibration_day)
        # Per-user calibration means double as the raws of the initial score.
        means: dict[str, dict[str, float]] = {}
        for snap in snaps:
            per = means.setdefault(snap.user_id, {})
            for m in snap.metrics:
                per.setdefault(m.criterion_id, []).append(float(m.value))  # type: ignore[arg-type]
        return {uid: {cid: sum(vs) / len(vs) for cid, vs in per.items()}
                for uid, per in means.items()}

    def midnight_tick(self, day: int) -> TickSummary:
        """Close day `day`: resolve expiries, score everyone, apply gamification.

        Ticks are strictly sequential and idempotent: re-running a completed
        day changes nothing and emits nothing.
        """
        if day < 0 or day >= self.config.total_days:
            raise TickOrderError(f"day {day} outside the experiment horizon")
        if day < self.ticks_done:
            return TickSummary(day=day, repeated=True)
        if day > self.ticks_done:
            raise TickOrderError(
                f"tick for day {day} but day {self.ticks_done} has not been closed")

        self.deliver_due()
        self._expire_due(day)
        for user_id in self.users:
            key = (user_id, day)
            if key in self.snapshots:
                merged = self.current_raw.setdefault(user_id, {})
                for cid, metric in self.snapshots[key].items():
                    merged[cid] = float(metric.value)

        summary = TickSummary(day=day)
        if day < self.config.last_calibration_day:
            self._complete_tick(day)
            return summary

        initial_raws: dict[str, dict[str, float]] | None = None
        if day == self.config.last_calibration_day:
            initial_raws = self._freeze_calibration()
            summary.calibrated = True
        if self.calibration is None:
            raise NotReadyError("no calibration stats; did the calibration window pass?")

        self.penalties_today = {}
        for user_id in self.users:
            if initial_raws is not None:
                raws = initial_raws.get(user_id)
            else:
                raws = self.current_raw.get(user_id)
            if not raws:
                continue
            record = self._score_user(user_id, day, raws)
            self.records[(user_id, day)] = record
            self.last_record[user_id] = record
            summary.records[user_id] = record
            self.log.append("score_record", record.to_json_dict(), day=day)

            prev = self.records.get((user_id, day - 1))
            if prev is not None:
                events = gm.prt_penalties(prev, record, self.active_registry)
                if events:
                    self.penalties_today[user_id] = events
                    summary.penalties[user_id] = events
                    for event in events:
                        self.log.append("penalty", event.to_dict(), day=day)

            player = self.players[user_id]
            points = record.overall if record.overall is not None else record.passive
            if player.points != points:
                player.points = points
                player.points_reached_day = day
            player.level = gm.assign_level(points, self.config.thresholds)

            if (player.group is gm.Group.BASELINE
                    and gm.is_release_day(day, self.config.release_offsets)):
                pick = gm.select_baseline_article(
                    day, self._vector_results_for(user_id),
                    player.unlocked_articles, self.catalog,
                    self.config.baseline_max_unlocks)
                if pick is not None:
                    item, reason = pick
                    unlock = gm.Unlock(article_id=item.article_id, vector=item.topic,
                                       grade=item.grade or 0, day=day, reason=reason)
                    player.unlocked_articles = player.unlocked_articles + (unlock,)
                    self.log.append("article_unlocked",
                                    {"user_id": user_id, **unlock.to_dict()}, day=day)
                    notification = {"user_id": user_id, "article_id": item.article_id,
                                    "day": day, "reason": reason}
                    self.notifications.append(notification)
                    self.log.append("notification", notification, day=day)
                    summary.unlocks.append({"user_id": user_id, **unlock.to_dict()})

        self._complete_tick(day)
        return summary

    def _complete_tick(self, day: int) -> None:
        self.ticks_done = day + 1
        self.log.append("tick_completed", {"day": day, "state_hash": self.state_hash()}, day=day)

    # -- screens --------------------------------------------------------------

    def _require_user(self, user_id: str) -> UserAccount:
        try:
            return self.users[user_id]
        except KeyError:
            raise UnknownUserError(user_id) from None

    def serve_home(self, user_id: str) -> dict:
        account = self._require_user(user_id)
        record = self.last_record.get(user_id)
        player = self.players[user_id]
        return {
            "user_id": user_id,
            "group": account.group.value,
            "day": record.day if record else None,
            "overall": record.overall if record else None,
            "active": record.active if record else None,
            "passive": record.passive if record else None,
            "level": player.level.value if player.level else None,
        }

    def serve_learning(self, user_id: str, log_view: bool = True) -> dict:
        account = self._require_user(user_id)
        record = self.last_record.get(user_id)
        if record is None:
            raise NotReadyError("no scores yet; the first scored day has not closed")
        if log_view:
            self.record_view(user_id, "learning")
        deltas = record.deltas or {}
        adaptive_links = {}
        if account.group is gm.Group.ADAPTIVE:
            recs = gm.recommend_adaptive(record, self.catalog,
                                         self.config.article_availability_week)
            adaptive_links = {r.article.topic: r.article.url for r in recs}
        else:
            recs = []
        rows = []
        for criterion in self.active_registry.active_criteria():
            cs = record.criteria.get(criterion.id)
            if cs is None:
                continue
            rows.append({
                "criterion_id": criterion.id,
                "description": criterion.description,
                "scaled": cs.scaled,
                "delta": deltas.get(criterion.id),
                "article_url": adaptive_links.get(criterion.id),
            })
        player = self.players[user_id]
        return {
            "user_id": user_id,
            "day": record.day,
            "passive": record.passive,
            "passive_delta": record.passive_delta,
            "rows": rows,
            "penalties": [e.to_dict() for e in self.penalties_today.get(user_id, [])],
            "recommendations": [{
                "article_id": r.article.article_id, "topic": r.article.topic,
                "url": r.article.url, "score": r.score, "delta": r.delta,
            } for r in recs],
            "unlocked": [{
                "article_id": u.article_id, "topic": u.vector, "grade": u.grade,
                "day": u.day, "url": self.catalog.get(u.article_id).url,
            } for u in player.unlocked_articles],
        }

    def serve_leaderboard(self) -> list[dict]:
        ranked = gm.leaderboard(self.players.values())
        return [{
            "rank": i + 1,
            "user_id": p.user_id,
            "points": p.points,
            "level": p.level.value if p.level else None,
        } for i, p in enumerate(ranked)]

    # -- state identity and replay --------------------------------------------

    def state_dict(self) -> dict:
        return {
            "ticks_done": self.ticks_done,
            "users": {u.user_id: {"group": u.group.value, "token": u.token}
                      for u in self.users.values()},
            "players": {p.user_id: {
                "points": p.points,
                "level": p.level.value if p.level else None,
                "points_reached_day": p.points_reached_day,
                "unlocks": [u.to_dict() for u in p.unlocked_articles],
            } for p in self.players.values()},
            "snapshots": {f"{uid}:{day}": {cid: {
                "value": m.value,
                "sub_values": dict(m.sub_values) if m.sub_values else None,
            } for cid, m in metrics.items()}
                for (uid, day), metrics in sorted(self.snapshots.items())},
            "current_raw": self.current_raw,
            "instances": {iid: {
                "user_id": i.user_id, "template_id": i.template_id,
                "vector": i.vector.value, "week": i.week, "day": i.day,
                "minute": i.minute, "state": i.state.value,
                "delivered_at": list(i.delivered_at) if i.delivered_at else None,
            } for iid, i in sorted(self.instances.items())},
            "outcomes": {iid: {
                "decisions": [d.value for d in o.decisions],
                "fraction": o.fraction,
                "resolved_at": list(o.resolved_at),
                "expired": o.expired,
            } for iid, o in sorted(self.outcomes.items())},
            "resolution_order": self.resolution_order,
            "views": self.views,
            "records": {f"{uid}:{day}": r.to_json_dict()
                        for (uid, day), r in sorted(self.records.items())},
            "calibration": None if self.calibration is None else {
                "per_criterion": {cid: {"mu": s.mu, "sigma": s.sigma}
                                  for cid, s in sorted(self.calibration.per_criterion.items())},
                "cohort_size": self.calibration.cohort_size,
                "inactive": list(self.calibration.inactive),
            },
            "notifications": self.notifications,
        }

    def state_hash(self) -> str:
        return state_hash(self.state_dict())

    @classmethod
    def replay(cls, records: Sequence[dict], registry: Registry,
               templates: ch.TemplateLibrary, catalog: gm.ArticleCatalog,
               config: PlatformConfig, verify: bool = True) -> "PlatformService":
        """Rebuild a service by re-applying the log's input records.

        Derived records (scores, penalties, unlocks...) regenerate on their
        own; with `verify` the state hash stored at each tick must match.
        """
        svc = cls(registry, templates, catalog, config)
        for rec in records:
            kind, payload = rec["kind"], rec["payload"]
            if kind == "user_registered":
                svc.register_user(payload["user_id"], gm.Group(payload["group"]))
            elif kind == "snapshot_accepted":
                metrics = [RawMetric(criterion_id=m["criterion_id"], value=m["value"],
                                     sub_values=m.get("sub_values"))
                           for m in payload["metrics"]]
                svc.ingest_snapshot(payload["user_id"], payload["day"], metrics,
                                    revision=payload.get("revision", False))
            elif kind == "view_recorded":
                svc.record_view(payload["user_id"], payload["screen"])
            elif kind == "response_submitted":
                svc.submit_response(payload["user_id"], payload["instance_id"],
                                    payload["decisions"])
            elif kind == "tick_completed":
                svc.midnight_tick(payload["day"])
                if verify and svc.state_hash() != payload["state_hash"]:
                    raise ReplayError(
                        f"state diverged from the log at day {payload['day']}")
        return svc
