"""Scheduler determinism/coverage, outcome grading, expiry, delivery."""

import json

import pytest
import scipy.stats

from isatrain.challenges import (ChallengeError, ChannelError, Decision, InMemoryChannel,
                                 InstanceState, OutcomeError, ScheduleConfig,
                                 SchedulingError, Vector, build_message, deliver,
                                 evaluate_outcome, expire_unanswered, plan_week)


def _plan_bytes(plan):
    return json.dumps([i.to_plan_dict() for i in plan], sort_keys=True).encode()


def test_identical_seed_gives_byte_identical_plans(templates):
    a = plan_week("alice", 1, 42, templates)
    b = plan_week("alice", 1, 42, templates)
    assert _plan_bytes(a) == _plan_bytes(b)
    c = plan_week("alice", 1, 43, templates)
    assert _plan_bytes(a) != _plan_bytes(c)


def test_every_week_has_one_instance_per_vector(templates):
    for week in range(5):
        plan = plan_week("bob", week, 7, templates)
        assert sorted(i.vector.value for i in plan) == sorted(v.value for v in Vector)


def test_thousand_user_weeks_cover_days_and_hours_uniformly(templates):
    config = ScheduleConfig()
    day_hist = {v: [0] * 7 for v in Vector}
    hours = {v: set() for v in Vector}
    for k in range(1000):
        plan = plan_week(f"user{k // 5}", k % 5, 99, templates, config)
        assert sorted(i.vector.value for i in plan) == sorted(v.value for v in Vector)
        for inst in plan:
            assert 0 <= inst.minute < 24 * 60
            assert config.start_minute <= inst.minute < config.end_minute
            day_hist[inst.vector][inst.day % 7] += 1
            hours[inst.vector].add(inst.minute // 60)
    active_hours = set(range(config.start_minute // 60, config.end_minute // 60))
    for vector in Vector:
        assert all(count > 0 for count in day_hist[vector]), day_hist[vector]
        assert hours[vector] == active_hours
        # Chi-square uniformity over the day-of-week histogram at alpha=0.01.
        result = scipy.stats.chisquare(day_hist[vector])
        assert result.pvalue > 0.01, (vector, day_hist[vector], result.pvalue)


def test_minimum_gap_is_respected(templates):
    config = ScheduleConfig(min_gap_minutes=120)
    for k in range(300):
        plan = plan_week(f"gap{k}", k % 5, 5, templates, config)
        stamps = sorted(i.day * 24 * 60 + i.minute for i in plan)
        assert all(b - a >= 120 for a, b in zip(stamps, stamps[1:]))


def test_infeasible_gap_is_a_scheduling_error(templates):
    config = ScheduleConfig(start_minute=9 * 60, end_minute=17 * 60,
                            min_gap_minutes=10 * 60)
    with pytest.raises(SchedulingError):
        plan_week("alice", 0, 1, templates, config)


def test_templates_rotate_without_repetition_until_pool_exhausted(templates):
    for vector in Vector:
        pool_size = len(templates.pools[vector])
        used = [next(i.template_id for i in plan_week("carol", w, 3, templates)
                     if i.vector is vector)
                for w in range(pool_size)]
        assert len(set(used)) == pool_size


# -- outcome grading -----------------------------------------------------------

def _instance(templates, vector, user="u", week=0):
    plan = plan_week(user, week, 11, templates)
    return next(i for i in plan if i.vector is vector)


S, U, NR = Decision.SAFE, Decision.UNSAFE, Decision.NOT_REACHED


@pytest.mark.parametrize("decisions,fraction", [
    ((S, NR), 1.0),
    ((U, S), 0.5),
    ((U, U), 0.0),
])
def test_two_point_fractions_exhaustive(templates, decisions, fraction):
    for vector in (Vector.PHISHING, Vector.IMPERSONATION):
        inst = _instance(templates, vector)
        outcome = evaluate_outcome(inst, decisions, resolved_at=(0, 0))
        assert outcome.fraction == fraction


@pytest.mark.parametrize("decisions,fraction", [((S,), 1.0), ((U,), 0.0)])
def test_permission_fractions_exhaustive(templates, decisions, fraction):
    inst = _instance(templates, Vector.PERMISSION)
    assert evaluate_outcome(inst, decisions, resolved_at=(0, 0)).fraction == fraction


@pytest.mark.parametrize("decisions", [(S, S), (S, U), (U, NR), (NR, S), (S,), (U, S, S)])
def test_inconsistent_decision_tuples_rejected(templates, decisions):
    inst = _instance(templates, Vector.PHISHING)
    with pytest.raises(OutcomeError):
        evaluate_outcome(inst, decisions, resolved_at=(0, 0))


def test_no_outcome_ever_pairs_safe_with_unsafe(templates):
    # Exhaustive over all decision tuples: everything that grades cleanly
    # satisfies the reachability invariant.
    inst = _instance(templates, Vector.IMPERSONATION)
    for d1 in (S, U, NR):
        for d2 in (S, U, NR):
            try:
                outcome = evaluate_outcome(inst, (d1, d2), resolved_at=(0, 0))
            except OutcomeError:
                continue
            assert outcome.decisions != (S, U)
            assert (outcome.decisions[1] is NR) == (outcome.decisions[0] is S)


# -- expiry ---------------------------------------------------------------------

def test_unanswered_instance_expires_safe_at_week_end(templates):
    inst = _instance(templates, Vector.PHISHING, week=0)
    inst.state = InstanceState.DELIVERED
    outcome = expire_unanswered(inst, now_day=6)
    assert outcome is not None
    assert outcome.fraction == 1.0
    assert outcome.expired
    assert inst.state is InstanceState.EXPIRED


def test_expiry_is_idempotent_and_waits_for_the_horizon(templates):
    inst = _instance(templates, Vector.PERMISSION, week=1)
    inst.state = InstanceState.DELIVERED
    assert expire_unanswered(inst, now_day=7) is None      # week 1 ends on day 13
    assert inst.state is InstanceState.DELIVERED
    assert expire_unanswered(inst, now_day=13) is not None
    assert expire_unanswered(inst, now_day=13) is None     # already expired


def test_resolved_instances_stay_resolved(templates):
    inst = _instance(templates, Vector.PHISHING)
    inst.state = InstanceState.RESOLVED
    assert expire_unanswered(inst, now_day=99) is None
    assert inst.state is InstanceState.RESOLVED


# -- delivery ---------------------------------------------------------------------

def test_deliver_emits_vector_appropriate_message(templates):
    channel = InMemoryChannel()
    for vector, kind in ((Vector.PHISHING, "email"),
                         (Vector.PERMISSION, "permission_prompt"),
                         (Vector.IMPERSONATION, "push_notification")):
        inst = _instance(templates, vector, user=f"dl-{vector.value}")
        message = deliver(inst, templates.get(inst.template_id), channel, now=(0, inst.minute))
        assert message["kind"] == kind
        assert inst.state is InstanceState.DELIVERED
    kinds = {message["kind"] for message in channel.messages}
    assert kinds == {"email", "permission_prompt", "push_notification"}


def test_phishing_message_carries_sender_and_link_token(templates):
    phish = templates.pools[Vector.PHISHING][0]
    inst = _instance(templates, Vector.PHISHING)
    inst.template_id = phish.template_id
    message = build_message(inst, phish)
    assert message["payload"]["sender"]
    assert message["payload"]["url_token"]


def test_permission_message_names_app_and_permission(templates):
    inst = _instance(templates, Vector.PERMISSION)
    message = build_message(inst, templates.get(inst.template_id))
    assert {"app", "permission"} <= set(message["payload"])


class _DownChannel:
    def send(self, message):
        raise ChannelError("down")


def test_channel_failure_keeps_instance_scheduled(templates):
    inst = _instance(templates, Vector.PHISHING)
    with pytest.raises(ChannelError):
        deliver(inst, templates.get(inst.template_id), _DownChannel(), now=(0, 0))
    assert inst.state is InstanceState.SCHEDULED
    assert inst.delivered_at is None
    # Retry on a healthy channel succeeds.
    deliver(inst, templates.get(inst.template_id), InMemoryChannel(), now=(0, 0))
    assert inst.state is InstanceState.DELIVERED


def test_double_delivery_rejected(templates):
    inst = _instance(templates, Vector.PHISHING)
    deliver(inst, templates.get(inst.template_id), InMemoryChannel(), now=(0, 0))
    with pytest.raises(ChallengeError):
        deliver(inst, templates.get(inst.template_id), InMemoryChannel(), now=(0, 0))
