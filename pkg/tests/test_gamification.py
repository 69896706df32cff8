"""Levels, leaderboard, penalties, and both article-recommendation policies."""

import pytest
from hypothesis import given, strategies as st

from isatrain.gamification import (ArticleCatalog, ArticleItem, GamificationError, Group,
                                   Level, LevelThresholds, PlayerState, Unlock,
                                   VectorResult, assign_level, is_release_day,
                                   leaderboard, prt_penalties, recommend_adaptive,
                                   select_baseline_article)
from isatrain.scoring import CriterionScore, ScoreRecord, ScoringError


def _record(user, day, scaled, raws=None, deltas=None, passive=50.0):
    raws = raws or {}
    return ScoreRecord(
        user_id=user, day=day,
        criteria={cid: CriterionScore(cid, raws.get(cid, 0.0), 0.0, s)
                  for cid, s in scaled.items()},
        area_scaled={}, passive=passive, active=None, overall=None,
        deltas=deltas, passive_delta=None)


# -- levels ----------------------------------------------------------------------

def test_level_boundaries():
    assert assign_level(0) is Level.BEGINNER
    assert assign_level(49.999) is Level.BEGINNER
    assert assign_level(50) is Level.INTERMEDIATE
    assert assign_level(74.999) is Level.INTERMEDIATE
    assert assign_level(75) is Level.PRO
    assert assign_level(100) is Level.PRO


def test_bad_thresholds_rejected():
    with pytest.raises(GamificationError):
        LevelThresholds(intermediate_at=80, pro_at=75)
    with pytest.raises(GamificationError):
        assign_level(101)


@given(st.floats(0, 100), st.floats(0, 100))
def test_level_monotone_in_points(a, b):
    order = [Level.BEGINNER, Level.INTERMEDIATE, Level.PRO]
    lo, hi = min(a, b), max(a, b)
    assert order.index(assign_level(lo)) <= order.index(assign_level(hi))


# -- leaderboard -------------------------------------------------------------------

def _player(uid, points, reached=0):
    return PlayerState(user_id=uid, group=Group.ADAPTIVE, points=points,
                       points_reached_day=reached)


def test_leaderboard_orders_by_points():
    ranking = leaderboard([_player("a", 70), _player("b", 50)])
    assert [p.user_id for p in ranking] == ["a", "b"]


def test_tie_breaks_by_earliest_achievement_then_id():
    ranking = leaderboard([_player("b", 70, reached=3), _player("a", 70, reached=5)])
    assert [p.user_id for p in ranking] == ["b", "a"]
    ranking = leaderboard([_player("b", 70, reached=3), _player("a", 70, reached=3)])
    assert [p.user_id for p in ranking] == ["a", "b"]


def test_empty_cohort_and_unscored_players():
    assert leaderboard([]) == []
    ranking = leaderboard([PlayerState("z", Group.BASELINE), _player("a", 10)])
    assert [p.user_id for p in ranking] == ["a", "z"]


@given(st.lists(st.tuples(st.text(min_size=1, max_size=4),
                          st.floats(0, 100), st.integers(0, 30)),
                min_size=0, max_size=20))
def test_leaderboard_is_a_stable_total_order(rows):
    players = [_player(f"{uid}-{i}", pts, day) for i, (uid, pts, day) in enumerate(rows)]
    first = leaderboard(players)
    second = leaderboard(list(reversed(players)))
    assert [p.user_id for p in first] == [p.user_id for p in second]
    for left, right in zip(first, first[1:]):
        assert (left.points, -left.points_reached_day) >= (right.points, -right.points_reached_day) \
            or left.points > right.points or left.user_id < right.user_id


# -- penalties ----------------------------------------------------------------------

def test_missing_safeguard_penalizes_every_day(registry):
    yesterday = _record("u", 9, {"SS2": 30.0}, raws={"SS2": 0.0})
    today = _record("u", 10, {"SS2": 30.0}, raws={"SS2": 0.0}, deltas={"SS2": 0.0})
    events = prt_penalties(yesterday, today, registry)
    assert [e.criterion_id for e in events] == ["SS2"]
    assert events[0].reason == "missing_safeguard"
    assert events[0].points_effect == pytest.approx(-20.0)
    # Same condition tomorrow: another event.
    tomorrow = _record("u", 11, {"SS2": 30.0}, raws={"SS2": 0.0}, deltas={"SS2": 0.0})
    assert len(prt_penalties(today, tomorrow, registry)) == 1


def test_cleared_safeguard_stops_penalizing(registry):
    yesterday = _record("u", 9, {"SS2": 30.0}, raws={"SS2": 0.0})
    today = _record("u", 10, {"SS2": 80.0}, raws={"SS2": 1.0}, deltas={"SS2": 50.0})
    assert prt_penalties(yesterday, today, registry) == []


def test_score_drop_penalizes_once(registry):
    yesterday = _record("u", 9, {"AI1": 60.0}, raws={"AI1": 2.0})
    today = _record("u", 10, {"AI1": 45.0}, raws={"AI1": 4.0}, deltas={"AI1": -15.0})
    events = prt_penalties(yesterday, today, registry)
    assert [(e.criterion_id, e.reason) for e in events] == [("AI1", "score_drop")]
    assert events[0].points_effect == -15.0


def test_no_penalties_when_all_clear(registry):
    yesterday = _record("u", 9, {"AI1": 50.0, "SS2": 80.0}, raws={"SS2": 1.0})
    today = _record("u", 10, {"AI1": 55.0, "SS2": 80.0}, raws={"SS2": 1.0},
                    deltas={"AI1": 5.0, "SS2": 0.0})
    assert prt_penalties(yesterday, today, registry) == []


def test_at_most_one_event_per_criterion_per_day(registry):
    # A safeguard that just dropped to zero also has a negative delta;
    # the standing-safeguard reason wins and no duplicate is emitted.
    yesterday = _record("u", 9, {"SS2": 80.0}, raws={"SS2": 1.0})
    today = _record("u", 10, {"SS2": 30.0}, raws={"SS2": 0.0}, deltas={"SS2": -50.0})
    events = prt_penalties(yesterday, today, registry)
    assert [(e.criterion_id, e.reason) for e in events] == [("SS2", "missing_safeguard")]


def test_penalties_require_consecutive_records(registry):
    with pytest.raises(ScoringError):
        prt_penalties(_record("u", 5, {}), _record("u", 9, {}), registry)


# -- adaptive recommendations -----------------------------------------------------

def _full_record(day, deltas=None, scores=None):
    scores = scores or {}
    cids = ["AI1", "AI2", "AI3", "AH1", "AH3", "B1", "VC1", "VC2",
            "A2", "A3", "OS2", "SS2", "SS5", "N1", "N3", "PC1"]
    return _record("u", day, {cid: scores.get(cid, 50.0) for cid in cids}, deltas=deltas)


def test_negative_delta_topics_rank_first(catalog):
    deltas = {cid: 0.0 for cid in ("SS2", "SS5", "AI1")}
    deltas.update({"SS2": -10.0, "SS5": -10.0})
    recs = recommend_adaptive(_full_record(14, deltas=deltas), catalog)
    assert {r.article.topic for r in recs[:2]} == {"SS2", "SS5"}
    assert recs[0].delta == -10.0


def test_empty_before_week_two(catalog):
    assert recommend_adaptive(_full_record(3), catalog) == []
    assert recommend_adaptive(_full_record(6), catalog) == []
    assert len(recommend_adaptive(_full_record(7), catalog)) == 16


def test_equal_deltas_order_by_score_then_topic(catalog):
    scores = {"B1": 20.0, "N1": 20.0}
    recs = recommend_adaptive(_full_record(14, scores=scores), catalog)
    assert [r.article.topic for r in recs[:2]] == ["B1", "N1"]


def test_recommendations_are_a_permutation_of_the_catalog(catalog):
    recs = recommend_adaptive(_full_record(21, deltas={"AI1": -3.0}), catalog)
    assert sorted(r.article.article_id for r in recs) == \
        sorted(a.article_id for a in catalog.adaptive)


# -- baseline unlock policy ---------------------------------------------------------

def _failure(vector, day, order, fraction=0.0):
    return VectorResult(vector=vector, fraction=fraction, day=day, order=order)


def test_repeated_phishing_failures_escalate_grades(catalog):
    unlocked = []
    results = [_failure("phishing", 8, 0)]
    pick, reason = select_baseline_article(9, results, unlocked, catalog)
    assert pick.topic == "phishing" and reason == "escalation:phishing"
    first_grade = pick.grade
    unlocked.append(Unlock(pick.article_id, "phishing", pick.grade, 9, reason))
    results.append(_failure("phishing", 15, 1))
    pick2, _ = select_baseline_article(16, results, unlocked, catalog)
    assert pick2.topic == "phishing"
    assert pick2.grade > first_grade


def test_unlocks_stop_at_the_cap(catalog):
    unlocked = [Unlock(f"a{i}", "phishing", 1, i, "rotation") for i in range(8)]
    assert select_baseline_article(30, [], unlocked, catalog) is None


def test_no_failures_cycles_vectors_in_fixed_order(catalog):
    unlocked = []
    seen = []
    for day in (9, 12, 16):
        pick, reason = select_baseline_article(day, [], unlocked, catalog)
        assert reason.startswith("rotation:")
        seen.append(pick.topic)
        unlocked.append(Unlock(pick.article_id, pick.topic, pick.grade, day, reason))
    assert seen == ["phishing", "permission", "impersonation"]
    grades = [u.grade for u in unlocked]
    assert grades == [min(i.grade for i in catalog.baseline_for(v)) for v in seen]


def test_most_recent_unaddressed_failure_wins(catalog):
    results = [_failure("permission", 8, 0), _failure("impersonation", 9, 1)]
    pick, _ = select_baseline_article(10, results, [], catalog)
    assert pick.topic == "impersonation"


def test_addressed_failures_do_not_retrigger(catalog):
    results = [_failure("permission", 8, 0)]
    unlocked = [Unlock("baseline_permission_1", "permission", 2, 9, "escalation:permission")]
    pick, reason = select_baseline_article(12, results, unlocked, catalog)
    assert reason.startswith("rotation:")


def test_exhausted_vector_falls_back_to_next_neediest(catalog):
    phishing_items = sorted(catalog.baseline_for("phishing"), key=lambda i: i.grade)
    unlocked = [Unlock(i.article_id, "phishing", i.grade, d, "escalation:phishing")
                for d, i in enumerate(phishing_items[:5])]
    results = [_failure("phishing", 20, 0), _failure("permission", 18, 1)]
    pick, reason = select_baseline_article(21, results, unlocked, catalog)
    assert pick.topic == "permission"


def test_escalation_sequences_are_nondecreasing_and_capped(catalog):
    # Drive the policy with failures every release day; grades never regress.
    unlocked, results = [], []
    order = 0
    for week in range(1, 5):
        for offset in (2, 5):
            day = week * 7 + offset
            results.append(_failure("phishing", day - 1, order)); order += 1
            pick = select_baseline_article(day, results, unlocked, catalog)
            if pick is None:
                continue
            item, reason = pick
            unlocked.append(Unlock(item.article_id, item.topic, item.grade, day, reason))
    assert len(unlocked) <= 8
    by_vector = {}
    for u in unlocked:
        by_vector.setdefault(u.vector, []).append(u.grade)
    for grades in by_vector.values():
        assert grades == sorted(grades)


def test_release_day_calendar():
    assert not is_release_day(2)          # calibration week
    assert is_release_day(9)              # week 1, offset 2
    assert is_release_day(12)             # week 1, offset 5
    assert not is_release_day(14)
    assert is_release_day(33)


# -- catalog invariants ----------------------------------------------------------

def test_catalog_shape(catalog):
    assert len(catalog.adaptive) == 16
    assert len(catalog.baseline) == 16
    assert {i.topic for i in catalog.baseline} == {"phishing", "permission", "impersonation"}
    assert all(i.grade is None for i in catalog.adaptive)
    assert all(1 <= i.grade <= 5 for i in catalog.baseline)


def test_catalog_rejects_graded_adaptive_items():
    with pytest.raises(GamificationError):
        ArticleCatalog([ArticleItem("x", "AI1", "http://e", grade=3, group=Group.ADAPTIVE)])
    with pytest.raises(GamificationError):
        ArticleCatalog([ArticleItem("x", "phishing", "http://e", grade=None, group=Group.BASELINE)])
