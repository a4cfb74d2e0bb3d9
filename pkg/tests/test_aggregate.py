from __future__ import annotations

import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from faceoff_forge.aggregate import (
    ALL_EXPECTED_KEYS,
    BucketKey,
    LeagueBaselines,
    Tally,
    build_baselines,
    empty_directions,
    league_direction_rates,
    merge,
    tally,
    wdbe_expected_table,
)
from faceoff_forge.classify import ClassifiedFaceoff, classify_all
from faceoff_forge.rink import Deployment as S, DirectionSector as D, Side, ZoneSection as Z
from faceoff_forge.synth import generate_season, random_params


def row(player="P", win=True, zone=Z.OFFENSIVE, direction=D.BACKWARD, dep=S.STRONG, clean=True, event=False,
        side=Side.LEFT, elapsed=1.0, distance=10.0):
    return ClassifiedFaceoff(
        faceoff_id="F", player=player, team="T", is_winner=win, zone=zone, side=side,
        direction=direction, deployment=dep, clean=clean, elapsed_s=elapsed, distance_ft=distance,
        shot_event=event, zone_change=False,
    )


rows_strategy = st.lists(
    st.builds(
        row,
        player=st.sampled_from(["A", "B", "C"]),
        win=st.booleans(),
        zone=st.sampled_from(list(Z)),
        direction=st.sampled_from(list(D)),
        dep=st.sampled_from(list(S)),
        clean=st.booleans(),
        event=st.booleans(),
        elapsed=st.integers(0, 50).map(lambda x: x / 10),
        distance=st.integers(0, 200).map(lambda x: x / 10),
    ),
    max_size=30,
)


def test_empty_stream():
    assert tally([]) == Tally()


def test_counting():
    t = tally([row(event=True), row(event=True), row()])
    b = t.buckets[BucketKey(Z.OFFENSIVE, Side.LEFT, D.BACKWARD, S.STRONG, True, True)]
    assert (b.faceoffs, b.events) == (3, 2)
    assert b.sum_elapsed_s == 3.0 and b.sum_distance_ft == 30.0
    assert t.players["P"] == t.buckets


@given(rows_strategy, rows_strategy, rows_strategy)
def test_monoid_laws(a, b, c):
    ta, tb, tc = tally(a), tally(b), tally(c)
    assert merge(ta, Tally()) == ta and merge(Tally(), ta) == ta
    assert merge(ta, tb).count_signature() == merge(tb, ta).count_signature()
    assert merge(merge(ta, tb), tc).count_signature() == merge(ta, merge(tb, tc)).count_signature()
    assert merge(ta, tb).count_signature() == tally(a + b).count_signature()
    assert merge(ta, tb) == tally(a + b)


@given(rows_strategy)
def test_events_bounded_by_faceoffs(rows):
    t = tally(rows)
    assert all(0 <= b.events <= b.faceoffs for b in t.buckets.values())


def test_merge_does_not_alias():
    ta = tally([row()])
    m = ta + tally([row()])
    m.buckets[next(iter(m.buckets))].faceoffs += 10
    assert next(iter(ta.buckets.values())).faceoffs == 1


class TestDirectionRates:
    def test_backward_rate(self):
        rows = [row(event=i < 413) for i in range(1000)]
        assert league_direction_rates(tally(rows))[D.BACKWARD] == pytest.approx(0.413)

    def test_empty_direction_is_none(self):
        rates = league_direction_rates(tally([row()]))
        assert rates[D.FORWARD] is None
        assert D.FORWARD in empty_directions(rates)

    def test_all_events(self):
        assert league_direction_rates(tally([row(event=True)] * 4))[D.BACKWARD] == 1.0

    def test_losses_and_center_are_ignored(self):
        rows = [row(event=True), row(win=False), row(zone=None, direction=None, dep=None, side=None, event=False)]
        assert league_direction_rates(tally(rows))[D.BACKWARD] == 1.0

    def test_all_denominator_counts_losses(self):
        rows = [row(event=True), row(win=False, direction=D.BACKWARD)]
        assert league_direction_rates(tally(rows), "all")[D.BACKWARD] == 0.5

    def test_bad_denominator(self):
        with pytest.raises(ValueError):
            league_direction_rates(Tally(), "faceoffs")

    @given(rows_strategy)
    def test_rates_are_probabilities(self, rows):
        for r in league_direction_rates(tally(rows)).values():
            assert r is None or 0 <= r <= 1


def category_rows(bucket_events, bucket_wins, other_events, other_n):
    """Rows for one (OZ, Strong, clean) category: a Backward bucket plus filler losses."""
    rows = [row(event=i < bucket_events) for i in range(bucket_wins)]
    rows += [row(win=False, direction=D.FORWARD, event=i < other_events) for i in range(other_n)]
    return rows


class TestExpectedTable:
    key = (Z.OFFENSIVE, D.BACKWARD, S.STRONG, True)

    def test_hand_computed_delta(self):
        # bucket rate 4/10 = 0.40; category rate (4 + 1) / (10 + 10) = 0.25
        table = wdbe_expected_table(tally(category_rows(4, 10, 1, 10)))
        assert table[self.key] == pytest.approx(0.30, abs=1e-12)

    def test_equal_rates(self):
        table = wdbe_expected_table(tally(category_rows(3, 10, 3, 10)))
        assert table[self.key] == pytest.approx(0.0, abs=1e-12)

    def test_negative_delta(self):
        table = wdbe_expected_table(tally(category_rows(0, 10, 10, 10)))
        assert table[self.key] == pytest.approx(-1.0, abs=1e-12)

    def test_all_keys_present(self):
        table = wdbe_expected_table(tally([row()]))
        assert set(table) == set(ALL_EXPECTED_KEYS) and len(table) == 128
        assert table[(Z.DEFENSIVE, D.FORWARD, S.WEAK, False)] is None

    @given(rows_strategy)
    def test_range(self, rows):
        for v in wdbe_expected_table(tally(rows)).values():
            assert v is None or -2 <= v <= 2


def test_baselines_json_round_trip():
    recs = generate_season(random_params(n_players=10, n_teams=4, seed=3), 2000, seed=1)
    b = build_baselines(tally(classify_all(recs)))
    again = LeagueBaselines.from_json(b.to_json())
    assert again == b
    assert again.to_json() == b.to_json()
    assert "OZ|Backward|Strong|true" in b.to_dict()["expected_event_delta"]
    assert set(b.to_dict()) == {"dir_event_rate", "expected_event_delta", "category_event_rate", "low_sample"}


def test_low_sample_flag():
    b = build_baselines(tally([row()] * 24 + [row(direction=D.INSIDE)] * 25))
    assert (Z.OFFENSIVE, D.BACKWARD, S.STRONG, True) in b.low_sample
    assert (Z.OFFENSIVE, D.INSIDE, S.STRONG, True) not in b.low_sample


def test_tally_totals_match_generator_counts():
    recs = generate_season(random_params(n_players=10, n_teams=4, seed=3), 3000, seed=8)
    t = tally(classify_all(recs))
    assert t.total_faceoffs() == 2 * len(recs)
    wins = {}
    for rec in recs:
        wins[rec.winner_player] = wins.get(rec.winner_player, 0) + 1
    for pid, buckets in t.players.items():
        assert sum(b.faceoffs for k, b in buckets.items() if k.is_winner) == wins.get(pid, 0)


def test_mirrored_season_has_identical_rates():
    from test_classify import mirror

    recs = generate_season(random_params(n_players=10, n_teams=4, seed=3), 2000, seed=8)
    a = league_direction_rates(tally(classify_all(recs)))
    b = league_direction_rates(tally(classify_all([mirror(r) for r in recs])))
    assert a == b


@settings(max_examples=30)
@given(rows_strategy)
def test_win_shares_sum_to_one_per_circle(rows):
    t = tally(rows)
    per = {}
    for k, b in t.buckets.items():
        if k.is_winner and k.direction is not None:
            per.setdefault((k.zone, k.side), {}).setdefault(k.direction, 0)
            per[(k.zone, k.side)][k.direction] += b.faceoffs
    for counts in per.values():
        total = sum(counts.values())
        assert sum(n / total for n in counts.values()) == pytest.approx(1.0, abs=1e-9)


def test_rows_with_zero_displacement_stay_out_of_direction_tables():
    rows = [row(event=True), dataclasses.replace(row(event=True), direction=None)]
    assert league_direction_rates(tally(rows))[D.BACKWARD] == 1.0
