from __future__ import annotations

import dataclasses
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from _builders import make_record
from faceoff_forge.classify import (
    DEFAULT_SLOT,
    ClassifyConfig,
    DegeneratePolygon,
    attribute_events,
    classify_all,
    classify_faceoff,
    detect_clean,
    in_slot,
    read_rows,
    write_rows,
)
from faceoff_forge.ingest import EventKind as K, SequenceEvent as Ev, TouchKind
from faceoff_forge.rink import DOT_IDS, Deployment, DirectionSector as D, Side, ZoneSection as Z, reverse_perspective
from faceoff_forge.synth import generate_season, random_params


class TestClean:
    def test_reception_close_to_stance(self):
        assert detect_clean(make_record(predrop_offset=1.2))

    def test_recovery_never_clean(self):
        assert not detect_clean(make_record(kind=TouchKind.RECOVERY))

    def test_reception_far_from_stance(self):
        assert not detect_clean(make_record(predrop_offset=8.0))

    def test_threshold_is_inclusive(self):
        assert detect_clean(make_record(predrop_offset=5.0))

    def test_no_stance_uses_kind_only(self):
        assert detect_clean(make_record(predrop_offset=None))
        assert not detect_clean(make_record(predrop_offset=None, kind=TouchKind.RECOVERY))

    def test_touch_by_other_team(self):
        assert not detect_clean(make_record(touch_team="A"))

    def test_kind_rule_can_be_disabled(self):
        cfg = ClassifyConfig(use_touch_kind_for_clean=False)
        assert detect_clean(make_record(kind=TouchKind.RECOVERY, predrop_offset=1.0), cfg)


class TestSlot:
    def test_deep_slot(self):
        assert in_slot((80, 0), DEFAULT_SLOT)

    def test_center_ice(self):
        assert not in_slot((0, 0), DEFAULT_SLOT)

    @pytest.mark.parametrize("p", [(89, 0), (54, 0), (61.5, 16.5), (69, 22), (89, 11)])
    def test_boundary_counts_inside(self, p):
        assert in_slot(p, DEFAULT_SLOT)

    def test_degenerate(self):
        with pytest.raises(DegeneratePolygon):
            in_slot((0, 0), [(0, 0), (1, 1)])

    def test_self_intersecting_config_rejected(self):
        with pytest.raises(ValueError):
            ClassifyConfig(slot_polygon=((0, 0), (1, 1), (1, 0), (0, 1)))

    @given(st.floats(40, 100), st.floats(-30, 30))
    def test_matches_convex_half_plane_oracle(self, x, y):
        # the default polygon is convex: inside iff on the inner side of every edge
        poly = DEFAULT_SLOT
        n = len(poly)
        signs = []
        for i in range(n):
            (x1, y1), (x2, y2) = poly[i], poly[(i + 1) % n]
            signs.append((x2 - x1) * (y - y1) - (y2 - y1) * (x - x1))
        inside = all(s >= -1e-9 for s in signs) or all(s <= 1e-9 for s in signs)
        assert in_slot((x, y), poly) == inside


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        cfg = ClassifyConfig(clean_displacement_max_ft=3.0, sequence_cap_s=8.0)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert ClassifyConfig.load(str(path)) == cfg

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            ClassifyConfig.from_dict({"clean_max": 3})

    def test_non_positive_threshold(self):
        with pytest.raises(ValueError):
            ClassifyConfig(clean_displacement_max_ft=0)


def seq(*events):
    return [Ev(k, t, loc, team) for k, t, loc, team in events]


class TestAttribution:
    def test_defensive_zone_exit(self):
        rec = make_record(dot_id="DZL", sequence=seq((K.ZONE_EXIT, 105.5, (-25.0, 10.0), "H")))
        assert attribute_events(rec, Z.DEFENSIVE, "H")["H"] == (False, True)

    def test_offensive_shot_outside_slot(self):
        rec = make_record(sequence=seq((K.SHOT_ATTEMPT, 103.0, (40.0, 30.0), "H")))
        assert attribute_events(rec, Z.OFFENSIVE, "H")["H"] == (False, False)

    def test_slot_shot_uses_attack_direction(self):
        rec = make_record(home_attack_sign=-1, sequence=seq((K.SHOT_ATTEMPT, 103.0, (-80.0, 2.0), "H")))
        assert attribute_events(rec, Z.OFFENSIVE, "H")["H"] == (True, False)

    def test_empty_sequence(self):
        assert attribute_events(make_record(), Z.OFFENSIVE, "H") == {"H": (False, False)}

    def test_entry_does_not_count_in_defensive_zone(self):
        rec = make_record(dot_id="DZL", sequence=seq((K.ZONE_ENTRY, 103.0, (25.0, 0.0), "H")))
        assert attribute_events(rec, Z.DEFENSIVE, "H")["H"] == (False, False)

    def test_window_ends_at_stoppage(self):
        rec = make_record(sequence=seq((K.STOPPAGE, 102.0, None, "H"), (K.SHOT_ON_NET, 103.0, (80.0, 0.0), "H")))
        assert attribute_events(rec, Z.OFFENSIVE, "H")["H"] == (False, False)

    def test_possession_change_hands_window_to_opponent(self):
        rec = make_record(sequence=seq(
            (K.SHOT_ON_NET, 102.0, (80.0, 0.0), "A"),  # not in possession yet: ignored
            (K.POSSESSION_CHANGE, 103.0, (60.0, 0.0), "A"),
            (K.SHOT_ON_NET, 104.0, (-80.0, 0.0), "H"),  # after losing the puck: ignored
            (K.ZONE_EXIT, 105.0, (25.0, 0.0), "A"),
            (K.POSSESSION_CHANGE, 106.0, (20.0, 0.0), "H"),
            (K.SHOT_ON_NET, 107.0, (80.0, 0.0), "A"),
        ))
        flags = attribute_events(rec, Z.OFFENSIVE, "H")
        assert flags == {"H": (False, False), "A": (False, True)}

    def test_cap(self):
        rec = make_record(sequence=seq((K.SHOT_ON_NET, 110.0, (80.0, 0.0), "H")))
        assert attribute_events(rec, Z.OFFENSIVE, "H", ClassifyConfig(sequence_cap_s=5.0))["H"] == (False, False)
        assert attribute_events(rec, Z.OFFENSIVE, "H", ClassifyConfig(sequence_cap_s=10.0))["H"] == (True, False)

    @given(
        st.lists(st.tuples(st.sampled_from(list(K)), st.floats(0, 20), st.sampled_from(["H", "A"])), max_size=6),
        st.floats(0, 20), st.floats(0, 20),
    )
    def test_enlarging_cap_never_clears_a_flag(self, raw, c1, c2):
        small, big = sorted((c1, c2))
        events = sorted(
            (Ev(k, 101.5 + t, None if k is K.STOPPAGE else (80.0, 0.0), team) for k, t, team in raw),
            key=lambda e: e.time,
        )
        rec = make_record(sequence=events)
        a = attribute_events(rec, Z.NEUTRAL_NORTH, "H", ClassifyConfig(sequence_cap_s=small))
        b = attribute_events(rec, Z.NEUTRAL_NORTH, "H", ClassifyConfig(sequence_cap_s=big))
        for team, flags in a.items():
            assert all(y for x, y in zip(flags, b[team]) if x)


class TestClassifyFaceoff:
    def test_worked_example_loser_row(self):
        # home team wins its own defensive-zone left circle straight back
        rec = make_record(dot_id="DZL", home_attack_sign=1, angle_deg=180.0)
        w, l = classify_faceoff(rec)
        assert (w.zone, w.side, w.direction) == (Z.DEFENSIVE, Side.LEFT, D.BACKWARD)
        assert (l.zone, l.side, l.direction) == (Z.OFFENSIVE, Side.RIGHT, D.FORWARD)

    def test_center_dot(self):
        w, l = classify_faceoff(make_record(dot_id="C", angle_deg=30.0))
        for row in (w, l):
            assert (row.zone, row.side, row.direction, row.deployment) == (None, None, None, None)
            assert row.clean and row.elapsed_s == pytest.approx(1.5)

    def test_touch_at_the_dot(self):
        w, l = classify_faceoff(make_record(distance=0.0))
        assert w.direction is None and l.direction is None
        assert "zero displacement" in w.diagnostic

    def test_deployment_from_hand(self):
        w, l = classify_faceoff(make_record(dot_id="OZL", winner_hand=Side.LEFT, loser_hand=Side.LEFT))
        # OZL attacking +x: boards on the winner's left, on the loser's right
        assert w.deployment is Deployment.STRONG and l.deployment is Deployment.WEAK

    def test_distance_and_elapsed(self):
        w, _ = classify_faceoff(make_record(distance=12.0, touch_delay=2.25))
        assert w.distance_ft == pytest.approx(12.0) and w.elapsed_s == pytest.approx(2.25)

    def test_loser_team_from_home(self):
        _, l = classify_faceoff(make_record(winner_is_home=False))
        assert l.team == "H"


@st.composite
def any_record(draw):
    return make_record(
        dot_id=draw(st.sampled_from([d for d in DOT_IDS if d != "C"])),
        home_attack_sign=draw(st.sampled_from([1, -1])),
        winner_is_home=draw(st.booleans()),
        angle_deg=draw(st.floats(-180, 180)),
        distance=draw(st.floats(1, 20)),
        kind=draw(st.sampled_from(list(TouchKind))),
        predrop_offset=draw(st.none() | st.floats(0, 10)),
        winner_hand=draw(st.sampled_from(list(Side))),
        loser_hand=draw(st.sampled_from(list(Side))),
        sequence=seq(*draw(st.lists(st.tuples(
            st.sampled_from([K.SHOT_ON_NET, K.ZONE_ENTRY, K.ZONE_EXIT]),
            st.just(102.0),
            st.tuples(st.floats(-99, 99), st.floats(-42, 42)),
            st.sampled_from(["H", "A"]),
        ), max_size=3))),
    )


def mirror(rec):
    """Reflect across y = 0: swap left/right dot ids, hands and every y coordinate."""
    def flip_dot(d):
        return d.translate(str.maketrans("LR", "RL"))

    def flip(p):
        return None if p is None else (p[0], -p[1])

    t = rec.first_touch
    return dataclasses.replace(
        rec,
        dot_id=flip_dot(rec.dot_id),
        winner_hand=rec.winner_hand.flip() if rec.winner_hand else None,
        loser_hand=rec.loser_hand.flip() if rec.loser_hand else None,
        first_touch=dataclasses.replace(t, location=flip(t.location), player_predrop_location=flip(t.player_predrop_location)),
        sequence=tuple(dataclasses.replace(e, location=flip(e.location)) for e in rec.sequence),
    )


@settings(max_examples=200)
@given(any_record())
def test_winner_loser_pair_is_reverse_perspective(rec):
    w, l = classify_faceoff(rec)
    assert reverse_perspective(w.zone, w.side, w.direction) == (l.zone, l.side, l.direction)
    assert w.clean == l.clean and w.elapsed_s == l.elapsed_s >= 0 and w.distance_ft == l.distance_ft >= 0
    if w.clean:
        assert rec.first_touch.kind is TouchKind.RECEPTION


@settings(max_examples=200)
@given(any_record())
def test_mirror_symmetry(rec):
    a, b = classify_faceoff(rec), classify_faceoff(mirror(rec))
    for x, y in zip(a, b):
        assert (x.clean, x.shot_event, x.zone_change, x.zone, x.direction) == (
            y.clean, y.shot_event, y.zone_change, y.zone, y.direction)
        assert x.elapsed_s == y.elapsed_s and x.distance_ft == pytest.approx(y.distance_ft)
        assert x.side.flip() is y.side
        # mirrored hands on mirrored boards: deployment is preserved
        assert x.deployment is y.deployment


def test_generated_direction_matches_classified_direction():
    recs = generate_season(random_params(n_players=12, n_teams=4, seed=4), 3000, seed=9)
    rows = classify_all(recs)
    assert all(r.diagnostic is None for r in rows)
    assert len(rows) == 2 * len(recs)


def test_parallel_classification_matches_serial():
    recs = generate_season(random_params(n_players=12, n_teams=4, seed=4), 2500, seed=9)
    assert classify_all(recs, workers=2) == classify_all(recs, workers=1)


def test_rows_file_round_trip():
    recs = generate_season(random_params(n_players=12, n_teams=4, seed=4), 300, seed=1)
    rows = classify_all(recs)
    buf = io.StringIO()
    write_rows(rows, buf)
    buf.seek(0)
    assert read_rows(buf) == rows


def test_thread_env(monkeypatch):
    from faceoff_forge.classify import THREADS_ENV, worker_count
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_count() == 3
    monkeypatch.setenv(THREADS_ENV, "x")
    with pytest.raises(ValueError):
        worker_count()
