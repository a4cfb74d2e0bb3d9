from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from faceoff_forge.rink import (
    DEFAULT_RINK,
    DOT_IDS,
    CenterDotFrame,
    Deployment,
    DirectionSector as D,
    RinkSpec,
    Side,
    UnknownDot,
    ZeroDisplacement,
    ZoneSection as Z,
    build_taker_frame,
    deployment,
    direction_sector,
    reverse_perspective,
    zone_section,
)

NON_CENTER = [d for d in DOT_IDS if d != "C"]


def table_sector(deg: Fraction) -> D:
    """Oracle: explicit half-open interval table, exact rational arithmetic."""
    table = [
        (Fraction(-45, 2), Fraction(45, 2), D.FORWARD),
        (Fraction(45, 2), Fraction(135, 2), D.FORWARD_INSIDE),
        (Fraction(135, 2), Fraction(225, 2), D.INSIDE),
        (Fraction(225, 2), Fraction(315, 2), D.BACKWARD_INSIDE),
        (Fraction(-315, 2), Fraction(-225, 2), D.BACKWARD_OUTSIDE),
        (Fraction(-225, 2), Fraction(-135, 2), D.OUTSIDE),
        (Fraction(-135, 2), Fraction(-45, 2), D.FORWARD_OUTSIDE),
    ]
    if deg > 180:
        deg -= 360
    for lo, hi, sector in table:
        if lo <= deg < hi:
            return sector
    assert deg >= Fraction(315, 2) or deg < Fraction(-315, 2)
    return D.BACKWARD


def uv(deg: float, r: float = 10.0):
    return r * math.cos(math.radians(deg)), r * math.sin(math.radians(deg))


class TestTakerFrame:
    def test_left_circle_attacking_positive(self):
        f = build_taker_frame((69, 22), 1)
        assert f.forward == (1.0, 0.0) and f.inside == (0.0, -1.0) and f.boards_side is Side.LEFT

    def test_right_circle_attacking_positive(self):
        f = build_taker_frame((69, -22), 1)
        assert f.forward == (1.0, 0.0) and f.inside == (0.0, 1.0) and f.boards_side is Side.RIGHT

    def test_attacking_negative_swaps_boards_side(self):
        assert build_taker_frame((69, 22), -1).boards_side is Side.RIGHT

    @pytest.mark.parametrize("sign", [1, -1])
    def test_center_dot_has_no_frame(self, sign):
        with pytest.raises(CenterDotFrame):
            build_taker_frame((0, 0), sign)

    def test_bad_attack_sign(self):
        with pytest.raises(ValueError):
            build_taker_frame((69, 22), 0)

    @pytest.mark.parametrize("dot_id", NON_CENTER)
    @pytest.mark.parametrize("sign", [1, -1])
    def test_orthonormal_and_inside_points_to_axis(self, dot_id, sign):
        dot = DEFAULT_RINK.resolve_dot(dot_id, 1)
        f = build_taker_frame(dot, sign)
        assert abs(f.forward[0] * f.inside[0] + f.forward[1] * f.inside[1]) < 1e-9
        assert abs(math.hypot(*f.forward) - 1) < 1e-9 and abs(math.hypot(*f.inside) - 1) < 1e-9
        assert abs(dot[1] + f.inside[1]) < abs(dot[1])

    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_local_round_trip(self, u, v):
        f = build_taker_frame((-20, 22), -1)
        p = f.to_rink(u, v)
        lu, lv = f.to_local(p)
        assert lu == pytest.approx(u, abs=1e-9) and lv == pytest.approx(v, abs=1e-9)


class TestDirectionSector:
    def test_pure_backward(self):
        assert direction_sector(-10, 0) is D.BACKWARD

    def test_backward_inside_center(self):
        assert direction_sector(-7.07, 7.07) is D.BACKWARD_INSIDE

    def test_boundary_belongs_to_upper_sector(self):
        assert direction_sector(*uv(22.5)) is D.FORWARD_INSIDE
        assert direction_sector(*uv(-22.5)) is D.FORWARD
        assert direction_sector(*uv(-157.5)) is D.BACKWARD_OUTSIDE
        assert direction_sector(*uv(157.5)) is D.BACKWARD
        assert direction_sector(-1, -0.0) is D.BACKWARD

    def test_zero_displacement(self):
        with pytest.raises(ZeroDisplacement):
            direction_sector(0, 0)

    @pytest.mark.parametrize("deg", range(360))
    def test_whole_degrees_match_table(self, deg):
        assert direction_sector(*uv(deg)) is table_sector(Fraction(deg))

    @pytest.mark.parametrize("k", range(16))
    def test_half_degree_boundaries_match_table(self, k):
        deg = Fraction(-180) + Fraction(45, 2) * k + Fraction(45, 2)
        assert direction_sector(*uv(float(deg))) is table_sector(deg)

    @given(st.floats(-179.999, 179.999).filter(lambda a: abs((a + 22.5) / 45 - round((a + 22.5) / 45)) > 1e-6))
    def test_every_angle_maps_to_table(self, deg):
        assert direction_sector(*uv(deg)) is table_sector(Fraction(deg))

    def test_center_angles(self):
        for d in D:
            assert direction_sector(*uv(d.center_deg)) is d

    @given(st.tuples(st.floats(-40, 40), st.floats(-40, 40)).filter(lambda p: math.hypot(*p) > 1e-3))
    def test_mirror_symmetry_keeps_sector(self, xy):
        # reflecting the rink across y = 0 flips the dot and the touch, inside stays inside
        dot = (69.0, 22.0)
        touch = (dot[0] + xy[0], dot[1] + xy[1])
        f, g = build_taker_frame(dot, 1), build_taker_frame((dot[0], -dot[1]), 1)
        a = direction_sector(*f.to_local(touch))
        b = direction_sector(*g.to_local((touch[0], -touch[1])))
        assert a is b

    def test_labels(self):
        assert D.BACKWARD_OUTSIDE.label == "Backward-Outside"
        assert D.FORWARD.label == "Forward"


class TestZoneSection:
    def test_offensive(self):
        assert zone_section((69, 22), 1) is Z.OFFENSIVE

    def test_neutral_south(self):
        assert zone_section((-20, 22), 1) is Z.NEUTRAL_SOUTH

    def test_neutral_north_and_defensive(self):
        assert zone_section((20, -22), 1) is Z.NEUTRAL_NORTH
        assert zone_section((69, 22), -1) is Z.DEFENSIVE

    def test_center(self):
        assert zone_section((0, 0), 1) is None

    def test_unknown(self):
        with pytest.raises(UnknownDot):
            zone_section((10, 10), 1)

    @pytest.mark.parametrize("dot_id", NON_CENTER)
    def test_opponents_see_flipped_zone(self, dot_id):
        dot = DEFAULT_RINK.resolve_dot(dot_id, 1)
        assert zone_section(dot, -1) is zone_section(dot, 1).flip()


class TestDeployment:
    def test_cases(self):
        assert deployment(Side.LEFT, Side.LEFT) is Deployment.STRONG
        assert deployment(Side.LEFT, Side.RIGHT) is Deployment.WEAK
        assert deployment(Side.RIGHT, Side.RIGHT) is Deployment.STRONG


class TestReversePerspective:
    def test_worked_example(self):
        assert reverse_perspective(Z.DEFENSIVE, Side.LEFT, D.BACKWARD) == (Z.OFFENSIVE, Side.RIGHT, D.FORWARD)

    def test_inside_stays_inside(self):
        assert reverse_perspective(Z.NEUTRAL_NORTH, Side.RIGHT, D.INSIDE) == (Z.NEUTRAL_SOUTH, Side.LEFT, D.INSIDE)

    @given(st.sampled_from(list(Z)), st.sampled_from(list(Side)), st.sampled_from(list(D)))
    def test_involution(self, z, s, d):
        assert reverse_perspective(*reverse_perspective(z, s, d)) == (z, s, d)


class TestRinkSpec:
    def test_default_dots(self):
        assert DEFAULT_RINK.resolve_dot("OZL", -1) == (-69.0, -22.0)
        with pytest.raises(UnknownDot):
            DEFAULT_RINK.resolve_dot("XX", 1)

    def test_rejects_asymmetric_layout(self):
        dots = dict(DEFAULT_RINK.dot_positions)
        dots["OZL"] = (70.0, 22.0)
        with pytest.raises(ValueError):
            RinkSpec(dot_positions=dots)

    def test_custom_symmetric_layout(self):
        dots = {k: (x * 1.1, y) for k, (x, y) in DEFAULT_RINK.dot_positions.items()}
        rink = RinkSpec(dot_positions=dots)
        assert zone_section(rink.resolve_dot("OZL", 1), 1, rink) is Z.OFFENSIVE

    def test_bounds(self):
        assert DEFAULT_RINK.in_bounds((100, 42.5))
        assert not DEFAULT_RINK.in_bounds((250, 0))
