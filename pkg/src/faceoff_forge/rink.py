"""Rink geometry, taker frames and the label enumerations for face-off analysis.

Coordinates are in feet, rink-centered: x runs along the long axis, y across
it. Dot identifiers are expressed from the home team's point of view when the
home team attacks +x; `resolve_dot` rotates them by the actual attack sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

Point = Tuple[float, float]


class CenterDotFrame(ValueError):
    """The center dot has no inside/outside direction."""


class ZeroDisplacement(ValueError):
    """A direction was requested for a zero-length displacement."""


class UnknownDot(KeyError):
    pass


class _Label(Enum):
    # Members are singletons compared by identity, so an identity hash is
    # consistent and much cheaper than Enum's name-based hash on hot tally paths.
    __hash__ = object.__hash__


class Side(_Label):
    LEFT = "L"
    RIGHT = "R"

    def flip(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


# Shooting hand and boards side share the same two values.
Handedness = Side


class Deployment(_Label):
    STRONG = "Strong"
    WEAK = "Weak"


class ZoneSection(_Label):
    OFFENSIVE = "OZ"
    DEFENSIVE = "DZ"
    NEUTRAL_NORTH = "NZN"
    NEUTRAL_SOUTH = "NZS"

    def flip(self) -> "ZoneSection":
        return _ZONE_FLIP[self]


_ZONE_FLIP = {
    ZoneSection.OFFENSIVE: ZoneSection.DEFENSIVE,
    ZoneSection.DEFENSIVE: ZoneSection.OFFENSIVE,
    ZoneSection.NEUTRAL_NORTH: ZoneSection.NEUTRAL_SOUTH,
    ZoneSection.NEUTRAL_SOUTH: ZoneSection.NEUTRAL_NORTH,
}


class DirectionSector(_Label):
    """45 degree sectors in the taker frame, listed counter-clockwise from forward.

    Positive angles point inside (toward the rink's long axis).
    """

    FORWARD = "Forward"
    FORWARD_INSIDE = "ForwardInside"
    INSIDE = "Inside"
    BACKWARD_INSIDE = "BackwardInside"
    BACKWARD = "Backward"
    BACKWARD_OUTSIDE = "BackwardOutside"
    OUTSIDE = "Outside"
    FORWARD_OUTSIDE = "ForwardOutside"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def center_deg(self) -> float:
        """Sector bisector angle, in (-180, 180]."""
        idx = _SECTORS.index(self)
        deg = idx * 45.0
        return deg - 360.0 if deg > 180.0 else deg

    def flip(self) -> "DirectionSector":
        return _DIR_FLIP[self]


_SECTORS = list(DirectionSector)
_LABELS = {
    d: d.value.replace("Inside", "-Inside").replace("Outside", "-Outside").lstrip("-")
    for d in DirectionSector
}
_DIR_FLIP = {
    DirectionSector.FORWARD: DirectionSector.BACKWARD,
    DirectionSector.BACKWARD: DirectionSector.FORWARD,
    DirectionSector.FORWARD_INSIDE: DirectionSector.BACKWARD_INSIDE,
    DirectionSector.BACKWARD_INSIDE: DirectionSector.FORWARD_INSIDE,
    DirectionSector.FORWARD_OUTSIDE: DirectionSector.BACKWARD_OUTSIDE,
    DirectionSector.BACKWARD_OUTSIDE: DirectionSector.FORWARD_OUTSIDE,
    DirectionSector.INSIDE: DirectionSector.INSIDE,
    DirectionSector.OUTSIDE: DirectionSector.OUTSIDE,
}

DOT_IDS = ("C", "NZL_N", "NZR_N", "NZL_S", "NZR_S", "OZL", "OZR", "DZL", "DZR")


def _default_dots() -> Dict[str, Point]:
    return {
        "C": (0.0, 0.0),
        "NZL_N": (20.0, 22.0),
        "NZR_N": (20.0, -22.0),
        "NZL_S": (-20.0, 22.0),
        "NZR_S": (-20.0, -22.0),
        "OZL": (69.0, 22.0),
        "OZR": (69.0, -22.0),
        "DZL": (-69.0, 22.0),
        "DZR": (-69.0, -22.0),
    }


@dataclass(frozen=True)
class RinkSpec:
    """Rink dimensions plus the nine face-off dots.

    `dot_positions` holds the canonical layout (home team attacking +x).
    """

    length: float = 200.0
    width: float = 85.0
    blue_line_x: float = 25.0
    dot_positions: Dict[str, Point] = field(default_factory=_default_dots)

    def __post_init__(self) -> None:
        dots = self.dot_positions
        if set(dots) != set(DOT_IDS):
            raise ValueError(f"rink needs exactly the dots {DOT_IDS}, got {sorted(dots)}")
        if tuple(dots["C"]) != (0.0, 0.0):
            raise ValueError("center dot must sit at the origin")
        for dot_id, (x, y) in dots.items():
            if dot_id == "C":
                continue
            if not all(_close(p, q) for p, q in zip(_mirror_partners(dots, dot_id), ((x, -y), (-x, y), (-x, -y)))):
                raise ValueError(f"dot {dot_id} is not mirror-symmetric")

    def resolve_dot(self, dot_id: str, home_attack_sign: int) -> Point:
        try:
            x, y = self.dot_positions[dot_id]
        except KeyError:
            raise UnknownDot(dot_id) from None
        return (home_attack_sign * x, home_attack_sign * y)

    def in_bounds(self, p: Point) -> bool:
        return abs(p[0]) <= self.length / 2 and abs(p[1]) <= self.width / 2

    def is_dot(self, p: Point) -> bool:
        return any(
            _close(p, (s * x, s * y))
            for x, y in self.dot_positions.values()
            for s in (1, -1)
        )


def _close(p: Point, q: Point, tol: float = 1e-9) -> bool:
    return abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol


def _mirror_partners(dots: Dict[str, Point], dot_id: str) -> Tuple[Point, Point, Point]:
    flip_lr = {"L": "R", "R": "L"}
    if dot_id.startswith("NZ"):
        lr, ns = dot_id[2], dot_id[4]
        other_ns = "S" if ns == "N" else "N"
        across_y = f"NZ{flip_lr[lr]}_{ns}"
        across_x = f"NZ{lr}_{other_ns}"
        both = f"NZ{flip_lr[lr]}_{other_ns}"
    else:
        zone, lr = dot_id[:2], dot_id[2]
        other_zone = "DZ" if zone == "OZ" else "OZ"
        across_y = f"{zone}{flip_lr[lr]}"
        across_x = f"{other_zone}{lr}"
        both = f"{other_zone}{flip_lr[lr]}"
    return dots[across_y], dots[across_x], dots[both]


DEFAULT_RINK = RinkSpec()


@dataclass(frozen=True)
class TakerFrame:
    origin: Point
    forward: Point
    inside: Point
    boards_side: Side

    def to_local(self, p: Point) -> Point:
        """Project a rink point onto (forward, inside) components relative to the dot."""
        dx, dy = p[0] - self.origin[0], p[1] - self.origin[1]
        return (
            dx * self.forward[0] + dy * self.forward[1],
            dx * self.inside[0] + dy * self.inside[1],
        )

    def to_rink(self, u: float, v: float) -> Point:
        return (
            self.origin[0] + u * self.forward[0] + v * self.inside[0],
            self.origin[1] + u * self.forward[1] + v * self.inside[1],
        )


def build_taker_frame(dot: Point, attack_sign: int) -> TakerFrame:
    x, y = dot
    if y == 0:
        raise CenterDotFrame(f"no inside direction at {dot}")
    if attack_sign not in (1, -1):
        raise ValueError(f"attack_sign must be +1 or -1, got {attack_sign}")
    forward = (float(attack_sign), 0.0)
    inside = (0.0, -1.0 if y > 0 else 1.0)
    outside = (-inside[0], -inside[1])
    # z-component of forward x outside: positive means outside is to the taker's left
    cross = forward[0] * outside[1] - forward[1] * outside[0]
    side = Side.LEFT if cross > 0 else Side.RIGHT
    return TakerFrame(origin=(float(x), float(y)), forward=forward, inside=inside, boards_side=side)


# Rounding absorbs float noise so that angles meant to sit on a boundary
# (e.g. 22.5 degrees built from cos/sin) land in the owning sector.
_ANGLE_DECIMALS = 9


def direction_angle(u: float, v: float) -> float:
    if u == 0 and v == 0:
        raise ZeroDisplacement("zero displacement has no direction")
    return round(math.degrees(math.atan2(v, u)), _ANGLE_DECIMALS)


def direction_sector(u: float, v: float) -> DirectionSector:
    """Bin a taker-frame displacement into one of the 8 half-open 45 degree sectors."""
    theta = direction_angle(u, v)
    idx = math.floor((theta + 22.5) / 45.0) % 8
    return _SECTORS[idx]


def zone_section(dot: Point, attack_sign: int, rink: RinkSpec = DEFAULT_RINK) -> Optional[ZoneSection]:
    """Zone section of a dot seen by a team attacking toward `attack_sign`.

    Returns None for the center dot.
    """
    if not rink.is_dot(dot):
        raise UnknownDot(dot)
    x = dot[0]
    if x == 0:
        return None
    attacking_half = (x > 0) == (attack_sign > 0)
    if abs(x) > rink.blue_line_x:
        return ZoneSection.OFFENSIVE if attacking_half else ZoneSection.DEFENSIVE
    return ZoneSection.NEUTRAL_NORTH if attacking_half else ZoneSection.NEUTRAL_SOUTH


def deployment(hand: Handedness, boards_side: Side) -> Deployment:
    return Deployment.STRONG if hand is boards_side else Deployment.WEAK


def reverse_perspective(
    zone: ZoneSection, side: Side, direction: DirectionSector
) -> Tuple[ZoneSection, Side, DirectionSector]:
    """Map a winner-perspective (zone, side, direction) to the loser's view."""
    return zone.flip(), side.flip(), direction.flip()
