"""Label each face-off from the winner's and the loser's perspective."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .ingest import EventKind, FaceoffRecord, SchemaViolation, TouchKind
from .rink import (
    DEFAULT_RINK,
    Deployment,
    DirectionSector,
    Point,
    RinkSpec,
    Side,
    ZeroDisplacement,
    ZoneSection,
    build_taker_frame,
    deployment,
    direction_sector,
    reverse_perspective,
    zone_section,
)

THREADS_ENV = "FACEOFF_FORGE_THREADS"

# Home-plate slot in the attacking half (+x); mirrored per team at use.
DEFAULT_SLOT: Tuple[Point, ...] = (
    (89.0, -11.0), (89.0, 11.0), (69.0, 22.0), (54.0, 11.0), (54.0, -11.0), (69.0, -22.0),
)


class DegeneratePolygon(ValueError):
    pass


@dataclass(frozen=True)
class ClassifyConfig:
    clean_displacement_max_ft: float = 5.0
    sequence_cap_s: Optional[float] = None
    slot_polygon: Tuple[Point, ...] = DEFAULT_SLOT
    use_touch_kind_for_clean: bool = True

    def __post_init__(self) -> None:
        if not self.clean_displacement_max_ft > 0:
            raise ValueError("clean_displacement_max_ft must be positive")
        if self.sequence_cap_s is not None and self.sequence_cap_s < 0:
            raise ValueError("sequence_cap_s must be non-negative")
        poly = tuple((float(x), float(y)) for x, y in self.slot_polygon)
        if len(poly) < 3:
            raise DegeneratePolygon("slot polygon needs at least 3 vertices")
        if not _is_simple(poly):
            raise ValueError("slot polygon must not self-intersect")
        object.__setattr__(self, "slot_polygon", poly)

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifyConfig":
        keys = {"clean_displacement_max_ft", "sequence_cap_s", "slot_polygon", "use_touch_kind_for_clean"}
        unknown = set(data) - keys
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "slot_polygon" in kwargs:
            kwargs["slot_polygon"] = tuple(tuple(p) for p in kwargs["slot_polygon"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str) -> "ClassifyConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "clean_displacement_max_ft": self.clean_displacement_max_ft,
            "sequence_cap_s": self.sequence_cap_s,
            "slot_polygon": [list(p) for p in self.slot_polygon],
            "use_touch_kind_for_clean": self.use_touch_kind_for_clean,
        }


@dataclass(frozen=True)
class ClassifiedFaceoff:
    faceoff_id: str
    player: str
    team: str
    is_winner: bool
    zone: Optional[ZoneSection]
    side: Optional[Side]
    direction: Optional[DirectionSector]
    deployment: Optional[Deployment]
    clean: bool
    elapsed_s: float
    distance_ft: float
    shot_event: bool
    zone_change: bool
    diagnostic: Optional[str] = field(default=None, compare=False)

    @property
    def event(self) -> bool:
        return self.shot_event or self.zone_change

    @property
    def is_center(self) -> bool:
        return self.zone is None

    @property
    def dot_label(self) -> Optional[str]:
        """Perspective-relative circle, e.g. "OZ-L"."""
        if self.zone is None:
            return None
        return f"{self.zone.value}-{self.side.value}"


# ---------------------------------------------------------------- geometry helpers

def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 0) - (v < 0)

    return (
        orient(p1, p2, p3) * orient(p1, p2, p4) < 0
        and orient(p3, p4, p1) * orient(p3, p4, p2) < 0
    )


def _is_simple(poly: Sequence[Point]) -> bool:
    n = len(poly)
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


def _on_segment(p: Point, a: Point, b: Point, eps: float = 1e-9) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) > eps * max(1.0, math.hypot(b[0] - a[0], b[1] - a[1])):
        return False
    return (
        min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
        and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps
    )


def in_slot(point: Point, polygon: Sequence[Point]) -> bool:
    """Even-odd point-in-polygon test; points on an edge count as inside."""
    n = len(polygon)
    if n < 3:
        raise DegeneratePolygon("polygon needs at least 3 vertices")
    x, y = point
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = polygon[i]
        xj, yj = polygon[j]
        if _on_segment(point, (xj, yj), (xi, yi)):
            return True
        if (yi > y) != (yj > y):
            x_cross = xi + (y - yi) * (xj - xi) / (yj - yi)
            if x < x_cross:
                inside = not inside
        j = i
    return inside


# ---------------------------------------------------------------- labels

def detect_clean(record: FaceoffRecord, cfg: ClassifyConfig = ClassifyConfig()) -> bool:
    touch = record.first_touch
    if touch.player_team != record.winner_team:
        return False
    if cfg.use_touch_kind_for_clean and touch.kind is not TouchKind.RECEPTION:
        return False
    pre = touch.player_predrop_location
    if pre is not None:
        moved = math.hypot(touch.location[0] - pre[0], touch.location[1] - pre[1])
        if moved > cfg.clean_displacement_max_ft:
            return False
    elif not cfg.use_touch_kind_for_clean:
        # no displacement signal and kind ignored: fall back to the kind rule
        return touch.kind is TouchKind.RECEPTION
    return True


def _attacking_zone(zone: Optional[ZoneSection]) -> bool:
    return zone is None or zone in (ZoneSection.OFFENSIVE, ZoneSection.NEUTRAL_NORTH)


def attribute_events(
    record: FaceoffRecord,
    zone: Optional[ZoneSection],
    winner_team: str,
    cfg: ClassifyConfig = ClassifyConfig(),
) -> dict:
    """Per-team (shot_event, zone_change) flags over the post-touch window.

    `zone` is the winner's perspective zone. The winner's window runs from the
    first touch to the first possession change, stoppage or cap. If the puck
    changes hands, the other team's window runs from that change to the next
    one (or the same stoppage/cap). Returns {team: (shot_event, zone_change)};
    a team that never held the puck maps to (False, False).
    """
    loser_team = None
    flags = {winner_team: [False, False]}
    start = record.first_touch.time
    cap = None if cfg.sequence_cap_s is None else start + cfg.sequence_cap_s
    possessing = winner_team
    possessions = 1
    zones = {winner_team: zone}

    for ev in record.sequence:
        if ev.time < start:
            continue
        if cap is not None and ev.time > cap:
            break
        if ev.kind is EventKind.STOPPAGE:
            break
        if ev.kind is EventKind.POSSESSION_CHANGE:
            if ev.team == possessing:
                continue
            if possessions == 2:
                break
            possessions += 1
            possessing = ev.team
            loser_team = ev.team
            flags.setdefault(loser_team, [False, False])
            zones[loser_team] = zone.flip() if zone is not None else None
            continue
        if ev.team != possessing:
            continue
        team_zone = zones[possessing]
        if ev.kind is EventKind.SHOT_ON_NET:
            flags[possessing][0] = True
        elif ev.kind is EventKind.SHOT_ATTEMPT:
            sign = record.attack_sign(possessing)
            loc = ev.location
            if in_slot((sign * loc[0], sign * loc[1]), cfg.slot_polygon):
                flags[possessing][0] = True
        elif ev.kind is EventKind.ZONE_ENTRY:
            if _attacking_zone(team_zone):
                flags[possessing][1] = True
        elif ev.kind is EventKind.ZONE_EXIT:
            if not _attacking_zone(team_zone):
                flags[possessing][1] = True
    return {team: (f[0], f[1]) for team, f in flags.items()}


def _loser_team(record: FaceoffRecord) -> str:
    # The schema names the winning and the home team; an away loser is only
    # known if it shows up in the play sequence.
    if record.winner_team != record.home_team:
        return record.home_team
    for ev in record.sequence:
        if ev.team != record.winner_team:
            return ev.team
    return f"~{record.winner_team}"


def classify_faceoff(
    record: FaceoffRecord,
    rink: RinkSpec = DEFAULT_RINK,
    cfg: ClassifyConfig = ClassifyConfig(),
) -> Tuple[ClassifiedFaceoff, ClassifiedFaceoff]:
    """Return (winner row, loser row).

    Loser labels are the reverse-perspective image of the winner labels. A
    touch at the dot itself leaves direction unset and carries a diagnostic.
    """
    dot = record.dot_location(rink)
    touch = record.first_touch
    win_sign = record.attack_sign(record.winner_team)
    w_zone = zone_section(dot, win_sign, rink)
    clean = detect_clean(record, cfg)
    elapsed = touch.time - record.drop_time
    distance = math.hypot(touch.location[0] - dot[0], touch.location[1] - dot[1])

    w_side = l_side = w_dep = l_dep = w_dir = l_dir = l_zone = None
    diag = None
    if w_zone is not None:
        frame = build_taker_frame(dot, win_sign)
        w_side = frame.boards_side
        try:
            w_dir = direction_sector(*frame.to_local(touch.location))
        except ZeroDisplacement:
            diag = "zero displacement: first touch at the dot"
        if w_dir is None:
            l_zone, l_side = w_zone.flip(), w_side.flip()
        else:
            l_zone, l_side, l_dir = reverse_perspective(w_zone, w_side, w_dir)
        if record.winner_hand is not None:
            w_dep = deployment(record.winner_hand, w_side)
        if record.loser_hand is not None:
            l_dep = deployment(record.loser_hand, l_side)

    flags = attribute_events(record, w_zone, record.winner_team, cfg)
    loser_team = next((t for t in flags if t != record.winner_team), None) or _loser_team(record)
    w_flags = flags[record.winner_team]
    l_flags = flags.get(loser_team, (False, False))

    winner = ClassifiedFaceoff(
        faceoff_id=record.faceoff_id, player=record.winner_player, team=record.winner_team,
        is_winner=True, zone=w_zone, side=w_side, direction=w_dir, deployment=w_dep,
        clean=clean, elapsed_s=elapsed, distance_ft=distance,
        shot_event=w_flags[0], zone_change=w_flags[1], diagnostic=diag,
    )
    loser = ClassifiedFaceoff(
        faceoff_id=record.faceoff_id, player=record.loser_player, team=loser_team,
        is_winner=False, zone=l_zone, side=l_side, direction=l_dir, deployment=l_dep,
        clean=clean, elapsed_s=elapsed, distance_ft=distance,
        shot_event=l_flags[0], zone_change=l_flags[1], diagnostic=diag,
    )
    return winner, loser


def _classify_chunk(args) -> List[ClassifiedFaceoff]:
    records, rink, cfg = args
    out: List[ClassifiedFaceoff] = []
    for rec in records:
        out.extend(classify_faceoff(rec, rink, cfg))
    return out


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def classify_all(
    records: Sequence[FaceoffRecord],
    rink: RinkSpec = DEFAULT_RINK,
    cfg: ClassifyConfig = ClassifyConfig(),
    workers: Optional[int] = None,
) -> List[ClassifiedFaceoff]:
    """Classify records into [winner, loser, winner, loser, ...] in input order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(records) < 2000:
        return _classify_chunk((records, rink, cfg))
    size = math.ceil(len(records) / workers)
    chunks = [(records[i:i + size], rink, cfg) for i in range(0, len(records), size)]
    out: List[ClassifiedFaceoff] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_classify_chunk, chunks):
            out.extend(part)
    return out


# ---------------------------------------------------------------- classified rows file

ROW_COLUMNS = (
    "faceoff_id", "player", "team", "is_winner", "zone", "side", "direction", "deployment",
    "clean", "elapsed_s", "distance_ft", "shot_event", "zone_change", "diagnostic",
)


def _enum_or_blank(value) -> str:
    return "" if value is None else value.value


def write_rows(rows: Iterable[ClassifiedFaceoff], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(ROW_COLUMNS)
    for r in rows:
        w.writerow([
            r.faceoff_id, r.player, r.team, int(r.is_winner), _enum_or_blank(r.zone),
            _enum_or_blank(r.side), _enum_or_blank(r.direction), _enum_or_blank(r.deployment),
            int(r.clean), repr(r.elapsed_s), repr(r.distance_ft), int(r.shot_event),
            int(r.zone_change), r.diagnostic or "",
        ])


def read_rows(fh) -> List[ClassifiedFaceoff]:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(header) != ROW_COLUMNS:
        raise SchemaViolation(f"expected classified-row header {','.join(ROW_COLUMNS)}, got {header}")

    def opt(enum, v):
        return enum(v) if v else None

    out = []
    for v in reader:
        out.append(ClassifiedFaceoff(
            faceoff_id=v[0], player=v[1], team=v[2], is_winner=v[3] == "1",
            zone=opt(ZoneSection, v[4]), side=opt(Side, v[5]),
            direction=opt(DirectionSector, v[6]), deployment=opt(Deployment, v[7]),
            clean=v[8] == "1", elapsed_s=float(v[9]), distance_ft=float(v[10]),
            shot_event=v[11] == "1", zone_change=v[12] == "1", diagnostic=v[13] or None,
        ))
    return out
