"""Mergeable face-off tallies and the league baseline tables derived from them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

from .classify import ClassifiedFaceoff
from .rink import Deployment, DirectionSector, Side, ZoneSection

LOW_SAMPLE_WINS = 25


class BucketKey(NamedTuple):
    zone: Optional[ZoneSection]
    side: Optional[Side]
    direction: Optional[DirectionSector]
    deployment: Optional[Deployment]
    clean: bool
    is_winner: bool


class Bucket:
    __slots__ = ("faceoffs", "events", "sum_elapsed_s", "sum_distance_ft")

    def __init__(self, faceoffs: int = 0, events: int = 0, sum_elapsed_s: float = 0.0, sum_distance_ft: float = 0.0):
        self.faceoffs = faceoffs
        self.events = events
        self.sum_elapsed_s = sum_elapsed_s
        self.sum_distance_ft = sum_distance_ft

    def add(self, other: "Bucket") -> None:
        self.faceoffs += other.faceoffs
        self.events += other.events
        self.sum_elapsed_s += other.sum_elapsed_s
        self.sum_distance_ft += other.sum_distance_ft

    def copy(self) -> "Bucket":
        return Bucket(self.faceoffs, self.events, self.sum_elapsed_s, self.sum_distance_ft)

    def counts(self) -> Tuple[int, int]:
        return (self.faceoffs, self.events)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Bucket):
            return NotImplemented
        return (
            self.counts() == other.counts()
            and abs(self.sum_elapsed_s - other.sum_elapsed_s) <= 1e-6 * max(1.0, abs(self.sum_elapsed_s))
            and abs(self.sum_distance_ft - other.sum_distance_ft) <= 1e-6 * max(1.0, abs(self.sum_distance_ft))
        )

    def __repr__(self) -> str:
        return (f"Bucket(faceoffs={self.faceoffs}, events={self.events}, "
                f"sum_elapsed_s={self.sum_elapsed_s!r}, sum_distance_ft={self.sum_distance_ft!r})")


Buckets = Dict[BucketKey, Bucket]


def _merge_buckets(a: Buckets, b: Buckets) -> Buckets:
    out = {k: v.copy() for k, v in a.items()}
    for k, v in b.items():
        if k in out:
            out[k].add(v)
        else:
            out[k] = v.copy()
    return out


@dataclass
class Tally:
    """League-level buckets plus identical per-player sub-tallies.

    (Tally, merge, Tally()) is a commutative monoid; integer counts make the
    merge exact, float sums agree up to rounding.
    """

    buckets: Buckets = field(default_factory=dict)
    players: Dict[str, Buckets] = field(default_factory=dict)

    def add(self, row: ClassifiedFaceoff) -> None:
        key = BucketKey(row.zone, row.side, row.direction, row.deployment, row.clean, row.is_winner)
        ev = 1 if (row.shot_event or row.zone_change) else 0
        for table in (self.buckets, self.players.setdefault(row.player, {})):
            b = table.get(key)
            if b is None:
                table[key] = Bucket(1, ev, row.elapsed_s, row.distance_ft)
            else:
                b.faceoffs += 1
                b.events += ev
                b.sum_elapsed_s += row.elapsed_s
                b.sum_distance_ft += row.distance_ft

    def merge(self, other: "Tally") -> "Tally":
        players = {p: {k: v.copy() for k, v in bs.items()} for p, bs in self.players.items()}
        for p, bs in other.players.items():
            players[p] = _merge_buckets(players[p], bs) if p in players else {k: v.copy() for k, v in bs.items()}
        return Tally(_merge_buckets(self.buckets, other.buckets), players)

    __add__ = merge

    def player(self, player_id: str) -> Buckets:
        return self.players.get(player_id, {})

    def total_faceoffs(self) -> int:
        return sum(b.faceoffs for b in self.buckets.values())

    def count_signature(self) -> Tuple[Dict[BucketKey, Tuple[int, int]], Dict[str, Dict[BucketKey, Tuple[int, int]]]]:
        """Integer-only view, for exact comparisons."""
        return (
            {k: b.counts() for k, b in self.buckets.items()},
            {p: {k: b.counts() for k, b in bs.items()} for p, bs in self.players.items()},
        )


def tally(rows: Iterable[ClassifiedFaceoff]) -> Tally:
    # One dict lookup per row into the player tables; the league table is then
    # folded from the (far fewer) player buckets.
    players: Dict[str, Buckets] = {}
    for row in rows:
        table = players.get(row.player)
        if table is None:
            table = players[row.player] = {}
        key = BucketKey(row.zone, row.side, row.direction, row.deployment, row.clean, row.is_winner)
        ev = 1 if (row.shot_event or row.zone_change) else 0
        b = table.get(key)
        if b is None:
            table[key] = Bucket(1, ev, row.elapsed_s, row.distance_ft)
        else:
            b.faceoffs += 1
            b.events += ev
            b.sum_elapsed_s += row.elapsed_s
            b.sum_distance_ft += row.distance_ft
    league: Buckets = {}
    for table in players.values():
        for key, b in table.items():
            acc = league.get(key)
            if acc is None:
                league[key] = b.copy()
            else:
                acc.add(b)
    return Tally(league, players)


def merge(a: Tally, b: Tally) -> Tally:
    return a.merge(b)


# ---------------------------------------------------------------- league rates

def league_direction_rates(
    t: Tally | Buckets, denominator: str = "wins"
) -> Dict[DirectionSector, Optional[float]]:
    """League events-per-win rate by win direction (weights of the EE model).

    With denominator="wins" the rate is events after wins to i over wins to i.
    With "all" the denominator also counts losses whose (reversed) direction
    is i. Directions with a zero denominator map to None.
    """
    if denominator not in ("wins", "all"):
        raise ValueError(f"denominator must be 'wins' or 'all', got {denominator!r}")
    buckets = t.buckets if isinstance(t, Tally) else t
    num = {d: 0 for d in DirectionSector}
    den = {d: 0 for d in DirectionSector}
    for k, b in buckets.items():
        if k.direction is None or k.zone is None:
            continue
        if k.is_winner:
            num[k.direction] += b.events
            den[k.direction] += b.faceoffs
        elif denominator == "all":
            den[k.direction] += b.faceoffs
    return {d: (num[d] / den[d] if den[d] else None) for d in DirectionSector}


def empty_directions(rates: Dict[DirectionSector, Optional[float]]) -> List[DirectionSector]:
    return [d for d, r in rates.items() if r is None]


ExpectedKey = Tuple[ZoneSection, DirectionSector, Deployment, bool]
CategoryKey = Tuple[ZoneSection, Deployment, bool]

ALL_EXPECTED_KEYS: Tuple[ExpectedKey, ...] = tuple(
    (z, d, s, c)
    for z in ZoneSection for d in DirectionSector for s in Deployment for c in (False, True)
)


def category_event_rates(t: Tally | Buckets) -> Dict[CategoryKey, float]:
    """Events per face-off (won or lost) for each (zone, deployment, clean) category."""
    buckets = t.buckets if isinstance(t, Tally) else t
    fo: Dict[CategoryKey, int] = {}
    ev: Dict[CategoryKey, int] = {}
    for k, b in buckets.items():
        if k.zone is None or k.deployment is None:
            continue
        ck = (k.zone, k.deployment, k.clean)
        fo[ck] = fo.get(ck, 0) + b.faceoffs
        ev[ck] = ev.get(ck, 0) + b.events
    return {ck: ev[ck] / n for ck, n in fo.items() if n}


def _win_buckets(buckets: Buckets) -> Tuple[Dict[ExpectedKey, int], Dict[ExpectedKey, int]]:
    wins: Dict[ExpectedKey, int] = {}
    events: Dict[ExpectedKey, int] = {}
    for k, b in buckets.items():
        if not k.is_winner or k.zone is None or k.direction is None or k.deployment is None:
            continue
        ek = (k.zone, k.direction, k.deployment, k.clean)
        wins[ek] = wins.get(ek, 0) + b.faceoffs
        events[ek] = events.get(ek, 0) + b.events
    return wins, events


def wdbe_expected_table(t: Tally | Buckets) -> Dict[ExpectedKey, Optional[float]]:
    """Doubled win-vs-category event delta per (zone, direction, deployment, clean).

    2 * (events per win in the bucket - events per face-off, won or lost, in
    the bucket's (zone, deployment, clean) category). Every one of the 128
    keys is present; buckets without wins map to None.
    """
    buckets = t.buckets if isinstance(t, Tally) else t
    cat = category_event_rates(buckets)
    wins, events = _win_buckets(buckets)
    out: Dict[ExpectedKey, Optional[float]] = {}
    for ek in ALL_EXPECTED_KEYS:
        n = wins.get(ek, 0)
        out[ek] = 2.0 * (events[ek] / n - cat[(ek[0], ek[2], ek[3])]) if n else None
    return out


def low_sample_buckets(t: Tally | Buckets, min_wins: int = LOW_SAMPLE_WINS) -> List[ExpectedKey]:
    buckets = t.buckets if isinstance(t, Tally) else t
    wins, _ = _win_buckets(buckets)
    return sorted((k for k, n in wins.items() if n < min_wins), key=expected_key_str)


# ---------------------------------------------------------------- baselines document

def expected_key_str(k: ExpectedKey) -> str:
    return f"{k[0].value}|{k[1].value}|{k[2].value}|{str(k[3]).lower()}"


def category_key_str(k: CategoryKey) -> str:
    return f"{k[0].value}|{k[1].value}|{str(k[2]).lower()}"


def _parse_bool(s: str) -> bool:
    if s not in ("true", "false"):
        raise ValueError(f"expected true/false, got {s!r}")
    return s == "true"


@dataclass
class LeagueBaselines:
    dir_event_rate: Dict[DirectionSector, Optional[float]]
    expected_event_delta: Dict[ExpectedKey, Optional[float]]
    category_event_rate: Dict[CategoryKey, float]
    low_sample: List[ExpectedKey] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "dir_event_rate": {d.value: r for d, r in sorted(self.dir_event_rate.items(), key=lambda kv: kv[0].value)},
            "expected_event_delta": {
                expected_key_str(k): v for k, v in sorted(self.expected_event_delta.items(), key=lambda kv: expected_key_str(kv[0]))
            },
            "category_event_rate": {
                category_key_str(k): v for k, v in sorted(self.category_event_rate.items(), key=lambda kv: category_key_str(kv[0]))
            },
            "low_sample": [expected_key_str(k) for k in self.low_sample],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "LeagueBaselines":
        def ek(s: str) -> ExpectedKey:
            z, d, s_, c = s.split("|")
            return (ZoneSection(z), DirectionSector(d), Deployment(s_), _parse_bool(c))

        def ck(s: str) -> CategoryKey:
            z, s_, c = s.split("|")
            return (ZoneSection(z), Deployment(s_), _parse_bool(c))

        return cls(
            dir_event_rate={DirectionSector(k): v for k, v in data["dir_event_rate"].items()},
            expected_event_delta={ek(k): v for k, v in data["expected_event_delta"].items()},
            category_event_rate={ck(k): v for k, v in data["category_event_rate"].items()},
            low_sample=[ek(k) for k in data.get("low_sample", [])],
        )

    @classmethod
    def from_json(cls, text: str) -> "LeagueBaselines":
        return cls.from_dict(json.loads(text))


def build_baselines(t: Tally, eq1_denominator: str = "wins") -> LeagueBaselines:
    return LeagueBaselines(
        dir_event_rate=league_direction_rates(t, eq1_denominator),
        expected_event_delta=wdbe_expected_table(t),
        category_event_rate=category_event_rates(t),
        low_sample=low_sample_buckets(t),
    )
