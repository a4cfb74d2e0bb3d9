"""Player-level face-off metrics: expected events, WDBE and descriptive rates."""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from typing import IO, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from scipy.stats import rankdata

from .aggregate import Buckets, ExpectedKey, LeagueBaselines, Tally
from .classify import ClassifiedFaceoff
from .ingest import ExternalPlayerMetrics
from .rink import Deployment, DirectionSector, ZoneSection

DEFAULT_MIN_FACEOFFS = 200

ZONE_COLUMNS = {
    ZoneSection.OFFENSIVE: "wdbe_oz",
    ZoneSection.DEFENSIVE: "wdbe_dz",
    ZoneSection.NEUTRAL_NORTH: "wdbe_nz_north",
    ZoneSection.NEUTRAL_SOUTH: "wdbe_nz_south",
}

PLAYER_COLUMNS = (
    "player_id", "faceoffs", "overall_win_pct", "clean_pct_among_wins", "win_pct_among_clean",
    "strong_side_pct", "ee", "wdbe", "wdbe_pctile", "wdbe_oz", "wdbe_dz", "wdbe_nz_north",
    "wdbe_nz_south", "cf_pct", "xgd",
)


class NoEligibleFaceoffs(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class QualificationRule:
    min_faceoffs: int = DEFAULT_MIN_FACEOFFS

    def __post_init__(self) -> None:
        if self.min_faceoffs < 0:
            raise ValueError("min_faceoffs must be >= 0")

    def qualifies(self, faceoffs: int) -> bool:
        return faceoffs >= self.min_faceoffs


@dataclass
class PlayerMetrics:
    player_id: str
    faceoffs: int
    overall_win_pct: Optional[float] = None
    clean_pct_among_wins: Optional[float] = None
    win_pct_among_clean: Optional[float] = None
    strong_side_pct: Optional[float] = None
    ee: Optional[float] = None
    wdbe: Optional[float] = None
    wdbe_pctile: Optional[float] = None
    wdbe_zones: Dict[ZoneSection, float] = field(default_factory=dict)
    cf_pct: Optional[float] = None
    xgd: Optional[float] = None

    def as_row(self) -> Dict[str, Optional[float]]:
        row = {
            "player_id": self.player_id,
            "faceoffs": self.faceoffs,
            "overall_win_pct": self.overall_win_pct,
            "clean_pct_among_wins": self.clean_pct_among_wins,
            "win_pct_among_clean": self.win_pct_among_clean,
            "strong_side_pct": self.strong_side_pct,
            "ee": self.ee,
            "wdbe": self.wdbe,
            "wdbe_pctile": self.wdbe_pctile,
            "cf_pct": self.cf_pct,
            "xgd": self.xgd,
        }
        for zone, col in ZONE_COLUMNS.items():
            row[col] = self.wdbe_zones.get(zone) if self.wdbe is not None else None
        return row


# ---------------------------------------------------------------- EE

def player_direction_wins(buckets: Buckets) -> Dict[DirectionSector, int]:
    wins = {d: 0 for d in DirectionSector}
    for k, b in buckets.items():
        if k.is_winner and k.direction is not None:
            wins[k.direction] += b.faceoffs
    return wins


def eligible_faceoffs(buckets: Buckets, include_center: bool = False) -> int:
    return sum(b.faceoffs for k, b in buckets.items() if include_center or k.zone is not None)


def expected_events(
    buckets: Buckets,
    dir_rates: Mapping[DirectionSector, Optional[float]],
    include_center: bool = False,
) -> float:
    """League direction rates weighted by the player's win share per direction.

    The share denominator is every face-off the player took outside center
    ice (or all face-offs with include_center). Directions whose league rate
    is None are skipped.
    """
    total = eligible_faceoffs(buckets, include_center)
    if total == 0:
        raise NoEligibleFaceoffs("player has no eligible face-offs")
    wins = player_direction_wins(buckets)
    # fixed summation order so loaded and freshly built baselines agree bit for bit
    rates = [(d, dir_rates.get(d)) for d in DirectionSector]
    return sum(rate * wins[d] / total for d, rate in rates if rate is not None and wins.get(d))


def direction_expected_terms(
    buckets: Buckets,
    dir_rates: Mapping[DirectionSector, Optional[float]],
    include_center: bool = False,
) -> Dict[DirectionSector, float]:
    """Per-direction EE terms (league rate x player win share), used for the
    per-direction expected event % column."""
    total = eligible_faceoffs(buckets, include_center)
    if total == 0:
        raise NoEligibleFaceoffs("player has no eligible face-offs")
    wins = player_direction_wins(buckets)
    return {d: r * wins[d] / total for d, r in dir_rates.items() if r is not None}


# ---------------------------------------------------------------- WDBE

def wdbe(
    buckets: Buckets,
    expected: Mapping[ExpectedKey, Optional[float]],
    normalize: str = "cell",
) -> Tuple[float, Dict[ZoneSection, float]]:
    """Sum of P(win to bucket) x expected-event delta, plus per-zone partial sums.

    normalize="cell": P = wins in (zone, direction, deployment, clean) over the
    player's face-offs in (zone, deployment). normalize="zone": over his
    face-offs in the zone alone.
    """
    if normalize not in ("cell", "zone"):
        raise ValueError(f"normalize must be 'cell' or 'zone', got {normalize!r}")
    opportunities: Dict[tuple, int] = {}
    wins: Dict[ExpectedKey, int] = {}
    for k, b in buckets.items():
        if k.zone is None or k.deployment is None:
            continue
        cell = (k.zone, k.deployment) if normalize == "cell" else (k.zone,)
        opportunities[cell] = opportunities.get(cell, 0) + b.faceoffs
        if k.is_winner and k.direction is not None:
            ek = (k.zone, k.direction, k.deployment, k.clean)
            wins[ek] = wins.get(ek, 0) + b.faceoffs
    if not opportunities:
        raise NoEligibleFaceoffs("player has no zone/deployment face-offs")

    per_zone = {z: 0.0 for z in ZoneSection}
    for ek, n in sorted(wins.items(), key=lambda kv: _ek_order(kv[0])):
        e = expected.get(ek)
        if e is None:
            continue
        cell = (ek[0], ek[2]) if normalize == "cell" else (ek[0],)
        per_zone[ek[0]] += n / opportunities[cell] * e
    return sum(per_zone[z] for z in ZoneSection), per_zone


def _ek_order(k: ExpectedKey) -> tuple:
    return (k[0].value, k[1].value, k[2].value, k[3])


# ---------------------------------------------------------------- descriptive

def _pct(num: int, den: int) -> Optional[float]:
    return 100.0 * num / den if den else None


def player_summary(buckets: Buckets, player_id: str = "") -> PlayerMetrics:
    faceoffs = wins = clean_wins = clean_losses = strong = non_center = 0
    for k, b in buckets.items():
        n = b.faceoffs
        faceoffs += n
        if k.is_winner:
            wins += n
            if k.clean:
                clean_wins += n
        elif k.clean:
            clean_losses += n
        if k.zone is not None:
            non_center += n
            if k.deployment is Deployment.STRONG:
                strong += n
    return PlayerMetrics(
        player_id=player_id,
        faceoffs=faceoffs,
        overall_win_pct=_pct(wins, faceoffs),
        clean_pct_among_wins=_pct(clean_wins, wins),
        win_pct_among_clean=_pct(clean_wins, clean_wins + clean_losses),
        strong_side_pct=_pct(strong, non_center),
    )


@dataclass
class TimingReport:
    mean_elapsed_by_clean: Dict[bool, float]
    mean_elapsed_by_direction: Dict[DirectionSector, float]
    mean_elapsed_by_direction_clean: Dict[Tuple[DirectionSector, bool], float]
    clean_faster_pct: Optional[float]
    backward_outside_faster_pct: Optional[float]
    clean_faster_pct_by_direction: Dict[DirectionSector, Optional[float]]

    def to_dict(self) -> dict:
        return {
            "mean_elapsed_s": {
                "clean": self.mean_elapsed_by_clean.get(True),
                "non_clean": self.mean_elapsed_by_clean.get(False),
            },
            "mean_elapsed_s_by_direction": {d.value: v for d, v in self.mean_elapsed_by_direction.items()},
            "mean_elapsed_s_by_direction_clean": {
                f"{d.value}|{str(c).lower()}": v for (d, c), v in self.mean_elapsed_by_direction_clean.items()
            },
            "clean_faster_pct": self.clean_faster_pct,
            "backward_outside_faster_pct": self.backward_outside_faster_pct,
            "clean_faster_pct_by_direction": {d.value: v for d, v in self.clean_faster_pct_by_direction.items()},
        }


def _faster(fast: Optional[float], slow: Optional[float]) -> Optional[float]:
    """How much quicker `fast` is than `slow`, in percent of `slow`."""
    if fast is None or slow is None or slow == 0:
        return None
    return 100.0 * (slow - fast) / slow


def timing_stats(rows: Iterable[ClassifiedFaceoff]) -> TimingReport:
    """Mean drop-to-touch times, over winner rows (each face-off counted once)."""
    by_clean: Dict[bool, List[float]] = {}
    by_dir: Dict[DirectionSector, List[float]] = {}
    by_dir_clean: Dict[Tuple[DirectionSector, bool], List[float]] = {}
    for r in rows:
        if not r.is_winner:
            continue
        by_clean.setdefault(r.clean, []).append(r.elapsed_s)
        if r.direction is not None:
            by_dir.setdefault(r.direction, []).append(r.elapsed_s)
            by_dir_clean.setdefault((r.direction, r.clean), []).append(r.elapsed_s)

    def means(groups):
        return {k: math.fsum(v) / len(v) for k, v in groups.items()}

    m_clean = means(by_clean)
    m_dir = {d: v for d, v in sorted(means(by_dir).items(), key=lambda kv: kv[0].value)}
    m_dir_clean = {k: v for k, v in sorted(means(by_dir_clean).items(), key=lambda kv: (kv[0][0].value, kv[0][1]))}
    return TimingReport(
        mean_elapsed_by_clean=m_clean,
        mean_elapsed_by_direction=m_dir,
        mean_elapsed_by_direction_clean=m_dir_clean,
        clean_faster_pct=_faster(m_clean.get(True), m_clean.get(False)),
        backward_outside_faster_pct=_faster(
            m_dir.get(DirectionSector.BACKWARD_OUTSIDE), m_dir.get(DirectionSector.BACKWARD_INSIDE)
        ),
        clean_faster_pct_by_direction={
            d: _faster(m_dir_clean.get((d, True)), m_dir_clean.get((d, False))) for d in m_dir
        },
    )


# ---------------------------------------------------------------- statistics

def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise DegenerateInput("xs and ys differ in length")
    if len(xs) < 2:
        raise DegenerateInput("need at least two points")
    try:
        r = statistics.correlation(xs, ys)
    except statistics.StatisticsError as exc:
        raise DegenerateInput(str(exc)) from None
    return max(-1.0, min(1.0, r))


def percentile_rank(values: Sequence[float]) -> List[float]:
    """Mean-rank percentiles on [0, 100]; ties share their average rank."""
    n = len(values)
    if n == 0:
        raise ValueError("percentile_rank needs at least one value")
    if n == 1:
        return [50.0]
    ranks = rankdata(values, method="average")
    return [float(100.0 * (r - 1) / (n - 1)) for r in ranks]


# ---------------------------------------------------------------- player table

def compute_player_metrics(
    t: Tally,
    baselines: LeagueBaselines,
    external: Optional[Mapping[str, ExternalPlayerMetrics]] = None,
    rule: QualificationRule = QualificationRule(),
    include_center: bool = False,
    normalize: str = "cell",
) -> List[PlayerMetrics]:
    """One PlayerMetrics per player, sorted by player id.

    Metrics are computed for everyone; the WDBE percentile is ranked among
    qualified players only and left None for the rest.
    """
    out: List[PlayerMetrics] = []
    for pid in sorted(t.players):
        buckets = t.players[pid]
        pm = player_summary(buckets, pid)
        try:
            pm.ee = expected_events(buckets, baselines.dir_event_rate, include_center)
        except NoEligibleFaceoffs:
            pm.ee = None
        try:
            pm.wdbe, pm.wdbe_zones = wdbe(buckets, baselines.expected_event_delta, normalize)
        except NoEligibleFaceoffs:
            pm.wdbe = None
        if external and pid in external:
            pm.cf_pct = external[pid].cf_pct
            pm.xgd = external[pid].xgd
        out.append(pm)

    ranked = [pm for pm in out if pm.wdbe is not None and rule.qualifies(pm.faceoffs)]
    if ranked:
        for pm, pct in zip(ranked, percentile_rank([pm.wdbe for pm in ranked])):
            pm.wdbe_pctile = pct
    return out


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_player_table(rows: Iterable[PlayerMetrics], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(PLAYER_COLUMNS)
    for pm in rows:
        row = pm.as_row()
        w.writerow([_cell(row[c]) for c in PLAYER_COLUMNS])


def read_player_table(fh: IO[str]) -> List[PlayerMetrics]:
    reader = csv.DictReader(row for row in fh if not row.startswith("#"))
    if tuple(reader.fieldnames or ()) != PLAYER_COLUMNS:
        raise ValueError(f"expected player table header {','.join(PLAYER_COLUMNS)}")

    def f(v: str) -> Optional[float]:
        return float(v) if v != "" else None

    out = []
    for row in reader:
        zones = {z: float(row[c]) for z, c in ZONE_COLUMNS.items() if row[c] != ""}
        out.append(PlayerMetrics(
            player_id=row["player_id"], faceoffs=int(row["faceoffs"]),
            overall_win_pct=f(row["overall_win_pct"]), clean_pct_among_wins=f(row["clean_pct_among_wins"]),
            win_pct_among_clean=f(row["win_pct_among_clean"]), strong_side_pct=f(row["strong_side_pct"]),
            ee=f(row["ee"]), wdbe=f(row["wdbe"]), wdbe_pctile=f(row["wdbe_pctile"]), wdbe_zones=zones,
            cf_pct=f(row["cf_pct"]), xgd=f(row["xgd"]),
        ))
    return out
