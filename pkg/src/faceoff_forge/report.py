"""Report tables and figure data (CSV/JSON), rose charts and correlations."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .aggregate import LeagueBaselines, Tally, build_baselines, tally
from .classify import ClassifiedFaceoff
from .ingest import ExternalPlayerMetrics
from .metrics import (
    DegenerateInput,
    NoEligibleFaceoffs,
    PlayerMetrics,
    QualificationRule,
    compute_player_metrics,
    direction_expected_terms,
    pearson,
)
from .rink import Deployment, DirectionSector, ZoneSection

TABLE_IDS = ("table1", "table2", "table3", "appx31", "appx4")
FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "appx33", "appx332")
REPORT_IDS = TABLE_IDS + FIGURE_IDS

ALL_DOTS = "ALL"

CORRELATION_COLUMNS = (
    "overall_win_pct", "clean_pct_among_wins", "ee", "wdbe",
    "wdbe_oz", "wdbe_dz", "wdbe_nz_north", "wdbe_nz_south", "cf_pct", "xgd",
)


@dataclass(frozen=True)
class ReportSpec:
    report_id: str
    direction: str = "top"
    limit: int = 20

    def __post_init__(self) -> None:
        if self.report_id not in REPORT_IDS:
            raise ValueError(f"unknown report id {self.report_id!r}; expected one of {', '.join(REPORT_IDS)}")
        if self.direction not in ("top", "bottom"):
            raise ValueError("direction must be 'top' or 'bottom'")
        if self.limit <= 0:
            raise ValueError("limit must be positive")


@dataclass(frozen=True)
class RoseCell:
    share: float
    mean_distance_ft: float
    count: int


RoseChartData = Dict[str, Dict[DirectionSector, RoseCell]]


def rose_chart(rows: Iterable[ClassifiedFaceoff]) -> RoseChartData:
    """Win-direction shares and mean distances per circle, plus an "ALL" entry.

    Circles are perspective-relative (e.g. "OZ-L"); only winner rows with a
    direction contribute.
    """
    counts: Dict[str, Dict[DirectionSector, int]] = {}
    dist: Dict[str, Dict[DirectionSector, float]] = {}
    for r in rows:
        if not r.is_winner or r.direction is None:
            continue
        for key in (r.dot_label, ALL_DOTS):
            c = counts.setdefault(key, {})
            c[r.direction] = c.get(r.direction, 0) + 1
            d = dist.setdefault(key, {})
            d[r.direction] = d.get(r.direction, 0.0) + r.distance_ft
    out: RoseChartData = {}
    for key in sorted(counts):
        total = sum(counts[key].values())
        out[key] = {
            d: RoseCell(n / total, dist[key][d] / n, n)
            for d, n in sorted(counts[key].items(), key=lambda kv: list(DirectionSector).index(kv[0]))
        }
    return out


def rose_to_json(data: RoseChartData) -> dict:
    return {
        dot: {d.value: {"share": c.share, "mean_distance_ft": c.mean_distance_ft, "count": c.count} for d, c in cells.items()}
        for dot, cells in data.items()
    }


def direction_event_rates(rows: Iterable[ClassifiedFaceoff]) -> Dict[str, Dict[DirectionSector, float]]:
    """Events per win by direction per circle (right-hand panel of the direction figure)."""
    wins: Dict[str, Dict[DirectionSector, int]] = {}
    events: Dict[str, Dict[DirectionSector, int]] = {}
    for r in rows:
        if not r.is_winner or r.direction is None:
            continue
        for key in (r.dot_label, ALL_DOTS):
            wins.setdefault(key, {}).setdefault(r.direction, 0)
            events.setdefault(key, {}).setdefault(r.direction, 0)
            wins[key][r.direction] += 1
            events[key][r.direction] += int(r.event)
    order = list(DirectionSector)
    return {
        key: {d: events[key][d] / n for d, n in sorted(wins[key].items(), key=lambda kv: order.index(kv[0]))}
        for key in sorted(wins)
    }


# ---------------------------------------------------------------- correlations

def correlate_metrics(
    players: Sequence[PlayerMetrics],
    rule: QualificationRule = QualificationRule(),
    columns: Sequence[str] = CORRELATION_COLUMNS,
) -> Dict[str, Dict[str, Optional[float]]]:
    """Pairwise Pearson r over qualified players; degenerate pairs map to None."""
    qualified = [p.as_row() for p in players if rule.qualifies(p.faceoffs)]
    if len(qualified) < 2:
        raise DegenerateInput("need at least two qualified players")
    matrix: Dict[str, Dict[str, Optional[float]]] = {}
    for a in columns:
        matrix[a] = {}
        for b in columns:
            pairs = [(r[a], r[b]) for r in qualified if r[a] is not None and r[b] is not None]
            try:
                matrix[a][b] = pearson([x for x, _ in pairs], [y for _, y in pairs])
            except DegenerateInput:
                matrix[a][b] = None
    return matrix


def correlation_csv(matrix: Mapping[str, Mapping[str, Optional[float]]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = list(matrix)
    w.writerow(["column"] + cols)
    for a in cols:
        w.writerow([a] + ["" if matrix[a][b] is None else f"{matrix[a][b]:.6f}" for b in cols])
    return buf.getvalue()


# ---------------------------------------------------------------- report context

@dataclass
class ReportContext:
    rows: List[ClassifiedFaceoff]
    tally: Tally
    baselines: LeagueBaselines
    players: List[PlayerMetrics]
    rule: QualificationRule
    include_center: bool = False

    @classmethod
    def build(
        cls,
        rows: Sequence[ClassifiedFaceoff],
        external: Optional[Mapping[str, ExternalPlayerMetrics]] = None,
        rule: QualificationRule = QualificationRule(),
        baselines: Optional[LeagueBaselines] = None,
        include_center: bool = False,
        eq1_denominator: str = "wins",
        normalize: str = "cell",
    ) -> "ReportContext":
        t = tally(rows)
        b = baselines or build_baselines(t, eq1_denominator)
        players = compute_player_metrics(t, b, external, rule, include_center, normalize)
        return cls(list(rows), t, b, players, rule, include_center)


def _r1(v: Optional[float]) -> str:
    return "" if v is None else f"{v:.1f}"


def _r6(v: Optional[float]) -> str:
    return "" if v is None else f"{v:.6f}"


def _table(header: Sequence[str], body: Iterable[Sequence[str]], rule: QualificationRule, note: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {note}; qualification: min {rule.min_faceoffs} face-offs taken\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in body:
        w.writerow(row)
    return buf.getvalue()


def _ranked(players: Iterable[PlayerMetrics], key, descending: bool, limit: int) -> List[PlayerMetrics]:
    pool = [p for p in players if key(p) is not None]
    # ties broken by player id, ascending either way
    pool.sort(key=lambda p: p.player_id)
    pool.sort(key=key, reverse=descending)
    return pool[:limit]


def _clean_table(ctx: ReportContext, spec: ReportSpec, bottom: bool) -> str:
    qualified = [p for p in ctx.players if ctx.rule.qualifies(p.faceoffs)]
    top = _ranked(qualified, lambda p: p.clean_pct_among_wins, not bottom, spec.limit)
    return _table(
        ("player_id", "clean_pct_among_wins", "win_pct_among_clean", "overall_win_pct"),
        ([p.player_id, _r1(p.clean_pct_among_wins), _r1(p.win_pct_among_clean), _r1(p.overall_win_pct)] for p in top),
        ctx.rule,
        f"{'bottom' if bottom else 'top'} {spec.limit} players by clean % among wins",
    )


def _wdbe_table(ctx: ReportContext, spec: ReportSpec, bottom: bool) -> str:
    qualified = [p for p in ctx.players if ctx.rule.qualifies(p.faceoffs)]
    top = _ranked(qualified, lambda p: p.wdbe_pctile, not bottom, spec.limit)
    return _table(
        ("player_id", "wdbe_pct", "wdbe", "cf_pct", "xgd", "clean_pct_among_wins",
         "win_pct_among_clean", "overall_win_pct", "strong_side_pct"),
        ([p.player_id, _r1(p.wdbe_pctile), _r6(p.wdbe), _r1(p.cf_pct), _r1(p.xgd), _r1(p.clean_pct_among_wins),
          _r1(p.win_pct_among_clean), _r1(p.overall_win_pct), _r1(p.strong_side_pct)] for p in top),
        ctx.rule,
        f"{'bottom' if bottom else 'top'} {spec.limit} players by WDBE percentile (wdbe_pct is a percentile rank)",
    )


def _table2(ctx: ReportContext, spec: ReportSpec) -> str:
    entries = []
    by_id = {p.player_id: p for p in ctx.players}
    for pid in sorted(ctx.tally.players):
        p = by_id[pid]
        if not ctx.rule.qualifies(p.faceoffs):
            continue
        try:
            terms = direction_expected_terms(ctx.tally.players[pid], ctx.baselines.dir_event_rate, ctx.include_center)
        except NoEligibleFaceoffs:
            continue
        if not terms:
            continue
        order = list(DirectionSector)
        best = max(terms, key=lambda d: (terms[d], -order.index(d)))
        entries.append((p, best, 100.0 * terms[best]))
    entries.sort(key=lambda e: e[0].player_id)
    entries.sort(key=lambda e: e[2], reverse=spec.direction == "top")
    return _table(
        ("player_id", "win_direction", "expected_event_pct", "cf_pct", "xgd"),
        ([p.player_id, d.label, _r1(v), _r1(p.cf_pct), _r1(p.xgd)] for p, d, v in entries[: spec.limit]),
        ctx.rule,
        "expected event % = league direction rate x player win share in that direction (best direction shown)",
    )


def _pct(num: int, den: int) -> Optional[float]:
    return 100.0 * num / den if den else None


def _fig2(ctx: ReportContext) -> dict:
    cells: Dict[Tuple[ZoneSection, bool], List[int]] = {}
    for r in ctx.rows:
        if r.is_winner and r.zone is not None:
            c = cells.setdefault((r.zone, r.clean), [0, 0])
            c[0] += 1
            c[1] += int(r.event)
    return {
        "description": "percentage of face-off wins followed by an event, by zone and win type",
        "rows": [
            {"zone": z.value, "clean": c, "wins": cells.get((z, c), [0, 0])[0],
             "event_pct": _pct(cells.get((z, c), [0, 0])[1], cells.get((z, c), [0, 0])[0])}
            for z in ZoneSection for c in (True, False)
        ],
    }


def _fig3(ctx: ReportContext) -> dict:
    wins = {z: [0, 0] for z in ZoneSection}
    for r in ctx.rows:
        if r.is_winner and r.zone is not None:
            wins[r.zone][0] += 1
            wins[r.zone][1] += int(r.clean)
    return {
        "description": "percentage of wins that are clean, by zone",
        "rows": [{"zone": z.value, "wins": n, "clean_wins": c, "clean_pct": _pct(c, n)} for z, (n, c) in wins.items()],
    }


def _fig4(ctx: ReportContext) -> dict:
    return {
        "description": "win-direction shares and events per win by circle; ALL combines the 8 non-center circles",
        "win_directions": rose_to_json(rose_chart(ctx.rows)),
        "event_rates": {
            k: {d.value: v for d, v in cells.items()} for k, cells in direction_event_rates(ctx.rows).items()
        },
    }


def _fig5(ctx: ReportContext, spec: ReportSpec) -> dict:
    by_player: Dict[str, List[ClassifiedFaceoff]] = {}
    for r in ctx.rows:
        by_player.setdefault(r.player, []).append(r)
    chosen = sorted(ctx.players, key=lambda p: (-p.faceoffs, p.player_id))[: spec.limit]
    return {
        "description": "per-player win directionality by circle: share, mean distance and count",
        "players": {p.player_id: rose_to_json(rose_chart(by_player.get(p.player_id, []))) for p in chosen},
    }


def _direction_shares(rows: Iterable[ClassifiedFaceoff], group) -> Dict[object, Dict[DirectionSector, float]]:
    counts: Dict[object, Dict[DirectionSector, int]] = {}
    for r in rows:
        if r.is_winner and r.direction is not None and r.deployment is not None:
            c = counts.setdefault(group(r), {d: 0 for d in DirectionSector})
            c[r.direction] += 1
    out = {}
    for g, c in counts.items():
        total = sum(c.values())
        out[g] = {d: n / total for d, n in c.items()}
    return out


def _fig6(ctx: ReportContext) -> dict:
    shares = _direction_shares(ctx.rows, lambda r: r.deployment)
    return {
        "description": "percentage of win directions by strong/weak deployment",
        "rows": [
            {"deployment": s.value, "direction": d.label, "pct": 100.0 * shares[s][d]}
            for s in Deployment if s in shares for d in DirectionSector
        ],
    }


def _appx33(ctx: ReportContext) -> str:
    shares = _direction_shares(ctx.rows, lambda r: (r.deployment, r.zone))
    zones = (ZoneSection.DEFENSIVE, ZoneSection.NEUTRAL_SOUTH, ZoneSection.NEUTRAL_NORTH, ZoneSection.OFFENSIVE)
    body = []
    for s in Deployment:
        for d in DirectionSector:
            body.append([s.value, d.label] + [
                _r1(100.0 * shares[(s, z)][d]) if (s, z) in shares else "" for z in zones
            ])
    return _table(
        ("deployment", "direction") + tuple(f"{z.value}_win_direction_pct" for z in zones),
        body, ctx.rule, "win direction breakdown by deployment and zone",
    )


def _appx332(ctx: ReportContext) -> str:
    cells: Dict[Tuple[DirectionSector, Deployment, ZoneSection], List[int]] = {}
    for r in ctx.rows:
        if r.is_winner and r.direction is not None and r.deployment is not None:
            c = cells.setdefault((r.direction, r.deployment, r.zone), [0, 0])
            c[0] += 1
            c[1] += int(r.event)
    zones = (ZoneSection.DEFENSIVE, ZoneSection.NEUTRAL_SOUTH, ZoneSection.NEUTRAL_NORTH, ZoneSection.OFFENSIVE)
    cols = [(z, s) for z in zones for s in (Deployment.WEAK, Deployment.STRONG)]
    body = []
    for d in DirectionSector:
        row = [d.label]
        for z, s in cols:
            n, e = cells.get((d, s, z), [0, 0])
            row.append(_r1(_pct(e, n)))
        body.append(row)
    return _table(
        ("direction",) + tuple(f"{s.value.lower()}_{z.value}_event_pct" for z, s in cols),
        body, ctx.rule, "event % after wins by direction, deployment and zone",
    )


def render_report(ctx: ReportContext, spec: ReportSpec) -> str:
    """Render one exhibit: CSV text for tables, JSON text for figure data."""
    rid = spec.report_id
    if rid == "table1":
        return _clean_table(ctx, spec, bottom=spec.direction == "bottom")
    if rid == "appx31":
        return _clean_table(ctx, spec, bottom=True)
    if rid == "table2":
        return _table2(ctx, spec)
    if rid == "table3":
        return _wdbe_table(ctx, spec, bottom=spec.direction == "bottom")
    if rid == "appx4":
        return _wdbe_table(ctx, spec, bottom=True)
    if rid == "appx33":
        return _appx33(ctx)
    if rid == "appx332":
        return _appx332(ctx)
    data = {
        "fig2": lambda: _fig2(ctx),
        "fig3": lambda: _fig3(ctx),
        "fig4": lambda: _fig4(ctx),
        "fig5": lambda: _fig5(ctx, spec),
        "fig6": lambda: _fig6(ctx),
    }[rid]()
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
