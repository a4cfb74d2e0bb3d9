"""Event-log parsing, validation and the external per-player metrics join."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .rink import DEFAULT_RINK, DOT_IDS, Handedness, Point, RinkSpec

logger = logging.getLogger(__name__)

FACEOFF_COLUMNS = (
    "game_id", "faceoff_id", "period", "drop_time_s", "dot_id", "home_attack_sign",
    "winner_team", "winner_player", "loser_player", "winner_hand", "loser_hand",
    "touch_kind", "touch_time_s", "touch_x", "touch_y", "touch_player", "touch_team",
    "touch_predrop_x", "touch_predrop_y", "home_team",
)
SEQUENCE_COLUMNS = ("faceoff_id", "kind", "time_s", "x", "y", "team")
METRICS_COLUMNS = ("player_id", "cf_pct", "xgd", "faceoffs_taken")


class UnreadableInput(IOError):
    pass


class SchemaViolation(ValueError):
    pass


class DuplicateMetricsRow(ValueError):
    pass


class RowError(ValueError):
    """Row-level problem; becomes a Diagnostic instead of aborting the parse."""


class TouchKind(Enum):
    RECEPTION = "Reception"
    RECOVERY = "Recovery"


class EventKind(Enum):
    SHOT_ON_NET = "ShotOnNet"
    SHOT_ATTEMPT = "ShotAttempt"
    ZONE_EXIT = "ZoneExit"
    ZONE_ENTRY = "ZoneEntry"
    POSSESSION_CHANGE = "PossessionChange"
    STOPPAGE = "Stoppage"


@dataclass(frozen=True)
class FirstTouch:
    kind: TouchKind
    time: float
    location: Point
    player: str
    player_team: str
    player_predrop_location: Optional[Point] = None


@dataclass(frozen=True)
class SequenceEvent:
    kind: EventKind
    time: float
    location: Optional[Point]
    team: str


@dataclass(frozen=True)
class FaceoffRecord:
    game_id: str
    faceoff_id: str
    period: int
    drop_time: float
    dot_id: str
    home_attack_sign: int
    home_team: str
    winner_team: str
    winner_player: str
    loser_player: str
    winner_hand: Optional[Handedness]
    loser_hand: Optional[Handedness]
    first_touch: FirstTouch
    sequence: Tuple[SequenceEvent, ...] = ()

    def dot_location(self, rink: RinkSpec = DEFAULT_RINK) -> Point:
        return rink.resolve_dot(self.dot_id, self.home_attack_sign)

    def attack_sign(self, team: str) -> int:
        return self.home_attack_sign if team == self.home_team else -self.home_attack_sign


@dataclass(frozen=True)
class Diagnostic:
    source: str
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.source}:{self.line}: {self.message}"


@dataclass(frozen=True)
class ExternalPlayerMetrics:
    player_id: str
    cf_pct: float
    xgd: float
    faceoffs_taken: int


# ---------------------------------------------------------------- parsing

Source = Union[str, os.PathLike, IO[bytes], IO[str], bytes]


def _open_text(src: Source) -> Tuple[IO[str], str]:
    if isinstance(src, bytes):
        return io.StringIO(src.decode("utf-8")), "<bytes>"
    if isinstance(src, (str, os.PathLike)):
        try:
            return open(src, "r", encoding="utf-8", newline=""), os.fspath(src)
        except OSError as exc:
            raise UnreadableInput(f"cannot read {src}: {exc}") from exc
    name = getattr(src, "name", "<stream>")
    if isinstance(src, io.TextIOBase):
        return src, str(name)
    return io.TextIOWrapper(src, encoding="utf-8", newline=""), str(name)


def _read_all(src: Source) -> Tuple[str, str]:
    fh, name = _open_text(src)
    try:
        return fh.read(), name
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableInput(f"cannot read {name}: {exc}") from exc
    finally:
        if isinstance(src, (str, os.PathLike)):
            fh.close()


def _float(value, col: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise RowError(f"{col}: not a number: {value!r}") from None
    if out != out or out in (float("inf"), float("-inf")):
        raise RowError(f"{col}: not finite: {value!r}")
    return out


def _opt_float(value, col: str) -> Optional[float]:
    if value is None or value == "":
        return None
    return _float(value, col)


def _int(value, col: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise RowError(f"{col}: not an integer: {value!r}") from None


def _ident(value, col: str) -> str:
    if value is None or str(value) == "":
        raise RowError(f"{col}: missing")
    return str(value)


def _hand(value, col: str) -> Optional[Handedness]:
    if value is None or value == "":
        return None
    try:
        return Handedness(value)
    except ValueError:
        raise RowError(f"{col}: expected L or R, got {value!r}") from None


def _faceoff_from_row(row: Dict[str, object], sequence: Tuple[SequenceEvent, ...]) -> FaceoffRecord:
    dot_id = _ident(row["dot_id"], "dot_id")
    if dot_id not in DOT_IDS:
        raise RowError(f"dot_id: unknown dot {dot_id!r}")
    sign = _int(row["home_attack_sign"], "home_attack_sign")
    if sign not in (1, -1):
        raise RowError(f"home_attack_sign: expected +1 or -1, got {sign}")
    try:
        kind = TouchKind(row["touch_kind"])
    except ValueError:
        raise RowError(f"touch_kind: unknown kind {row['touch_kind']!r}") from None
    px = _opt_float(row["touch_predrop_x"], "touch_predrop_x")
    py = _opt_float(row["touch_predrop_y"], "touch_predrop_y")
    if (px is None) != (py is None):
        raise RowError("touch_predrop_x/y: both or neither must be set")
    drop = _float(row["drop_time_s"], "drop_time_s")
    touch = FirstTouch(
        kind=kind,
        time=_float(row["touch_time_s"], "touch_time_s"),
        location=(_float(row["touch_x"], "touch_x"), _float(row["touch_y"], "touch_y")),
        player=_ident(row["touch_player"], "touch_player"),
        player_team=_ident(row["touch_team"], "touch_team"),
        player_predrop_location=None if px is None else (px, py),
    )
    rec = FaceoffRecord(
        game_id=_ident(row["game_id"], "game_id"),
        faceoff_id=_ident(row["faceoff_id"], "faceoff_id"),
        period=_int(row["period"], "period"),
        drop_time=drop,
        dot_id=dot_id,
        home_attack_sign=sign,
        home_team=_ident(row["home_team"], "home_team"),
        winner_team=_ident(row["winner_team"], "winner_team"),
        winner_player=_ident(row["winner_player"], "winner_player"),
        loser_player=_ident(row["loser_player"], "loser_player"),
        winner_hand=_hand(row["winner_hand"], "winner_hand"),
        loser_hand=_hand(row["loser_hand"], "loser_hand"),
        first_touch=touch,
        sequence=sequence,
    )
    if rec.winner_player == rec.loser_player:
        raise RowError("winner_player equals loser_player")
    if touch.time < drop:
        raise RowError("non-monotonic time: first touch before puck drop")
    prev = touch.time
    for ev in sequence:
        if ev.time < prev:
            raise RowError("non-monotonic time: sequence event out of order")
        prev = ev.time
    return rec


def _event_from_row(row: Dict[str, object]) -> SequenceEvent:
    try:
        kind = EventKind(row["kind"])
    except ValueError:
        raise RowError(f"kind: unknown event kind {row['kind']!r}") from None
    x = _opt_float(row.get("x"), "x")
    y = _opt_float(row.get("y"), "y")
    if (x is None) != (y is None):
        raise RowError("x/y: both or neither must be set")
    if x is None and kind is not EventKind.STOPPAGE:
        raise RowError(f"{kind.value} requires a location")
    return SequenceEvent(
        kind=kind,
        time=_float(row["time_s"], "time_s"),
        location=None if x is None else (x, y),
        team=_ident(row["team"], "team"),
    )


def _parse_sequences(src: Source) -> Tuple[Dict[str, List[Tuple[int, object]]], List[Diagnostic]]:
    """Group sequence rows by faceoff_id; values are (line, event or RowError)."""
    text, name = _read_all(src)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != SEQUENCE_COLUMNS:
        raise SchemaViolation(f"{name}: expected header {','.join(SEQUENCE_COLUMNS)}, got {header}")
    grouped: Dict[str, List[Tuple[int, object]]] = defaultdict(list)
    diags: List[Diagnostic] = []
    for values in reader:
        line = reader.line_num
        if len(values) != len(SEQUENCE_COLUMNS):
            diags.append(Diagnostic(name, line, f"expected {len(SEQUENCE_COLUMNS)} fields, got {len(values)}"))
            continue
        row = dict(zip(SEQUENCE_COLUMNS, values))
        try:
            grouped[row["faceoff_id"]].append((line, _event_from_row(row)))
        except RowError as exc:
            grouped[row["faceoff_id"]].append((line, exc))
    return grouped, diags


def _attach(fid: str, grouped, seq_name: str) -> Tuple[SequenceEvent, ...]:
    events = []
    for line, item in grouped.pop(fid, ()):
        if isinstance(item, RowError):
            raise RowError(f"sequence {seq_name}:{line}: {item}")
        events.append(item)
    return tuple(events)


def parse_event_log(
    source: Source,
    fmt: str = "csv",
    sequences: Optional[Source] = None,
) -> Tuple[List[FaceoffRecord], List[Diagnostic]]:
    """Parse a face-off log into records plus row-level diagnostics.

    `fmt` is "csv" (fixed header, sequence events in the companion file) or
    "json" (JSON lines; each object may embed its events under "sequence").
    Header mismatches and I/O failures raise; bad rows become diagnostics and
    never abort the batch, so records + face-off diagnostics = input rows.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    grouped: Dict[str, List[Tuple[int, object]]] = {}
    seq_diags: List[Diagnostic] = []
    seq_name = "<sequences>"
    if sequences is not None:
        grouped, seq_diags = _parse_sequences(sequences)
        seq_name = getattr(sequences, "name", None) or (
            os.fspath(sequences) if isinstance(sequences, (str, os.PathLike)) else seq_name
        )

    text, name = _read_all(source)
    records: List[FaceoffRecord] = []
    diags: List[Diagnostic] = []

    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != FACEOFF_COLUMNS:
            raise SchemaViolation(f"{name}: expected header {','.join(FACEOFF_COLUMNS)}, got {header}")
        for values in reader:
            line = reader.line_num
            try:
                if len(values) != len(FACEOFF_COLUMNS):
                    raise RowError(f"expected {len(FACEOFF_COLUMNS)} fields, got {len(values)}")
                row = dict(zip(FACEOFF_COLUMNS, values))
                records.append(_faceoff_from_row(row, _attach(row["faceoff_id"], grouped, seq_name)))
            except RowError as exc:
                diags.append(Diagnostic(name, line, str(exc)))
    else:
        for line, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip():
                continue
            try:
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise RowError(f"invalid JSON: {exc.msg}") from None
                if not isinstance(obj, dict):
                    raise RowError("expected a JSON object")
                missing = [c for c in FACEOFF_COLUMNS if c not in obj]
                if missing:
                    raise RowError(f"missing fields: {', '.join(missing)}")
                row = {c: ("" if obj[c] is None else obj[c]) for c in FACEOFF_COLUMNS}
                embedded = []
                for ev in obj.get("sequence") or ():
                    if not isinstance(ev, dict):
                        raise RowError("sequence entries must be objects")
                    embedded.append(_event_from_row(ev))
                attached = _attach(str(row["faceoff_id"]), grouped, seq_name)
                seq = tuple(embedded) + attached
                records.append(_faceoff_from_row(row, seq))
            except RowError as exc:
                diags.append(Diagnostic(name, line, str(exc)))

    for fid, rows in grouped.items():
        for line, _ in rows:
            seq_diags.append(Diagnostic(seq_name, line, f"no face-off with id {fid!r}"))
    if seq_diags:
        logger.warning("%d sequence rows were not attached", len(seq_diags))
    return records, diags + seq_diags


# ---------------------------------------------------------------- writing

def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def faceoff_row(rec: FaceoffRecord) -> List[str]:
    t = rec.first_touch
    pre = t.player_predrop_location
    return [
        rec.game_id, rec.faceoff_id, str(rec.period), _fmt(rec.drop_time), rec.dot_id,
        str(rec.home_attack_sign), rec.winner_team, rec.winner_player, rec.loser_player,
        rec.winner_hand.value if rec.winner_hand else "",
        rec.loser_hand.value if rec.loser_hand else "",
        t.kind.value, _fmt(t.time), _fmt(t.location[0]), _fmt(t.location[1]),
        t.player, t.player_team,
        _fmt(pre[0] if pre else None), _fmt(pre[1] if pre else None),
        rec.home_team,
    ]


def write_event_log(records: Iterable[FaceoffRecord], out: IO[str], sequences_out: IO[str]) -> int:
    """Write records in the ingest CSV schema; returns the number of face-offs."""
    fw = csv.writer(out, lineterminator="\n")
    sw = csv.writer(sequences_out, lineterminator="\n")
    fw.writerow(FACEOFF_COLUMNS)
    sw.writerow(SEQUENCE_COLUMNS)
    n = 0
    for rec in records:
        fw.writerow(faceoff_row(rec))
        for ev in rec.sequence:
            loc = ev.location
            sw.writerow([
                rec.faceoff_id, ev.kind.value, _fmt(ev.time),
                _fmt(loc[0] if loc else None), _fmt(loc[1] if loc else None), ev.team,
            ])
        n += 1
    return n


# ---------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    total: int = 0
    out_of_bounds: List[str] = field(default_factory=list)
    missing_handedness: List[str] = field(default_factory=list)
    duplicate_ids: List[str] = field(default_factory=list)
    center_dot: int = 0

    @property
    def center_share(self) -> float:
        return self.center_dot / self.total if self.total else 0.0

    @property
    def findings(self) -> int:
        return len(self.out_of_bounds) + len(self.missing_handedness) + len(self.duplicate_ids)

    def is_empty(self) -> bool:
        return self.findings == 0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "findings": self.findings,
            "out_of_bounds": self.out_of_bounds,
            "missing_handedness": self.missing_handedness,
            "duplicate_ids": self.duplicate_ids,
            "center_dot": self.center_dot,
            "center_share": self.center_share,
        }


def validate_records(records: Sequence[FaceoffRecord], rink: RinkSpec = DEFAULT_RINK) -> ValidationReport:
    """Count out-of-bounds coordinates, missing hands, duplicate ids and center draws.

    Center-ice draws are informational and do not count as findings.
    """
    report = ValidationReport(total=len(records))
    seen = Counter(r.faceoff_id for r in records)
    report.duplicate_ids = sorted(fid for fid, n in seen.items() if n > 1)
    for rec in records:
        points = [rec.first_touch.location]
        if rec.first_touch.player_predrop_location is not None:
            points.append(rec.first_touch.player_predrop_location)
        points.extend(ev.location for ev in rec.sequence if ev.location is not None)
        if not all(rink.in_bounds(p) for p in points):
            report.out_of_bounds.append(rec.faceoff_id)
        if rec.winner_hand is None or rec.loser_hand is None:
            report.missing_handedness.append(rec.faceoff_id)
        if rec.dot_id == "C":
            report.center_dot += 1
    return report


# ---------------------------------------------------------------- external metrics

def parse_external_metrics(source: Source) -> List[ExternalPlayerMetrics]:
    text, name = _read_all(source)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != METRICS_COLUMNS:
        raise SchemaViolation(f"{name}: expected header {','.join(METRICS_COLUMNS)}, got {header}")
    out = []
    for values in reader:
        line = reader.line_num
        try:
            if len(values) != len(METRICS_COLUMNS):
                raise RowError(f"expected {len(METRICS_COLUMNS)} fields")
            row = dict(zip(METRICS_COLUMNS, values))
            m = ExternalPlayerMetrics(
                player_id=_ident(row["player_id"], "player_id"),
                cf_pct=_float(row["cf_pct"], "cf_pct"),
                xgd=_float(row["xgd"], "xgd"),
                faceoffs_taken=_int(row["faceoffs_taken"], "faceoffs_taken"),
            )
            if not (0 <= m.cf_pct <= 100 and 0 <= m.xgd <= 100) or m.faceoffs_taken < 0:
                raise RowError("value out of range")
        except RowError as exc:
            raise SchemaViolation(f"{name}:{line}: {exc}") from None
        out.append(m)
    return out


def write_external_metrics(rows: Iterable[ExternalPlayerMetrics], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for m in rows:
        w.writerow([m.player_id, _fmt(m.cf_pct), _fmt(m.xgd), m.faceoffs_taken])


def join_external_metrics(
    players: Iterable[str], metrics: Iterable[ExternalPlayerMetrics]
) -> Tuple[Dict[str, ExternalPlayerMetrics], List[str]]:
    """Left join players onto metrics rows; returns (matches, players lacking a row)."""
    by_id: Dict[str, ExternalPlayerMetrics] = {}
    for m in metrics:
        if m.player_id in by_id:
            raise DuplicateMetricsRow(m.player_id)
        by_id[m.player_id] = m
    joined: Dict[str, ExternalPlayerMetrics] = {}
    missing: List[str] = []
    for p in players:
        if p in by_id:
            joined[p] = by_id[p]
        else:
            missing.append(p)
    return joined, missing
