"""faceoff-forge command line: ingest, validate, baselines, metrics, report, synth, correlate.

Exit codes: 0 success, 1 fatal data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import os
import sys
from typing import IO, Iterator, List, Optional, Sequence, Tuple

from .aggregate import LeagueBaselines, build_baselines, tally
from .classify import ROW_COLUMNS, ClassifiedFaceoff, ClassifyConfig, DegeneratePolygon, classify_all, read_rows, write_rows
from .ingest import (
    Diagnostic,
    DuplicateMetricsRow,
    SchemaViolation,
    UnreadableInput,
    join_external_metrics,
    parse_event_log,
    parse_external_metrics,
    validate_records,
    write_event_log,
    write_external_metrics,
)
from .metrics import DEFAULT_MIN_FACEOFFS, DegenerateInput, QualificationRule, compute_player_metrics, read_player_table, write_player_table
from .report import REPORT_IDS, ReportContext, ReportSpec, correlate_metrics, correlation_csv, render_report
from .synth import InvalidParams, SynthParams, generate_season, random_params, synthesize_external_metrics

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2

MAX_DIAGNOSTICS_SHOWN = 20


class DataError(Exception):
    """Fatal problem with an input file; the message names the file."""


class UsageError(Exception):
    pass


def sequences_companion(path: str) -> str:
    """Default companion path for sequence events: season.csv -> season.sequences.csv."""
    stem, ext = os.path.splitext(path)
    return f"{stem}.sequences{ext or '.csv'}"


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
        return
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise DataError(f"{path}: output directory does not exist")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        yield fh


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required flag(s) " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _report_diagnostics(diags: Sequence[Diagnostic]) -> None:
    if not diags:
        return
    print(f"warning: {len(diags)} row(s) skipped", file=sys.stderr)
    for d in diags[:MAX_DIAGNOSTICS_SHOWN]:
        print(f"  {d}", file=sys.stderr)
    if len(diags) > MAX_DIAGNOSTICS_SHOWN:
        print(f"  ... {len(diags) - MAX_DIAGNOSTICS_SHOWN} more", file=sys.stderr)


def _read_log(args: argparse.Namespace):
    path = args.input
    fmt = "json" if path.endswith((".json", ".jsonl", ".ndjson")) else "csv"
    seq = args.sequences
    if seq is None and fmt == "csv" and os.path.exists(sequences_companion(path)):
        seq = sequences_companion(path)
    try:
        records, diags = parse_event_log(path, fmt, seq)
    except (UnreadableInput, SchemaViolation) as exc:
        raise DataError(f"{path}: {exc}") from None
    _report_diagnostics(diags)
    return records


def _config(args: argparse.Namespace) -> ClassifyConfig:
    if getattr(args, "config", None) is None:
        return ClassifyConfig()
    try:
        return ClassifyConfig.load(args.config)
    except (OSError, ValueError, DegeneratePolygon) as exc:
        raise DataError(f"{args.config}: {exc}") from None


def _is_rows_file(path: str) -> bool:
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline().strip()
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from None
    return first == ",".join(ROW_COLUMNS)


def _load_rows(args: argparse.Namespace) -> List[ClassifiedFaceoff]:
    """Classified rows, either read back from `ingest` output or classified from a raw log."""
    _require(args, "input")
    if _is_rows_file(args.input):
        try:
            with open(args.input, encoding="utf-8", newline="") as fh:
                return read_rows(fh)
        except (SchemaViolation, ValueError, IndexError) as exc:
            raise DataError(f"{args.input}: {exc}") from None
    return classify_all(_read_log(args), cfg=_config(args))


def _load_external(args: argparse.Namespace, players: Sequence[str]):
    if args.metrics_file is None:
        return None
    try:
        rows = parse_external_metrics(args.metrics_file)
        joined, missing = join_external_metrics(players, rows)
    except (UnreadableInput, SchemaViolation, DuplicateMetricsRow) as exc:
        raise DataError(f"{args.metrics_file}: {exc}") from None
    if missing:
        print(f"warning: {len(missing)} player(s) have no row in {args.metrics_file}", file=sys.stderr)
    return joined


def _load_baselines(args: argparse.Namespace) -> Optional[LeagueBaselines]:
    if args.baselines is None:
        return None
    try:
        with open(args.baselines, encoding="utf-8") as fh:
            return LeagueBaselines.from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"{args.baselines}: {exc}") from None


def _rule(args: argparse.Namespace) -> QualificationRule:
    if args.min_faceoffs < 0:
        raise UsageError("--min-faceoffs must be >= 0")
    return QualificationRule(args.min_faceoffs)


# ---------------------------------------------------------------- subcommands

def cmd_ingest(args: argparse.Namespace) -> int:
    _require(args, "input")
    rows = classify_all(_read_log(args), cfg=_config(args))
    with _output(args.out) as out:
        write_rows(rows, out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    _require(args, "input")
    report = validate_records(_read_log(args))
    with _output(args.out) as out:
        out.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_baselines(args: argparse.Namespace) -> int:
    rows = _load_rows(args)
    b = build_baselines(tally(rows), args.eq1_denominator)
    if b.low_sample:
        print(f"warning: {len(b.low_sample)} bucket(s) below the low-sample threshold", file=sys.stderr)
    with _output(args.out) as out:
        out.write(b.to_json())
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    rows = _load_rows(args)
    rule = _rule(args)
    t = tally(rows)
    b = _load_baselines(args) or build_baselines(t, args.eq1_denominator)
    players = compute_player_metrics(t, b, _load_external(args, sorted(t.players)), rule, args.include_center)
    with _output(args.out) as out:
        write_player_table(players, out)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    _require(args, "id")
    try:
        spec = ReportSpec(args.id, args.direction, args.limit)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = _load_rows(args)
    players = sorted({r.player for r in rows})
    ctx = ReportContext.build(
        rows, _load_external(args, players), _rule(args), _load_baselines(args),
        args.include_center, args.eq1_denominator,
    )
    text = render_report(ctx, spec)
    with _output(args.out) as out:
        out.write(text)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    _require(args, "out")
    if args.n is None or args.n < 0:
        raise UsageError("synth: --n must be given and >= 0")
    if args.params is not None:
        try:
            params = SynthParams.load(args.params)
        except (OSError, ValueError, KeyError, TypeError, InvalidParams) as exc:
            raise DataError(f"{args.params}: {exc}") from None
    else:
        params = random_params(seed=args.seed)
    records = generate_season(params, args.n, args.seed)
    seq_path = args.sequences or sequences_companion(args.out)
    with _output(args.out) as out, _output(seq_path) as seq:
        write_event_log(records, out, seq)
    if args.metrics_file is not None:
        with _output(args.metrics_file) as out:
            write_external_metrics(synthesize_external_metrics(params, args.seed, records), out)
    return EXIT_OK


def cmd_correlate(args: argparse.Namespace) -> int:
    _require(args, "input")
    try:
        with open(args.input, encoding="utf-8", newline="") as fh:
            players = read_player_table(fh)
    except (OSError, ValueError) as exc:
        raise DataError(f"{args.input}: {exc}") from None
    try:
        matrix = correlate_metrics(players, _rule(args))
    except DegenerateInput as exc:
        raise DataError(f"{args.input}: {exc}") from None
    with _output(args.out) as out:
        out.write(correlation_csv(matrix))
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "validate": cmd_validate,
    "baselines": cmd_baselines,
    "metrics": cmd_metrics,
    "report": cmd_report,
    "synth": cmd_synth,
    "correlate": cmd_correlate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="face-off log (CSV or JSON lines), classified rows, or player table")
    common.add_argument("--sequences", help="sequence-event companion CSV (default: <input>.sequences.csv if present)")
    common.add_argument("--metrics-file", help="external per-player metrics CSV (player_id,cf_pct,xgd,faceoffs_taken)")
    common.add_argument("--config", help="classification config JSON")
    common.add_argument("--baselines", help="league baselines JSON from the baselines subcommand")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--id", choices=REPORT_IDS, help="report identifier")
    common.add_argument("--limit", type=int, default=20, help="rows in ranked tables (default 20)")
    common.add_argument("--direction", choices=("top", "bottom"), default="top")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n", type=int, help="face-offs to generate")
    common.add_argument("--params", help="synthetic league params JSON (default: random params from --seed)")
    common.add_argument("--min-faceoffs", type=int, default=DEFAULT_MIN_FACEOFFS,
                        help=f"qualification threshold (default {DEFAULT_MIN_FACEOFFS})")
    common.add_argument("--include-center", action="store_true",
                        help="count center-ice draws in the EE share denominator")
    common.add_argument("--eq1-denominator", choices=("wins", "all"), default="wins",
                        help="league direction rate denominator")

    parser = argparse.ArgumentParser(prog="faceoff-forge", description="Face-off classification and player metrics.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    helps = {
        "ingest": "classify a face-off log into per-taker rows",
        "validate": "report out-of-bounds, missing-handedness and duplicate-id findings",
        "baselines": "league direction rates and expected-event deltas as JSON",
        "metrics": "per-player metrics CSV",
        "report": "one table (CSV) or figure data (JSON)",
        "synth": "generate a synthetic season in the ingest schema",
        "correlate": "Pearson matrix over a player metrics CSV",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    return COMMANDS[args.command](args)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return cmd_run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
