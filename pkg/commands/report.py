import json
import logging
import sys
from pathlib import Path

from commands.common import execute, resolve_seed, resolve_workers
from db.init import SessionLocal
from evaluation.report import render_recovery, render_report
from models.report import SweepReport
from models.run import RunConfig, RunRecord
from models.workflow import RecoveryReport
from utils.config import validate_config
from utils.errors import ConfigError, ReportError, RoboTraceError
from utils.files import atomic_write, read_json

logger = logging.getLogger(__name__)


def register(subparsers):
    p = subparsers.add_parser("report", help="re-render a stored report or list recorded runs")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="report.json or recovery.json")
    source.add_argument("--runs", action="store_true", help="list the run registry")
    p.add_argument("--format", default="markdown", choices=["md", "markdown", "csv", "svg", "pdf"])
    p.add_argument("--out", help="file to write; stdout when omitted (not for pdf)")
    p.add_argument("--limit", type=int, default=20, help="rows to list with --runs")
    p.set_defaults(handler=run)


def list_runs(limit: int = 20):
    db = SessionLocal()
    try:
        return db.query(RunRecord).order_by(RunRecord.id.desc()).limit(limit).all()
    finally:
        db.close()


def format_runs(records) -> str:
    if not records:
        return "No runs recorded\n"
    lines = []
    for r in records:
        outputs = json.loads(r.outputs or "[]")
        line = f"{r.id:5d}  {r.created_at}  {r.command:<12} seed={r.seed}  {r.status:<6} {len(outputs)} files"
        if r.message:
            line += f"  {r.message}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def load_report(path):
    try:
        document = read_json(path)
    except RoboTraceError as e:
        raise ConfigError(str(e))
    if isinstance(document, dict) and "mode" in document:
        return validate_config(document, RecoveryReport, source=str(path))
    return validate_config(document, SweepReport, source=str(path))


def run(args) -> int:
    if args.runs:
        try:
            records = list_runs(args.limit)
        except Exception as e:
            raise RoboTraceError(f"cannot read run registry: {e}")
        sys.stdout.write(format_runs(records))
        return 0

    config = RunConfig(
        command="report",
        inputs=[Path(args.input)],
        output=Path(args.out) if args.out else None,
        seed=resolve_seed(args),
        workers=resolve_workers(args),
        verbosity=args.verbosity,
    )

    def work():
        report = load_report(args.input)
        if isinstance(report, RecoveryReport):
            rendered = render_recovery(report, args.format)
        else:
            rendered = render_report(report, args.format)
        if config.output is not None:
            atomic_write(config.output, rendered)
            return {"format": args.format}, [config.output]
        if isinstance(rendered, bytes):
            raise ReportError("pdf output needs --out")
        sys.stdout.write(rendered)
        return {"format": args.format}, []

    return execute(config, work)
