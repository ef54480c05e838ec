"""
Report rendering: per-class precision/recall tables (CSV, markdown, PDF),
importance bar charts (SVG) and the workflow recovery table.
"""
import io
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from features.matrix import FEATURE_COLUMNS, vocabulary  # noqa: E402
from models.report import ClassMetrics, EvalReport, SweepReport  # noqa: E402
from models.workflow import RecoveryReport  # noqa: E402
from utils.errors import ReportError  # noqa: E402
from utils.files import atomic_write, write_json  # noqa: E402
from utils.pdf_generator import generate_table_pdf  # noqa: E402

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("csv", "markdown", "svg", "pdf")
FORMAT_ALIASES = {"md": "markdown"}
MISSING = "-"


def _check(report: SweepReport) -> None:
    if not report.cells:
        raise ReportError(f"report {report.name} has no cells to render")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _class_frame(columns: Sequence[Tuple[str, ClassMetrics]]) -> pd.DataFrame:
    classes = vocabulary([name for _, metrics in columns for name in metrics.class_names])
    table: Dict[str, List[str]] = {"Class": classes}
    for key, metrics in columns:
        lookup = {name: i for i, name in enumerate(metrics.class_names)}
        for column, series in (("P", metrics.precision), ("R", metrics.recall)):
            table[f"{key} {column}"] = [
                _fmt(series[lookup[c]]) if c in lookup and metrics.support[lookup[c]] else MISSING for c in classes
            ]
    return pd.DataFrame(table)


def class_table(report: SweepReport, level: str = "flows") -> pd.DataFrame:
    """Rows per class, a P and an R column per cell; absent classes show '-'."""
    _check(report)
    return _class_frame([(cell.key, getattr(cell.report, level)) for cell in report.cells])


def accuracy_table(report: SweepReport) -> pd.DataFrame:
    _check(report)
    return pd.DataFrame(
        {
            "Cell": [c.key for c in report.cells],
            "Transform": [c.transform for c in report.cells],
            "Flows": [c.n_flows for c in report.cells],
            "Row accuracy": [_fmt(c.report.rows.accuracy) for c in report.cells],
            "Flow accuracy": [_fmt(c.report.flows.accuracy) for c in report.cells],
            "Flow macro accuracy": [_fmt(c.report.flows.macro_accuracy) for c in report.cells],
            "Hidden": [c.hidden_size for c in report.cells],
            "Best epoch": [c.best_epoch for c in report.cells],
        }
    )


def importance_table(report: SweepReport) -> pd.DataFrame:
    _check(report)
    table = {"feature": list(FEATURE_COLUMNS)}
    for cell in report.cells:
        table[cell.key] = [cell.importance.get(f, 0.0) for f in FEATURE_COLUMNS]
    return pd.DataFrame(table)


def _markdown(frame: pd.DataFrame) -> str:
    # Cells are preformatted strings; keep "0.90" from becoming 0.9
    return frame.to_markdown(index=False, tablefmt="pipe", disable_numparse=True) + "\n"


def _svg(report: SweepReport) -> str:
    _check(report)
    n = len(report.cells)
    plt.rcParams["svg.hashsalt"] = report.name
    fig, axes = plt.subplots(n, 1, figsize=(8, 3.2 * n), squeeze=False)
    for ax, cell in zip(axes[:, 0], report.cells):
        values = [cell.importance.get(f, 0.0) for f in FEATURE_COLUMNS]
        ax.barh(list(FEATURE_COLUMNS), values, color="#21568f")
        ax.invert_yaxis()
        ax.axvline(0.0, color="#999999", linewidth=0.8)
        ax.set_title(f"{report.name}: {cell.key} ({cell.transform})", fontsize=10)
        ax.set_xlabel("accuracy drop when shuffled")
        ax.tick_params(axis="y", labelsize=7)
    fig.tight_layout()
    buffer = io.StringIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buffer.getvalue()


def _pdf(report: SweepReport) -> bytes:
    classes = class_table(report)
    accuracy = accuracy_table(report)
    details = [("Experiment", report.name), ("Sweep", report.parameter or "none"), ("Seed", report.seed)]
    notes = [
        f"{row['Cell']}: flow macro accuracy {row['Flow macro accuracy']}, row accuracy {row['Row accuracy']}"
        for _, row in accuracy.iterrows()
    ]
    return generate_table_pdf(
        f"Classification results - {report.name}",
        details,
        list(classes.columns),
        [[str(v) for v in row] for row in classes.itertuples(index=False)],
        notes,
    )


def render_report(report: SweepReport, fmt: str):
    """csv and markdown return text, svg returns SVG text, pdf returns bytes."""
    fmt = FORMAT_ALIASES.get(fmt, fmt)
    if fmt not in REPORT_FORMATS:
        raise ReportError(f"unknown report format {fmt!r}; expected one of {', '.join(REPORT_FORMATS)}")
    _check(report)
    if fmt == "csv":
        return class_table(report).to_csv(index=False)
    if fmt == "markdown":
        title = f"## {report.name}" + (f" ({report.parameter} sweep)" if report.parameter else "")
        return f"{title}\n\n{_markdown(class_table(report))}\n{_markdown(accuracy_table(report))}"
    if fmt == "svg":
        return _svg(report)
    return _pdf(report)


def write_reports(report: SweepReport, out_dir, formats: Sequence[str] = ()) -> List[Path]:
    """report.csv, report.md, report.json and importance.csv, plus any of svg/pdf asked for."""
    _check(report)
    out = Path(out_dir)
    written = []
    files = {
        "report.csv": render_report(report, "csv"),
        "report.md": render_report(report, "markdown"),
        "importance.csv": importance_table(report).to_csv(index=False, float_format="%.6f"),
    }
    for fmt in formats:
        fmt = FORMAT_ALIASES.get(fmt, fmt)
        if fmt in ("svg", "pdf"):
            files[f"report.{fmt}"] = render_report(report, fmt)
    for name, content in files.items():
        atomic_write(out / name, content)
        written.append(out / name)
    write_json(out / "report.json", report.model_dump(mode="json"))
    written.append(out / "report.json")
    logger.info(f"Wrote {len(written)} report files to {out}")
    return written


def recovery_table(report: RecoveryReport) -> pd.DataFrame:
    if not report.rows:
        raise ReportError("recovery report has no workflows")
    return pd.DataFrame(
        {
            "Workflow": [r.workflow for r in report.rows],
            "Pos Changes": [r.position_changes for r in report.rows],
            "Samples": [r.samples for r in report.rows],
            "Recovery Rate": [
                f"{100 * r.recovery_rate:.0f}%" if r.recovery_rate is not None else MISSING for r in report.rows
            ],
        }
    )


def render_recovery(report: RecoveryReport, fmt: str = "markdown") -> str:
    fmt = FORMAT_ALIASES.get(fmt, fmt)
    table = recovery_table(report)
    if fmt == "csv":
        return table.to_csv(index=False)
    if fmt != "markdown":
        raise ReportError(f"recovery tables render as csv or markdown, not {fmt!r}")
    lines = [f"## Workflow reconstruction ({report.mode}, transform {report.transform})", "", _markdown(table)]
    lines.append(f"Mean recovery: {100 * report.mean_recovery:.1f}%")
    if report.movement_accuracy is not None:
        lines.append(f"Movement accuracy: {100 * report.movement_accuracy:.1f}%")
    return "\n".join(lines) + "\n"


def comparison_table(before: SweepReport, after: SweepReport) -> pd.DataFrame:
    """Flow macro accuracy and top feature per cell, before and after a transform."""
    _check(before)
    _check(after)
    rows = []
    for cell in before.cells:
        other = next((c for c in after.cells if c.key == cell.key), None)
        rows.append(
            {
                "Cell": cell.key,
                "Before": _fmt(cell.report.flows.macro_accuracy),
                "After": _fmt(other.report.flows.macro_accuracy) if other else MISSING,
                "Top feature before": _top(cell.importance),
                "Top feature after": _top(other.importance) if other else MISSING,
            }
        )
    return pd.DataFrame(rows)


def _top(importance: Dict[str, float]) -> str:
    if not importance:
        return MISSING
    return max(importance.items(), key=lambda kv: kv[1])[0]


def render_comparison(before: SweepReport, after: SweepReport, transform: str) -> str:
    return f"## {before.name}: none vs {transform}\n\n{_markdown(comparison_table(before, after))}"


def render_eval(report: EvalReport, name: str = "eval", fmt: str = "markdown") -> str:
    """Rows and flows side by side for one evaluated model."""
    fmt = FORMAT_ALIASES.get(fmt, fmt)
    table = _class_frame([("rows", report.rows), ("flows", report.flows)])
    if fmt == "csv":
        return table.to_csv(index=False)
    if fmt != "markdown":
        raise ReportError(f"evaluation tables render as csv or markdown, not {fmt!r}")
    return (
        f"## {name}\n\n{_markdown(table)}\n"
        f"Row accuracy: {_fmt(report.rows.accuracy)}\n"
        f"Flow macro accuracy: {_fmt(report.flows.macro_accuracy)}\n"
    )
