"""Evaluation metrics over per-question records and comparison reports.

Records carry one measurement per (question, system): an expert 0/1/2 score,
a correctness flag, latency and citation presence. Reports aggregate them into
the three comparison views the product tracks: overall summary, per-category
accuracy and timing, and the qualitative breakdown on complex questions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import IO, Iterable, Union

from .errors import SchemaError, UndefinedMetricError, ValidationError


class Category(str, Enum):
    FACT_BASED = "fact_based"
    COMPLEX = "complex"
    CROSS_DOCUMENT = "cross_document"


CATEGORY_LABELS = {
    Category.FACT_BASED: "Fact-Based",
    Category.COMPLEX: "Complex",
    Category.CROSS_DOCUMENT: "Cross-Document",
}


@dataclass(frozen=True)
class EvalRecord:
    question_id: str
    system: str
    category: Category
    human_score: int
    correct: bool
    latency_s: float
    has_citation: bool

    def __post_init__(self):
        if self.human_score not in (0, 1, 2):
            raise ValidationError(f"human_score must be 0, 1 or 2, got {self.human_score}")
        if self.latency_s < 0:
            raise ValidationError(f"latency_s cannot be negative, got {self.latency_s}")


def round_half_up(value: float, places: int = 2) -> float:
    """Reporting rounding; Python's bankers rounding would drift on .5 cases."""
    quant = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quant, rounding=ROUND_HALF_UP))


def _require_records(records: list[EvalRecord], metric: str) -> None:
    if not records:
        raise UndefinedMetricError(f"{metric} is undefined over zero records")


def accuracy(records: list[EvalRecord]) -> float:
    _require_records(records, "accuracy")
    return sum(1 for r in records if r.correct) / len(records)


def mean_human_score(records: list[EvalRecord]) -> float:
    _require_records(records, "mean human score")
    return sum(r.human_score for r in records) / len(records)


def avg_response_time(records: list[EvalRecord]) -> float:
    _require_records(records, "average response time")
    return sum(r.latency_s for r in records) / len(records)


def citation_rate(records: list[EvalRecord]) -> float:
    """Percentage of records carrying at least one citation."""
    _require_records(records, "citation rate")
    return 100.0 * sum(1 for r in records if r.has_citation) / len(records)


@dataclass(frozen=True)
class QualitativeBreakdown:
    excellent_pct: float
    satisfactory_pct: float
    poor_pct: float


def qualitative_breakdown(records: list[EvalRecord]) -> QualitativeBreakdown:
    """Score-class percentages over the complex-question records."""
    complex_records = [r for r in records if r.category is Category.COMPLEX]
    if not complex_records:
        raise UndefinedMetricError("qualitative breakdown needs at least one complex record")
    n = len(complex_records)
    counts = {2: 0, 1: 0, 0: 0}
    for r in complex_records:
        counts[r.human_score] += 1
    return QualitativeBreakdown(
        excellent_pct=100.0 * counts[2] / n,
        satisfactory_pct=100.0 * counts[1] / n,
        poor_pct=100.0 * counts[0] / n,
    )


@dataclass
class CategoryCell:
    accuracy: float | None = None
    avg_time_s: float | None = None


@dataclass
class SystemReport:
    system: str
    average_score: float | None
    avg_response_time_s: float | None
    citation_rate_pct: float
    per_category: dict[Category, CategoryCell] = field(default_factory=dict)
    qualitative: QualitativeBreakdown | None = None


def build_report(records: list[EvalRecord]) -> list[SystemReport]:
    """One report per system, in first-appearance order.

    The overall average score is the unweighted mean of the per-category
    accuracies, and the overall response time the unweighted mean of the
    per-category means, so the summary row is reproducible from the category
    table alone. Cells for empty categories stay null; they never abort the
    report.
    """
    _require_records(records, "report")
    systems: list[str] = []
    by_system: dict[str, list[EvalRecord]] = {}
    for record in records:
        if record.system not in by_system:
            systems.append(record.system)
            by_system[record.system] = []
        by_system[record.system].append(record)

    reports = []
    for system in systems:
        recs = by_system[system]
        per_category: dict[Category, CategoryCell] = {}
        for category in Category:
            in_cat = [r for r in recs if r.category is category]
            if in_cat:
                per_category[category] = CategoryCell(
                    accuracy=accuracy(in_cat), avg_time_s=avg_response_time(in_cat)
                )
            else:
                per_category[category] = CategoryCell()
        accuracies = [c.accuracy for c in per_category.values() if c.accuracy is not None]
        times = [c.avg_time_s for c in per_category.values() if c.avg_time_s is not None]
        try:
            qualitative = qualitative_breakdown(recs)
        except UndefinedMetricError:
            qualitative = None
        reports.append(
            SystemReport(
                system=system,
                average_score=sum(accuracies) / len(accuracies) if accuracies else None,
                avg_response_time_s=sum(times) / len(times) if times else None,
                citation_rate_pct=citation_rate(recs),
                per_category=per_category,
                qualitative=qualitative,
            )
        )
    return reports


def load_records(source: Union[bytes, IO[bytes]]) -> list[EvalRecord]:
    """Read JSON-lines records; errors name the offending line."""
    raw = source if isinstance(source, (bytes, bytearray)) else source.read()
    records = []
    for lineno, line in enumerate(bytes(raw).decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"records line {lineno} is not valid JSON: {exc}") from exc
        for key in ("question_id", "system", "category", "human_score", "correct",
                    "latency_s", "has_citation"):
            if key not in entry:
                raise SchemaError(f"records line {lineno} is missing field {key!r}")
        try:
            category = Category(entry["category"])
        except ValueError:
            raise SchemaError(
                f"records line {lineno} has unknown category {entry['category']!r}"
            ) from None
        try:
            records.append(
                EvalRecord(
                    question_id=entry["question_id"],
                    system=entry["system"],
                    category=category,
                    human_score=entry["human_score"],
                    correct=bool(entry["correct"]),
                    latency_s=float(entry["latency_s"]),
                    has_citation=bool(entry["has_citation"]),
                )
            )
        except ValidationError as exc:
            raise SchemaError(f"records line {lineno}: {exc}") from exc
    return records


def save_records(records: Iterable[EvalRecord], sink: IO[bytes]) -> None:
    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {
                    "question_id": r.question_id,
                    "system": r.system,
                    "category": r.category.value,
                    "human_score": r.human_score,
                    "correct": r.correct,
                    "latency_s": r.latency_s,
                    "has_citation": r.has_citation,
                },
                ensure_ascii=False,
            )
        )
    sink.write(("\n".join(lines) + "\n").encode("utf-8"))


def report_to_json(reports: list[SystemReport]) -> dict:
    """Full-precision JSON document; rounding is applied only in the text view."""
    out = []
    for report in reports:
        out.append(
            {
                "system": report.system,
                "average_score": report.average_score,
                "avg_response_time_s": report.avg_response_time_s,
                "citation_rate_pct": report.citation_rate_pct,
                "per_category": {
                    category.value: {
                        "accuracy": cell.accuracy,
                        "avg_time_s": cell.avg_time_s,
                    }
                    for category, cell in report.per_category.items()
                },
                "qualitative": (
                    {
                        "excellent_pct": report.qualitative.excellent_pct,
                        "satisfactory_pct": report.qualitative.satisfactory_pct,
                        "poor_pct": report.qualitative.poor_pct,
                    }
                    if report.qualitative is not None
                    else None
                ),
            }
        )
    return {"systems": out}


def _fmt(value: float | None, places: int = 2) -> str:
    if value is None:
        return "-"
    return f"{round_half_up(value, places):.{places}f}"


def _render_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines)


def render_text_report(reports: list[SystemReport]) -> str:
    """Aligned plain-text tables: overall summary, per-category, qualitative."""
    overall_rows = [
        [r.system, _fmt(r.average_score), _fmt(r.avg_response_time_s), _fmt(r.citation_rate_pct, 0)]
        for r in reports
    ]
    overall = _render_table(
        ["System", "Average Score", "Avg. Response Time (s)", "Citation Rate (%)"],
        overall_rows,
    )

    category_headers = ["Metric"] + [CATEGORY_LABELS[c] for c in Category]
    category_rows = []
    for r in reports:
        category_rows.append(
            [f"Accuracy ({r.system})"] + [_fmt(r.per_category[c].accuracy) for c in Category]
        )
    for r in reports:
        category_rows.append(
            [f"Response Time (s) ({r.system})"]
            + [_fmt(r.per_category[c].avg_time_s) for c in Category]
        )
    per_category = _render_table(category_headers, category_rows)

    qualitative_rows = []
    for r in reports:
        if r.qualitative is None:
            qualitative_rows.append([r.system, "-", "-", "-"])
        else:
            qualitative_rows.append(
                [
                    r.system,
                    _fmt(r.qualitative.excellent_pct, 0),
                    _fmt(r.qualitative.satisfactory_pct, 0),
                    _fmt(r.qualitative.poor_pct, 0),
                ]
            )
    qualitative = _render_table(
        ["System", "Excellent (%)", "Satisfactory (%)", "Poor (%)"], qualitative_rows
    )

    return (
        "Summary of system performance across all question types\n"
        f"{overall}\n\n"
        "System performance by question category\n"
        f"{per_category}\n\n"
        "Qualitative breakdown for complex questions\n"
        f"{qualitative}\n"
    )
