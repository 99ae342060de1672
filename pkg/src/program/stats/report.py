"""Segment and document statistics over detection output."""
import csv
import io
import json
from typing import Iterable

from pydantic import BaseModel, Field

from program.corpus.models import DetectedDocument
from program.types import ReportFormat
from program.utils.logging import logger

SEGMENT_TYPES = ("unrelated", "token-repl", "token-annt", "sent-annt", "sent-repl")
CSV_HEADER = ("type", "count", "ratio")


class StatsFormatError(Exception):
    """Raised when a stats report cannot be parsed back"""


def _zero_counts() -> dict[str, int]:
    return {key: 0 for key in SEGMENT_TYPES}


def _ratio(part: int, whole: int) -> float:
    return part / whole if whole else 0.0


class CorpusStats(BaseModel):
    doc_total: int = 0
    doc_with_cs: int = 0
    doc_with_related_cs: int = 0
    segments_by_type: dict[str, int] = Field(default_factory=_zero_counts)

    @property
    def total_segments(self) -> int:
        return sum(self.segments_by_type.values())

    @property
    def ratios(self) -> dict[str, float]:
        total = self.total_segments
        return {key: _ratio(self.segments_by_type[key], total) for key in SEGMENT_TYPES}

    @property
    def doc_cs_ratio(self) -> float:
        return _ratio(self.doc_with_cs, self.doc_total)

    @property
    def doc_related_cs_ratio(self) -> float:
        return _ratio(self.doc_with_related_cs, self.doc_total)

    def add(self, result: DetectedDocument) -> "CorpusStats":
        """Count one detected document in place."""
        self.doc_total += 1
        if result.segments:
            self.doc_with_cs += 1
        if result.has_related_cs:
            self.doc_with_related_cs += 1
        for segment in result.segments:
            self.segments_by_type[segment.type_key] += 1
        return self

    def to_report(self) -> dict:
        """Canonical report dict with stable key order."""
        ratios = self.ratios
        return {
            "doc_total": self.doc_total,
            "doc_with_cs": self.doc_with_cs,
            "doc_with_related_cs": self.doc_with_related_cs,
            "doc_cs_ratio": round(self.doc_cs_ratio, 4),
            "doc_related_cs_ratio": round(self.doc_related_cs_ratio, 4),
            "total_segments": self.total_segments,
            "segments": [
                {"type": key, "count": self.segments_by_type[key], "ratio": round(ratios[key], 4)}
                for key in SEGMENT_TYPES
            ],
        }


def accumulate(stats: CorpusStats, result: DetectedDocument) -> CorpusStats:
    return stats.add(result)


def merge(left: CorpusStats, right: CorpusStats) -> CorpusStats:
    """Combine partial stats; associative and commutative."""
    return CorpusStats(
        doc_total=left.doc_total + right.doc_total,
        doc_with_cs=left.doc_with_cs + right.doc_with_cs,
        doc_with_related_cs=left.doc_with_related_cs + right.doc_with_related_cs,
        segments_by_type={k: left.segments_by_type[k] + right.segments_by_type[k] for k in SEGMENT_TYPES},
    )


def collect(results: Iterable[DetectedDocument]) -> CorpusStats:
    stats = CorpusStats()
    for result in results:
        stats.add(result)
    logger.log("STATS", f"Counted {stats.total_segments} segments over {stats.doc_total} documents")
    return stats


def emit_report(stats: CorpusStats, report_format: ReportFormat = ReportFormat.json) -> str:
    report = stats.to_report()
    if report_format == ReportFormat.json:
        return json.dumps(report, ensure_ascii=False, indent=2) + "\n"
    if report_format == ReportFormat.csv:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in report["segments"]:
            writer.writerow((row["type"], row["count"], f"{row['ratio']:.4f}"))
        return buffer.getvalue()
    lines = [
        "| type | count | ratio |",
        "| --- | ---: | ---: |",
        *(f"| {row['type']} | {row['count']} | {row['ratio']:.4f} |" for row in report["segments"]),
        "",
        "| documents | count | ratio |",
        "| --- | ---: | ---: |",
        f"| total | {stats.doc_total} | 1.0000 |" if stats.doc_total else "| total | 0 | 0.0000 |",
        f"| with code-switching | {stats.doc_with_cs} | {stats.doc_cs_ratio:.4f} |",
        f"| with related code-switching | {stats.doc_with_related_cs} | {stats.doc_related_cs_ratio:.4f} |",
    ]
    return "\n".join(lines) + "\n"


def parse_json_report(text: str) -> CorpusStats:
    try:
        report = json.loads(text)
        counts = {row["type"]: int(row["count"]) for row in report["segments"]}
        return CorpusStats(
            doc_total=report["doc_total"],
            doc_with_cs=report["doc_with_cs"],
            doc_with_related_cs=report["doc_with_related_cs"],
            segments_by_type={key: counts.get(key, 0) for key in SEGMENT_TYPES},
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise StatsFormatError(f"Unreadable JSON stats report: {e}")


def parse_csv_report(text: str) -> CorpusStats:
    """Segment counts from a CSV report; document counts are not part of the CSV."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise StatsFormatError(f"CSV stats report must start with header {','.join(CSV_HEADER)}")
    counts = _zero_counts()
    for row in rows[1:]:
        if not row:
            continue
        if len(row) != 3 or row[0] not in counts:
            raise StatsFormatError(f"Unexpected CSV stats row {row}")
        counts[row[0]] = int(row[1])
    return CorpusStats(segments_by_type=counts)
