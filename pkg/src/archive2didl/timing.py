"""Per-analyzer timing capture, aggregation, and CSV emission.

Durations are wall-clock milliseconds from a monotonic clock, kept as
fractional values so sub-millisecond analyzers are not truncated to zero.
Aggregation uses math.fsum, which is correctly rounded regardless of
summation order, so the statistics are invariant under record permutation.
"""

from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass, field
from typing import IO, Iterable

CSV_HEADER = ("internal_id", "analyzer", "size_bytes", "duration_ms")
SUMMARY_MARKER = "#summary"
OVERALL_MARKER = "#overall"
ALL_ANALYZERS_LABEL = "(all)"


@dataclass(frozen=True)
class TimingRecord:
    """One timed analyzer invocation on one item."""

    item_internal_id: str
    analyzer_id: str
    file_size_bytes: int
    duration_ms: float

    def __post_init__(self) -> None:
        if self.file_size_bytes < 0:
            raise ValueError("file_size_bytes must be >= 0")
        if not (self.duration_ms >= 0):
            raise ValueError("duration_ms must be >= 0")


class TimingCollector:
    """Append-only, thread-safe sink for timing records."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._records: list[TimingRecord] = []

    def record(
        self,
        item_internal_id: str,
        analyzer_id: str,
        file_size_bytes: int,
        duration_ms: float,
    ) -> TimingRecord:
        entry = TimingRecord(item_internal_id, analyzer_id, file_size_bytes, duration_ms)
        with self._lock:
            self._records.append(entry)
        return entry

    def records(self) -> tuple[TimingRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


@dataclass(frozen=True)
class AnalyzerStats:
    count: int
    min_ms: float
    max_ms: float
    mean_ms: float
    total_ms: float


@dataclass
class AggregateStats:
    """Summary over a run.

    ``total_ms`` is defined as the sum of the per-analyzer totals, so the
    per-analyzer breakdown always adds up to it exactly.  ``file_count``
    and ``total_bytes`` describe the largest per-analyzer sweep, which in
    a normal run (every analyzer visits every file once) is the file set.
    """

    per_analyzer: dict[str, AnalyzerStats] = field(default_factory=dict)
    file_count: int = 0
    total_bytes: int = 0
    wall_ms: float = 0.0
    total_ms: float = 0.0

    @property
    def record_count(self) -> int:
        return sum(s.count for s in self.per_analyzer.values())


def aggregate(records: Iterable[TimingRecord], wall_ms: float = 0.0) -> AggregateStats:
    """Fold timing records into per-analyzer and overall statistics."""
    by_analyzer: dict[str, list[TimingRecord]] = {}
    for record in records:
        by_analyzer.setdefault(record.analyzer_id, []).append(record)

    per_analyzer: dict[str, AnalyzerStats] = {}
    for analyzer_id in sorted(by_analyzer):
        group = by_analyzer[analyzer_id]
        durations = [r.duration_ms for r in group]
        total = math.fsum(durations)
        per_analyzer[analyzer_id] = AnalyzerStats(
            count=len(group),
            min_ms=min(durations),
            max_ms=max(durations),
            mean_ms=total / len(group),
            total_ms=total,
        )

    file_count = 0
    total_bytes = 0
    if by_analyzer:
        widest = max(sorted(by_analyzer), key=lambda a: len(by_analyzer[a]))
        file_count = len(by_analyzer[widest])
        total_bytes = sum(r.file_size_bytes for r in by_analyzer[widest])

    return AggregateStats(
        per_analyzer=per_analyzer,
        file_count=file_count,
        total_bytes=total_bytes,
        wall_ms=wall_ms,
        total_ms=math.fsum(s.total_ms for s in per_analyzer.values()),
    )


def _format_ms(value: float) -> str:
    # repr round-trips exactly, so a re-parsed CSV aggregates identically.
    return repr(float(value))


def emit_csv(
    records: Iterable[TimingRecord],
    stats: AggregateStats,
    out: str | IO[bytes],
) -> int:
    """Write the timing report; returns the number of bytes written.

    Layout: detail rows sorted by (analyzer, size), a ``#summary`` section
    with one row per analyzer plus an all-analyzers row, and an
    ``#overall`` section with run-level counters.  Quoting follows
    RFC 4180 via the csv module.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")

    writer.writerow(CSV_HEADER)
    ordered = sorted(
        records,
        key=lambda r: (r.analyzer_id, r.file_size_bytes, r.item_internal_id, r.duration_ms),
    )
    for record in ordered:
        writer.writerow(
            (
                record.item_internal_id,
                record.analyzer_id,
                record.file_size_bytes,
                _format_ms(record.duration_ms),
            )
        )

    buffer.write(SUMMARY_MARKER + "\n")
    writer.writerow(("analyzer", "count", "min_ms", "max_ms", "mean_ms", "total_ms"))
    for analyzer_id in sorted(stats.per_analyzer):
        s = stats.per_analyzer[analyzer_id]
        writer.writerow(
            (
                analyzer_id,
                s.count,
                _format_ms(s.min_ms),
                _format_ms(s.max_ms),
                _format_ms(s.mean_ms),
                _format_ms(s.total_ms),
            )
        )
    if stats.per_analyzer:
        all_min = min(s.min_ms for s in stats.per_analyzer.values())
        all_max = max(s.max_ms for s in stats.per_analyzer.values())
        count = stats.record_count
        writer.writerow(
            (
                ALL_ANALYZERS_LABEL,
                count,
                _format_ms(all_min),
                _format_ms(all_max),
                _format_ms(stats.total_ms / count if count else 0.0),
                _format_ms(stats.total_ms),
            )
        )

    buffer.write(OVERALL_MARKER + "\n")
    writer.writerow(("file_count", "total_bytes", "wall_ms"))
    writer.writerow((stats.file_count, stats.total_bytes, _format_ms(stats.wall_ms)))

    data = buffer.getvalue().encode("utf-8")
    if isinstance(out, str):
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        out.write(data)
    return len(data)


def parse_csv(data: bytes | str) -> tuple[TimingRecord, ...]:
    """Read the detail section of an emitted CSV back into records."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines: list[str] = []
    for line in text.splitlines():
        if line == SUMMARY_MARKER:
            break
        lines.append(line)
    reader = csv.reader(lines)
    rows = list(reader)
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("missing or unexpected CSV header")
    return tuple(
        TimingRecord(row[0], row[1], int(row[2]), float(row[3])) for row in rows[1:]
    )
