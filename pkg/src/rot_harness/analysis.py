"""Aggregate views over run records: traversal counts, lengths, sizes, comparisons."""

from __future__ import annotations

import csv
import enum
import io
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import BadBins, EmptyAggregate
from .metrics import ScoreKind, aggregate

DEFAULT_SIZE_EDGES = (0, 50, 100, 200, 400)
ROUGE_CORRECT_THRESHOLD = 0.5
OVERFLOW_BUCKET = "4+"

_ROUGE_DATASETS = {"tablebench"}


class ErrorCategory(str, enum.Enum):
    HALLUCINATION = "hallucination"
    MISUNDERSTANDING = "misunderstanding"
    LOCATING = "locating"
    OVER_REFLECTION = "over-reflection"
    OTHER = "other"

    @classmethod
    def parse(cls, value: str) -> "ErrorCategory":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-").replace(" ", "-")
        if key == "overreflection":
            key = "over-reflection"
        return cls(key)


def primary_kind(record) -> ScoreKind:
    """Rouge-L for TableBench, exact match for the accuracy datasets."""
    if str(record.dataset).lower() in _ROUGE_DATASETS:
        return ScoreKind.ROUGE_L
    return ScoreKind.EXACT_MATCH


def primary_score(record) -> float:
    kind = primary_kind(record)
    value = record.score(kind)
    if value is None:
        raise KeyError(f"record {record.instance_id!r} has no {kind.value} score")
    return value


def is_correct(record) -> bool:
    if primary_kind(record) is ScoreKind.ROUGE_L:
        return primary_score(record) >= ROUGE_CORRECT_THRESHOLD
    return primary_score(record) == 1.0


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _bucket(count: int) -> int | str:
    return OVERFLOW_BUCKET if count >= 4 else count


def traversal_histogram(records: Iterable) -> dict[int | str, tuple[float, float]]:
    """Map traversal count (counts of 4 or more pooled) to (share, mean score)."""
    records = list(records)
    if not records:
        raise EmptyAggregate("no records for the traversal histogram")
    groups: dict[int | str, list[float]] = {}
    for r in records:
        groups.setdefault(_bucket(r.trace.traversal_count), []).append(primary_score(r))
    order = sorted(groups, key=lambda k: math.inf if k == OVERFLOW_BUCKET else k)
    n = len(records)
    return {k: (len(groups[k]) / n, _mean(groups[k])) for k in order}


def length_comparison(records: Iterable) -> tuple[float | None, float | None]:
    """Mean completion tokens for (correct, incorrect) records; None if a side is empty."""
    records = list(records)
    if not records:
        raise EmptyAggregate("no records for the length comparison")
    right = [r.trace.completion_tokens for r in records if is_correct(r)]
    wrong = [r.trace.completion_tokens for r in records if not is_correct(r)]
    return (_mean(right) if right else None, _mean(wrong) if wrong else None)


@dataclass(frozen=True)
class SizeBin:
    lo: int
    hi: int | None  # None: open-ended
    n: int
    mean_score: float | None

    @property
    def label(self) -> str:
        return f"[{self.lo},{self.hi})" if self.hi is not None else f"[{self.lo},inf)"


def bin_index(size: int, edges: Sequence[int]) -> int:
    """Half-open bin lookup; the last bin is open-ended."""
    if size < edges[0]:
        raise BadBins(f"table size {size} is below the first edge {edges[0]}")
    idx = 0
    for i, e in enumerate(edges):
        if size >= e:
            idx = i
    return idx


def size_bins(records: Iterable, bin_edges: Sequence[int] = DEFAULT_SIZE_EDGES) -> list[SizeBin]:
    edges = list(bin_edges)
    if not edges or any(b <= a for a, b in zip(edges, edges[1:])):
        raise BadBins(f"bin edges must be strictly increasing: {edges}")
    records = list(records)
    if not records:
        raise EmptyAggregate("no records for size bins")
    members: list[list[float]] = [[] for _ in edges]
    for r in records:
        members[bin_index(r.table_size, edges)].append(primary_score(r))
    out = []
    for i, lo in enumerate(edges):
        hi = edges[i + 1] if i + 1 < len(edges) else None
        vals = members[i]
        out.append(SizeBin(lo, hi, len(vals), _mean(vals) if vals else None))
    return out


@dataclass
class AnnotationMerge:
    annotated: list[tuple[object, ErrorCategory]]
    plain: list
    unknown: list[str]

    def counts(self) -> Counter:
        return Counter(cat for _, cat in self.annotated)


def merge_annotations(records: Iterable, annotations: Mapping[str, str]) -> AnnotationMerge:
    """Attach human error labels to records by instance id."""
    records = list(records)
    labels = {k: ErrorCategory.parse(v) for k, v in annotations.items()}
    annotated, plain = [], []
    for r in records:
        if r.instance_id in labels:
            annotated.append((r, labels[r.instance_id]))
        else:
            plain.append(r)
    known = {r.instance_id for r in records}
    unknown = sorted(k for k in labels if k not in known)
    return AnnotationMerge(annotated, plain, unknown)


def load_annotations(path) -> dict[str, str]:
    """Read a CSV with ``instance_id`` and ``category`` columns."""
    with open(path, encoding="utf-8", newline="") as fh:
        return {row["instance_id"]: row["category"] for row in csv.DictReader(fh)}


@dataclass(frozen=True)
class RunSummary:
    name: str
    method: str
    unit: str
    shots: int
    n: int
    mean_score: float
    mean_traversals: float
    mean_tokens: float


def compare_runs(record_sets: Sequence[tuple[str, Sequence]]) -> list[RunSummary]:
    rows = []
    for name, records in record_sets:
        records = list(records)
        if not records:
            raise EmptyAggregate(f"record set {name!r} is empty")
        kind = primary_kind(records[0])
        spec = records[0].method
        rows.append(
            RunSummary(
                name=name,
                method=spec.method.value,
                unit=spec.unit.value,
                shots=spec.shots,
                n=len(records),
                mean_score=aggregate(records, kind).mean,
                mean_traversals=_mean([r.trace.traversal_count for r in records]),
                mean_tokens=_mean([r.trace.completion_tokens for r in records]),
            )
        )
    return rows


# -- output ------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def format_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def to_csv(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows([["" if v is None else v for v in row] for row in rows])
    return buf.getvalue()
