"""Answer normalization, exact match, Rouge-L and score aggregation."""

from __future__ import annotations

import enum
import math
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyAggregate

NUMERIC_TOLERANCE = 1e-6

_QUOTES = "\"'`‘’“”"
_CURRENCY = re.compile(r"[$¢£¤¥€₹₩₽]")
_THOUSANDS = re.compile(r"(?<=\d),(?=\d{3}(?!\d))")
_MULTI_SPLIT = re.compile(r"\||, ")
_TOKEN = re.compile(r"[^\W_]+")


class ScoreKind(str, enum.Enum):
    EXACT_MATCH = "em"
    ROUGE_L = "rougel"


@dataclass(frozen=True)
class Score:
    kind: ScoreKind
    value: float

    def __post_init__(self):
        kind = ScoreKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"score {self.value} outside [0, 1]")
        if kind is ScoreKind.EXACT_MATCH and self.value not in (0.0, 1.0):
            raise ValueError("exact match scores are 0 or 1")


def _strip_quotes(text: str) -> str:
    while len(text) >= 2 and text[0] in _QUOTES and text[-1] in _QUOTES:
        text = text[1:-1].strip()
    return text


def normalize_answer(text: str) -> float | str:
    """Canonical form used for exact match.

    Returns a float when the cleaned text is numeric, otherwise the cleaned
    string. Compare canonical forms with :func:`canonical_equal`.
    """
    text = unicodedata.normalize("NFKC", str(text)).lower().strip()
    text = " ".join(text.split())
    text = _strip_quotes(text)
    text = _THOUSANDS.sub("", text)
    text = _CURRENCY.sub("", text).strip()
    if text.endswith("%"):
        text = text[:-1].rstrip()
    try:
        value = float(text)
    except ValueError:
        return text
    if math.isfinite(value):
        return value
    return text


def canonical_equal(a: float | str, b: float | str) -> bool:
    if isinstance(a, float) and isinstance(b, float):
        return abs(a - b) <= NUMERIC_TOLERANCE
    return a == b


def _multiset_equal(left: list, right: list) -> bool:
    if len(left) != len(right):
        return False
    remaining = list(right)
    for item in left:
        for j, other in enumerate(remaining):
            if canonical_equal(item, other):
                del remaining[j]
                break
        else:
            return False
    return True


def exact_match(pred: str | None, golds: Sequence[str]) -> Score:
    if not golds:
        raise ValueError("exact_match needs at least one gold answer")
    if pred is None:
        return Score(ScoreKind.EXACT_MATCH, 0.0)
    if len(golds) == 1:
        ok = canonical_equal(normalize_answer(pred), normalize_answer(golds[0]))
    else:
        parts = [p for p in _MULTI_SPLIT.split(pred)]
        ok = _multiset_equal(
            [normalize_answer(p) for p in parts], [normalize_answer(g) for g in golds]
        )
    return Score(ScoreKind.EXACT_MATCH, 1.0 if ok else 0.0)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def lcs_length(a: Sequence, b: Sequence) -> int:
    """LCS length with a two-row table sized by the shorter input."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(cur[j - 1] if cur[j - 1] > prev[j] else prev[j])
        prev = cur
    return prev[-1]


def _rouge_l_single(pred: list[str], ref: list[str]) -> float:
    if not pred and not ref:
        return 1.0
    if not pred or not ref:
        return 0.0
    lcs = lcs_length(pred, ref)
    p, r = lcs / len(pred), lcs / len(ref)
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def rouge_l(pred: str | None, refs: Sequence[str]) -> Score:
    if not refs:
        raise ValueError("rouge_l needs at least one reference")
    pred_tokens = tokenize(pred or "")
    best = max(_rouge_l_single(pred_tokens, tokenize(r)) for r in refs)
    return Score(ScoreKind.ROUGE_L, min(1.0, best))


@dataclass
class Summary:
    kind: ScoreKind
    mean: float
    count: int
    by_qtype: dict[str, tuple[float, int]]


def score_of(record, kind: ScoreKind) -> float:
    kind = ScoreKind(kind)
    for s in record.scores:
        if s.kind is kind:
            return s.value
    raise KeyError(f"record {record.instance_id!r} has no {kind.value} score")


def aggregate(records: Iterable, kind: ScoreKind) -> Summary:
    kind = ScoreKind(kind)
    records = list(records)
    if not records:
        raise EmptyAggregate("no records to aggregate")
    values = [score_of(r, kind) for r in records]
    groups: dict[str, list[float]] = defaultdict(list)
    for rec, v in zip(records, values):
        groups[getattr(rec, "qtype", None) or "-"].append(v)
    return Summary(
        kind=kind,
        mean=math.fsum(values) / len(values),
        count=len(values),
        by_qtype={k: (math.fsum(v) / len(v), len(v)) for k, v in sorted(groups.items())},
    )
