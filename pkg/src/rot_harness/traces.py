"""Recover traversal structure and the final answer from model output."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .table import TraversalUnit

ANSWER_MARKER = "Final Answer:"

_ANSWER_RE = re.compile(r"final\s+answer\s*(?:\*\*)?\s*:\s*(?:\*\*)?", re.IGNORECASE)
# optional bullets / heading hashes / bold, then "<Unit> <k>" and a colon
_MARKER_TEMPLATE = r"^\s*(?:[-*+>]\s+|#+\s*)*(?:\*\*|__)?\s*{unit}\s+(\d+)\s*(?:\*\*|__)?\s*:"
_TERMINAL = tuple(".!?。")
_CLOSERS = "\"')]*`”’"


@dataclass(frozen=True)
class Step:
    traversal_index: int
    unit_index: int
    text: str


@dataclass(frozen=True)
class ReasoningTrace:
    steps: tuple[Step, ...] = ()
    traversal_count: int = 0
    has_reflection: bool = False
    final_answer: str | None = None
    completion_tokens: int = 0
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "steps": [[s.traversal_index, s.unit_index, s.text] for s in self.steps],
            "traversal_count": self.traversal_count,
            "has_reflection": self.has_reflection,
            "final_answer": self.final_answer,
            "completion_tokens": self.completion_tokens,
            "truncated": self.truncated,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReasoningTrace":
        return cls(
            steps=tuple(Step(int(t), int(u), str(x)) for t, u, x in data.get("steps", ())),
            traversal_count=int(data["traversal_count"]),
            has_reflection=bool(data["has_reflection"]),
            final_answer=data.get("final_answer"),
            completion_tokens=int(data.get("completion_tokens", 0)),
            truncated=bool(data.get("truncated", False)),
        )


def count_tokens(text: str, reported: int | None = None) -> int:
    if reported is not None:
        return reported
    return len(text.split())


def _clean_answer(text: str) -> str:
    text = text.strip()
    text = text.strip("*").strip()
    while len(text) >= 2 and text[0] in "\"'“‘`" and text[-1] in "\"'”’`":
        text = text[1:-1].strip()
    if text.endswith(".") and not text.endswith(".."):
        text = text[:-1].rstrip()
    return text


def extract_answer(text: str) -> str | None:
    """Content after the last "Final Answer:" marker, up to a blank line."""
    matches = list(_ANSWER_RE.finditer(text))
    if not matches:
        return None
    rest = text[matches[-1].end():]
    lines = []
    for i, line in enumerate(rest.split("\n")):
        if not line.strip():
            if i == 0:
                continue  # marker alone on its line, answer follows
            break
        lines.append(line.strip())
    return _clean_answer(" ".join(lines))


def _marker_re(unit: TraversalUnit) -> re.Pattern:
    return re.compile(_MARKER_TEMPLATE.format(unit=TraversalUnit(unit).value), re.IGNORECASE)


@dataclass
class _Open:
    traversal: int
    unit: int
    lines: list[str] = field(default_factory=list)


def _is_terminal(line: str) -> bool:
    return line.rstrip().rstrip(_CLOSERS).endswith(_TERMINAL)


def parse_trace(
    text: str,
    n_units: int,
    unit: TraversalUnit = TraversalUnit.ROW,
    reported_tokens: int | None = None,
) -> ReasoningTrace:
    """Split ``text`` into traversal steps.

    A marker whose index is not larger than the previous marker's opens a new
    traversal. Unmarked text after the last step of a traversal (before the
    next traversal, or before the answer) is reflection; it is kept on that
    last step. Marker indices outside ``1..n_units`` are treated as text.
    """
    marker = _marker_re(unit)
    n_units = max(1, n_units)
    steps: list[Step] = []
    current: _Open | None = None
    tail: list[str] = []  # unmarked lines after the current step
    traversal = 0
    reflection = False

    def close(extra: list[str]) -> None:
        body = "\n".join(current.lines + extra).strip()
        steps.append(Step(current.traversal, current.unit, body))

    in_answer = False
    for line in text.split("\n"):
        m = marker.match(line)
        if not (m and 1 <= int(m.group(1)) <= n_units):
            m = None
            if _ANSWER_RE.search(line):
                in_answer = True
                continue
            if in_answer:
                if line.strip():
                    continue
                in_answer = False
        if m:
            in_answer = False
            k = int(m.group(1))
            if current is None:
                traversal = 1
            elif k <= current.unit:
                if any(t.strip() for t in tail):
                    reflection = True
                close(tail)
                traversal += 1
            else:
                close(tail)
            current = _Open(traversal, k, [line[m.end():].strip()])
            tail = []
        elif current is not None:
            tail.append(line)
    if current is not None:
        if any(t.strip() for t in tail):
            reflection = True
        close(tail)

    answer = extract_answer(text)
    truncated = False
    if answer is None:
        last = next((ln for ln in reversed(text.split("\n")) if ln.strip()), None)
        truncated = last is not None and not _is_terminal(last)
    return ReasoningTrace(
        steps=tuple(steps),
        traversal_count=traversal,
        has_reflection=reflection,
        final_answer=answer,
        completion_tokens=count_tokens(text, reported_tokens),
        truncated=truncated,
    )


def render_trace(trace: ReasoningTrace, unit: TraversalUnit = TraversalUnit.ROW) -> str:
    """Canonical text form of a trace (inverse direction of :func:`parse_trace`)."""
    label = TraversalUnit(unit).value.capitalize()
    lines = [f"{label} {s.unit_index}: {s.text}" for s in trace.steps]
    if trace.final_answer is not None:
        lines.append(f"{ANSWER_MARKER} {trace.final_answer}")
    return "\n".join(lines)
