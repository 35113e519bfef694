"""Symbolic state-transition model of row-wise traversal vs. Long CoT.

A state is the exact sequence of rows consumed so far (a word in the free
monoid over row indices), so two states are equal only if the same rows were
read in the same order. The question is a constant and is left out.

Long CoT reads rows in an arbitrary order ``sigma``, one row per transition,
each row once. Row-wise traversal reads rows ``1..M`` in table order, pass
after pass; the simulation below advances the Long CoT state by one transition
whenever the traversal reaches the row Long CoT would read next, and keeps the
state unchanged on every other row.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

State = tuple[int, ...]
EMPTY: State = ()


@dataclass(frozen=True)
class LongCoTSpec:
    sigma: tuple[int, ...]

    def __post_init__(self):
        sigma = tuple(int(x) for x in self.sigma)
        if sorted(sigma) != list(range(1, len(sigma) + 1)):
            raise ValueError(f"{sigma} is not a permutation of 1..{len(sigma)}")
        object.__setattr__(self, "sigma", sigma)

    @property
    def M(self) -> int:
        return len(self.sigma)


def _consume(row: int, state: State) -> State:
    return state + (row,)


def eval_long_cot(spec: LongCoTSpec) -> State:
    """Unfold the row-removal recursion of Long CoT.

    ``f(rows, s)`` with nothing left returns ``s`` (the empty table gives back
    the question alone). Otherwise Long CoT picks the next row of ``sigma``
    among the remaining ones, reads it and recurses on the rest.
    """

    def f(remaining: tuple[int, ...], state: State) -> State:
        if not remaining:
            return state
        nxt = spec.sigma[len(state)]
        if nxt not in remaining:
            raise AssertionError(f"row {nxt} consumed twice")
        return f(tuple(r for r in remaining if r != nxt), _consume(nxt, state))

    return f(tuple(range(1, spec.M + 1)), EMPTY)


def traversal_step(spec: LongCoTSpec, j: int, state: State) -> State:
    """One row-wise step at row ``j`` carrying ``state`` = s_{i-1}.

    Advances to s_i when ``j`` is sigma_i, otherwise returns the state
    unchanged.
    """
    i = len(state)
    if i < spec.M and j == spec.sigma[i]:
        return _consume(j, state)
    return state


def eval_rot_simulation(spec: LongCoTSpec) -> tuple[State, int]:
    """Run full passes over rows 1..M until Long CoT's final state is reached.

    Returns the final state and the number of passes used.
    """
    state, passes = EMPTY, 0
    while len(state) < spec.M:
        passes += 1
        before = state
        for j in range(1, spec.M + 1):
            state = traversal_step(spec, j, state)
        if state == before:
            raise AssertionError("a full pass made no progress")
    return state, passes


def descent_count(sigma: Sequence[int]) -> int:
    if not sigma:
        return 0
    return 1 + sum(1 for a, b in zip(sigma, sigma[1:]) if b < a)


@dataclass
class SubsetReport:
    max_rows: int
    checked: int = 0
    failures: list[tuple[int, ...]] = field(default_factory=list)
    per_m: dict[int, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def merge(self, other: "SubsetReport") -> "SubsetReport":
        per_m = dict(self.per_m)
        for m, n in other.per_m.items():
            per_m[m] = per_m.get(m, 0) + n
        return SubsetReport(
            max_rows=max(self.max_rows, other.max_rows),
            checked=self.checked + other.checked,
            failures=self.failures + other.failures,
            per_m=per_m,
        )

    def summary(self) -> dict:
        return {
            "checked": self.checked,
            "failures": len(self.failures),
            "counterexamples": [list(s) for s in self.failures],
        }

    def text(self) -> str:
        return f"{self.checked} permutations checked, {len(self.failures)} failures"


def check_permutation(sigma: Sequence[int]) -> bool:
    spec = LongCoTSpec(tuple(sigma))
    state, passes = eval_rot_simulation(spec)
    return (
        state == eval_long_cot(spec)
        and passes <= spec.M
        and passes == descent_count(spec.sigma)
    )


def _check_m(m: int) -> SubsetReport:
    report = SubsetReport(max_rows=m, per_m={m: 0})
    for sigma in itertools.permutations(range(1, m + 1)):
        report.checked += 1
        report.per_m[m] += 1
        if not check_permutation(sigma):
            report.failures.append(sigma)
    return report


def verify_subset(max_rows: int, workers: int = 1) -> SubsetReport:
    """Exhaustively check every permutation of 1..M for M = 1..max_rows."""
    if max_rows < 1:
        raise ValueError("max_rows must be at least 1")
    ms: Iterable[int] = range(1, max_rows + 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_check_m, ms))
    else:
        parts = [_check_m(m) for m in ms]
    report = SubsetReport(max_rows=max_rows)
    for part in parts:
        report = report.merge(part)
    return report
