"""Shared fixtures; collects acceptance results and prints one line per criterion."""

from __future__ import annotations

from dataclasses import dataclass, field

import pytest


@dataclass
class Part:
    label: str
    measured: str
    bound: str
    passed: bool
    seconds: float


@dataclass
class Criterion:
    number: int
    title: str
    budget: float | None
    parts: list[Part] = field(default_factory=list)

    @property
    def seconds(self) -> float:
        return sum(p.seconds for p in self.parts)

    @property
    def passed(self) -> bool:
        in_time = self.budget is None or self.seconds < self.budget
        return bool(self.parts) and all(p.passed for p in self.parts) and in_time


CRITERIA: dict[int, Criterion] = {}


@pytest.fixture(scope="session")
def acceptance():
    """Recorder used by the acceptance tests: ``acceptance(n, title, budget)(label, measured, bound, ok, secs)``."""

    def open_criterion(number: int, title: str, budget: float | None):
        crit = CRITERIA.setdefault(number, Criterion(number, title, budget))

        def record(label: str, measured, bound, passed: bool, seconds: float = 0.0) -> bool:
            fmt = lambda v: f"{v:.3g}" if isinstance(v, float) else str(v)
            crit.parts.append(Part(label, fmt(measured), fmt(bound), bool(passed), seconds))
            return bool(passed)

        return record

    return open_criterion


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        c = CRITERIA[n]
        budget = f", budget {c.budget:g} s" if c.budget is not None else ""
        tr.write_line(f"criterion {n:2d}: {'PASS' if c.passed else 'FAIL'}  {c.title}  ({c.seconds:.1f} s{budget})")
        for p in c.parts:
            tr.write_line(f"      {'ok  ' if p.passed else 'FAIL'} {p.label}: measured {p.measured}, bound {p.bound}")
