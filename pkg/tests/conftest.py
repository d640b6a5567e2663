from __future__ import annotations

import sys
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from algebroid_fedosov.fedosov import FedosovSetup  # noqa: E402
from algebroid_fedosov.ring import Q, Truncation  # noqa: E402
from algebroid_fedosov.sections import EFormSeries, PolySection  # noqa: E402
from algebroid_fedosov.specfile import fixture_names, load_fixture  # noqa: E402

FIXTURES = fixture_names()
KAPPAS = (Q(0), Q(1, 2), Q(1))


def make_setup(name: str, kappa=Q(1, 2), L: int = 4, T: int | None = None, B: EFormSeries | None = None) -> FedosovSetup:
    spec = load_fixture(name)
    chart = spec.chart()
    if B is None:
        B = EFormSeries.zero(chart.n, chart.N)
    return FedosovSetup(chart, spec.connection_for(chart), B, Q(kappa), Truncation(L, T if T is not None else L))


@lru_cache(maxsize=None)
def cached_solution(name: str, kappa=Q(1, 2), L: int = 4, T: int | None = None):
    return make_setup(name, kappa, L, T).solution()


def P(text: str, like) -> PolySection:
    """Parse a section on the chart of ``like`` (a setup, solution or chart)."""
    obj = getattr(like, "setup", like)
    return PolySection.parse(text, obj.n, obj.N)


def to_oracle(s: PolySection) -> dict:
    return {key: Fraction(int(c.numerator), int(c.denominator)) for key, c in s.terms.items()}


def from_oracle(d: dict, n: int, N: int) -> PolySection:
    return PolySection(n, N, dict(d))


@pytest.fixture(scope="session")
def solutions():
    return cached_solution


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
