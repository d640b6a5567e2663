"""Text format for charts and run specifications.

One ``key = value`` per line; ``#`` starts a comment.  Indices are 1-based::

    name = heis3
    n = 0
    N = 3
    c[1][2][3] = 1            # [e1, e2] = e3; c[2][1][3] is completed
    anchor[1][1] = q1         # rho^1_1
    gamma[1][2][3] = 1/2      # Gamma^3_{12}
    connection = half         # half | symmetrized | explicit
    B[0] = (1,2): 1, (1,3): q1
    kappa = 1/2
    L = 4
    T = 4
    wM = q1
    wE = 0
    chart = heis3             # load chart data from a file or a bundled fixture

Missing antisymmetric partners of ``c`` entries are completed automatically
and listed in :attr:`RunSpec.notes`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .algebroid import AlgebroidChart, EConnection, half_connection, symmetrize_connection
from .ring import BasePoly, InputError, Q, Scalar, Truncation, scalar
from .sections import EFormSeries

FIXTURE_DIR = Path(__file__).with_name("fixtures")

_LINE = re.compile(r"^\s*([A-Za-z_]+)((?:\[\s*\d+\s*\])*)\s*=\s*(.*?)\s*$")
_IDX = re.compile(r"\[\s*(\d+)\s*\]")
_PAIR = re.compile(r"\(\s*(\d+(?:\s*,\s*\d+)*)\s*\)\s*:")


@dataclass
class RunSpec:
    name: str = ""
    n: int = 0
    N: int = 0
    anchor: Dict[Tuple[int, int], str] = field(default_factory=dict)
    c: Dict[Tuple[int, int, int], str] = field(default_factory=dict)
    gamma: Dict[Tuple[int, int, int], str] = field(default_factory=dict)
    connection: str = ""
    B: Dict[int, List[Tuple[Tuple[int, ...], str]]] = field(default_factory=dict)
    kappa: Scalar = Q(1, 2)
    L: int = 4
    T: Optional[int] = None
    wM: str = "0"
    wE: str = "0"
    chart_path: Optional[str] = None
    notes: List[str] = field(default_factory=list)

    # -- derived objects ----------------------------------------------------

    @property
    def truncation(self) -> Truncation:
        return Truncation(self.L, self.T if self.T is not None else self.L)

    def chart(self) -> AlgebroidChart:
        n, N = self.n, self.N
        anchor = [[BasePoly.zero(n) for _ in range(n)] for _ in range(N)]
        for (a, i), text in self.anchor.items():
            anchor[a][i] = BasePoly.parse(text, n)
        c = [[[BasePoly.zero(n) for _ in range(N)] for _ in range(N)] for _ in range(N)]
        for (a, b, g), text in self.c.items():
            c[a][b][g] = BasePoly.parse(text, n)
        return AlgebroidChart(n, N, anchor, c, name=self.name)

    def connection_for(self, chart: AlgebroidChart) -> EConnection:
        n, N = self.n, self.N
        gam = [[[BasePoly.zero(n) for _ in range(N)] for _ in range(N)] for _ in range(N)]
        for (a, b, g), text in self.gamma.items():
            gam[a][b][g] = BasePoly.parse(text, n)
        mode = self.connection or ("explicit" if self.gamma else "half")
        if mode == "half":
            return half_connection(chart)
        conn = EConnection(n, N, gam)
        if mode == "symmetrized":
            return symmetrize_connection(conn, chart)
        if mode == "explicit":
            return conn
        raise InputError(f"unknown connection selector {mode!r}")

    def B_series(self) -> EFormSeries:
        entries = []
        for k, items in sorted(self.B.items()):
            for idx, text in items:
                entries.append((k, idx, BasePoly.parse(text, self.n)))
        return EFormSeries.from_entries(self.n, self.N, entries)

    def fedosov_setup(self):
        """Validated :class:`FedosovSetup` for this spec."""
        from .fedosov import FedosovSetup

        chart = self.chart()
        return FedosovSetup(chart, self.connection_for(chart), self.B_series(), self.kappa, self.truncation)

    def weights(self):
        from .modular import DensityWeights

        return DensityWeights(BasePoly.parse(self.wM, self.n), BasePoly.parse(self.wE, self.n))

    def echo(self) -> str:
        """Canonical text rendering of all fields (1-based)."""
        lines = [f"name = {self.name}", f"n = {self.n}", f"N = {self.N}"]
        for (a, i), t in sorted(self.anchor.items()):
            lines.append(f"anchor[{a + 1}][{i + 1}] = {BasePoly.parse(t, self.n)}")
        for (a, b, g), t in sorted(self.c.items()):
            lines.append(f"c[{a + 1}][{b + 1}][{g + 1}] = {BasePoly.parse(t, self.n)}")
        for (a, b, g), t in sorted(self.gamma.items()):
            lines.append(f"gamma[{a + 1}][{b + 1}][{g + 1}] = {BasePoly.parse(t, self.n)}")
        lines.append(f"connection = {self.connection or ('explicit' if self.gamma else 'half')}")
        for k, items in sorted(self.B.items()):
            body = ", ".join(
                f"({','.join(str(i + 1) for i in idx)}): {BasePoly.parse(t, self.n)}" for idx, t in items
            )
            lines.append(f"B[{k}] = {body}")
        kap = self.kappa
        lines.append(f"kappa = {kap.numerator}" + (f"/{kap.denominator}" if kap.denominator != 1 else ""))
        lines.append(f"L = {self.L}")
        lines.append(f"T = {self.truncation.T}")
        lines.append(f"wM = {BasePoly.parse(self.wM, self.n)}")
        lines.append(f"wE = {BasePoly.parse(self.wE, self.n)}")
        return "\n".join(lines)


def _err(ln: int, col: int, msg: str) -> InputError:
    return InputError(f"line {ln}, column {col}: {msg}")


def resolve_chart_path(ref: str, base: Optional[Path] = None) -> Path:
    cands = []
    p = Path(ref)
    if base is not None and not p.is_absolute():
        cands.append(base / p)
    cands.append(p)
    cands.append(FIXTURE_DIR / p)
    cands.append(FIXTURE_DIR / f"{ref}.chart")
    for c in cands:
        if c.is_file():
            return c
    raise InputError(f"chart file not found: {ref!r}")


def parse_spec(text: str, base: Optional[Path] = None, _depth: int = 0) -> RunSpec:
    """Parse a spec file; raises :class:`InputError` with line and column on failure."""
    spec = RunSpec()
    seen_dims = set()
    raw_c: Dict[Tuple[int, int, int], Tuple[str, int]] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        m = _LINE.match(body)
        if not m:
            raise _err(ln, 1, f"expected 'key = value', got {body.strip()!r}")
        key, idxtext, value = m.group(1), m.group(2), m.group(3)
        vcol = m.start(3) + 1
        idx = tuple(int(x) - 1 for x in _IDX.findall(idxtext))
        if any(i < 0 for i in idx) and key != "B":
            raise _err(ln, m.start(2) + 1, "indices start at 1")
        if value == "":
            raise _err(ln, vcol, "missing value")
        try:
            if key == "chart":
                if _depth > 3:
                    raise _err(ln, vcol, "chart includes nested too deeply")
                path = resolve_chart_path(value, base)
                inner = parse_spec(path.read_text(), path.parent, _depth + 1)
                spec.chart_path = str(value)
                for fld in ("name", "n", "N", "anchor", "c", "gamma", "connection", "wM", "wE"):
                    setattr(spec, fld, getattr(inner, fld))
                for (a, b, g), t in inner.c.items():
                    raw_c[(a, b, g)] = (t, 0)
                if inner.B:
                    spec.B = dict(inner.B)
                seen_dims.update({"n", "N"})
                spec.notes.extend(inner.notes)
            elif key == "name":
                spec.name = value
            elif key in ("n", "N", "L", "T"):
                if idx:
                    raise _err(ln, m.start(2) + 1, f"{key} takes no index")
                if not re.fullmatch(r"\d+", value):
                    raise _err(ln, vcol, f"{key} must be a non-negative integer")
                setattr(spec, key, int(value))
                seen_dims.add(key)
            elif key == "kappa":
                try:
                    spec.kappa = scalar(value)
                except InputError:
                    raise _err(ln, vcol, f"kappa must be rational, got {value!r}")
            elif key == "connection":
                if value not in ("half", "symmetrized", "explicit"):
                    raise _err(ln, vcol, f"connection must be half, symmetrized or explicit")
                spec.connection = value
            elif key in ("wM", "wE"):
                setattr(spec, key, value)
            elif key == "anchor":
                if len(idx) != 2:
                    raise _err(ln, m.start(2) + 1, "anchor needs [alpha][i]")
                spec.anchor[idx] = value
            elif key in ("c", "gamma"):
                if len(idx) != 3:
                    raise _err(ln, m.start(2) + 1, f"{key} needs three indices")
                if key == "c":
                    raw_c[idx] = (value, ln)
                else:
                    spec.gamma[idx] = value
            elif key == "B":
                if len(idx) != 1:
                    raise _err(ln, m.start(2) + 1, "B needs a nu-power index B[k]")
                spec.B.setdefault(idx[0] + 1, []).extend(_parse_B(value, ln, vcol))
            else:
                raise _err(ln, 1, f"unknown key {key!r}")
        except InputError as e:
            if str(e).startswith("line "):
                raise
            raise _err(ln, vcol, str(e))
    # dimension and index checks
    n, N = spec.n, spec.N
    if "N" not in seen_dims:
        raise InputError("spec is missing the fibre dimension N")
    for (a, i) in spec.anchor:
        if a >= N or i >= n:
            raise InputError(f"anchor[{a + 1}][{i + 1}] out of range for n={n}, N={N}")
    for tbl, nm in ((raw_c, "c"), (spec.gamma, "gamma")):
        for (a, b, g) in tbl:
            if max(a, b, g) >= N:
                raise InputError(f"{nm}[{a + 1}][{b + 1}][{g + 1}] out of range for N={N}")
    for k, items in spec.B.items():
        for ids, _ in items:
            if any(i >= N for i in ids):
                raise InputError(f"B[{k}] index {tuple(i + 1 for i in ids)} out of range for N={N}")
    # antisymmetric completion
    c: Dict[Tuple[int, int, int], str] = {}
    for (a, b, g), (t, ln) in raw_c.items():
        c[(a, b, g)] = t
    for (a, b, g), (t, ln) in sorted(raw_c.items()):
        if a == b:
            if BasePoly.parse(t, n):
                raise InputError(f"line {ln}: c[{a + 1}][{a + 1}][{g + 1}] must vanish")
            continue
        if (b, a, g) not in raw_c:
            c[(b, a, g)] = f"-({t})"
            spec.notes.append(f"completed c[{b + 1}][{a + 1}][{g + 1}] = -c[{a + 1}][{b + 1}][{g + 1}]")
    spec.c = c
    # validate polynomials eagerly
    for t in list(spec.anchor.values()) + list(spec.c.values()) + list(spec.gamma.values()) + [spec.wM, spec.wE]:
        BasePoly.parse(t, n)
    for items in spec.B.values():
        for _, t in items:
            BasePoly.parse(t, n)
    spec.truncation  # raises on T < L
    return spec


def _parse_B(value: str, ln: int, col: int) -> List[Tuple[Tuple[int, ...], str]]:
    out = []
    pos = 0
    matches = list(_PAIR.finditer(value))
    if not matches or matches[0].start() != 0:
        raise _err(ln, col, "B entries look like '(1,2): poly, (1,3): poly'")
    for j, m in enumerate(matches):
        end = matches[j + 1].start() if j + 1 < len(matches) else len(value)
        poly = value[m.end():end].strip().rstrip(",").strip()
        idx = tuple(int(x) - 1 for x in re.split(r"\s*,\s*", m.group(1)))
        if any(i < 0 for i in idx):
            raise _err(ln, col + m.start(), "indices start at 1")
        if not poly:
            raise _err(ln, col + m.end(), "missing polynomial")
        out.append((idx, poly))
    return out


def load_spec(path: str) -> RunSpec:
    p = Path(path)
    if not p.is_file():
        p = resolve_chart_path(path)
    return parse_spec(p.read_text(), p.parent)


def fixture_names() -> List[str]:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.chart"))


def load_fixture(name: str) -> RunSpec:
    return parse_spec((FIXTURE_DIR / f"{name}.chart").read_text(), FIXTURE_DIR)
