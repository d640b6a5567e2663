"""Lie algebroid chart data and the classical geometry of ``E*``.

A chart is the anchor ``rho^i_a`` and the structure functions ``c^g_{ab}``
with ``[e_a, e_b] = c^g_{ab} e_g``.  Indices are 0-based in the Python API;
the text formats in :mod:`algebroid_fedosov.specfile` are 1-based.

Sign conventions: the linear Poisson bracket satisfies
``{p_a, p_b} = -c^g_{ab} p_g`` and ``{u, p_b} = rho_b(u)`` for base functions
``u``, so it is the negative of the Kirillov-Kostant-Souriau bracket.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .ring import ONE, BasePoly, InputError, Q, Truncation, scalar
from .sections import EFormSeries, PolySection, _acc, _tadd, mask_indices, popcount, wedge_sign
from .wsl import CovariantDerivative, WSLElement


# ---------------------------------------------------------------------------
# chart
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    issues: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __str__(self):
        return "valid" if self.ok else "\n".join(self.issues)


class AlgebroidChart:
    """Local data of a Lie algebroid of rank ``N`` over ``n`` base coordinates."""

    def __init__(self, n: int, N: int, anchor=None, c=None, name: str = ""):
        self.n, self.N, self.name = n, N, name
        z = BasePoly.zero(n)
        self.anchor: List[List[BasePoly]] = [[z] * n for _ in range(N)]
        self.c: List[List[List[BasePoly]]] = [[[z] * N for _ in range(N)] for _ in range(N)]
        if anchor is not None:
            if len(anchor) != N or any(len(row) != n for row in anchor):
                raise InputError("anchor must be an N x n table")
            self.anchor = [[_poly(v, n) for v in row] for row in anchor]
        if c is not None:
            if len(c) != N or any(len(r) != N or any(len(s) != N for s in r) for r in c):
                raise InputError("structure functions must be an N x N x N table")
            self.c = [[[_poly(v, n) for v in s] for s in r] for r in c]
        self._valid: Optional[bool] = None

    def rho(self, a: int, u: BasePoly) -> BasePoly:
        """The anchor derivation ``rho(e_a) u``."""
        out = BasePoly.zero(self.n)
        for i in range(self.n):
            if self.anchor[a][i]:
                out = out + self.anchor[a][i] * u.diff(i)
        return out

    def require_valid(self) -> "AlgebroidChart":
        if self._valid is None:
            rep = validate_chart(self)
            self._valid = rep.ok
            self._report = rep
        if not self._valid:
            raise InputError(f"chart {self.name or ''} failed validation:\n{self._report}")
        return self

    def structure_constants_are_constant(self) -> bool:
        return all(v.is_constant() for r in self.c for s in r for v in s)

    def __repr__(self):
        return f"AlgebroidChart({self.name!r}, n={self.n}, N={self.N})"


def _poly(v, n: int) -> BasePoly:
    if isinstance(v, BasePoly):
        if v.n != n:
            raise InputError("base polynomial arity mismatch")
        return v
    if isinstance(v, str):
        return BasePoly.parse(v, n)
    return BasePoly.const(n, v)


def validate_chart(ch: AlgebroidChart) -> ValidationReport:
    """Check antisymmetry, anchor compatibility and the Jacobi identity exactly."""
    rep = ValidationReport()
    n, N = ch.n, ch.N
    c = ch.c
    for a in range(N):
        for b in range(N):
            for g in range(N):
                if c[a][b][g] + c[b][a][g]:
                    rep.issues.append(f"antisymmetry violated at (a,b,g)=({a + 1},{b + 1},{g + 1})")
    for a in range(N):
        for b in range(a + 1, N):
            for i in range(n):
                lhs = ch.rho(a, ch.anchor[b][i]) - ch.rho(b, ch.anchor[a][i])
                rhs = BasePoly.zero(n)
                for g in range(N):
                    rhs = rhs + c[a][b][g] * ch.anchor[g][i]
                if lhs != rhs:
                    rep.issues.append(
                        f"anchor compatibility violated at (a,b,i)=({a + 1},{b + 1},{i + 1}): residual {lhs - rhs}"
                    )
    for a in range(N):
        for b in range(a + 1, N):
            for g in range(b + 1, N):
                for eps in range(N):
                    tot = BasePoly.zero(n)
                    for x, y, z in ((a, b, g), (b, g, a), (g, a, b)):
                        # [[e_x, e_y], e_z] = c^d_{xy} c^eps_{dz} - rho_z(c^eps_{xy})
                        for d in range(N):
                            if c[x][y][d]:
                                tot = tot + c[x][y][d] * c[d][z][eps]
                        tot = tot - ch.rho(z, c[x][y][eps])
                    if tot:
                        rep.issues.append(
                            f"Jacobi violated at (a,b,g)=({a + 1},{b + 1},{g + 1}), component {eps + 1}: residual {tot}"
                        )
    return rep


# ---------------------------------------------------------------------------
# the differential d_E
# ---------------------------------------------------------------------------


def d_E(w: EFormSeries, ch: AlgebroidChart) -> EFormSeries:
    """Lie algebroid differential, extended from functions and ``e^g`` as a graded derivation."""
    ch.require_valid()
    n, N = ch.n, ch.N
    # d e^g = -sum_{a<b} c^g_{ab} e^a ^ e^b
    d_theta = []
    for g in range(N):
        d_theta.append(
            EFormSeries.from_entries(n, N, [(0, (a, b), -ch.c[a][b][g]) for a in range(N) for b in range(a + 1, N)])
        )
    out: dict = {}
    for (k, m, q), v in w.terms.items():
        mono = BasePoly._raw(n, {q: v})
        for a in range(N):
            du = ch.rho(a, mono)
            if du:
                bit = 1 << a
                s = wedge_sign(bit, m)
                if s:
                    for e, cc in du.terms.items():
                        _acc(out, (k, m | bit, e), cc * s)
        idx = mask_indices(m)
        for j, g in enumerate(idx):
            left = 0
            for t in idx[:j]:
                left |= 1 << t
            right = m ^ left ^ (1 << g)
            sgn = -1 if j % 2 else 1
            for (_, dm, dq), dc in d_theta[g].terms.items():
                s1 = wedge_sign(left, dm)
                if not s1:
                    continue
                s2 = wedge_sign(left | dm, right)
                if not s2:
                    continue
                for e, cc in mono.terms.items():
                    _acc(out, (k, left | dm | right, _tadd(e, dq)), cc * dc * (sgn * s1 * s2))
    return EFormSeries._raw(n, N, out)


# ---------------------------------------------------------------------------
# connections
# ---------------------------------------------------------------------------


class EConnection:
    """Christoffel symbols ``gamma[a][b][g] = Gamma^g_{ab}`` with ``nabla_{e_a} e_b = Gamma^g_{ab} e_g``."""

    def __init__(self, n: int, N: int, gamma=None):
        self.n, self.N = n, N
        z = BasePoly.zero(n)
        if gamma is None:
            self.gamma = [[[z] * N for _ in range(N)] for _ in range(N)]
        else:
            if len(gamma) != N or any(len(r) != N or any(len(s) != N for s in r) for r in gamma):
                raise InputError("connection must be an N x N x N table")
            self.gamma = [[[_poly(v, n) for v in s] for s in r] for r in gamma]
        self._cov: Dict[int, CovariantDerivative] = {}

    def torsion(self, ch: AlgebroidChart):
        """``T^g_{ab} = Gamma^g_{ab} - Gamma^g_{ba} - c^g_{ab}``."""
        N = self.N
        return [
            [[self.gamma[a][b][g] - self.gamma[b][a][g] - ch.c[a][b][g] for g in range(N)] for b in range(N)]
            for a in range(N)
        ]

    def is_torsion_free(self, ch: AlgebroidChart) -> bool:
        return not any(v for r in self.torsion(ch) for s in r for v in s)

    def covariant(self, ch: AlgebroidChart) -> CovariantDerivative:
        key = id(ch)
        cd = self._cov.get(key)
        if cd is None:
            cd = self._cov[key] = CovariantDerivative(ch, self)
        return cd

    def __eq__(self, o):
        return isinstance(o, EConnection) and self.gamma == o.gamma

    def __sub__(self, o: "EConnection") -> "EConnection":
        N = self.N
        return EConnection(
            self.n, N, [[[self.gamma[a][b][g] - o.gamma[a][b][g] for g in range(N)] for b in range(N)] for a in range(N)]
        )

    def __repr__(self):
        nz = [
            f"G^{g + 1}_{a + 1}{b + 1}={self.gamma[a][b][g]}"
            for a in range(self.N)
            for b in range(self.N)
            for g in range(self.N)
            if self.gamma[a][b][g]
        ]
        return "EConnection(" + ", ".join(nz) + ")"


def symmetrize_connection(conn: EConnection, ch: AlgebroidChart) -> EConnection:
    """Subtract half the torsion: ``Gamma' = (Gamma_ab + Gamma_ba + c_ab) / 2``."""
    N = ch.N
    h = Q(1, 2)
    return EConnection(
        ch.n,
        N,
        [
            [[(conn.gamma[a][b][g] + conn.gamma[b][a][g] + ch.c[a][b][g]) * h for g in range(N)] for b in range(N)]
            for a in range(N)
        ],
    )


def half_connection(ch: AlgebroidChart) -> EConnection:
    """The torsion-free connection ``Gamma^g_{ab} = c^g_{ab} / 2``."""
    return symmetrize_connection(EConnection(ch.n, ch.N), ch)


def curvature_components(conn: EConnection, ch: AlgebroidChart):
    """``R[g][b][a][d] = R^g_{b a d}`` with ``R(e_a, e_d) e_b = R^g_{bad} e_g``."""
    N = ch.N
    G = conn.gamma
    z = BasePoly.zero(ch.n)
    R = [[[[z] * N for _ in range(N)] for _ in range(N)] for _ in range(N)]
    for g in range(N):
        for b in range(N):
            for a in range(N):
                for d in range(N):
                    if a == d:
                        continue
                    v = ch.rho(a, G[d][b][g]) - ch.rho(d, G[a][b][g])
                    for e in range(N):
                        v = v + G[d][b][e] * G[a][e][g] - G[a][b][e] * G[d][e][g] - ch.c[a][d][e] * G[e][b][g]
                    R[g][b][a][d] = v
    return R


def curvature(conn: EConnection, ch: AlgebroidChart, trunc: Truncation) -> WSLElement:
    """The curvature tensor ``R = sum_{a<d} R^g_{bad} y^b p_g th^a th^d`` in ``W1 S1 L2``."""
    ch.require_valid()
    N, n = ch.N, ch.n
    R = curvature_components(conn, ch)
    terms: dict = {}
    z = (0,) * N
    for g in range(N):
        for b in range(N):
            for a in range(N):
                for d in range(a + 1, N):
                    v = R[g][b][a][d]
                    y = tuple(1 if i == b else 0 for i in range(N))
                    p = tuple(1 if i == g else 0 for i in range(N))
                    for e, cc in v.terms.items():
                        _acc(terms, (y, p, (1 << a) | (1 << d), 0, e), cc)
    return WSLElement(n, N, trunc, terms)


# ---------------------------------------------------------------------------
# classical Poisson geometry of E*
# ---------------------------------------------------------------------------


def _sec_rho(ch: AlgebroidChart, a: int, s: PolySection) -> PolySection:
    out = PolySection.zero(ch.n, ch.N)
    for i in range(ch.n):
        if ch.anchor[a][i]:
            out = out + s.diff_q(i).times_base(ch.anchor[a][i])
    return out


def nabla_section(s: PolySection, a: int, conn: EConnection, ch: AlgebroidChart) -> PolySection:
    """``nabla_{e_a}`` on ``S(E)``: ``rho_a d_q + Gamma^g_{ab} p_g d/dp_b``."""
    out = _sec_rho(ch, a, s)
    n, N = ch.n, ch.N
    for b in range(N):
        db = None
        for g in range(N):
            G = conn.gamma[a][b][g]
            if G:
                if db is None:
                    db = s.diff_p(b)
                    if not db:
                        break
                out = out + db * PolySection.p(n, N, g).times_base(G)
    return out


def gauged_poisson_bracket(
    f: PolySection,
    g: PolySection,
    ch: AlgebroidChart,
    conn: Optional[EConnection] = None,
    B0: Optional[EFormSeries] = None,
) -> PolySection:
    """``{f,g} = nabla_a f dg/dp_a - df/dp_a nabla_a g - B0(e_a,e_b) df/dp_a dg/dp_b``."""
    ch.require_valid()
    n, N = ch.n, ch.N
    if conn is None:
        conn = half_connection(ch)
    if not conn.is_torsion_free(ch):
        raise InputError("gauged bracket needs a torsion-free connection")
    if B0 is not None and B0:
        if any(popcount(m) != 2 for (_, m, _) in B0.terms):
            raise InputError("B0 must be an E-two-form")
        w = d_E(B0, ch)
        if w:
            raise InputError(f"B0 is not d_E-closed; d_E B0 = {w}")
    out = PolySection.zero(n, N)
    dpf = [f.diff_p(a) for a in range(N)]
    dpg = [g.diff_p(a) for a in range(N)]
    for a in range(N):
        if dpg[a]:
            out = out + nabla_section(f, a, conn, ch) * dpg[a]
        if dpf[a]:
            out = out - dpf[a] * nabla_section(g, a, conn, ch)
    if B0 is not None:
        for a in range(N):
            for b in range(N):
                if a == b or not dpf[a] or not dpg[b]:
                    continue
                comp = B0.component((a, b))
                if comp:
                    out = out - (dpf[a] * dpg[b]).times_base(comp)
    return out


def poisson_bracket_coordinates(f: PolySection, g: PolySection, ch: AlgebroidChart, B0=None) -> PolySection:
    """Connection-free coordinate form of the bracket; used as an oracle."""
    n, N = ch.n, ch.N
    out = PolySection.zero(n, N)
    for a in range(N):
        for i in range(n):
            r = ch.anchor[a][i]
            if r:
                out = out + (f.diff_q(i) * g.diff_p(a) - f.diff_p(a) * g.diff_q(i)).times_base(r)
    for a in range(N):
        for b in range(N):
            for gg in range(N):
                cc = ch.c[a][b][gg]
                if cc:
                    out = out - (PolySection.p(n, N, gg) * f.diff_p(a) * g.diff_p(b)).times_base(cc)
            if B0 is not None and a != b:
                comp = B0.component((a, b))
                if comp:
                    out = out - (f.diff_p(a) * g.diff_p(b)).times_base(comp)
    return out


@dataclass
class PhaseVectorField:
    """Vector field on ``E*``: ``sum_i vq[i] d/dq^i + sum_a vp[a] d/dp_a``."""

    n: int
    N: int
    vq: List[PolySection]
    vp: List[PolySection]

    def __post_init__(self):
        if len(self.vq) != self.n or len(self.vp) != self.N:
            raise InputError("vector field component arity mismatch")

    @classmethod
    def zero(cls, n, N) -> "PhaseVectorField":
        z = PolySection.zero(n, N)
        return cls(n, N, [z] * n, [z] * N)

    def apply(self, g: PolySection) -> PolySection:
        out = PolySection.zero(self.n, self.N)
        for i in range(self.n):
            if self.vq[i]:
                out = out + self.vq[i] * g.diff_q(i)
        for a in range(self.N):
            if self.vp[a]:
                out = out + self.vp[a] * g.diff_p(a)
        return out

    def divergence(self, w: PolySection) -> PolySection:
        """Divergence against the density ``exp(w) dq dp``: ``sum d_j X^j + X(w)``."""
        out = self.apply(w)
        for i in range(self.n):
            out = out + self.vq[i].diff_q(i)
        for a in range(self.N):
            out = out + self.vp[a].diff_p(a)
        return out

    def is_zero(self) -> bool:
        return not any(self.vq) and not any(self.vp)

    def __eq__(self, o):
        return isinstance(o, PhaseVectorField) and (self.vq, self.vp) == (o.vq, o.vp)

    def __str__(self):
        parts = [f"({v}) d/dq{i + 1}" for i, v in enumerate(self.vq) if v]
        parts += [f"({v}) d/dp{a + 1}" for a, v in enumerate(self.vp) if v]
        return " + ".join(parts) if parts else "0"


def hamiltonian_field(f: PolySection, ch: AlgebroidChart) -> PhaseVectorField:
    """``X_f = -rho^i_a df/dq^i d/dp_a + rho^i_a df/dp_a d/dq^i + p_g c^g_{ab} df/dp_a d/dp_b``.

    With this formula ``X_f(g) = {g, f}``.
    """
    ch.require_valid()
    n, N = ch.n, ch.N
    vq = [PolySection.zero(n, N) for _ in range(n)]
    vp = [PolySection.zero(n, N) for _ in range(N)]
    dpf = [f.diff_p(a) for a in range(N)]
    dqf = [f.diff_q(i) for i in range(n)]
    for a in range(N):
        for i in range(n):
            r = ch.anchor[a][i]
            if r:
                vq[i] = vq[i] + dpf[a].times_base(r)
                vp[a] = vp[a] - dqf[i].times_base(r)
    for a in range(N):
        for b in range(N):
            for g in range(N):
                cc = ch.c[a][b][g]
                if cc and dpf[a]:
                    vp[b] = vp[b] + (PolySection.p(n, N, g) * dpf[a]).times_base(cc)
    return PhaseVectorField(n, N, vq, vp)


def horizontal_lift(a: int, conn: EConnection, ch: AlgebroidChart) -> PhaseVectorField:
    """``(e_a)^hor = rho^i_a d/dq^i + p_g Gamma^g_{ab} d/dp_b``."""
    n, N = ch.n, ch.N
    vq = [PolySection.from_base(ch.anchor[a][i], N) for i in range(n)]
    vp = [PolySection.zero(n, N) for _ in range(N)]
    for b in range(N):
        for g in range(N):
            G = conn.gamma[a][b][g]
            if G:
                vp[b] = vp[b] + PolySection.p(n, N, g).times_base(G)
    return PhaseVectorField(n, N, vq, vp)


def vertical_lift(form: EFormSeries, ch: AlgebroidChart) -> PhaseVectorField:
    """``alpha^ver = alpha_a d/dp_a`` for a classical E-one-form."""
    n, N = ch.n, ch.N
    vp = [PolySection.from_base(form.component((a,)), N) for a in range(N)]
    return PhaseVectorField(n, N, [PolySection.zero(n, N)] * n, vp)


def theta_E(conn: EConnection, ch: AlgebroidChart) -> Dict[Tuple[int, int], PolySection]:
    """``theta_E = (e_a)^hor ^ (e^a)^ver`` as ``{(u, v): coefficient}`` with ``u < v``.

    Coordinates are numbered ``q1..qn`` then ``p1..pN``.
    """
    n, N = ch.n, ch.N
    out: Dict[Tuple[int, int], PolySection] = {}

    def add(u, v, coef):
        if u == v or not coef:
            return
        if u > v:
            u, v, coef = v, u, -coef
        cur = out.get((u, v))
        tot = coef if cur is None else cur + coef
        if tot:
            out[(u, v)] = tot
        else:
            out.pop((u, v), None)

    for a in range(N):
        hor = horizontal_lift(a, conn, ch)
        for i in range(n):
            add(i, n + a, hor.vq[i])
        for b in range(N):
            add(n + b, n + a, hor.vp[b])
    return out
