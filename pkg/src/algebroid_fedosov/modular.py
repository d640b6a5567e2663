"""Densities, divergences, the modular class and the trace certificate.

Densities are exponential-polynomial: ``exp(w_M)|dx|`` on the base and
``exp(w_E)|e_1 ^ ... ^ e_N|`` on ``E``.  In a chart

    div_mu(s) = sum_i d_i(s^a rho^i_a) + rho(s) w_M
    div_E(s)  = rho(s) w_E + s^a c^b_{ab} - sum_b rho_b(s^b)

and ``tr ad = div_mu + div_E`` is a classical E-one-form.  The density
``Omega = mu (x) nu_E`` on ``E*`` has weight ``w_M + w_E`` against
``|dq dp|``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product as iproduct
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .algebroid import AlgebroidChart, PhaseVectorField, d_E, hamiltonian_field, vertical_lift
from .fedosov import FedosovSolution, InternalConsistencyError
from .ring import BasePoly, InputError, Q
from .sections import EFormSeries, PolySection

SectionLike = Union[int, Sequence[BasePoly]]


@dataclass(frozen=True)
class DensityWeights:
    """Weight exponents of the base density and of the E-density."""

    wM: BasePoly
    wE: BasePoly

    @classmethod
    def constant(cls, n: int) -> "DensityWeights":
        return cls(BasePoly.zero(n), BasePoly.zero(n))

    @property
    def total(self) -> BasePoly:
        return self.wM + self.wE

    def shifted(self, vM: BasePoly, vE: Optional[BasePoly] = None) -> "DensityWeights":
        return DensityWeights(self.wM + vM, self.wE + (vE if vE is not None else BasePoly.zero(vM.n)))


def _components(s: SectionLike, ch: AlgebroidChart) -> List[BasePoly]:
    if isinstance(s, int):
        if not 0 <= s < ch.N:
            raise InputError(f"frame index {s} out of range")
        return [BasePoly.const(ch.n, 1 if a == s else 0) for a in range(ch.N)]
    s = list(s)
    if len(s) != ch.N:
        raise InputError("section has the wrong number of components")
    return s


def rho_of(s: Sequence[BasePoly], u: BasePoly, ch: AlgebroidChart) -> BasePoly:
    """``rho(s) u = s^a rho_a(u)``."""
    out = BasePoly.zero(ch.n)
    for a, sa in enumerate(s):
        if sa:
            out = out + sa * ch.rho(a, u)
    return out


def section_bracket(s: Sequence[BasePoly], t: Sequence[BasePoly], ch: AlgebroidChart) -> List[BasePoly]:
    """``[s, t]^g = rho(s) t^g - rho(t) s^g + s^a t^b c^g_{ab}``."""
    N = ch.N
    out = []
    for g in range(N):
        v = rho_of(s, t[g], ch) - rho_of(t, s[g], ch)
        for a in range(N):
            for b in range(N):
                if ch.c[a][b][g] and s[a] and t[b]:
                    v = v + s[a] * t[b] * ch.c[a][b][g]
        out.append(v)
    return out


def div_mu(s: SectionLike, dw: DensityWeights, ch: AlgebroidChart) -> BasePoly:
    comp = _components(s, ch)
    out = rho_of(comp, dw.wM, ch)
    for i in range(ch.n):
        v = BasePoly.zero(ch.n)
        for a, sa in enumerate(comp):
            if sa and ch.anchor[a][i]:
                v = v + sa * ch.anchor[a][i]
        out = out + v.diff(i)
    return out


def div_E(s: SectionLike, dw: DensityWeights, ch: AlgebroidChart) -> BasePoly:
    comp = _components(s, ch)
    out = rho_of(comp, dw.wE, ch)
    for a, sa in enumerate(comp):
        if sa:
            tr = sum((ch.c[a][b][b] for b in range(ch.N)), BasePoly.zero(ch.n))
            out = out + sa * tr
    for b, sb in enumerate(comp):
        out = out - ch.rho(b, sb)
    return out


def divergences(s: SectionLike, dw: DensityWeights, ch: AlgebroidChart) -> Tuple[BasePoly, BasePoly]:
    ch.require_valid()
    return div_mu(s, dw, ch), div_E(s, dw, ch)


def divergence_property_failures(
    ch: AlgebroidChart, dw: DensityWeights, rng: random.Random, trials: int = 5
) -> List[str]:
    """Check the six divergence identities on frame sections and random multiples."""
    from .samples import random_base

    n, N = ch.n, ch.N
    frames = [_components(a, ch) for a in range(N)]
    secs = frames + [[random_base(rng, n, 2, 1) for _ in range(N)] for _ in range(trials)]
    us = [random_base(rng, n, 2, 2) for _ in range(trials)]
    fails = []
    for name, div, sign in (("mu", div_mu, 1), ("E", div_E, -1)):
        for s in secs:
            for u in us:
                us_ = [u * x for x in s]
                if div(us_, dw, ch) != u * div(s, dw, ch) + rho_of(s, u, ch) * sign:
                    fails.append(f"div_{name}(us) = u div_{name}(s) {'+' if sign > 0 else '-'} rho(s)u")
                    break
                v = u
                shifted = DensityWeights(dw.wM + v, dw.wE) if name == "mu" else DensityWeights(dw.wM, dw.wE + v)
                if div(s, shifted, ch) != div(s, dw, ch) + rho_of(s, v, ch):
                    fails.append(f"div_{name} under density change exp(v)")
                    break
        for s in secs:
            for t in secs:
                lhs = div(section_bracket(s, t, ch), dw, ch)
                rhs = rho_of(s, div(t, dw, ch), ch) - rho_of(t, div(s, dw, ch), ch)
                if lhs != rhs:
                    fails.append(f"div_{name}([s,t]) = rho(s)div(t) - rho(t)div(s)")
                    break
    return sorted(set(fails))


def tr_ad(dw: DensityWeights, ch: AlgebroidChart) -> EFormSeries:
    """The modular one-form ``tr ad(e_a) = div_mu(e_a) + div_E(e_a)``."""
    ch.require_valid()
    entries = []
    for a in range(ch.N):
        m, e = divergences(a, dw, ch)
        if m + e:
            entries.append((0, (a,), m + e))
    return EFormSeries.from_entries(ch.n, ch.N, entries)


def tr_ad_of(s: Sequence[BasePoly], form: EFormSeries) -> BasePoly:
    out = BasePoly.zero(form.n)
    for a, sa in enumerate(s):
        out = out + sa * form.component((a,))
    return out


def tr_ad_failures(ch: AlgebroidChart, dw: DensityWeights, rng: random.Random, trials: int = 5) -> List[str]:
    """``C(M)``-linearity, ``d_E``-closedness and exact shifts under density changes."""
    from .samples import random_base

    n, N = ch.n, ch.N
    t = tr_ad(dw, ch)
    fails = []
    if d_E(t, ch):
        fails.append("tr ad is not d_E-closed")
    for _ in range(trials):
        s = [random_base(rng, n, 2, 1) for _ in range(N)]
        u = random_base(rng, n, 2, 2)
        full = div_mu([u * x for x in s], dw, ch) + div_E([u * x for x in s], dw, ch)
        if full != u * tr_ad_of(s, t) or div_mu(s, dw, ch) + div_E(s, dw, ch) != tr_ad_of(s, t):
            fails.append("tr ad is not C(M)-linear")
            break
        vM, vE = random_base(rng, n, 2, 2), random_base(rng, n, 2, 2)
        diff = tr_ad(dw.shifted(vM, vE), ch) - t
        if diff != d_E(EFormSeries.function(vM + vE, N), ch):
            fails.append("density change does not shift tr ad by d_E(v)")
            break
    return fails


def is_unimodular_witness(ch: AlgebroidChart, dw: DensityWeights, u: Optional[BasePoly] = None) -> bool:
    """``tr ad = 0``, or ``tr ad = d_E u`` for the supplied ``u``."""
    t = tr_ad(dw, ch)
    if not t:
        return True
    return u is not None and t == d_E(EFormSeries.function(u, ch.N), ch)


def modular_vector_field(dw: DensityWeights, ch: AlgebroidChart) -> PhaseVectorField:
    """``Delta_Omega`` from ``L_{X_f} Omega`` on generators, checked against ``(tr ad)^ver``."""
    n, N = ch.n, ch.N
    w = PolySection.from_base(dw.total, N)
    vq = [hamiltonian_field(PolySection.from_base(BasePoly.var(n, i), N), ch).divergence(w) for i in range(n)]
    vp = [hamiltonian_field(PolySection.p(n, N, a), ch).divergence(w) for a in range(N)]
    field_a = PhaseVectorField(n, N, vq, vp)
    field_b = vertical_lift(tr_ad(dw, ch), ch)
    if field_a != field_b:
        raise InternalConsistencyError(f"modular vector field routes disagree: {field_a} vs {field_b}")
    return field_a


# ---------------------------------------------------------------------------
# operator extraction and formal adjoints
# ---------------------------------------------------------------------------

MultiIndex = Tuple[Tuple[int, ...], Tuple[int, ...]]


@dataclass
class ExtractedOperator:
    """``sum c_{a,b}(q, p) d_q^a d_p^b`` acting on classical sections."""

    n: int
    N: int
    coeffs: Dict[MultiIndex, PolySection] = field(default_factory=dict)

    def apply(self, g: PolySection) -> PolySection:
        out = PolySection.zero(self.n, self.N)
        for (a, b), c in self.coeffs.items():
            d = g
            for i, e in enumerate(a):
                for _ in range(e):
                    d = d.diff_q(i)
            d = d.diff_p_multi(b)
            if d:
                out = out + c * d
        return out

    def order(self) -> int:
        return max((sum(a) + sum(b) for (a, b) in self.coeffs), default=-1)

    def __str__(self):
        parts = []
        for (a, b) in sorted(self.coeffs, key=lambda k: (sum(k[0]) + sum(k[1]), k)):
            d = "".join(f" d/dq{i + 1}" * e for i, e in enumerate(a)) + "".join(
                f" d/dp{j + 1}" * e for j, e in enumerate(b)
            )
            parts.append(f"({self.coeffs[(a, b)]}){d}")
        return " + ".join(parts) if parts else "0"


def _multi_indices(dim: int, max_total: int):
    out = []
    for total in range(max_total + 1):
        for e in iproduct(range(total + 1), repeat=dim):
            if sum(e) == total:
                out.append(e)
    return out


def _mono(n, N, e) -> PolySection:
    return PolySection.monomial(n, N, e[n:], e[:n])


def _side_op(f: PolySection, r: int, side: str, sol: FedosovSolution):
    S = sol.star_section
    if side == "left":
        return lambda g: S(f, g).nu_part(r)
    if side == "right":
        return lambda g: S(g, f).nu_part(r)
    if side == "commutator":
        return lambda g: S(f, g).nu_part(r) - S(g, f).nu_part(r)
    raise InputError(f"unknown side {side!r}")


def extract_operator(
    f: PolySection, r: int, side: str, sol: FedosovSolution, m: Optional[int] = None, probes: int = 3, seed: int = 0
) -> ExtractedOperator:
    """Recover ``C_r(f, .)`` (or ``C_r(., f)``, or their difference) by triangular jet interpolation."""
    if r > sol.setup.trunc.L:
        raise InputError(f"nu-order {r} exceeds the truncation L={sol.setup.trunc.L}")
    m = r if m is None else m
    if m < r:
        raise InputError("order bound must be at least the nu-order")
    n, N = f.n, f.N
    op = _side_op(f, r, side, sol)
    coeffs: Dict[MultiIndex, PolySection] = {}
    for e in _multi_indices(n + N, m):
        val = op(_mono(n, N, e))
        for (a, b), c in coeffs.items():
            e2 = a + b
            if all(x <= y for x, y in zip(e2, e)):
                fac = 1
                for x, y in zip(e2, e):
                    fac *= factorial(y) // factorial(y - x)
                rest = tuple(y - x for x, y in zip(e2, e))
                val = val - c * _mono(n, N, rest).scale(fac)
        if val:
            den = 1
            for y in e:
                den *= factorial(y)
            coeffs[(e[:n], e[n:])] = val.scale(Q(1, den))
    D = ExtractedOperator(n, N, coeffs)
    from .samples import random_section

    rng = random.Random(seed)
    for _ in range(probes):
        g = random_section(rng, n, N, terms=3, max_fibre=m + 1, max_base=min(m + 1, 2) if n else 0)
        if D.apply(g) != op(g):
            raise InputError(f"order bound {m} too small for C_{r} ({side}) of f={f}; probe g={g}")
    return D


def formal_adjoint_unit(D: ExtractedOperator, dw: DensityWeights) -> PolySection:
    """``D*(1) = sum (-1)^{|a|} exp(-w) d^a(exp(w) c_a)`` for ``Omega = exp(w)|dq dp|``."""
    w = PolySection.from_base(dw.total, D.N)
    dq_w = [w.diff_q(i) for i in range(D.n)]
    out = PolySection.zero(D.n, D.N)
    for (a, b), c in D.coeffs.items():
        v = c.diff_p_multi(b)
        for i, e in enumerate(a):
            for _ in range(e):
                v = v.diff_q(i) + dq_w[i] * v
        if (sum(a) + sum(b)) % 2:
            v = -v
        out = out + v
    return out


def euler_defect(D: ExtractedOperator, k: int, r: int) -> Optional[MultiIndex]:
    """First multi-index violating ``[xi, D] = (k - r) D``, or ``None``."""
    for (a, b), c in D.coeffs.items():
        if c.homogeneity() - c.scale(sum(b)) != c.scale(k - r):
            return (a, b)
    return None


@dataclass
class TraceLine:
    f: PolySection
    r: int
    adjoint_unit: PolySection
    euler_ok: bool

    @property
    def passed(self) -> bool:
        return not self.adjoint_unit and self.euler_ok

    def __str__(self):
        s = f"f={self.f} r={self.r} adjoint_unit={self.adjoint_unit}"
        return s if self.euler_ok else s + " euler=FAIL"


@dataclass
class TraceCertificate:
    refused: Optional[str]
    lines: List[TraceLine]

    @property
    def passed(self) -> bool:
        return self.refused is None and all(l.passed for l in self.lines)

    def __str__(self):
        if self.refused:
            return f"REFUSED {self.refused}"
        return "\n".join(str(l) for l in self.lines)


def trace_certificate(
    sol: FedosovSolution,
    dw: DensityWeights,
    max_degree: int,
    max_order: int,
    u: Optional[BasePoly] = None,
    max_base: int = 1,
) -> TraceCertificate:
    """``(f * g - g * f)`` integrates to zero against ``Omega`` for all monomials ``f``.

    If ``tr ad = d_E u`` for a supplied ``u`` the base weight is replaced by
    ``w_M - u``, which makes ``tr ad`` vanish.
    """
    st = sol.setup
    ch = st.chart
    t = tr_ad(dw, ch)
    if t:
        if u is None or t != d_E(EFormSeries.function(u, ch.N), ch):
            return TraceCertificate(f"tr ad = {t} is nonzero for these weights (the star product has no such trace)", [])
        dw = dw.shifted(-u)
    if max_order > st.trunc.L:
        raise InputError(f"max order {max_order} exceeds the truncation L={st.trunc.L}")
    n, N = st.n, st.N
    lines = []
    for e in _multi_indices(n + N, max_degree + (max_base if n else 0)):
        if sum(e[n:]) > max_degree or sum(e[:n]) > max_base:
            continue
        f = _mono(n, N, e)
        k = sum(e[n:])
        for r in range(1, max_order + 1):
            D = extract_operator(f, r, "commutator", sol)
            ok = euler_defect(D, k, r) is None if all(kk == 1 for (kk, _, _) in st.B.terms) else True
            lines.append(TraceLine(f, r, formal_adjoint_unit(D, dw), ok))
    return TraceCertificate(None, lines)
