"""Equivalences and isomorphisms between Fedosov star products.

Three families are built, each as ``s -> sigma(A_h tau(s))`` with the
fibrewise automorphism ``A_h = exp((1/nu) ad_kappa h)``:

* gauge change ``I_A`` between ``B`` and ``B' = B - d_E A``,
* connection change ``E`` between torsion-free connections,
* ordering change ``N`` between ``kappa`` and ``kappa'`` (with ``M`` in front).

The gauge case also has closed forms through the map ``F``.  All
Fedosov-side computations run at one extra total degree, ``(L, T + 1)``,
because ``(1/nu) ad h`` lowers the nu-order of ``h`` by one; results are
cut back to ``nu <= L``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, List, Optional

from .algebroid import EConnection, d_E
from .fedosov import (
    CheckReport,
    FedosovSetup,
    FedosovSolution,
    InternalConsistencyError,
    apply_F,
    fedosov_derivation,
    homotopy_inverse,
)
from .ring import ONE, ZERO, InputError, Q, Scalar, Truncation, scalar
from .sections import EFormSeries, PolySection, _acc, mask_indices, popcount
from .wsl import (
    WSLElement,
    cov_D,
    delta,
    delta_inv,
    laplace_fib,
    m_transform,
    nu_ad,
    nu_product,
    sigma,
    sym_cov,
)

Operator = Callable[[PolySection], PolySection]


# ---------------------------------------------------------------------------
# shared machinery
# ---------------------------------------------------------------------------


def working_setup(setup: FedosovSetup) -> FedosovSetup:
    """The same data one total degree wider, where ``A_h tau`` is complete through ``nu^L``."""
    t = setup.trunc
    return setup.with_trunc(Truncation(t.L, t.T + 1))


def form_to_W(A: EFormSeries, trunc: Truncation) -> WSLElement:
    """Read an E-one-form ``A_a e^a`` as ``A_a y^a`` in the symmetric slot."""
    out: dict = {}
    z = (0,) * A.N
    for (k, m, q), c in A.terms.items():
        if popcount(m) != 1:
            raise InputError("expected an E-one-form")
        (a,) = mask_indices(m)
        y = tuple(1 if i == a else 0 for i in range(A.N))
        _acc(out, (y, z, 0, k, q), c)
    return WSLElement(A.n, A.N, trunc, out)


def exp_nu_ad(h: WSLElement, x: WSLElement, kappa, max_terms: Optional[int] = None) -> WSLElement:
    """``exp((1/nu) ad_kappa h) x``, summed until the terms vanish."""
    limit = max_terms if max_terms is not None else 4 * (x.trunc.T + x.trunc.L) + 16
    out = term = x
    for m in range(1, limit + 1):
        term = nu_ad(h, term, kappa).scale(Q(1, m))
        if not term:
            return out
        out = out + term
    raise InternalConsistencyError("exp((1/nu) ad h) did not terminate")


def transport(s: PolySection, h: WSLElement, sol: FedosovSolution, kappa=None, dk=None, L: Optional[int] = None):
    """``sigma(exp((1/nu) ad_kappa h) M_dk tau(s))`` cut to ``nu <= L``."""
    st = sol.setup
    kappa = st.kappa if kappa is None else scalar(kappa)
    x = sol.tau(s)
    if dk is not None and dk != 0:
        x = m_transform(x, dk)
    x = exp_nu_ad(h.with_trunc(x.trunc), x, kappa)
    return sigma(x).truncated_nu(st.trunc.L if L is None else L)


def intertwining_defect(I: Operator, f: PolySection, g: PolySection, src: FedosovSolution, dst: FedosovSolution):
    """``I(f * g) - I(f) *' I(g)`` through ``nu^L``."""
    L = min(src.setup.trunc.L, dst.setup.trunc.L)
    lhs = I(src.star_section(f, g)).truncated_nu(L)
    rhs = dst.star_section(I(f), I(g)).truncated_nu(L)
    return lhs - rhs


def exp_operator(op: Operator, f: PolySection, L: int, max_terms: int = 64) -> PolySection:
    """``exp(op) f`` for an operator that is locally nilpotent on polynomials modulo ``nu^{L+1}``."""
    out = term = f.truncated_nu(L)
    for m in range(1, max_terms + 1):
        term = op(term).truncated_nu(L).scale(Q(1, m))
        if not term:
            return out
        out = out + term
    raise InternalConsistencyError("operator exponential did not terminate")


def bernoulli(n: int) -> List[Scalar]:
    """``B_0 .. B_n`` with ``B_1 = -1/2`` (coefficients of ``x / (e^x - 1)``)."""
    B = [ONE]
    for m in range(1, n + 1):
        acc = ZERO
        for k in range(m):
            acc += Q(factorial(m + 1), factorial(k) * factorial(m + 1 - k)) * B[k]
        B.append(-acc / (m + 1))
    return B


# ---------------------------------------------------------------------------
# gauge change I_A
# ---------------------------------------------------------------------------


@dataclass
class GaugeData:
    """A one-form ``A`` with ``d_E A = B - B'`` and its Fedosov-side generator ``h_A``."""

    A: EFormSeries
    setup: FedosovSetup
    setup_prime: FedosovSetup
    h_A: WSLElement

    @property
    def A0(self) -> EFormSeries:
        """Classical part of ``A``."""
        return EFormSeries._raw(self.A.n, self.A.N, {k: c for k, c in self.A.terms.items() if k[0] == 0})


def _check_one_form(A: EFormSeries, N: int) -> None:
    if A.N != N or any(popcount(m) != 1 for (_, m, _) in A.terms):
        raise InputError("A must be a series of E-one-forms on the chart")


def make_gauge(setup: FedosovSetup, A: EFormSeries, B_prime: Optional[EFormSeries] = None) -> GaugeData:
    """Gauge data from ``A``; ``B'`` defaults to ``B - d_E A`` and is checked when supplied."""
    _check_one_form(A, setup.N)
    A = A.truncated(setup.trunc)
    dA = d_E(A, setup.chart)
    if B_prime is None:
        B_prime = setup.B - dA
    else:
        defect = dA - (setup.B - B_prime.truncated(setup.trunc))
        if defect:
            raise InputError(f"d_E A != B - B'; witness d_E A - (B - B') = {defect}")
    return GaugeData(A, setup, setup.with_B(B_prime), h_A_closed(A, working_setup(setup)))


def h_A_closed(A: EFormSeries, setup: FedosovSetup) -> WSLElement:
    """``((exp(D_s) - id) / D_s) A = sum_m D_s^m A / (m+1)!`` with ``A`` in the W-slot."""
    t = setup.trunc
    term = form_to_W(A, t)
    out = term
    m = 1
    while term:
        term = sym_cov(term, setup.conn, setup.chart).scale(Q(1, m + 1))
        out = out + term
        m += 1
    return out


def h_A_homotopy(gauge: GaugeData) -> WSLElement:
    """``D^{-1}(r' - r - A)`` with the Fedosov homotopy of the unprimed product."""
    ws, wp = working_setup(gauge.setup), working_setup(gauge.setup_prime)
    sol, solp = ws.solution(), wp.solution()
    x = solp.r - sol.r - WSLElement.from_forms(gauge.A, ws.trunc)
    return homotopy_inverse(x, sol)


def gauge_G(A: EFormSeries, setup: FedosovSetup) -> WSLElement:
    """``G = sum_{j>=1} (kappa^j - (kappa-1)^j) nu^{j-1} D_s^{j-1} A / j!`` in ``W (x) C(M)[nu]``."""
    L = setup.trunc.L
    kappa = setup.kappa
    wide = Truncation(L, 2 * L + 2)
    term = form_to_W(A, wide)
    out = WSLElement.zero(A.n, A.N, wide)
    for j in range(1, L + 2):
        if not term:
            break
        coef = (kappa**j - (kappa - 1) ** j) / factorial(j)
        if coef:
            out = out + term.nu_shift(j - 1).scale(coef)
        term = sym_cov(term, setup.conn, setup.chart)
    return out


def F_operator(w: WSLElement, L: int) -> Operator:
    return lambda f: apply_F(w, f, L)


def gauge_iso(f: PolySection, gauge: GaugeData, route: str = "closed") -> PolySection:
    """``I_A f`` from ``*_{kappa,B}`` to ``*_{kappa,B'}``.

    ``route`` is ``"closed"`` (``exp F(G)``), ``"translated"``
    (``Phi*_{A0} exp F(G - A0)``) or ``"fedosov"`` (``sigma(A_{h_A} tau f)``).
    """
    st = gauge.setup
    L = st.trunc.L
    if route == "fedosov":
        ws = working_setup(st)
        return transport(f, gauge.h_A, ws.solution(), L=L)
    G = gauge_G(gauge.A, st)
    if route == "closed":
        return exp_operator(F_operator(G, L), f, L)
    if route == "translated":
        A0 = gauge.A0
        G0 = G - form_to_W(A0, G.trunc)
        g = exp_operator(F_operator(G0, L), f, L)
        shift = [PolySection.from_base(A0.component((a,)), st.N) for a in range(st.N)]
        return g.substitute_p_shift(shift).truncated_nu(L)
    raise InputError(f"unknown gauge route {route!r}")


def derivation_from_closed_A(A: EFormSeries, setup: FedosovSetup) -> Operator:
    """The derivation ``F(G(A))`` of ``*_kappa`` attached to a ``d_E``-closed one-form."""
    _check_one_form(A, setup.N)
    w = d_E(A, setup.chart)
    if w:
        raise InputError(f"A is not d_E-closed; witness d_E A = {w}")
    return F_operator(gauge_G(A.truncated(setup.trunc), setup), setup.trunc.L)


def nu_ad_star(u: PolySection, sol: FedosovSolution) -> Operator:
    """``f -> (1/nu)(u * f - f * u)``, an exact nu-shift."""
    L = sol.setup.trunc.L

    def op(f: PolySection) -> PolySection:
        c = sol.star_section(u, f) - sol.star_section(f, u)
        if c.nu_part(0):
            raise InternalConsistencyError("star commutator has a classical part")
        return c.nu_shift(-1).truncated_nu(L - 1)

    return op


def inner_automorphism(u: PolySection, sol: FedosovSolution, nu_power: int = 1) -> Operator:
    """``f -> exp(nu^{nu_power - 1} [u, .]_*) f``; ``nu_power = 1`` is ``exp(ad_* u)``."""
    L = sol.setup.trunc.L
    base = nu_ad_star(u, sol)

    def op(f):
        return base(f).nu_shift(nu_power).truncated_nu(L)

    return lambda f: exp_operator(op, f, L)


def gauge_report(gauge: GaugeData, pairs, sections) -> CheckReport:
    """Route agreement, closed vs homotopy ``h_A``, and intertwining on ``pairs``."""
    rep = CheckReport()
    ws = working_setup(gauge.setup)
    hh = h_A_homotopy(gauge)
    T = ws.trunc.T
    rep.add("h_A closed form == homotopy form", (hh - gauge.h_A).deg_at_most(T - 1).terms == {})
    rep.add("sigma(h_A) = 0", not sigma(gauge.h_A))
    ok = True
    for s in sections:
        a = gauge_iso(s, gauge, "closed")
        ok &= a == gauge_iso(s, gauge, "translated") == gauge_iso(s, gauge, "fedosov")
    rep.add("I_A routes agree (closed, translated, fedosov)", ok)
    src, dst = gauge.setup.solution(), gauge.setup_prime.solution()
    bad = [(f, g) for f, g in pairs if intertwining_defect(lambda s: gauge_iso(s, gauge), f, g, src, dst)]
    rep.add("I_A intertwines *_B and *_B'", not bad, f"witness f={bad[0][0]}, g={bad[0][1]}" if bad else "")
    return rep


# ---------------------------------------------------------------------------
# connection change E
# ---------------------------------------------------------------------------


@dataclass
class ConnectionChange:
    """``S = Gamma - Gamma'`` in ``W2 S1``, ``T = delta S`` and the generator ``h``."""

    setup: FedosovSetup
    setup_prime: FedosovSetup
    S: WSLElement
    T: WSLElement
    h: WSLElement


def difference_tensor(conn: EConnection, conn_prime: EConnection, trunc: Truncation, n: int, N: int):
    """``(S, T)`` with ``S = (1/2) S^g_{ab} y^a y^b p_g`` and ``T = delta S = S^g_{ab} th^a y^b p_g``."""
    diff = conn - conn_prime
    out: dict = {}
    z = (0,) * N
    for a in range(N):
        for b in range(N):
            for g in range(N):
                v = diff.gamma[a][b][g]
                if not v:
                    continue
                y = [0] * N
                y[a] += 1
                y[b] += 1
                p = tuple(1 if i == g else 0 for i in range(N))
                for e, c in v.terms.items():
                    _acc(out, (tuple(y), p, 0, 0, e), c * Q(1, 2))
    S = WSLElement(n, N, trunc, out)
    return S, delta(S)


def _phi_bernoulli(h: WSLElement, x: WSLElement, kappa, B: List[Scalar]) -> WSLElement:
    """``(X / (e^X - 1)) x`` with ``X = (1/nu) ad_kappa h``."""
    out = x
    term = x
    for n in range(1, len(B)):
        term = nu_ad(h, term, kappa)
        if not term:
            break
        if B[n]:
            out = out + term.scale(B[n] / factorial(n))
    else:
        if term and nu_ad(h, term, kappa):
            raise InternalConsistencyError("Bernoulli series did not terminate")
    return out


def make_connection_change(setup: FedosovSetup, conn_prime: EConnection) -> ConnectionChange:
    """Solve for ``h`` by the fixed-point recursion and check the lemma on ``T``."""
    if not conn_prime.is_torsion_free(setup.chart):
        raise InputError("target connection has torsion")
    setup_prime = FedosovSetup(setup.chart, conn_prime, setup.B, setup.kappa, setup.trunc)
    ws, wp = working_setup(setup), working_setup(setup_prime)
    t = ws.trunc
    ch = setup.chart
    S, T = difference_tensor(setup.conn, conn_prime, t, ch.n, ch.N)
    sol, solp = ws.solution(), wp.solution()
    kappa = setup.kappa
    if delta(T):
        raise InternalConsistencyError("delta T != 0")
    lemma = cov_D(T, setup.conn, ch) - (sol.R - solp.R + nu_product(T, T, kappa))
    if lemma.deg_at_most(t.T - 1):
        raise InternalConsistencyError(f"D T != R - R' + (1/nu) T o T; residual {lemma.dump()}")
    src = T + solp.r - sol.r
    Bn = bernoulli(t.T + t.L + 2)
    h = WSLElement.zero(ch.n, ch.N, t)
    for _ in range(t.T + 3):
        rhs = cov_D(h, setup.conn, ch) - nu_ad(sol.r, h, kappa) - _phi_bernoulli(h, src, kappa, Bn)
        new = delta_inv(rhs)
        if new == h:
            break
        h = new
    else:
        raise InternalConsistencyError("connection-change recursion did not converge")
    if h.max_degree("deg_s*") > 1:
        raise InternalConsistencyError("h has Sym(E)-degree above 1")
    return ConnectionChange(setup, setup_prime, S, T, h)


def connection_equation_residual(cc: ConnectionChange) -> WSLElement:
    """``T + r' - r - ((e^X - 1)/X) D h`` through ``Deg <= T - 1``."""
    ws, wp = working_setup(cc.setup), working_setup(cc.setup_prime)
    sol, solp = ws.solution(), wp.solution()
    kappa = cc.setup.kappa
    Dh = fedosov_derivation(cc.h, sol)
    acc = Dh
    term = Dh
    for m in range(2, 4 * ws.trunc.T + 8):
        term = nu_ad(cc.h, term, kappa).scale(Q(1, m))
        if not term:
            break
        acc = acc + term
    return (cc.T + solp.r - sol.r - acc).deg_at_most(ws.trunc.T - 1)


def connection_equivalence(f: PolySection, cc: ConnectionChange) -> PolySection:
    """``E f = sigma(A_h tau(f))`` from ``*_Gamma`` to ``*_Gamma'``."""
    return transport(f, cc.h, working_setup(cc.setup).solution(), L=cc.setup.trunc.L)


# ---------------------------------------------------------------------------
# ordering change N
# ---------------------------------------------------------------------------


@dataclass
class OrderingChange:
    """``gamma_tr`` with ``d_E gamma_tr = -Delta_fib R`` and the generator ``h``."""

    setup: FedosovSetup
    kappa_prime: Scalar
    gamma_tr: EFormSeries
    h: WSLElement


def trace_one_form(setup: FedosovSetup, sign: int = 1) -> EFormSeries:
    """``sign * Gamma^b_{ab} e^a``."""
    N = setup.N
    entries = []
    for a in range(N):
        v = sum((setup.conn.gamma[a][b][b] for b in range(N)), start=setup.conn.gamma[a][0][0] * 0)
        if v:
            entries.append((0, (a,), v * sign))
    return EFormSeries.from_entries(setup.n, N, entries)


def gamma_tr_residual(gamma: EFormSeries, setup: FedosovSetup) -> WSLElement:
    """``d_E gamma + Delta_fib R`` as a WSL element (zero when ``gamma`` is admissible)."""
    t = setup.trunc
    sol = setup.solution()
    return WSLElement.from_forms(d_E(gamma, setup.chart), t) + laplace_fib(sol.R.with_trunc(t))


def default_gamma_tr(setup: FedosovSetup) -> EFormSeries:
    """The contracted Christoffel one-form, with the sign fixed by the defining equation."""
    plus = trace_one_form(setup, 1)
    res_plus = gamma_tr_residual(plus, setup)
    if not res_plus:
        return plus
    minus = trace_one_form(setup, -1)
    res_minus = gamma_tr_residual(minus, setup)
    if not res_minus:
        return minus
    raise InternalConsistencyError(
        f"neither sign of the Christoffel trace solves d_E g = -Delta_fib R; "
        f"residuals {res_plus.dump()} and {res_minus.dump()}"
    )


def make_ordering_change(setup: FedosovSetup, kappa_prime, gamma_tr: Optional[EFormSeries] = None) -> OrderingChange:
    kappa_prime = scalar(kappa_prime)
    if gamma_tr is None:
        gamma_tr = default_gamma_tr(setup)
    else:
        _check_one_form(gamma_tr, setup.N)
        res = gamma_tr_residual(gamma_tr, setup)
        if res:
            raise InputError(f"d_E gamma_tr != -Delta_fib R; witness {res.dump()}")
    ws = working_setup(setup.with_kappa(kappa_prime))
    sol = ws.solution()
    dk = kappa_prime - setup.kappa
    src = (WSLElement.from_forms(gamma_tr, ws.trunc) + laplace_fib(sol.r)).nu_shift(1).scale(dk)
    h = -homotopy_inverse(src, sol)
    return OrderingChange(setup, kappa_prime, gamma_tr, h)


def ordering_equation_residual(oc: OrderingChange) -> WSLElement:
    """``D_{kappa'} h + nu (kappa' - kappa)(gamma_tr + Delta_fib r)`` through ``Deg <= T - 1``."""
    ws = working_setup(oc.setup.with_kappa(oc.kappa_prime))
    sol = ws.solution()
    dk = oc.kappa_prime - oc.setup.kappa
    src = (WSLElement.from_forms(oc.gamma_tr, ws.trunc) + laplace_fib(sol.r)).nu_shift(1).scale(dk)
    return (fedosov_derivation(oc.h, sol) + src).deg_at_most(ws.trunc.T - 1)


def kappa_equivalence(f: PolySection, oc: OrderingChange) -> PolySection:
    """``N f = sigma(A'_h M_{kappa'-kappa} tau_kappa(f))`` from ``*_kappa`` to ``*_kappa'``."""
    ws = working_setup(oc.setup)
    return transport(
        f, oc.h, ws.solution(), kappa=oc.kappa_prime, dk=oc.kappa_prime - oc.setup.kappa, L=oc.setup.trunc.L
    )


def _pair_report(rep: CheckReport, name: str, I: Operator, pairs, src: FedosovSolution, dst: FedosovSolution) -> None:
    bad = [(f, g) for f, g in pairs if intertwining_defect(I, f, g, src, dst)]
    rep.add(name, not bad, f"witness f={bad[0][0]}, g={bad[0][1]}" if bad else "")


def connection_report(cc: ConnectionChange, pairs) -> CheckReport:
    rep = CheckReport()
    rep.add("delta T = 0", not delta(cc.T))
    rep.add("h has Sym(E)-degree <= 1", cc.h.max_degree("deg_s*") <= 1)
    rep.add("sigma(h) = 0", not sigma(cc.h))
    rep.add("connection-change equation for h", not connection_equation_residual(cc))
    _pair_report(
        rep,
        "E intertwines *_Gamma and *_Gamma'",
        lambda s: connection_equivalence(s, cc),
        pairs,
        cc.setup.solution(),
        cc.setup_prime.solution(),
    )
    return rep


def ordering_report(oc: OrderingChange, pairs) -> CheckReport:
    rep = CheckReport()
    rep.add("d_E gamma_tr = -Delta_fib R", not gamma_tr_residual(oc.gamma_tr, oc.setup), f"gamma_tr = {oc.gamma_tr}")
    rep.add("sigma(h) = 0", not sigma(oc.h))
    rep.add("D_kappa' h = -nu (kappa' - kappa)(gamma_tr + Delta_fib r)", not ordering_equation_residual(oc))
    _pair_report(
        rep,
        f"N intertwines *_{oc.setup.kappa} and *_{oc.kappa_prime}",
        lambda s: kappa_equivalence(s, oc),
        pairs,
        oc.setup.solution(),
        oc.setup.with_kappa(oc.kappa_prime).solution(),
    )
    return rep
