"""Fedosov construction on ``W (x) S (x) Lambda`` and the star products on ``S(E)[nu]``.

The element ``r`` solves

    delta r = D r - (1/nu) r o_kappa r - R + B,    delta^{-1} r = 0,

and is computed one total degree at a time through the kappa-free form

    r = delta^{-1}(D r + sum_a (d r/dp_a)(d r/dy^a) - R + B).

The Fedosov derivation is ``-delta + D - (1/nu) ad_kappa(r)`` and the
Fedosov-Taylor series of a section ``s`` is the unique flat lift with
``sigma(tau(s)) = s``.  The star product is ``s * t = sigma(tau(s) o tau(t))``.

All pieces are bookkept by total degree ``Deg``: every operator used here
maps ``Deg``-homogeneous input to ``Deg``-homogeneous output, so the
recursions run piece by piece.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Dict, List, Optional, Tuple

from .algebroid import AlgebroidChart, EConnection, curvature, d_E, gauged_poisson_bracket
from .ring import ONE, ZERO, InputError, Q, Scalar, Truncation, scalar
from .sections import EFormSeries, PolySection, _acc, popcount
from .wsl import (
    WSLElement,
    cov_D,
    delta,
    delta_inv,
    diff_p,
    diff_y,
    fib_product,
    mu_product,
    nu_ad,
    nu_product,
    sigma,
    sym_cov,
)


class InternalConsistencyError(RuntimeError):
    """A verified identity failed; indicates a defect, never bad input."""


class TruncationError(InputError):
    """The requested order is not reachable at the chosen truncation."""


@dataclass
class FedosovSetup:
    """Validated chart, torsion-free connection, closed ``B``, ordering ``kappa`` and truncation."""

    chart: AlgebroidChart
    conn: EConnection
    B: EFormSeries
    kappa: Scalar
    trunc: Truncation
    _solution: Optional["FedosovSolution"] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.chart.require_valid()
        self.kappa = scalar(self.kappa)
        if not self.conn.is_torsion_free(self.chart):
            raise InputError("the connection has torsion; use symmetrize_connection first")
        if any(popcount(m) != 2 for (_, m, _) in self.B.terms):
            raise InputError("B must be a series of E-two-forms")
        w = d_E(self.B, self.chart)
        if w:
            raise InputError(f"B is not d_E-closed; witness d_E B = {w}")
        self.B = self.B.truncated(self.trunc)

    @property
    def n(self):
        return self.chart.n

    @property
    def N(self):
        return self.chart.N

    def with_kappa(self, kappa) -> "FedosovSetup":
        s = FedosovSetup(self.chart, self.conn, self.B, kappa, self.trunc)
        if self._solution is not None:
            s._solution = self._solution._rebind(s)
        return s

    def with_trunc(self, trunc: Truncation) -> "FedosovSetup":
        return FedosovSetup(self.chart, self.conn, self.B, self.kappa, trunc)

    def with_B(self, B: EFormSeries) -> "FedosovSetup":
        return FedosovSetup(self.chart, self.conn, B, self.kappa, self.trunc)

    def solution(self) -> "FedosovSolution":
        if self._solution is None:
            self._solution = solve_r(self)
        return self._solution


def _by_degree(x: WSLElement) -> Dict[int, WSLElement]:
    parts: Dict[int, dict] = {}
    for key, c in x.terms.items():
        parts.setdefault(sum(key[0]) + key[3], {})[key] = c
    return {d: x.like(t) for d, t in parts.items()}


def _quad(a: WSLElement, b: WSLElement) -> WSLElement:
    out = a.like({})
    for al in range(a.N):
        pa = diff_p(a, al)
        if pa:
            yb = diff_y(b, al)
            if yb:
                out = out + mu_product(pa, yb)
    return out


@dataclass
class StarResult:
    """A star product together with its ``C_r`` ledger (``nu^r`` coefficients)."""

    product: PolySection
    L: int

    @property
    def C(self) -> Dict[int, PolySection]:
        return {r: self.product.nu_part(r) for r in range(self.L + 1) if self.product.nu_part(r)}

    def C_r(self, r: int) -> PolySection:
        return self.product.nu_part(r)

    def __str__(self):
        return str(self.product)


class FedosovSolution:
    """The element ``r`` with its degree ledger and cached Taylor series / products."""

    def __init__(self, setup: FedosovSetup, r: WSLElement, ledger: Dict[int, WSLElement], R: WSLElement):
        self.setup = setup
        self.r = r
        self.ledger = ledger
        self.R = R
        self._tau: Dict[tuple, Dict[int, WSLElement]] = {}
        self._star: Dict[tuple, PolySection] = {}
        self.r_parts = _by_degree(r)

    def _rebind(self, setup: FedosovSetup) -> "FedosovSolution":
        """Share ``r`` with a setup differing only in kappa (``r`` is kappa-independent)."""
        return FedosovSolution(setup, self.r, self.ledger, self.R)

    @property
    def r0(self) -> WSLElement:
        """Part of ``r`` of Sym(E)-degree 0 (linear in ``B``)."""
        return self.r.filter(lambda k: sum(k[1]) == 0)

    @property
    def r1(self) -> WSLElement:
        """Part of ``r`` of Sym(E)-degree 1 (independent of ``B``)."""
        return self.r.filter(lambda k: sum(k[1]) == 1)

    # -- Taylor series ----------------------------------------------------

    def _tau_parts(self, b: Tuple[int, ...], q: Tuple[int, ...], cap: Optional[int]) -> Dict[int, WSLElement]:
        key = (b, q, cap)
        got = self._tau.get(key)
        if got is not None:
            return got
        st = self.setup
        t, kappa = st.trunc, st.kappa
        z = (0,) * st.N
        parts: Dict[int, WSLElement] = {0: WSLElement._raw(st.n, st.N, t, {(z, b, 0, 0, q): ONE})}
        for d in range(1, t.T + 1):
            rhs = cov_D(parts[d - 1], st.conn, st.chart) if d - 1 in parts else None
            for j, rj in self.r_parts.items():
                m = d - j
                if m in parts and m >= 0:
                    term = nu_ad(rj, parts[m], kappa).deg_part(d - 1)
                    rhs = -term if rhs is None else rhs - term
            if rhs is None:
                continue
            piece = delta_inv(rhs)
            if cap is not None:
                piece = piece.filter(lambda k: sum(k[0]) <= cap)
            if piece:
                parts[d] = piece
        self._tau[key] = parts
        return parts

    def tau(self, s: PolySection, cap: Optional[int] = None) -> WSLElement:
        """Fedosov-Taylor series; ``cap`` keeps only W-degree ``<= cap`` (exact there)."""
        t = self.setup.trunc
        out = WSLElement.zero(s.n, s.N, t)
        for (k, b, q), c in s.terms.items():
            acc: dict = {}
            for piece in self._tau_parts(b, q, cap).values():
                for key, v in piece.terms.items():
                    y, p, cc, kk, qq = key
                    if sum(y) + kk + k <= t.T and kk + k <= t.L:
                        _acc(acc, (y, p, cc, kk + k, qq), v * c)
            out = out + WSLElement._raw(s.n, s.N, t, acc)
        return out

    # -- star product -----------------------------------------------------

    def _star_mono(self, bf, qf, bg, qg) -> PolySection:
        key = (bf, qf, bg, qg)
        got = self._star.get(key)
        if got is not None:
            return got
        st = self.setup
        n, N, L = st.n, st.N, st.trunc.L
        kappa = st.kappa
        a = self._grouped(self._tau_parts(bf, qf, sum(bg)))
        b = self._grouped(self._tau_parts(bg, qg, sum(bf)))
        wl, wr = kappa, kappa - 1
        out = PolySection.zero(n, N)
        for ya, A in a.items():
            na = sum(ya)
            for yb, Bs in b.items():
                nb = sum(yb)
                if na + nb > L:
                    continue
                if wl == 0 and na or wr == 0 and nb:
                    continue
                left = A.diff_p_multi(yb)
                if not left:
                    continue
                right = Bs.diff_p_multi(ya)
                if not right:
                    continue
                prod = (left * right).truncated_nu(L - na - nb)
                if prod:
                    out = out + prod.nu_shift(na + nb).scale(wl**na * wr**nb)
        out = out.truncated_nu(L)
        self._star[key] = out
        return out

    @staticmethod
    def _grouped(parts: Dict[int, WSLElement]) -> Dict[tuple, PolySection]:
        groups: Dict[tuple, dict] = {}
        n = N = None
        for piece in parts.values():
            n, N = piece.n, piece.N
            for (y, p, c, k, q), v in piece.terms.items():
                if c:
                    raise InternalConsistencyError("Taylor series left Lambda-degree 0")
                _acc(groups.setdefault(y, {}), (k, p, q), v)
        return {y: PolySection._raw(n, N, t) for y, t in groups.items() if t}

    def star_section(self, f: PolySection, g: PolySection) -> PolySection:
        L = self.setup.trunc.L
        out: dict = {}
        for (kf, bf, qf), cf in f.terms.items():
            for (kg, bg, qg), cg in g.terms.items():
                if kf + kg > L:
                    continue
                mono = self._star_mono(bf, qf, bg, qg)
                c = cf * cg
                for (k, b, q), v in mono.terms.items():
                    if k + kf + kg <= L:
                        _acc(out, (k + kf + kg, b, q), v * c)
        return PolySection._raw(f.n, f.N, out)


def solve_r(setup: FedosovSetup, verify: bool = True) -> FedosovSolution:
    """Compute ``r`` degree by degree through ``Deg <= T`` and verify both defining equations."""
    t = setup.trunc
    ch, conn = setup.chart, setup.conn
    R = curvature(conn, ch, t)
    Bw = WSLElement.from_forms(setup.B, t)
    Bp = _by_degree(Bw)
    Rp = _by_degree(R)
    parts: Dict[int, WSLElement] = {}
    for d in range(1, t.T + 1):
        rhs = WSLElement.zero(ch.n, ch.N, t)
        if d - 1 in parts:
            rhs = rhs + cov_D(parts[d - 1], conn, ch)
        for a in range(1, d):
            if a in parts and d - a in parts:
                rhs = rhs + _quad(parts[a], parts[d - a])
        if d - 1 in Rp:
            rhs = rhs - Rp[d - 1]
        if d - 1 in Bp:
            rhs = rhs + Bp[d - 1]
        piece = delta_inv(rhs)
        if piece:
            parts[d] = piece
    r = WSLElement.zero(ch.n, ch.N, t)
    for d in sorted(parts):
        r = r + parts[d]
    sol = FedosovSolution(setup, r, parts, R)
    if verify:
        problems = verify_solution(sol)
        if problems:
            raise InternalConsistencyError("; ".join(problems))
    return sol


def fedosov_equation_residual(sol: FedosovSolution, kappa=None) -> WSLElement:
    """``delta r - (D r - (1/nu) r o r - R + B)`` restricted to ``Deg <= T - 1``."""
    st = sol.setup
    kappa = st.kappa if kappa is None else scalar(kappa)
    r = sol.r
    Bw = WSLElement.from_forms(st.B, st.trunc)
    rhs = cov_D(r, st.conn, st.chart) - nu_product(r, r, kappa) - sol.R + Bw
    return (delta(r) - rhs).deg_at_most(st.trunc.T - 1)


def kappa_full_recursion_residual(sol: FedosovSolution, kappa) -> WSLElement:
    """``r - delta^{-1}(D r - (1/nu) r o_kappa r - R + B)`` (the kappa-dependent recursion)."""
    st = sol.setup
    r = sol.r
    Bw = WSLElement.from_forms(st.B, st.trunc)
    rhs = cov_D(r, st.conn, st.chart) - nu_product(r, r, kappa) - sol.R + Bw
    return (r - delta_inv(rhs.deg_at_most(st.trunc.T - 1))).deg_at_most(st.trunc.T)


def verify_solution(sol: FedosovSolution) -> List[str]:
    problems = []
    if delta_inv(sol.r):
        problems.append("delta^{-1} r != 0")
    if fedosov_equation_residual(sol):
        problems.append("Fedosov equation residual nonzero")
    if sol.r.max_degree("deg_s*") > 1:
        problems.append("r has Sym(E)-degree above 1")
    for kappa in (Q(0), Q(1, 2), Q(1)):
        if kappa_full_recursion_residual(sol, kappa):
            problems.append(f"kappa-full recursion fails at kappa={kappa}")
    return problems


# ---------------------------------------------------------------------------
# Fedosov derivation and its homotopy
# ---------------------------------------------------------------------------


def fedosov_derivation(x: WSLElement, sol: FedosovSolution) -> WSLElement:
    """``-delta x + D x - (1/nu)[r, x]_kappa``; exact through ``Deg <= T - 1``."""
    st = sol.setup
    r = sol.r.with_trunc(x.trunc)
    return -delta(x) + cov_D(x, st.conn, st.chart) - nu_ad(r, x, st.kappa)


def _X(x: WSLElement, sol: FedosovSolution) -> WSLElement:
    st = sol.setup
    return cov_D(x, st.conn, st.chart) - nu_ad(sol.r.with_trunc(x.trunc), x, st.kappa)


def _K(x: WSLElement, sol: FedosovSolution) -> WSLElement:
    """``[delta^{-1}, D - (1/nu) ad r]``, a super-commutator of two odd maps."""
    return delta_inv(_X(x, sol)) + _X(delta_inv(x), sol)


def _geometric(x: WSLElement, sol: FedosovSolution) -> WSLElement:
    """``(id - K)^{-1} x``; terminates because ``K`` raises ``Deg``."""
    out = x
    term = x
    for _ in range(x.trunc.T + 2):
        term = _K(term, sol)
        if not term:
            return out
        out = out + term
    if term:
        raise InternalConsistencyError("homotopy series failed to terminate")
    return out


def homotopy_inverse(x: WSLElement, sol: FedosovSolution) -> WSLElement:
    """``D^{-1} x = -delta^{-1}((id - K)^{-1} x)``."""
    return -delta_inv(_geometric(x, sol))


def homotopy_projection(x: WSLElement, sol: FedosovSolution) -> WSLElement:
    """Third term of the homotopy formula: ``(id - K)^{-1} sigma(x)``."""
    return _geometric(WSLElement.from_section(sigma(x), x.trunc), sol)


def homotopy_residual(x: WSLElement, sol: FedosovSolution) -> WSLElement:
    """``D D^{-1} x + D^{-1} D x + (id - K)^{-1} sigma x - x`` through ``Deg <= T - 1``."""
    lhs = fedosov_derivation(homotopy_inverse(x, sol), sol)
    lhs = lhs + homotopy_inverse(fedosov_derivation(x, sol).deg_at_most(x.trunc.T - 1), sol)
    lhs = lhs + homotopy_projection(x, sol)
    return (lhs - x).deg_at_most(x.trunc.T - 1)


# ---------------------------------------------------------------------------
# Taylor series and star product front-ends
# ---------------------------------------------------------------------------


def taylor(s: PolySection, sol: FedosovSolution) -> WSLElement:
    return sol.tau(s)


def exp_sym_cov(u_elem: WSLElement, sol_or_setup, factor=ONE, nu_power: int = 0, max_terms: Optional[int] = None):
    """``exp(factor * nu^nu_power * D_s) u`` computed term by term until it vanishes."""
    st = sol_or_setup.setup if isinstance(sol_or_setup, FedosovSolution) else sol_or_setup
    factor = scalar(factor)
    out = u_elem
    term = u_elem
    j = 1
    limit = max_terms if max_terms is not None else u_elem.trunc.T + 1
    while j <= limit:
        term = sym_cov(term, st.conn, st.chart)
        if nu_power:
            term = term.nu_shift(nu_power)
        term = term.scale(factor / j)
        if not term:
            break
        out = out + term
        j += 1
    return out


def apply_F(w: WSLElement, f: PolySection, L: int) -> PolySection:
    """``F(y^A u nu^k) f = nu^k u d_p^A f`` for ``w`` in ``W (x) C(M)[nu]``."""
    out = PolySection.zero(f.n, f.N)
    for (y, p, c, k, q), v in w.terms.items():
        if c or any(p):
            raise InputError("F acts on elements of W only")
        d = f.diff_p_multi(y)
        if d:
            mono = PolySection._raw(f.n, f.N, {(k, (0,) * f.N, q): v})
            out = out + (mono * d).truncated_nu(L)
    return out


def star(f: PolySection, g: PolySection, sol: FedosovSolution, stabilize: bool = False) -> StarResult:
    """``f * g = sigma(tau(f) o_kappa tau(g))`` with its ``C_r`` ledger.

    With ``stabilize`` the product is recomputed at ``T + 1`` and must agree
    bit for bit; otherwise a :class:`TruncationError` asks for a larger ``T``.
    """
    st = sol.setup
    if (f.n, f.N) != (st.n, st.N) or (g.n, g.N) != (st.n, st.N):
        raise InputError("section arity does not match the chart")
    prod = sol.star_section(f, g)
    if stabilize:
        wider = st.with_trunc(st.trunc.widened(0, 1)).solution()
        again = wider.star_section(f, g).truncated_nu(st.trunc.L)
        if again != prod:
            raise TruncationError(
                f"star product not stable at T={st.trunc.T}; raise T/L (difference {again - prod})"
            )
    return StarResult(prod, st.trunc.L)


def star_commutator(f: PolySection, g: PolySection, sol: FedosovSolution) -> PolySection:
    return sol.star_section(f, g) - sol.star_section(g, f)


def C_r(f: PolySection, g: PolySection, r: int, sol: FedosovSolution) -> PolySection:
    return sol.star_section(f, g).nu_part(r)


# ---------------------------------------------------------------------------
# structure checks
# ---------------------------------------------------------------------------


@dataclass
class CheckLine:
    name: str
    passed: bool
    detail: str = ""

    def __str__(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f" : {self.detail}" if self.detail else "")


@dataclass
class CheckReport:
    lines: List[CheckLine] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.lines.append(CheckLine(name, bool(passed), detail))

    @property
    def passed(self) -> bool:
        return all(l.passed for l in self.lines)

    def __str__(self):
        return "\n".join(str(l) for l in self.lines)


def associativity_defect(f, g, h, sol: FedosovSolution) -> PolySection:
    s = sol.star_section
    return s(s(f, g), h) - s(f, s(g, h))


def first_order_check(f: PolySection, g: PolySection, sol: FedosovSolution) -> Tuple[bool, bool]:
    """``(nu^0 part == fg, antisymmetrised nu^1 part == gauged bracket)``."""
    st = sol.setup
    fg = sol.star_section(f, g)
    gf = sol.star_section(g, f)
    zeroth = fg.nu_part(0) == (f * g).nu_part(0) if f.max_nu() <= 0 and g.max_nu() <= 0 else True
    anti = (fg - gf).nu_part(1)
    br = gauged_poisson_bracket(f, g, st.chart, st.conn, st.B.nu_part(0))
    return zeroth, anti == br


def termination_check(f: PolySection, g: PolySection, sol: FedosovSolution) -> bool:
    """For fibre degrees ``k, l``: ``C_r`` vanishes for ``r > k + l`` and has fibre degree ``<= k + l - r``."""
    k, l = f.fibre_degree(), g.fibre_degree()
    prod = sol.star_section(f, g)
    for r in range(sol.setup.trunc.L + 1):
        c = prod.nu_part(r)
        if c and (r > k + l or c.fibre_degree() > k + l - r):
            return False
    return True


def left_right_closed_forms(u, f: PolySection, sol: FedosovSolution) -> Tuple[PolySection, PolySection]:
    """``(F(exp(kappa nu D_s) u) f, F(exp(-(1-kappa) nu D_s) u) f)``."""
    st = sol.setup
    L = st.trunc.L
    wide = Truncation(L, 2 * L + 1)
    uw = WSLElement.from_base(u, st.N, wide)
    left = apply_F(exp_sym_cov(uw, st, st.kappa, 1), f, L)
    right = apply_F(exp_sym_cov(uw, st, st.kappa - 1, 1), f, L)
    return left, right


def ordering_and_parity_checks(sol: FedosovSolution, rng, trials: int = 5) -> CheckReport:
    """Standard/anti-standard identities, homogeneity of ``H`` and Weyl nu-parity."""
    from .samples import random_base, random_section

    st = sol.setup
    n, N = st.n, st.N
    rep = CheckReport()
    s0 = st.with_kappa(0)
    s0._solution = sol._rebind(s0)
    s1 = st.with_kappa(1)
    s1._solution = sol._rebind(s1)
    sw = st.with_kappa(Q(1, 2))
    sw._solution = sol._rebind(sw)
    ok_std = ok_astd = True
    for _ in range(trials):
        u = PolySection.from_base(random_base(rng, n), N)
        f = random_section(rng, n, N, max_fibre=2)
        ok_std &= s0.solution().star_section(u, f) == u * f
        ok_astd &= s1.solution().star_section(f, u) == f * u
    rep.add("standard ordering: u *0 f = u f", ok_std)
    rep.add("anti-standard ordering: f *1 u = f u", ok_astd)
    hom, witness = homogeneity_check(sol, rng, trials)
    expected = all(k == 1 for (k, _, _) in st.B.terms)
    rep.add(
        "homogeneity: H derivation of *",
        hom == expected,
        ("derivation holds" if hom else f"derivation fails (witness {witness})")
        + (" as expected" if hom == expected else " unexpectedly"),
    )
    if all(k % 2 == 0 for (k, _, _) in st.B.terms):
        rep.add("Weyl nu-parity anti-automorphism", parity_check(sw.solution(), rng, trials))
    return rep


def homogeneity_check(sol: FedosovSolution, rng, trials: int = 5):
    """Return ``(passed, witness)`` for ``H(f*g) = Hf*g + f*Hg`` on random pairs plus generators."""
    from .samples import random_section

    st = sol.setup
    n, N = st.n, st.N
    pairs = [(PolySection.p(n, N, a), PolySection.p(n, N, b)) for a in range(N) for b in range(N)]
    pairs += [(random_section(rng, n, N, max_fibre=2), random_section(rng, n, N, max_fibre=2)) for _ in range(trials)]
    S = sol.star_section
    for f, g in pairs:
        lhs = S(f, g).homogeneity()
        rhs = S(f.homogeneity(), g) + S(f, g.homogeneity())
        if lhs != rhs:
            return False, f"f={f}, g={g}, defect {lhs - rhs}"
    return True, None


def parity_check(sol: FedosovSolution, rng, trials: int = 5) -> bool:
    from .samples import random_section

    st = sol.setup
    n, N = st.n, st.N
    S = sol.star_section
    for _ in range(trials):
        f = random_section(rng, n, N, max_fibre=2, max_nu=1)
        g = random_section(rng, n, N, max_fibre=2, max_nu=1)
        if S(f, g).nu_flip() != S(g.nu_flip(), f.nu_flip()):
            return False
    return True


def parallel_map(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; order is preserved."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def random_triples(sol: FedosovSolution, seed: int, trials: int, max_fibre: int = 3, max_base: int = 1):
    import random

    from .samples import random_section

    rng = random.Random(seed)
    n, N = sol.setup.n, sol.setup.N
    return [
        tuple(random_section(rng, n, N, max_fibre=max_fibre, max_base=max_base) for _ in range(3))
        for _ in range(trials)
    ]


def associativity_report(
    sol: FedosovSolution, seed: int = 0, trials: int = 50, max_fibre: int = 3, max_base: int = 1, threads: int = 1
) -> CheckReport:
    """Associativity, first-order structure and termination on seeded random triples."""
    triples = random_triples(sol, seed, trials, max_fibre, max_base)

    def one(t):
        f, g, h = t
        d = associativity_defect(f, g, h, sol)
        z, b = first_order_check(f, g, sol)
        return d, z, b, termination_check(f, g, sol)

    results = parallel_map(one, triples, threads)
    rep = CheckReport()
    bad = [(t, r[0]) for t, r in zip(triples, results) if r[0]]
    rep.add(
        f"associativity on {trials} triples",
        not bad,
        f"witness f={bad[0][0][0]}, g={bad[0][0][1]}, h={bad[0][0][2]}, defect {bad[0][1]}" if bad else "",
    )
    rep.add("nu^0 part is the pointwise product", all(r[1] for r in results))
    rep.add("antisymmetrised nu^1 part is the gauged Poisson bracket", all(r[2] for r in results))
    rep.add("C_r vanishes beyond r = k + l", all(r[3] for r in results))
    return rep
