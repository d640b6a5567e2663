"""Universal enveloping algebra oracle for Lie algebras (charts over a point).

Elements are finite sums of generator words with coefficients polynomial
in ``nu``; the relation ``e_a e_b - e_b e_a = -nu c^g_{ab} e_g`` is applied
as a rewriting rule that sorts words into non-decreasing (PBW) order.
Confluence is tested, not assumed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

from .algebroid import AlgebroidChart
from .fedosov import CheckReport, FedosovSolution
from .ring import ONE, InputError, Q, Scalar, format_terms
from .sections import PolySection, _acc

Word = Tuple[int, ...]
# key (word, nu power) -> coefficient
UEAKey = Tuple[Word, int]


@dataclass
class UEAWord:
    """Formal sum ``sum c nu^k e_{a1} ... e_{ak}`` (0-based generator indices)."""

    N: int
    terms: Dict[UEAKey, Scalar] = field(default_factory=dict)

    @classmethod
    def word(cls, N: int, w: Sequence[int], c=ONE, k: int = 0) -> "UEAWord":
        if any(not 0 <= a < N for a in w):
            raise InputError(f"generator index out of range in {tuple(w)}")
        return cls(N, {(tuple(w), k): Q(c)})

    def __add__(self, o: "UEAWord") -> "UEAWord":
        out = dict(self.terms)
        for key, c in o.terms.items():
            _acc(out, key, c)
        return UEAWord(self.N, out)

    def __sub__(self, o: "UEAWord") -> "UEAWord":
        return self + o.scale(-1)

    def scale(self, c) -> "UEAWord":
        c = Q(c)
        return UEAWord(self.N, {key: v * c for key, v in self.terms.items()} if c else {})

    def concat(self, o: "UEAWord") -> "UEAWord":
        """Free (unreduced) product of words."""
        out: dict = {}
        for (w1, k1), c1 in self.terms.items():
            for (w2, k2), c2 in o.terms.items():
                _acc(out, (w1 + w2, k1 + k2), c1 * c2)
        return UEAWord(self.N, out)

    def truncated_nu(self, L: int) -> "UEAWord":
        return UEAWord(self.N, {key: c for key, c in self.terms.items() if key[1] <= L})

    def is_normal(self) -> bool:
        return all(list(w) == sorted(w) for (w, _) in self.terms)

    def __eq__(self, o):
        return isinstance(o, UEAWord) and self.N == o.N and self.terms == o.terms

    def __bool__(self):
        return bool(self.terms)

    def __str__(self):
        keys = sorted(self.terms, key=lambda t: (t[1], -len(t[0]), t[0]))
        parts = []
        for w, k in keys:
            nu = "" if k == 0 else ("nu" if k == 1 else f"nu^{k}")
            word = "*".join(f"e{a + 1}" for a in w)
            parts.append((self.terms[(w, k)], " ".join(x for x in (nu, word) if x)))
        return format_terms(parts)


PBWNormalForm = UEAWord


def _constants(chart: AlgebroidChart):
    if chart.n != 0:
        raise InputError("the UEA oracle supports Lie algebras only (n = 0)")
    N = chart.N
    return [[[chart.c[a][b][g].constant_term() for g in range(N)] for b in range(N)] for a in range(N)]


def normal_order(
    w: UEAWord, chart: AlgebroidChart, rng: Optional[random.Random] = None, L: Optional[int] = None
) -> PBWNormalForm:
    """Rewrite ``e_b e_a -> e_a e_b - nu c^g_{ba} e_g`` (``b > a``) until all words are sorted.

    Without ``rng`` the leftmost descent is rewritten; with ``rng`` a
    random descent is chosen each time (used by the confluence test).
    """
    c = _constants(chart)
    N = chart.N
    done: dict = {}
    todo = dict(w.terms)
    while todo:
        (word, k), coef = todo.popitem()
        if L is not None and k > L:
            continue
        descents = [i for i in range(len(word) - 1) if word[i] > word[i + 1]]
        if not descents:
            _acc(done, (word, k), coef)
            continue
        i = rng.choice(descents) if rng is not None else descents[0]
        b, a = word[i], word[i + 1]
        _acc(todo, (word[:i] + (a, b) + word[i + 2:], k), coef)
        for g in range(N):
            cg = c[b][a][g]
            if cg:
                _acc(todo, (word[:i] + (g,) + word[i + 2:], k + 1), -coef * cg)
    return UEAWord(N, done)


def pbw_product(x: PBWNormalForm, y: PBWNormalForm, chart: AlgebroidChart, L: Optional[int] = None) -> PBWNormalForm:
    return normal_order(x.concat(y), chart, L=L)


def confluence_test(chart: AlgebroidChart, rng: random.Random, words: int = 100, max_len: int = 5) -> bool:
    """Diamond test: two random rewriting strategies give the same normal form."""
    N = chart.N
    for _ in range(words):
        w = UEAWord.word(N, [rng.randrange(N) for _ in range(rng.randint(0, max_len))])
        a = normal_order(w, chart, random.Random(rng.random()))
        b = normal_order(w, chart, random.Random(rng.random()))
        if a != b or a != normal_order(w, chart):
            return False
    return True


def pbw_words(N: int, max_len: int) -> List[Word]:
    out: List[Word] = []
    for k in range(max_len + 1):
        out.extend(combinations_with_replacement(range(N), k))
    return out


def associativity_test(chart: AlgebroidChart, rng: random.Random, trials: int = 30, max_len: int = 4) -> bool:
    N = chart.N
    words = [w for w in pbw_words(N, max_len) if w]

    def rnd():
        return UEAWord.word(N, rng.choice(words), rng.randint(-2, 2) or 1)

    for _ in range(trials):
        x, y, z = rnd(), rnd(), rnd()
        if pbw_product(pbw_product(x, y, chart), z, chart) != pbw_product(x, pbw_product(y, z, chart), chart):
            return False
    return True


# ---------------------------------------------------------------------------
# the map phi into (S(E)[nu], *Weyl)
# ---------------------------------------------------------------------------


def _require_weyl_point(sol: FedosovSolution) -> None:
    st = sol.setup
    if st.n != 0:
        raise InputError("phi_check needs a Lie algebra (point base)")
    if st.kappa != Q(1, 2):
        raise InputError("phi_check needs the Weyl ordering kappa = 1/2")
    if st.B:
        raise InputError("phi_check needs B = 0")


def phi_word(w: Word, sol: FedosovSolution) -> PolySection:
    """``p_{a1} * ... * p_{ak}`` (star products of generators, left to right)."""
    st = sol.setup
    out = PolySection.one(st.n, st.N)
    for a in w:
        out = sol.star_section(out, PolySection.p(st.n, st.N, a))
    return out


def phi(x: UEAWord, sol: FedosovSolution) -> PolySection:
    st = sol.setup
    out = PolySection.zero(st.n, st.N)
    for (w, k), c in x.terms.items():
        out = out + phi_word(w, sol).nu_shift(k).scale(c)
    return out.truncated_nu(st.trunc.L)


def exact_rank(rows: List[Dict[object, Scalar]]) -> Tuple[int, Optional[List[Scalar]]]:
    """Rank of a sparse rational matrix (rows are vectors) and a kernel vector of the row space map.

    Returns ``(rank, kernel)`` where ``kernel`` is a nonzero combination of
    rows that vanishes, or ``None`` when the rows are independent.
    """
    pivots: Dict[object, Tuple[Dict[object, Scalar], Dict[int, Scalar]]] = {}
    rank = 0
    for i, row in enumerate(rows):
        v = {k: c for k, c in row.items() if c}
        comb: Dict[int, Scalar] = {i: ONE}
        while v:
            col = min(v, key=repr)
            if col not in pivots:
                pivots[col] = (v, comb)
                rank += 1
                break
            pv, pc = pivots[col]
            f = v[col] / pv[col]
            for k, c in pv.items():
                _acc(v, k, -f * c)
            for k, c in pc.items():
                _acc(comb, k, -f * c)
        else:
            return rank, [comb.get(j, Q(0)) for j in range(len(rows))]
    return rank, None


@dataclass
class PhiReport:
    relations: List[Tuple[int, int, bool, str]]
    ranks: List[Tuple[int, int, int]]  # (nu order j, columns, rank)
    kernel: Optional[str]
    specialized_rank: Tuple[int, int]

    @property
    def passed(self) -> bool:
        return (
            all(ok for (_, _, ok, _) in self.relations)
            and all(c == r for (_, c, r) in self.ranks)
            and self.kernel is None
            and self.specialized_rank[0] == self.specialized_rank[1]
        )

    def __str__(self):
        rep = CheckReport()
        for a, b, ok, detail in self.relations:
            rep.add(f"[p{a + 1}, p{b + 1}]_* = -nu c^g_{{{a + 1}{b + 1}}} p_g", ok, detail)
        for j, cols, r in self.ranks:
            rep.add(f"phi injective mod nu^{j + 1}: rank {r} of {cols}", r == cols)
        s, c = self.specialized_rank
        rep.add(f"phi injective at nu = 1: rank {s} of {c}", s == c)
        if self.kernel:
            rep.add("kernel vector", False, self.kernel)
        return str(rep)


def phi_check(sol: FedosovSolution, max_degree: int) -> PhiReport:
    """Defining relations of ``U(E)`` in ``*Weyl`` and exact rank of ``phi`` on PBW words."""
    _require_weyl_point(sol)
    st = sol.setup
    chart = st.chart
    N, L = st.N, st.trunc.L
    c = _constants(chart)
    rels = []
    for a in range(N):
        for b in range(a + 1, N):
            pa, pb = PolySection.p(0, N, a), PolySection.p(0, N, b)
            lhs = sol.star_section(pa, pb) - sol.star_section(pb, pa)
            rhs = PolySection.zero(0, N)
            for g in range(N):
                if c[a][b][g]:
                    rhs = rhs - PolySection.p(0, N, g).nu_shift(1).scale(c[a][b][g])
            rels.append((a, b, lhs == rhs, "" if lhs == rhs else f"got {lhs}, expected {rhs}"))
    words = pbw_words(N, max_degree)
    images = {w: phi_word(w, sol) for w in words}
    ranks = []
    kernel = None
    for j in range(L + 1):
        rows, labels = [], []
        for w in words:
            for i in range(j + 1):
                img = images[w].nu_shift(i).truncated_nu(j)
                rows.append(dict(img.terms))
                labels.append((w, i))
        r, ker = exact_rank(rows)
        ranks.append((j, len(rows), r))
        if ker is not None and kernel is None:
            kernel = format_terms(
                [(v, ("nu^%d " % i if i else "") + "*".join(f"e{a + 1}" for a in w) or "1") for v, (w, i) in zip(ker, labels) if v]
            )
    rows = []
    for w in words:
        spec: dict = {}
        for (k, b, q), v in images[w].terms.items():
            _acc(spec, (b, q), v)
        rows.append(spec)
    s, ker = exact_rank(rows)
    if ker is not None and kernel is None:
        kernel = "at nu = 1: " + format_terms([(v, "*".join(f"e{a + 1}" for a in w) or "1") for v, w in zip(ker, words) if v])
    return PhiReport(rels, ranks, kernel, (s, len(rows)))


# ---------------------------------------------------------------------------
# comparison with total symmetrization
# ---------------------------------------------------------------------------


def sym_monomial(b: Tuple[int, ...]) -> UEAWord:
    """Total symmetrization of ``p^b``: the average of all orderings of its letters."""
    letters = [a for a, e in enumerate(b) for _ in range(e)]
    out: dict = {}
    perms = list(permutations(letters))
    w = Q(1, len(perms))
    for p in perms:
        _acc(out, (p, 0), w)
    return UEAWord(len(b), out)


def sym(f: PolySection) -> UEAWord:
    if f.n != 0:
        raise InputError("sym needs a Lie algebra (point base)")
    out = UEAWord(f.N, {})
    for (k, b, _), c in f.terms.items():
        s = sym_monomial(b)
        out = out + UEAWord(f.N, {(w, kk + k): v * c for (w, kk), v in s.terms.items()})
    return out


def sym_inverse(x: PBWNormalForm, chart: AlgebroidChart) -> PolySection:
    """Polynomial ``P`` with ``normal_order(sym(P)) = x``, by triangular elimination on word length."""
    N = chart.N
    rest = normal_order(x, chart)
    out: dict = {}
    for _ in range(10000):
        if not rest:
            return PolySection(0, N, out)
        (w, k) = max(rest.terms, key=lambda t: (len(t[0]), t[0], -t[1]))
        c = rest.terms[(w, k)]
        b = tuple(w.count(a) for a in range(N))
        _acc(out, (k, b, ()), c)
        s = normal_order(sym_monomial(b), chart)
        rest = rest - UEAWord(N, {(ww, kk + k): v * c for (ww, kk), v in s.terms.items()})
    raise RuntimeError("symmetrization inverse did not terminate")


@dataclass
class GuttLine:
    f: PolySection
    g: PolySection
    star: PolySection
    transported: PolySection

    @property
    def equal(self) -> bool:
        return self.star == self.transported

    def __str__(self):
        tag = "EQUAL" if self.equal else "MISMATCH"
        s = f"{tag} f={self.f} g={self.g} : star={self.star}"
        if not self.equal:
            s += f" ; sym-route={self.transported}"
        return s


def gutt_compare(sol: FedosovSolution, max_degree: int) -> List[GuttLine]:
    """Compare ``f *Weyl g`` with ``sym^{-1}(normal_order(sym f . sym g))`` on monomials."""
    _require_weyl_point(sol)
    st = sol.setup
    N, L = st.N, st.trunc.L
    monos = [tuple(w.count(a) for a in range(N)) for w in pbw_words(N, max_degree)]
    lines = []
    for bf in monos:
        for bg in monos:
            f = PolySection.monomial(0, N, bf)
            g = PolySection.monomial(0, N, bg)
            s = sol.star_section(f, g).truncated_nu(L)
            t = sym_inverse(pbw_product(sym(f), sym(g), st.chart), st.chart).truncated_nu(L)
            lines.append(GuttLine(f, g, s, t))
    return lines
