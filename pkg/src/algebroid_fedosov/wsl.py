"""The graded algebra ``W (x) S (x) Lambda`` with its Fedosov operators.

Generators (all indices 0-based in the API):

* ``y^a``   -- the frame co-vector ``e^a`` in the symmetric ``W`` slot,
* ``p_a``   -- the frame vector ``e_a`` in the symmetric ``S`` slot,
* ``th^a``  -- the co-vector ``e^a`` in the antisymmetric ``Lambda`` slot,
* ``nu``    -- the real formal parameter, central.

A term is keyed by ``(y, p, c, k, q)``: exponent tuples ``y`` and ``p``, a
bitmask ``c`` for the Lambda slot, the nu-power ``k`` and the base exponent
``q``.  ``Deg = |y| + k`` is the total degree; elements keep ``Deg <= T`` and
``k <= L``.

The fibrewise product is realised as

    a o_kappa b = sum_{A,B} (-(1-kappa) nu)^|A| (kappa nu)^|B| / (A! B!)
                  (d_p^A d_y^B a) (d_y^A d_p^B b)

which gives ``[y^a, p_b] = nu delta^a_b`` for every kappa.
"""

from __future__ import annotations

from itertools import product as _iproduct
from math import factorial
from typing import Dict, Iterable, List, Optional, Tuple

from .ring import ONE, ZERO, BasePoly, InputError, Q, Scalar, Truncation, scalar
from .sections import EFormSeries, PolySection, _acc, _tadd, mask_indices, popcount, wedge_sign

Key = Tuple[Tuple[int, ...], Tuple[int, ...], int, int, Tuple[int, ...]]


def _falling(e: int, t: int) -> int:
    f = 1
    for s in range(t):
        f *= e - s
    return f


class WSLElement:
    """Truncated element of ``W (x) S (x) Lambda [[nu]]`` over a chart."""

    __slots__ = ("n", "N", "trunc", "terms")

    def __init__(self, n: int, N: int, trunc: Truncation, terms: Optional[Dict[Key, object]] = None):
        self.n = n
        self.N = N
        self.trunc = trunc
        out: dict = {}
        if terms:
            for (y, p, c, k, q), v in terms.items():
                y, p, q = tuple(y), tuple(p), tuple(q)
                if len(y) != N or len(p) != N or len(q) != n or c >> N or k < 0:
                    raise InputError(f"bad WSL key {(y, p, c, k, q)} for n={n}, N={N}")
                if sum(y) + k <= trunc.T and k <= trunc.L:
                    _acc(out, (y, p, c, k, q), scalar(v))
        self.terms = out

    @classmethod
    def _raw(cls, n, N, trunc, terms) -> "WSLElement":
        x = cls.__new__(cls)
        x.n, x.N, x.trunc, x.terms = n, N, trunc, terms
        return x

    # -- constructors -------------------------------------------------------

    def like(self, terms: dict) -> "WSLElement":
        return WSLElement._raw(self.n, self.N, self.trunc, terms)

    @classmethod
    def zero(cls, n, N, trunc) -> "WSLElement":
        return cls._raw(n, N, trunc, {})

    @classmethod
    def one(cls, n, N, trunc) -> "WSLElement":
        z = (0,) * N
        return cls._raw(n, N, trunc, {(z, z, 0, 0, (0,) * n): ONE})

    @classmethod
    def generator(cls, n, N, trunc, slot: str, alpha: int) -> "WSLElement":
        """``slot`` is ``"W"``, ``"S"`` or ``"L"``."""
        z = (0,) * N
        e = tuple(1 if i == alpha else 0 for i in range(N))
        key = {
            "W": (e, z, 0, 0, (0,) * n),
            "S": (z, e, 0, 0, (0,) * n),
            "L": (z, z, 1 << alpha, 0, (0,) * n),
        }[slot]
        return cls(n, N, trunc, {key: 1})

    @classmethod
    def nu(cls, n, N, trunc) -> "WSLElement":
        z = (0,) * N
        return cls(n, N, trunc, {(z, z, 0, 1, (0,) * n): 1})

    @classmethod
    def from_section(cls, s: PolySection, trunc: Truncation) -> "WSLElement":
        z = (0,) * s.N
        return cls(s.n, s.N, trunc, {(z, b, 0, k, q): c for (k, b, q), c in s.terms.items()})

    @classmethod
    def from_forms(cls, f: EFormSeries, trunc: Truncation) -> "WSLElement":
        z = (0,) * f.N
        return cls(f.n, f.N, trunc, {(z, z, m, k, q): c for (k, m, q), c in f.terms.items()})

    @classmethod
    def from_base(cls, u: BasePoly, N: int, trunc: Truncation) -> "WSLElement":
        z = (0,) * N
        return cls(u.n, N, trunc, {(z, z, 0, 0, e): c for e, c in u.terms.items()})

    # -- vector space -------------------------------------------------------

    def _check_shape(self, o: "WSLElement") -> None:
        if not isinstance(o, WSLElement) or (self.n, self.N) != (o.n, o.N):
            raise InputError("WSL arity mismatch")

    def _check(self, o: "WSLElement") -> None:
        if not isinstance(o, WSLElement):
            raise InputError(f"expected WSLElement, got {type(o).__name__}")
        if (self.n, self.N) != (o.n, o.N):
            raise InputError("WSL arity mismatch")
        if self.trunc != o.trunc:
            raise InputError(f"truncation mismatch: {self.trunc} vs {o.trunc}")

    def __add__(self, o):
        self._check(o)
        out = dict(self.terms)
        for key, c in o.terms.items():
            _acc(out, key, c)
        return self.like(out)

    def __neg__(self):
        return self.like({k: -c for k, c in self.terms.items()})

    def __sub__(self, o):
        self._check(o)
        out = dict(self.terms)
        for key, c in o.terms.items():
            _acc(out, key, -c)
        return self.like(out)

    def scale(self, c) -> "WSLElement":
        c = scalar(c)
        if not c:
            return self.like({})
        return self.like({k: v * c for k, v in self.terms.items()})

    def __mul__(self, o):
        if isinstance(o, WSLElement):
            return mu_product(self, o)
        return self.scale(o)

    def __rmul__(self, o):
        return self.scale(o)

    def __eq__(self, o):
        return (
            isinstance(o, WSLElement)
            and (self.n, self.N, self.trunc) == (o.n, o.N, o.trunc)
            and self.terms == o.terms
        )

    def __hash__(self):
        return hash((self.n, self.N, self.trunc, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    # -- truncation and filtering ------------------------------------------

    def truncated(self, t: Truncation) -> "WSLElement":
        T, L = t.T, t.L
        return WSLElement._raw(
            self.n,
            self.N,
            t,
            {key: c for key, c in self.terms.items() if key[3] <= L and sum(key[0]) + key[3] <= T},
        )

    def with_trunc(self, t: Truncation) -> "WSLElement":
        """Re-label with a (possibly wider) truncation, dropping what no longer fits."""
        return self.truncated(t)

    def filter(self, pred) -> "WSLElement":
        return self.like({key: c for key, c in self.terms.items() if pred(key)})

    def deg_part(self, d: int) -> "WSLElement":
        return self.filter(lambda key: sum(key[0]) + key[3] == d)

    def deg_at_most(self, d: int) -> "WSLElement":
        return self.filter(lambda key: sum(key[0]) + key[3] <= d)

    def nu_shift(self, j: int) -> "WSLElement":
        """Multiply by ``nu^j`` (``j`` may be negative if divisible)."""
        out = {}
        for (y, p, c, k, q), v in self.terms.items():
            if k + j < 0:
                raise ArithmeticError("element is not divisible by the requested nu power")
            out[(y, p, c, k + j, q)] = v
        return self.like(out).truncated(self.trunc)

    def even_part(self) -> "WSLElement":
        return self.filter(lambda key: popcount(key[2]) % 2 == 0)

    def odd_part(self) -> "WSLElement":
        return self.filter(lambda key: popcount(key[2]) % 2 == 1)

    # -- degree maps ----------------------------------------------------------

    def max_degree(self, which: str) -> int:
        f = _DEGREES[which]
        return max((f(key) for key in self.terms), default=-1)

    def degree_map(self, which: str) -> "WSLElement":
        """Apply the grading operator ``which`` in ``deg_s, deg_s*, deg_a, deg_nu, Deg, H``."""
        f = _DEGREES[which]
        out = {}
        for key, c in self.terms.items():
            d = f(key)
            if d:
                out[key] = c * d
        return self.like(out)

    def is_homogeneous(self, which: str) -> bool:
        f = _DEGREES[which]
        return len({f(key) for key in self.terms}) <= 1

    # -- output -------------------------------------------------------------

    def dump(self) -> str:
        """One line per ``(a, b, c, k)`` key: ``W[a] S[b] L[c] nu^k : polynomial``."""
        groups: Dict[tuple, dict] = {}
        for (y, p, c, k, q), v in self.terms.items():
            groups.setdefault((y, p, mask_indices(c), k), {})[q] = v
        lines = []
        for (y, p, ci, k) in sorted(groups):
            poly = BasePoly._raw(self.n, groups[(y, p, ci, k)])
            lines.append(
                f"W[{','.join(map(str, y))}] S[{','.join(map(str, p))}] "
                f"L[{','.join(str(i + 1) for i in ci)}] nu^{k} : {poly}"
            )
        return "\n".join(lines)

    def __repr__(self):
        return f"WSLElement(n={self.n}, N={self.N}, {self.trunc}, {len(self.terms)} terms)"


_DEGREES = {
    "deg_s": lambda key: sum(key[0]),
    "deg_s*": lambda key: sum(key[1]),
    "deg_a": lambda key: popcount(key[2]),
    "deg_nu": lambda key: key[3],
    "Deg": lambda key: sum(key[0]) + key[3],
    "H": lambda key: sum(key[1]) + key[3],
}


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------


def _prepared(x: WSLElement):
    return sorted(
        ((sum(y) + k, y, p, c, k, q, v) for (y, p, c, k, q), v in x.terms.items()),
        key=lambda t: t[0],
    )


def _component_options(e_left: int, e_right: int, weight: Scalar):
    """Contraction options for one index: list of ``(t, factor)``."""
    m = min(e_left, e_right)
    opts = [(0, ONE)]
    if not weight:
        return opts
    w = ONE
    for t in range(1, m + 1):
        w = w * weight
        opts.append((t, w * _falling(e_left, t) * _falling(e_right, t) / factorial(t)))
    return opts


def fib_product(x: WSLElement, y: WSLElement, kappa=Q(1, 2), trunc: Optional[Truncation] = None) -> WSLElement:
    """The kappa-ordered fibrewise product ``x o_kappa y``."""
    x._check(y)
    t = trunc or x.trunc
    kappa = scalar(kappa)
    wa = kappa - 1  # weight of d_p (left) x d_y (right)
    wb = kappa  # weight of d_y (left) x d_p (right)
    return _product(x, y, t, wa, wb)


def mu_product(x: WSLElement, y: WSLElement) -> WSLElement:
    """The super-commutative (undeformed) product."""
    x._check(y)
    return _product(x, y, x.trunc, ZERO, ZERO)


def _product(x: WSLElement, y: WSLElement, t: Truncation, wa: Scalar, wb: Scalar) -> WSLElement:
    T, L = t.T, t.L
    N = x.N
    rng = range(N)
    out: dict = {}
    ys = _prepared(y)
    ydegs = [r[0] for r in ys]
    import bisect

    for d1, y1, p1, c1, k1, q1, v1 in _prepared(x):
        hi = bisect.bisect_right(ydegs, T - d1)
        if not hi:
            continue
        for d2, y2, p2, c2, k2, q2, v2 in ys[:hi]:
            k0 = k1 + k2
            if k0 > L:
                continue
            s = wedge_sign(c1, c2)
            if not s:
                continue
            c = c1 | c2
            q = _tadd(q1, q2) if q1 else q1
            v = v1 * v2 if s > 0 else -(v1 * v2)
            contract = False
            if wa or wb:
                for a in rng:
                    if (wa and p1[a] and y2[a]) or (wb and y1[a] and p2[a]):
                        contract = True
                        break
            if not contract or k0 == L:
                _acc(out, (_tadd(y1, y2), _tadd(p1, p2), c, k0, q), v)
                continue
            # per-index option lists: (tA, tB, factor)
            opts = []
            for a in rng:
                oa = _component_options(p1[a], y2[a], wa) if wa else [(0, ONE)]
                ob = _component_options(y1[a], p2[a], wb) if wb else [(0, ONE)]
                opts.append([(ta, tb, fa * fb) for ta, fa in oa for tb, fb in ob])
            for combo in _iproduct(*opts):
                extra = 0
                f = v
                for ta, tb, ff in combo:
                    extra += ta + tb
                    if ta or tb:
                        f = f * ff
                if k0 + extra > L:
                    continue
                ny = tuple(y1[a] - combo[a][1] + y2[a] - combo[a][0] for a in rng)
                np_ = tuple(p1[a] - combo[a][0] + p2[a] - combo[a][1] for a in rng)
                _acc(out, (ny, np_, c, k0 + extra, q), f)
    return WSLElement._raw(x.n, x.N, t, out)


def supercommutator(x: WSLElement, y: WSLElement, kappa=Q(1, 2), trunc: Optional[Truncation] = None) -> WSLElement:
    """``[x, y]_kappa = x o y - (-1)^{|x||y|} y o x`` for the Lambda parity."""
    t = trunc or x.trunc
    xe, xo = x.even_part(), x.odd_part()
    ye, yo = y.even_part(), y.odd_part()
    res = fib_product(x, y, kappa, t)
    res = res - fib_product(ye, x, kappa, t)
    res = res - fib_product(yo, xe, kappa, t)
    return res + fib_product(yo, xo, kappa, t)


def nu_ad(r: WSLElement, x: WSLElement, kappa=Q(1, 2)) -> WSLElement:
    """``(1/nu) [r, x]_kappa`` as an exact nu-shift of the divisible commutator.

    Uses the single-pass form of the super-commutator

        [a, b]_kappa = sum_{A,B} nu^{|A|+|B|} (wa^|A| wb^|B| - wa^|B| wb^|A|) / (A! B!)
                       (d_p^A d_y^B a)(d_y^A d_p^B b)

    with ``wa = kappa - 1`` and ``wb = kappa``; terms with ``|A| = |B|``
    cancel, in particular the undeformed product.  The commutator is formed
    one step wider in ``L`` and ``T`` so the result is complete at the
    truncation of ``x`` wherever the inputs are.
    """
    x._check_shape(r)
    t = x.trunc
    return _bracket(r, x, t.widened(1, 1), scalar(kappa) - 1, scalar(kappa), shift=1).truncated(t)


def supercommutator_fast(x: WSLElement, y: WSLElement, kappa=Q(1, 2), trunc: Optional[Truncation] = None) -> WSLElement:
    """Same value as :func:`supercommutator`, computed in one pass."""
    t = trunc or x.trunc
    return _bracket(x, y, t, scalar(kappa) - 1, scalar(kappa), shift=0)


_OPT_CACHE: dict = {}


def _opts(e_left: int, e_right: int):
    key = (e_left, e_right)
    got = _OPT_CACHE.get(key)
    if got is None:
        got = [(t, Q(_falling(e_left, t) * _falling(e_right, t), factorial(t))) for t in range(min(e_left, e_right) + 1)]
        _OPT_CACHE[key] = got
    return got


def _grouped_terms(x: WSLElement):
    """Group terms by ``(y, p, c, k)``; returns sorted rows with support bitmasks."""
    groups: Dict[tuple, list] = {}
    for (y, p, c, k, q), v in x.terms.items():
        groups.setdefault((y, p, c, k), []).append((q, v))
    rows = []
    for (y, p, c, k), qs in groups.items():
        ym = sum(1 << a for a, e in enumerate(y) if e)
        pm = sum(1 << a for a, e in enumerate(p) if e)
        rows.append((sum(y) + k, y, p, c, k, ym, pm, qs))
    rows.sort(key=lambda r: r[0])
    return rows


def _bracket(x: WSLElement, y: WSLElement, t: Truncation, wa: Scalar, wb: Scalar, shift: int) -> WSLElement:
    import bisect

    T, L = t.T, t.L
    N = x.N
    rng = range(N)
    out: dict = {}
    ys = _grouped_terms(y)
    ydegs = [r[0] for r in ys]
    wcache: dict = {}
    base = x.n > 0
    for d1, y1, p1, c1, k1, ym1, pm1, qs1 in _grouped_terms(x):
        hi = bisect.bisect_right(ydegs, T - d1)
        for d2, y2, p2, c2, k2, ym2, pm2, qs2 in ys[:hi]:
            k0 = k1 + k2
            if k0 + 1 > L or not ((pm1 & ym2) | (ym1 & pm2)):
                continue
            s = wedge_sign(c1, c2)
            if not s:
                continue
            c = c1 | c2
            ia = [a for a in rng if p1[a] and y2[a]]
            ib = [a for a in rng if y1[a] and p2[a]]
            oa = [_opts(p1[a], y2[a]) for a in ia]
            ob = [_opts(y1[a], p2[a]) for a in ib]
            ysum = _tadd(y1, y2)
            psum = _tadd(p1, p2)
            combos = []
            for ca in _iproduct(*oa):
                na = 0
                fa = ONE
                for tt, ff in ca:
                    if tt:
                        na += tt
                        fa = fa * ff
                if k0 + na > L:
                    continue
                for cb in _iproduct(*ob):
                    nb = 0
                    f = fa
                    for tt, ff in cb:
                        if tt:
                            nb += tt
                            f = f * ff
                    if na == nb or k0 + na + nb > L:
                        continue
                    w = wcache.get((na, nb))
                    if w is None:
                        w = wcache[(na, nb)] = wa**na * wb**nb - wa**nb * wb**na
                    if not w:
                        continue
                    ny = list(ysum)
                    np_ = list(psum)
                    for j, a in enumerate(ia):
                        tt = ca[j][0]
                        np_[a] -= tt
                        ny[a] -= tt
                    for j, a in enumerate(ib):
                        tt = cb[j][0]
                        ny[a] -= tt
                        np_[a] -= tt
                    combos.append((tuple(ny), tuple(np_), k0 + na + nb - shift, f * w if s > 0 else -(f * w)))
            if not combos:
                continue
            if base:
                prods: dict = {}
                for qa, va in qs1:
                    for qb, vb in qs2:
                        _acc(prods, _tadd(qa, qb), va * vb)
            else:
                prods = {(): qs1[0][1] * qs2[0][1]}
            for ny, np_, kk, f in combos:
                for q, v in prods.items():
                    _acc(out, (ny, np_, c, kk, q), v * f)
    return WSLElement._raw(x.n, x.N, t, out)


def nu_product(x: WSLElement, y: WSLElement, kappa=Q(1, 2)) -> WSLElement:
    """``(1/nu) x o_kappa y`` for a pair whose undeformed product vanishes."""
    t = x.trunc
    w = t.widened(1, 1)
    return divide_by_nu(fib_product(x.with_trunc(w), y.with_trunc(w), kappa, w)).truncated(t)


def divide_by_nu(x: WSLElement) -> WSLElement:
    out = {}
    for (y, p, c, k, q), v in x.terms.items():
        if k == 0:
            raise ArithmeticError("nu-division of an element with a nu^0 part")
        out[(y, p, c, k - 1, q)] = v
    return x.like(out)


# ---------------------------------------------------------------------------
# contractions and the Koszul operators
# ---------------------------------------------------------------------------


def diff_y(x: WSLElement, a: int) -> WSLElement:
    """``i_s(e_a) = d/dy^a``."""
    out = {}
    for (y, p, c, k, q), v in x.terms.items():
        e = y[a]
        if e:
            out[(y[:a] + (e - 1,) + y[a + 1:], p, c, k, q)] = v * e
    return x.like(out)


def diff_p(x: WSLElement, a: int) -> WSLElement:
    """``i_s(e^a) = d/dp_a``."""
    out = {}
    for (y, p, c, k, q), v in x.terms.items():
        e = p[a]
        if e:
            out[(y, p[:a] + (e - 1,) + p[a + 1:], c, k, q)] = v * e
    return x.like(out)


def delta(x: WSLElement) -> WSLElement:
    """``delta = th^a d/dy^a`` (lowers deg_s, raises deg_a)."""
    out: dict = {}
    for (y, p, c, k, q), v in x.terms.items():
        for a in range(x.N):
            e = y[a]
            bit = 1 << a
            if e and not c & bit:
                s = -1 if popcount(c & (bit - 1)) & 1 else 1
                _acc(out, (y[:a] + (e - 1,) + y[a + 1:], p, c | bit, k, q), v * (e * s))
    return x.like(out)


def delta_star(x: WSLElement) -> WSLElement:
    """``delta* = y^a i_a(e_a)`` (left derivative in the Lambda slot)."""
    out: dict = {}
    for (y, p, c, k, q), v in x.terms.items():
        for a in mask_indices(c):
            bit = 1 << a
            s = -1 if popcount(c & (bit - 1)) & 1 else 1
            _acc(out, (y[:a] + (y[a] + 1,) + y[a + 1:], p, c ^ bit, k, q), v * s)
    return x.like(out)


def delta_inv(x: WSLElement) -> WSLElement:
    """``delta^{-1} = delta* / (deg_s + deg_a)`` on each bihomogeneous piece, 0 on ``(0,0)``."""
    out: dict = {}
    for (y, p, c, k, q), v in x.terms.items():
        if not c:
            continue
        w = Q(1, sum(y) + popcount(c))
        for a in mask_indices(c):
            bit = 1 << a
            s = -w if popcount(c & (bit - 1)) & 1 else w
            _acc(out, (y[:a] + (y[a] + 1,) + y[a + 1:], p, c ^ bit, k, q), v * s)
    return x.like(out).truncated(x.trunc)


def sigma(x: WSLElement) -> PolySection:
    """Projection onto ``deg_s = 0 = deg_a``, read as a section."""
    terms = {}
    for (y, p, c, k, q), v in x.terms.items():
        if not c and not any(y):
            terms[(k, p, q)] = v
    return PolySection._raw(x.n, x.N, terms)


def sigma_wsl(x: WSLElement) -> WSLElement:
    return x.filter(lambda key: not key[2] and not any(key[0]))


def laplace_fib(x: WSLElement) -> WSLElement:
    """``Delta_fib = sum_a d/dp_a d/dy^a``."""
    out: dict = {}
    for (y, p, c, k, q), v in x.terms.items():
        for a in range(x.N):
            if y[a] and p[a]:
                _acc(
                    out,
                    (y[:a] + (y[a] - 1,) + y[a + 1:], p[:a] + (p[a] - 1,) + p[a + 1:], c, k, q),
                    v * (y[a] * p[a]),
                )
    return x.like(out)


def m_transform(x: WSLElement, dk) -> WSLElement:
    """``M = exp(nu * dk * Delta_fib)``; an isomorphism ``o_kappa -> o_{kappa+dk}``."""
    dk = scalar(dk)
    out = x
    term = x
    j = 1
    while True:
        term = laplace_fib(term).nu_shift(1).scale(dk / j)
        if not term:
            return out
        out = out + term
        j += 1


# ---------------------------------------------------------------------------
# covariant derivative
# ---------------------------------------------------------------------------


class CovariantDerivative:
    """``D = th^a nabla_{e_a}`` for a torsion-free connection on a chart.

    ``nabla_a`` acts on coefficients through the anchor, on ``p_b`` by
    ``Gamma^g_{ab} p_g``, and on ``y^b`` and ``th^b`` by ``-Gamma^b_{ag}``.
    """

    def __init__(self, chart, conn):
        if not conn.is_torsion_free(chart):
            raise InputError("covariant derivative needs a torsion-free connection")
        self.n, self.N = chart.n, chart.N
        N, n = self.N, self.n
        self.anchor = [
            [(i, list(chart.anchor[a][i].terms.items())) for i in range(n) if chart.anchor[a][i]]
            for a in range(N)
        ]
        # gamma[a][b][g] = Gamma^g_{ab}
        self.gamma = [
            [[(g, list(conn.gamma[a][b][g].terms.items())) for g in range(N) if conn.gamma[a][b][g]] for b in range(N)]
            for a in range(N)
        ]

    def nabla(self, x: WSLElement, a: int) -> dict:
        out: dict = {}
        N = self.N
        gam = self.gamma[a]
        for (y, p, c, k, q), v in x.terms.items():
            for i, rho in self.anchor[a]:
                e = q[i]
                if e:
                    dq = q[:i] + (e - 1,) + q[i + 1:]
                    for rq, rc in rho:
                        _acc(out, (y, p, c, k, _tadd(dq, rq)), v * rc * e)
            for b in range(N):
                e = p[b]
                if e:
                    base = p[:b] + (e - 1,) + p[b + 1:]
                    for g, terms in gam[b]:
                        np_ = base[:g] + (base[g] + 1,) + base[g + 1:]
                        for gq, gc in terms:
                            _acc(out, (y, np_, c, k, _tadd(q, gq)), v * gc * e)
            for b in range(N):
                e = y[b]
                if e:
                    base = y[:b] + (e - 1,) + y[b + 1:]
                    for g in range(N):
                        for gg, terms in gam[g]:
                            if gg != b:
                                continue
                            ny = base[:g] + (base[g] + 1,) + base[g + 1:]
                            for gq, gc in terms:
                                _acc(out, (ny, p, c, k, _tadd(q, gq)), -v * gc * e)
            for b in mask_indices(c):
                rest = c ^ (1 << b)
                for g in range(N):
                    if rest >> g & 1:
                        continue
                    for gg, terms in gam[g]:
                        if gg != b:
                            continue
                        lo, hi = (b, g) if b < g else (g, b)
                        between = popcount(rest & ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1))
                        s = -1 if between & 1 else 1
                        for gq, gc in terms:
                            _acc(out, (y, p, rest | (1 << g), k, _tadd(q, gq)), -v * gc * s)
        return out

    def apply(self, x: WSLElement) -> WSLElement:
        out: dict = {}
        for a in range(self.N):
            bit = 1 << a
            for (y, p, c, k, q), v in self.nabla(x, a).items():
                if c & bit:
                    continue
                s = -1 if popcount(c & (bit - 1)) & 1 else 1
                _acc(out, (y, p, c | bit, k, q), v * s)
        return x.like(out)


def cov_D(x: WSLElement, conn, chart) -> WSLElement:
    """Apply ``D = th^a nabla_{e_a}``; the connection must be torsion-free."""
    return conn.covariant(chart).apply(x)


# ---------------------------------------------------------------------------
# symmetric covariant derivation on W, and the F map
# ---------------------------------------------------------------------------


def sym_cov(x: WSLElement, conn, chart) -> WSLElement:
    """``D_s = y^a nabla_{e_a}`` (raises deg_s by one)."""
    cd = conn.covariant(chart)
    out: dict = {}
    for a in range(x.N):
        for (y, p, c, k, q), v in cd.nabla(x, a).items():
            _acc(out, (y[:a] + (y[a] + 1,) + y[a + 1:], p, c, k, q), v)
    return x.like(out).truncated(x.trunc)
