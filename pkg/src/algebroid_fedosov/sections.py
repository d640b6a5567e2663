"""Sparse containers for symmetric tensors and E-forms.

``PolySection`` holds an element of ``S(E)[nu]``, i.e. a polynomial in the
fibre coordinates ``p1..pN`` of ``E*`` with coefficients in the base ring and
the formal parameter.  ``EFormSeries`` holds a nu-series of E-differential
forms ``sum u(q) e^I``.  Both store one flat dictionary of exact scalars; the
key layouts are ``(k, b, q)`` and ``(k, mask, q)`` where ``k`` is the nu-power,
``b`` the p-exponent, ``mask`` a bitmask of the antisymmetric indices and ``q``
the base exponent.
"""

from __future__ import annotations

from math import comb
from typing import Dict, Iterable, Tuple

from .ring import (
    ONE,
    ZERO,
    BasePoly,
    InputError,
    format_monomial,
    format_terms,
    parse_named,
    scalar,
    split_var,
)

SecKey = Tuple[int, Tuple[int, ...], Tuple[int, ...]]


def _acc(out: dict, key, c) -> None:
    s = out.get(key)
    if s is None:
        if c:
            out[key] = c
    else:
        s = s + c
        if s:
            out[key] = s
        else:
            del out[key]


def _tadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# bitmask helpers for antisymmetric index sets
# ---------------------------------------------------------------------------


def popcount(m: int) -> int:
    return bin(m).count("1")


def mask_indices(m: int) -> Tuple[int, ...]:
    out = []
    i = 0
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return tuple(out)


def indices_mask(idx: Iterable[int]) -> Tuple[int, int]:
    """Return ``(mask, sign)`` of the wedge ``e^{i1} ^ e^{i2} ^ ...``; sign 0 if repeated."""
    mask = 0
    sign = 1
    for i in idx:
        bit = 1 << i
        if mask & bit:
            return 0, 0
        if popcount(mask >> (i + 1)) & 1:
            sign = -sign
        mask |= bit
    return mask, sign


def wedge_sign(a: int, b: int) -> int:
    """Sign of ``e^a ^ e^b`` relative to the sorted form, 0 if they overlap."""
    if a & b:
        return 0
    inv = 0
    bb = b
    j = 0
    while bb:
        if bb & 1:
            inv += popcount(a >> (j + 1))
        bb >>= 1
        j += 1
    return -1 if inv & 1 else 1


# ---------------------------------------------------------------------------
# PolySection
# ---------------------------------------------------------------------------


class PolySection:
    """Element of ``S(E)[nu]`` over a chart, identified with ``Pol(E*)[nu]``."""

    __slots__ = ("n", "N", "terms")

    def __init__(self, n: int, N: int, terms: Dict[SecKey, object] | None = None):
        self.n = n
        self.N = N
        out: Dict[SecKey, object] = {}
        if terms:
            for (k, b, q), c in terms.items():
                b, q = tuple(b), tuple(q)
                if len(b) != N or len(q) != n or k < 0:
                    raise InputError(f"bad section key {(k, b, q)} for n={n}, N={N}")
                _acc(out, (k, b, q), scalar(c))
        self.terms = out

    @classmethod
    def _raw(cls, n, N, terms) -> "PolySection":
        s = cls.__new__(cls)
        s.n, s.N, s.terms = n, N, terms
        return s

    @classmethod
    def zero(cls, n: int, N: int) -> "PolySection":
        return cls._raw(n, N, {})

    @classmethod
    def one(cls, n: int, N: int) -> "PolySection":
        return cls._raw(n, N, {(0, (0,) * N, (0,) * n): ONE})

    @classmethod
    def monomial(cls, n, N, b=None, q=None, k=0, c=1) -> "PolySection":
        b = tuple(b) if b is not None else (0,) * N
        q = tuple(q) if q is not None else (0,) * n
        return cls(n, N, {(k, b, q): c})

    @classmethod
    def p(cls, n: int, N: int, alpha: int) -> "PolySection":
        b = [0] * N
        b[alpha] = 1
        return cls._raw(n, N, {(0, tuple(b), (0,) * n): ONE})

    @classmethod
    def from_base(cls, u: BasePoly, N: int) -> "PolySection":
        """The pull-back ``pi^* u``."""
        zb = (0,) * N
        return cls._raw(u.n, N, {(0, zb, e): c for e, c in u.terms.items()})

    @classmethod
    def parse(cls, text: str, n: int, N: int) -> "PolySection":
        """Parse text in the variables ``q1..qn``, ``p1..pN`` and ``nu``."""
        out: Dict[SecKey, object] = {}
        for key, c in parse_named(text).items():
            b = [0] * N
            q = [0] * n
            k = 0
            for name, e in key:
                stem, idx = split_var(name)
                if stem == "nu" and idx < 0:
                    k += e
                elif stem == "p" and 0 <= idx < N:
                    b[idx] += e
                elif stem == "q" and 0 <= idx < n:
                    q[idx] += e
                else:
                    raise InputError(f"unknown variable {name!r} (n={n}, N={N}) in {text!r}")
            _acc(out, (k, tuple(b), tuple(q)), c)
        return cls._raw(n, N, out)

    # -- vector space / algebra -------------------------------------------

    def _check(self, o: "PolySection") -> None:
        if not isinstance(o, PolySection) or (self.n, self.N) != (o.n, o.N):
            raise InputError("section arity mismatch")

    def __add__(self, o):
        self._check(o)
        out = dict(self.terms)
        for key, c in o.terms.items():
            _acc(out, key, c)
        return PolySection._raw(self.n, self.N, out)

    def __neg__(self):
        return PolySection._raw(self.n, self.N, {k: -c for k, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-o)

    def scale(self, c) -> "PolySection":
        c = scalar(c)
        if not c:
            return PolySection.zero(self.n, self.N)
        return PolySection._raw(self.n, self.N, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, o):
        if not isinstance(o, PolySection):
            return self.scale(o)
        self._check(o)
        out: dict = {}
        for (k1, b1, q1), c1 in self.terms.items():
            for (k2, b2, q2), c2 in o.terms.items():
                _acc(out, (k1 + k2, _tadd(b1, b2), _tadd(q1, q2)), c1 * c2)
        return PolySection._raw(self.n, self.N, out)

    __rmul__ = scale

    def __pow__(self, e: int):
        out = PolySection.one(self.n, self.N)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, o):
        return isinstance(o, PolySection) and (self.n, self.N) == (o.n, o.N) and self.terms == o.terms

    def __hash__(self):
        return hash((self.n, self.N, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def times_base(self, u: BasePoly) -> "PolySection":
        return self * PolySection.from_base(u, self.N)

    def nu_shift(self, j: int) -> "PolySection":
        """Multiply by ``nu^j``; negative ``j`` requires divisibility."""
        out = {}
        for (k, b, q), c in self.terms.items():
            if k + j < 0:
                raise ArithmeticError("section is not divisible by the requested nu power")
            out[(k + j, b, q)] = c
        return PolySection._raw(self.n, self.N, out)

    def nu_flip(self) -> "PolySection":
        """The substitution ``nu -> -nu``."""
        return PolySection._raw(
            self.n, self.N, {(k, b, q): (-c if k & 1 else c) for (k, b, q), c in self.terms.items()}
        )

    # -- derivatives --------------------------------------------------------

    def diff_p(self, alpha: int, times: int = 1) -> "PolySection":
        out = {}
        for (k, b, q), c in self.terms.items():
            e = b[alpha]
            if e >= times:
                f = 1
                for t in range(times):
                    f *= e - t
                nb = b[:alpha] + (e - times,) + b[alpha + 1:]
                out[(k, nb, q)] = c * f
        return PolySection._raw(self.n, self.N, out)

    def diff_q(self, i: int) -> "PolySection":
        out = {}
        for (k, b, q), c in self.terms.items():
            e = q[i]
            if e:
                nq = q[:i] + (e - 1,) + q[i + 1:]
                out[(k, b, nq)] = c * e
        return PolySection._raw(self.n, self.N, out)

    def diff_p_multi(self, a: Tuple[int, ...]) -> "PolySection":
        """``d_p^a`` for a multi-index ``a``."""
        out = {}
        for (k, b, q), c in self.terms.items():
            f = 1
            nb = []
            ok = True
            for e, t in zip(b, a):
                if e < t:
                    ok = False
                    break
                for s in range(t):
                    f *= e - s
                nb.append(e - t)
            if ok:
                out[(k, tuple(nb), q)] = c * f
        return PolySection._raw(self.n, self.N, out)

    def substitute_p_shift(self, shift) -> "PolySection":
        """Substitute ``p_alpha -> p_alpha + shift[alpha]``; shifts are PolySections."""
        out = PolySection.zero(self.n, self.N)
        lin = [PolySection.p(self.n, self.N, a) + shift[a] for a in range(self.N)]
        for (k, b, q), c in self.terms.items():
            t = PolySection._raw(self.n, self.N, {(k, (0,) * self.N, q): c})
            for a, e in enumerate(b):
                if e:
                    t = t * lin[a] ** e
            out = out + t
        return out

    # -- gradings -----------------------------------------------------------

    def fibre_degree(self) -> int:
        return max((sum(b) for (_, b, _) in self.terms), default=-1)

    def max_nu(self) -> int:
        return max((k for (k, _, _) in self.terms), default=-1)

    def nu_part(self, k: int) -> "PolySection":
        """Coefficient of ``nu^k`` (returned with nu-power 0)."""
        return PolySection._raw(
            self.n, self.N, {(0, b, q): c for (kk, b, q), c in self.terms.items() if kk == k}
        )

    def truncated_nu(self, L: int) -> "PolySection":
        return PolySection._raw(self.n, self.N, {key: c for key, c in self.terms.items() if key[0] <= L})

    def truncated(self, t) -> "PolySection":
        return self.truncated_nu(t.L)

    def homogeneity(self) -> "PolySection":
        """Apply ``H = deg_p + deg_nu``."""
        return PolySection._raw(
            self.n,
            self.N,
            {key: c * (sum(key[1]) + key[0]) for key, c in self.terms.items() if sum(key[1]) + key[0]},
        )

    def is_base(self) -> bool:
        return all(not any(b) and k == 0 for (k, b, _) in self.terms)

    def as_base(self) -> BasePoly:
        if not all(not any(b) for (_, b, _) in self.terms):
            raise InputError("section is not a pull-back of a base function")
        out: Dict = {}
        for (k, b, q), c in self.terms.items():
            if k:
                raise InputError("section carries nu-powers")
            out[q] = c
        return BasePoly._raw(self.n, out)

    def monomials(self):
        """Split into single-term sections (sorted canonically)."""
        for key in self.sorted_keys():
            yield PolySection._raw(self.n, self.N, {key: self.terms[key]})

    def sorted_keys(self):
        return sorted(self.terms, key=lambda t: (t[0], tuple(-x for x in t[2] + t[1])))

    def __str__(self):
        parts = []
        for k, b, q in self.sorted_keys():
            mono = format_monomial(
                [(f"q{i + 1}", e) for i, e in enumerate(q)] + [(f"p{a + 1}", e) for a, e in enumerate(b)]
            )
            nu = "" if k == 0 else ("nu" if k == 1 else f"nu^{k}")
            text = " ".join(x for x in (nu, mono) if x)
            parts.append((self.terms[(k, b, q)], text))
        return format_terms(parts)

    def __repr__(self):
        return f"PolySection({self.n}, {self.N}, {str(self)!r})"


def binom(n: int, k: int) -> int:
    return comb(n, k)


# ---------------------------------------------------------------------------
# EFormSeries
# ---------------------------------------------------------------------------

FormKey = Tuple[int, int, Tuple[int, ...]]


class EFormSeries:
    """nu-series of E-differential forms ``sum_k nu^k u_I(q) e^I``."""

    __slots__ = ("n", "N", "terms")

    def __init__(self, n: int, N: int, terms: Dict[FormKey, object] | None = None):
        self.n = n
        self.N = N
        out: dict = {}
        if terms:
            for (k, m, q), c in terms.items():
                if m >> N or k < 0 or len(q) != n:
                    raise InputError(f"bad form key {(k, m, q)} for n={n}, N={N}")
                _acc(out, (k, m, tuple(q)), scalar(c))
        self.terms = out

    @classmethod
    def _raw(cls, n, N, terms) -> "EFormSeries":
        s = cls.__new__(cls)
        s.n, s.N, s.terms = n, N, terms
        return s

    @classmethod
    def zero(cls, n, N) -> "EFormSeries":
        return cls._raw(n, N, {})

    @classmethod
    def function(cls, u: BasePoly, N: int, k: int = 0) -> "EFormSeries":
        return cls._raw(u.n, N, {(k, 0, e): c for e, c in u.terms.items()})

    @classmethod
    def from_entries(cls, n: int, N: int, entries) -> "EFormSeries":
        """Build from ``[(k, (i1, i2, ...), BasePoly), ...]`` with 0-based indices."""
        out: dict = {}
        for k, idx, u in entries:
            if any(not 0 <= i < N for i in idx):
                raise InputError(f"form index out of range in {idx} (N={N})")
            m, sgn = indices_mask(idx)
            if not sgn:
                continue
            if not isinstance(u, BasePoly):
                u = BasePoly.const(n, u)
            for e, c in u.terms.items():
                _acc(out, (k, m, e), c * sgn)
        return cls._raw(n, N, out)

    def _check(self, o) -> None:
        if not isinstance(o, EFormSeries) or (self.n, self.N) != (o.n, o.N):
            raise InputError("form arity mismatch")

    def __add__(self, o):
        self._check(o)
        out = dict(self.terms)
        for key, c in o.terms.items():
            _acc(out, key, c)
        return EFormSeries._raw(self.n, self.N, out)

    def __neg__(self):
        return EFormSeries._raw(self.n, self.N, {k: -c for k, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-o)

    def scale(self, c) -> "EFormSeries":
        c = scalar(c)
        if not c:
            return EFormSeries.zero(self.n, self.N)
        return EFormSeries._raw(self.n, self.N, {k: v * c for k, v in self.terms.items()})

    __rmul__ = scale

    def wedge(self, o: "EFormSeries") -> "EFormSeries":
        self._check(o)
        out: dict = {}
        for (k1, m1, q1), c1 in self.terms.items():
            for (k2, m2, q2), c2 in o.terms.items():
                s = wedge_sign(m1, m2)
                if s:
                    _acc(out, (k1 + k2, m1 | m2, _tadd(q1, q2)), c1 * c2 * s)
        return EFormSeries._raw(self.n, self.N, out)

    def times_base(self, u: BasePoly) -> "EFormSeries":
        return self.wedge(EFormSeries.function(u, self.N))

    def nu_shift(self, j: int) -> "EFormSeries":
        return EFormSeries._raw(self.n, self.N, {(k + j, m, q): c for (k, m, q), c in self.terms.items()})

    def __eq__(self, o):
        return isinstance(o, EFormSeries) and (self.n, self.N) == (o.n, o.N) and self.terms == o.terms

    def __hash__(self):
        return hash((self.n, self.N, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def degrees(self):
        return sorted({popcount(m) for (_, m, _) in self.terms})

    def nu_part(self, k: int) -> "EFormSeries":
        return EFormSeries._raw(self.n, self.N, {(0, m, q): c for (kk, m, q), c in self.terms.items() if kk == k})

    def max_nu(self) -> int:
        return max((k for (k, _, _) in self.terms), default=-1)

    def truncated(self, t) -> "EFormSeries":
        return EFormSeries._raw(self.n, self.N, {key: c for key, c in self.terms.items() if key[0] <= t.L})

    def component(self, idx: Tuple[int, ...], k: int = 0) -> BasePoly:
        """Coefficient of ``nu^k e^{idx}`` (sign-adjusted for unsorted idx)."""
        m, sgn = indices_mask(idx)
        if not sgn:
            return BasePoly.zero(self.n)
        out = {q: c * sgn for (kk, mm, q), c in self.terms.items() if kk == k and mm == m}
        return BasePoly._raw(self.n, out)

    def evaluate(self, idx: Tuple[int, ...], k: int = 0) -> BasePoly:
        """Value on frame sections ``(e_{i1}, ..., e_{id})``; equals :meth:`component`."""
        return self.component(idx, k)

    def __str__(self):
        keys = sorted(self.terms, key=lambda t: (t[0], mask_indices(t[1]), tuple(-x for x in t[2])))
        parts = []
        for k, m, q in keys:
            mono = format_monomial((f"q{i + 1}", e) for i, e in enumerate(q))
            nu = "" if k == 0 else ("nu" if k == 1 else f"nu^{k}")
            form = "e[" + ",".join(str(i + 1) for i in mask_indices(m)) + "]" if m else ""
            parts.append((self.terms[(k, m, q)], " ".join(x for x in (nu, mono, form) if x)))
        return format_terms(parts)

    def __repr__(self):
        return f"EFormSeries({self.n}, {self.N}, {str(self)!r})"
