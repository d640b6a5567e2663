"""Exact coefficient arithmetic.

Scalars are arbitrary precision rationals (``gmpy2.mpq``).  Base polynomials
live in ``Q[q1, ..., qn]`` and are stored sparsely as ``{exponent tuple:
coefficient}`` with no zero coefficients.  The module also hosts the shared
polynomial text syntax used by every printable type in the package.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Tuple

import gmpy2

Scalar = type(gmpy2.mpq(0))
Q = gmpy2.mpq
ZERO = Q(0)
ONE = Q(1)

Exponent = Tuple[int, ...]


class InputError(ValueError):
    """Raised for malformed or inconsistent user input."""


def scalar(x) -> Scalar:
    """Coerce ints, strings like ``"3/4"``, Fractions and mpq to a Scalar."""
    if isinstance(x, Scalar):
        return x
    if isinstance(x, bool):
        raise InputError(f"not a rational number: {x!r}")
    if isinstance(x, int):
        return Q(x)
    if isinstance(x, Fraction):
        return Q(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        if not re.fullmatch(r"[+-]?\d+(/\d+)?", s):
            raise InputError(f"not a rational number: {x!r}")
        num, _, den = s.partition("/")
        if den and int(den) == 0:
            raise InputError(f"zero denominator in {x!r}")
        return Q(int(num), int(den) if den else 1)
    if type(x).__name__ == "mpz":
        return Q(x)
    raise InputError(f"not a rational number: {x!r}")


def format_scalar(c: Scalar) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"({c.numerator}/{c.denominator})"


@dataclass(frozen=True)
class Truncation:
    """Retain nu-powers ``<= L`` and total degree (W-degree + nu-power) ``<= T``."""

    L: int
    T: int

    def __post_init__(self):
        if self.L < 0 or self.T < self.L:
            raise InputError(f"truncation needs T >= L >= 0, got L={self.L}, T={self.T}")

    def widened(self, dL: int = 0, dT: int = 0) -> "Truncation":
        return Truncation(self.L + dL, self.T + dT)


def series_truncate(x, t: Truncation):
    """Drop every term of a nu-graded object beyond ``t``; idempotent."""
    return x.truncated(t)


# ---------------------------------------------------------------------------
# polynomial text syntax
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")

# A parsed polynomial in named variables: {((name, exp), ...) sorted: coeff}
NamedPoly = Dict[Tuple[Tuple[str, int], ...], Scalar]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise InputError(f"unexpected character {text[pos]!r} at column {pos + 1} in {self.text!r}")
            if m.group(1) is not None:
                self.toks.append(("num", int(m.group(1)), m.start(1)))
            elif m.group(2) is not None:
                self.toks.append(("var", m.group(2), m.start(2)))
            else:
                op = "^" if m.group(3) == "**" else m.group(3)
                self.toks.append(("op", op, m.start(3)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def fail(self, msg):
        tok = self.peek()
        col = tok[2] + 1 if tok else len(self.text) + 1
        raise InputError(f"{msg} at column {col} in {self.text!r}")

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok is None or (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            self.fail(f"expected {value or kind}")
        self.i += 1
        return tok

    def parse(self) -> NamedPoly:
        if not self.toks:
            raise InputError("empty polynomial")
        p = self.expr()
        if self.peek() is not None:
            self.fail("unexpected token")
        return p

    def expr(self) -> NamedPoly:
        tok = self.peek()
        sign = 1
        if tok and tok[0] == "op" and tok[1] in "+-":
            self.i += 1
            sign = -1 if tok[1] == "-" else 1
        acc = _nscale(self.term(), sign)
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in "+-":
                self.i += 1
                t = self.term()
                acc = _nadd(acc, _nscale(t, -1 if tok[1] == "-" else 1))
            else:
                return acc

    def term(self) -> NamedPoly:
        acc = self.power()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] == "*":
                self.i += 1
                acc = _nmul(acc, self.power())
            elif tok and tok[0] == "op" and tok[1] == "/":
                self.i += 1
                d = self.power()
                if len(d) != 1 or () not in d or d[()] == 0:
                    self.fail("division only by nonzero constants")
                acc = _nscale(acc, 1 / d[()])
            elif tok and (tok[0] in ("num", "var") or tok[1] == "("):
                acc = _nmul(acc, self.power())  # juxtaposition
            else:
                return acc

    def power(self) -> NamedPoly:
        base = self.atom()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "^":
            self.i += 1
            e = self.take("num")[1]
            out: NamedPoly = {(): ONE}
            for _ in range(e):
                out = _nmul(out, base)
            return out
        return base

    def atom(self) -> NamedPoly:
        tok = self.peek()
        if tok is None:
            self.fail("unexpected end of input")
        if tok[0] == "num":
            self.i += 1
            return {(): Q(tok[1])}
        if tok[0] == "var":
            self.i += 1
            return {((tok[1], 1),): ONE}
        if tok[1] == "(":
            self.i += 1
            inner = self.expr()
            self.take("op", ")")
            return inner
        if tok[1] == "-":
            self.i += 1
            return _nscale(self.power(), -1)
        self.fail("unexpected token")


def _nadd(a: NamedPoly, b: NamedPoly) -> NamedPoly:
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, ZERO) + v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def _nscale(a: NamedPoly, c) -> NamedPoly:
    return {k: v * c for k, v in a.items()} if c else {}


def _nmul(a: NamedPoly, b: NamedPoly) -> NamedPoly:
    out: NamedPoly = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            m = dict(ka)
            for name, e in kb:
                m[name] = m.get(name, 0) + e
            key = tuple(sorted(m.items()))
            s = out.get(key, ZERO) + va * vb
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return out


def parse_named(text: str) -> NamedPoly:
    """Parse polynomial text into ``{sorted((var, exp), ...): coeff}``."""
    return _Parser(text).parse()


_VAR = re.compile(r"([A-Za-z_]+)(\d*)$")


def split_var(name: str) -> Tuple[str, int]:
    """``"q12" -> ("q", 11)`` (0-based index); ``"nu" -> ("nu", -1)``."""
    m = _VAR.match(name)
    if not m:
        raise InputError(f"bad variable name {name!r}")
    stem, idx = m.group(1), m.group(2)
    if not idx:
        return stem, -1
    if int(idx) < 1:
        raise InputError(f"variable indices start at 1: {name!r}")
    return stem, int(idx) - 1


def format_monomial(parts: Iterable[Tuple[str, int]]) -> str:
    """``[("q1", 2), ("p3", 1)] -> "q1^2*p3"`` (zero exponents skipped)."""
    out = [name if e == 1 else f"{name}^{e}" for name, e in parts if e]
    return "*".join(out)


def format_terms(terms: Iterable[Tuple[Scalar, str]]) -> str:
    """Join ``(coeff, monomial text)`` pairs with signs; empty monomial = 1."""
    pieces = []
    for c, mono in terms:
        neg = c < 0
        a = -c if neg else c
        if mono and a == 1:
            body = mono
        elif mono:
            body = f"{format_scalar(a)} {mono}"
        else:
            body = format_scalar(a)
        if not pieces:
            pieces.append(f"-{body}" if neg else body)
        else:
            pieces.append(f"- {body}" if neg else f"+ {body}")
    return " ".join(pieces) if pieces else "0"


# ---------------------------------------------------------------------------
# base polynomials
# ---------------------------------------------------------------------------


def _add_into(out: dict, key, c) -> None:
    s = out.get(key)
    if s is None:
        out[key] = c
    else:
        s = s + c
        if s:
            out[key] = s
        else:
            del out[key]


class BasePoly:
    """Sparse polynomial in the base coordinates ``q1..qn`` over Q."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Exponent, object] | None = None):
        self.n = n
        clean: Dict[Exponent, Scalar] = {}
        if terms:
            for e, c in terms.items():
                e = tuple(e)
                if len(e) != n:
                    raise InputError(f"exponent {e} has arity {len(e)}, expected {n}")
                c = scalar(c)
                if c:
                    clean[e] = c
        self.terms = clean

    @classmethod
    def _raw(cls, n: int, terms: Dict[Exponent, Scalar]) -> "BasePoly":
        p = cls.__new__(cls)
        p.n = n
        p.terms = terms
        return p

    @classmethod
    def zero(cls, n: int) -> "BasePoly":
        return cls._raw(n, {})

    @classmethod
    def const(cls, n: int, c) -> "BasePoly":
        c = scalar(c)
        return cls._raw(n, {(0,) * n: c} if c else {})

    @classmethod
    def var(cls, n: int, i: int) -> "BasePoly":
        if not 0 <= i < n:
            raise InputError(f"coordinate index {i} out of range for n={n}")
        e = [0] * n
        e[i] = 1
        return cls._raw(n, {tuple(e): ONE})

    @classmethod
    def parse(cls, text: str, n: int) -> "BasePoly":
        out: Dict[Exponent, Scalar] = {}
        for key, c in parse_named(text).items():
            e = [0] * n
            for name, k in key:
                stem, idx = split_var(name)
                if stem != "q" or not 0 <= idx < n:
                    raise InputError(f"unknown base variable {name!r} (n={n}) in {text!r}")
                e[idx] += k
            _add_into(out, tuple(e), c)
        return cls._raw(n, out)

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "BasePoly") -> None:
        if self.n != other.n:
            raise InputError(f"arity mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, BasePoly):
            other = BasePoly.const(self.n, other)
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            _add_into(out, e, c)
        return BasePoly._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return BasePoly._raw(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, BasePoly):
            other = BasePoly.const(self.n, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, BasePoly):
            c = scalar(other)
            if not c:
                return BasePoly.zero(self.n)
            return BasePoly._raw(self.n, {e: v * c for e, v in self.terms.items()})
        self._check(other)
        out: Dict[Exponent, Scalar] = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                _add_into(out, tuple(x + y for x, y in zip(ea, eb)), ca * cb)
        return BasePoly._raw(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = BasePoly.const(self.n, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, BasePoly):
            return self.n == other.n and self.terms == other.terms
        try:
            return self == BasePoly.const(self.n, other)
        except InputError:
            return NotImplemented

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def diff(self, i: int) -> "BasePoly":
        """Partial derivative with respect to ``q_{i+1}`` (0-based ``i``)."""
        if not 0 <= i < self.n:
            raise InputError(f"coordinate index {i} out of range for n={self.n}")
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                f = list(e)
                f[i] = k - 1
                out[tuple(f)] = c * k
        return BasePoly._raw(self.n, out)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Scalar:
        return self.terms.get((0,) * self.n, ZERO)

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def sorted_terms(self) -> Iterator[Tuple[Exponent, Scalar]]:
        for e in sorted(self.terms, reverse=True):
            yield e, self.terms[e]

    def __str__(self):
        return format_terms(
            (c, format_monomial((f"q{i + 1}", k) for i, k in enumerate(e)))
            for e, c in self.sorted_terms()
        )

    def __repr__(self):
        return f"BasePoly({self.n}, {str(self)!r})"


def poly_mul(a: BasePoly, b: BasePoly) -> BasePoly:
    return a * b


def poly_diff(a: BasePoly, i: int) -> BasePoly:
    """Partial derivative ``d/dq_{i+1}``; ``i`` is 0-based."""
    return a.diff(i)


# helpers shared by the sparse key types -------------------------------------

def add_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def poly_items(p: BasePoly):
    return p.terms.items()
