"""Independent reference implementations used to derive frozen test values.

Nothing here imports the package.  Polynomials are plain dictionaries
``{(k, b, q): Fraction}`` where ``k`` is the nu-power, ``b`` the exponent of
the fibre variables ``p`` and ``q`` the exponent of the base variables.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import factorial
from typing import Dict, Tuple

Key = Tuple[int, Tuple[int, ...], Tuple[int, ...]]
Poly = Dict[Key, Fraction]


def _add(out: Poly, key: Key, c: Fraction) -> None:
    v = out.get(key, Fraction(0)) + c
    if v:
        out[key] = v
    else:
        out.pop(key, None)


def _falling(e: int, t: int) -> int:
    out = 1
    for i in range(t):
        out *= e - i
    return out


def derivative(f: Poly, dp: Tuple[int, ...], dq: Tuple[int, ...]) -> Poly:
    """Mixed partial derivative ``d_p^dp d_q^dq f``."""
    out: Poly = {}
    for (k, b, q), c in f.items():
        if any(x < y for x, y in zip(b, dp)) or any(x < y for x, y in zip(q, dq)):
            continue
        m = 1
        for x, y in zip(b + q, dp + dq):
            m *= _falling(x, y)
        nb = tuple(x - y for x, y in zip(b, dp))
        nq = tuple(x - y for x, y in zip(q, dq))
        _add(out, (k, nb, nq), c * m)
    return out


def multiply(f: Poly, g: Poly, nu_shift: int = 0, scale: Fraction = Fraction(1)) -> Poly:
    out: Poly = {}
    for (k1, b1, q1), c1 in f.items():
        for (k2, b2, q2), c2 in g.items():
            key = (
                k1 + k2 + nu_shift,
                tuple(x + y for x, y in zip(b1, b2)),
                tuple(x + y for x, y in zip(q1, q2)),
            )
            _add(out, key, c1 * c2 * scale)
    return out


def _multi_indices(dim: int, total: int):
    for e in product(range(total + 1), repeat=dim):
        if sum(e) == total:
            yield e


def _mfact(e) -> int:
    out = 1
    for x in e:
        out *= factorial(x)
    return out


def flat_kappa_product(f: Poly, g: Poly, n: int, kappa: Fraction, L: int) -> Poly:
    """kappa-ordered product on the cotangent bundle of flat ``R^n``.

    ``f * g = mu exp(nu (kappa d_q (x) d_p - (1 - kappa) d_p (x) d_q)) (f (x) g)``,
    truncated at ``nu^L``.  ``kappa = 0`` is standard ordering.
    """
    out: Poly = {}
    for s in range(L + 1):
        for a_tot in range(s + 1):
            b_tot = s - a_tot
            for alpha in _multi_indices(n, a_tot):
                for beta in _multi_indices(n, b_tot):
                    coef = Fraction(kappa) ** a_tot * (Fraction(kappa) - 1) ** b_tot
                    coef /= _mfact(alpha) * _mfact(beta)
                    if not coef:
                        continue
                    df = derivative(f, beta, alpha)
                    dg = derivative(g, alpha, beta)
                    for key, c in multiply(df, dg, nu_shift=s, scale=coef).items():
                        if key[0] <= L:
                            _add(out, key, c)
    return out


def moyal_product(f: Poly, g: Poly, N: int, pi: Dict[Tuple[int, int], Poly], L: int, n: int = 0) -> Poly:
    """Moyal product ``mu exp((nu/2) pi^{ab} d_a (x) d_b)`` in the fibre variables.

    ``pi`` maps index pairs to polynomials that must be central, i.e. they
    may only involve fibre variables which ``f`` and ``g`` are never
    differentiated in.  This covers constant ``pi`` and the Heisenberg case
    where ``pi^{12} = -p3``.
    """
    pairs = [(ab, c) for ab, c in pi.items() if c]
    out: Poly = {}
    # Expand the exponential term by term: nu^s / (2^s s!) (pi^{ab} d_a (x) d_b)^s.
    state = [(Fraction(1), (0,) * N, (0,) * N, {(0, (0,) * N, (0,) * n): Fraction(1)})]
    for s in range(L + 1):
        for coef, left, right, weight in state:
            df = derivative(f, left, (0,) * n)
            dg = derivative(g, right, (0,) * n)
            term = multiply(multiply(df, dg), weight, nu_shift=s, scale=coef / (2**s * factorial(s)))
            for key, c in term.items():
                if key[0] <= L:
                    _add(out, key, c)
        new = []
        for coef, left, right, weight in state:
            for (a, b), w in pairs:
                nl = tuple(x + (1 if i == a else 0) for i, x in enumerate(left))
                nr = tuple(x + (1 if i == b else 0) for i, x in enumerate(right))
                new.append((coef, nl, nr, multiply(weight, w)))
        state = new
    return out
