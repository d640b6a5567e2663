"""Seeded random generators for property checks.

Every generator takes a ``random.Random`` instance so results are
reproducible from a single seed.
"""

from __future__ import annotations

import random
from typing import Tuple

from .ring import BasePoly, Q, Truncation
from .sections import EFormSeries, PolySection
from .wsl import WSLElement


def _coef(rng: random.Random):
    num = rng.choice([-3, -2, -1, 1, 1, 2, 3])
    den = rng.choice([1, 1, 1, 2, 3])
    return Q(num, den)


def _exponent(rng: random.Random, dim: int, max_total: int) -> Tuple[int, ...]:
    e = [0] * dim
    if dim == 0:
        return ()
    for _ in range(rng.randint(0, max_total)):
        e[rng.randrange(dim)] += 1
    return tuple(e)


def random_base(rng: random.Random, n: int, terms: int = 2, max_deg: int = 2) -> BasePoly:
    out = BasePoly.zero(n)
    for _ in range(rng.randint(1, terms)):
        out = out + BasePoly(n, {_exponent(rng, n, max_deg): _coef(rng)})
    return out


def random_section(
    rng: random.Random, n: int, N: int, terms: int = 3, max_fibre: int = 3, max_base: int = 2, max_nu: int = 0
) -> PolySection:
    out = {}
    for _ in range(rng.randint(1, terms)):
        key = (rng.randint(0, max_nu), _exponent(rng, N, max_fibre), _exponent(rng, n, max_base))
        out[key] = out.get(key, 0) + _coef(rng)
    return PolySection(n, N, out)


def random_homogeneous_section(rng: random.Random, n: int, N: int, k: int, terms: int = 2, max_base: int = 2):
    """Random element of ``Pol^k`` (fibre-homogeneous of degree ``k``)."""
    out = {}
    for _ in range(rng.randint(1, terms)):
        b = [0] * N
        for _ in range(k):
            b[rng.randrange(N)] += 1
        key = (0, tuple(b), _exponent(rng, n, max_base))
        out[key] = out.get(key, 0) + _coef(rng)
    return PolySection(n, N, out)


def random_wsl(
    rng: random.Random,
    n: int,
    N: int,
    trunc: Truncation,
    terms: int = 4,
    max_y: int = 2,
    max_p: int = 2,
    max_base: int = 1,
    form_degree=None,
) -> WSLElement:
    out = {}
    for _ in range(rng.randint(1, terms)):
        y = _exponent(rng, N, max_y)
        k = rng.randint(0, min(trunc.L, max(0, trunc.T - sum(y))))
        if form_degree is None:
            c = rng.randrange(1 << N)
        else:
            idx = rng.sample(range(N), min(form_degree, N))
            c = sum(1 << i for i in idx)
        key = (y, _exponent(rng, N, max_p), c, k, _exponent(rng, n, max_base))
        out[key] = out.get(key, 0) + _coef(rng)
    return WSLElement(n, N, trunc, out)


def random_form(rng: random.Random, n: int, N: int, degree: int, terms: int = 2, max_base: int = 1) -> EFormSeries:
    entries = []
    if degree > N:
        return EFormSeries.zero(n, N)
    for _ in range(rng.randint(1, terms)):
        idx = tuple(sorted(rng.sample(range(N), degree)))
        entries.append((0, idx, random_base(rng, n, 1, max_base)))
    return EFormSeries.from_entries(n, N, entries)
