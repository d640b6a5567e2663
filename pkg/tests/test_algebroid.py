import random

import pytest

from algebroid_fedosov.algebroid import (
    AlgebroidChart,
    EConnection,
    curvature_components,
    d_E,
    gauged_poisson_bracket,
    half_connection,
    hamiltonian_field,
    horizontal_lift,
    poisson_bracket_coordinates,
    validate_chart,
)
from algebroid_fedosov.ring import BasePoly, InputError, Q
from algebroid_fedosov.samples import random_base, random_form, random_section
from algebroid_fedosov.sections import EFormSeries, PolySection
from algebroid_fedosov.specfile import load_fixture

from conftest import FIXTURES


def chart(name):
    return load_fixture(name).chart()


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_validate(name):
    assert validate_chart(chart(name)).ok


def test_broken_jacobi_is_reported():
    # [e1,e2] = e3, [e2,e3] = e1, [e1,e3] = e1 violates Jacobi.
    c = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for (a, b, g, v) in ((0, 1, 2, 1), (1, 2, 0, 1), (0, 2, 0, 1)):
        c[a][b][g], c[b][a][g] = v, -v
    rep = validate_chart(AlgebroidChart(0, 3, c=c))
    assert not rep.ok
    assert any("Jacobi" in s for s in rep.issues)


def test_broken_anchor_is_reported():
    # rho(e1) = d/dq, rho(e2) = q d/dq but [e1, e2] = 0: rho is not a morphism.
    ch = AlgebroidChart(1, 2, anchor=[[1], ["q1"]])
    rep = validate_chart(ch)
    assert any("anchor compatibility" in s for s in rep.issues)
    with pytest.raises(InputError):
        ch.require_valid()


@pytest.mark.parametrize("name", FIXTURES)
def test_d_E_squares_to_zero(name):
    ch = chart(name)
    rng = random.Random(1)
    for deg in range(ch.N):
        for _ in range(5):
            w = random_form(rng, ch.n, ch.N, deg, max_base=2)
            assert d_E(d_E(w, ch), ch) == EFormSeries.zero(ch.n, ch.N)


def test_d_E_examples():
    ch = chart("anchor2")
    u = EFormSeries.function(BasePoly.parse("q1^2", 1), 2)
    assert str(d_E(u, ch)) == "2 q1 e[1] + 2 q1^2 e[2]"
    # d e^2 = -c^2_{12} e^1 ^ e^2 on the Heisenberg-free axb algebra
    ax = chart("axb")
    e2 = EFormSeries.from_entries(0, 2, [(0, (1,), BasePoly.const(0, 1))])
    assert str(d_E(e2, ax)) == "-e[1,2]"


@pytest.mark.parametrize("name", FIXTURES)
def test_half_connection_is_torsion_free(name):
    ch = chart(name)
    assert half_connection(ch).is_torsion_free(ch)


def test_curvature_of_so3_half_connection():
    # For a Lie algebra with Gamma = c/2: R(e_a,e_d)e_b = -(1/4)[[e_a,e_d],e_b].
    ch = chart("so3")
    R = curvature_components(half_connection(ch), ch)
    # [[e1,e2],e1] = [e3,e1] = e2, so R^2_{1,1,2} = -1/4
    assert R[1][0][0][1] == BasePoly.const(0, Q(-1, 4))
    assert R[2][2][0][1] == BasePoly.zero(0)


@pytest.mark.parametrize("name", FIXTURES)
def test_gauged_bracket_matches_coordinate_bracket(name):
    ch = chart(name)
    rng = random.Random(2)
    B0 = None
    if ch.N >= 2 and ch.n == 0 and not any(v for r in ch.c for s in r for v in s):
        B0 = EFormSeries.from_entries(0, ch.N, [(0, (0, 1), BasePoly.const(0, 3))])
    for _ in range(10):
        f = random_section(rng, ch.n, ch.N, max_fibre=2)
        g = random_section(rng, ch.n, ch.N, max_fibre=2)
        got = gauged_poisson_bracket(f, g, ch, half_connection(ch), B0)
        assert got == poisson_bracket_coordinates(f, g, ch, B0)


def test_gauged_bracket_is_connection_independent():
    ch = chart("tangent1")
    other = EConnection(1, 1, [[["q1^2"]]])
    rng = random.Random(3)
    for _ in range(10):
        f = random_section(rng, 1, 1, max_fibre=2)
        g = random_section(rng, 1, 1, max_fibre=2)
        assert gauged_poisson_bracket(f, g, ch, other) == gauged_poisson_bracket(f, g, ch)


def test_bracket_rejects_non_closed_B0():
    # [e1,e2] = e2, [e1,e3] = e3: d_E(e^2 ^ e^3) = -2 e^1 ^ e^2 ^ e^3.
    c = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for b in (1, 2):
        c[0][b][b], c[b][0][b] = 1, -1
    ch = AlgebroidChart(0, 3, c=c)
    B0 = EFormSeries.from_entries(0, 3, [(0, (1, 2), BasePoly.const(0, 1))])
    assert str(d_E(B0, ch)) == "-2 e[1,2,3]"
    p = PolySection.p(0, 3, 0)
    with pytest.raises(InputError, match="not d_E-closed"):
        gauged_poisson_bracket(p, p, ch, None, B0)


def test_linear_bracket_values():
    ch = chart("heis3")
    p = [PolySection.p(0, 3, a) for a in range(3)]
    assert poisson_bracket_coordinates(p[0], p[1], ch) == -p[2]
    tch = chart("tangent1")
    q = PolySection.from_base(BasePoly.var(1, 0), 1)
    assert poisson_bracket_coordinates(q, PolySection.p(1, 1, 0), tch) == PolySection.one(1, 1)


@pytest.mark.parametrize("name", ["anchor2", "so3", "tangent2"])
def test_hamiltonian_field_convention(name):
    # X_f(g) = {g, f}
    ch = chart(name)
    rng = random.Random(4)
    for _ in range(10):
        f = random_section(rng, ch.n, ch.N, max_fibre=2)
        g = random_section(rng, ch.n, ch.N, max_fibre=2)
        assert hamiltonian_field(f, ch).apply(g) == poisson_bracket_coordinates(g, f, ch)


def test_horizontal_lift_of_tangent_frame():
    ch = chart("tangent2")
    X = horizontal_lift(1, half_connection(ch), ch)
    assert str(X) == "(1) d/dq2"


def test_random_base_is_seeded():
    a = random_base(random.Random(9), 2)
    b = random_base(random.Random(9), 2)
    assert a == b
