import random
from fractions import Fraction

import pytest

from algebroid_fedosov.fedosov import (
    FedosovSetup,
    associativity_report,
    fedosov_equation_residual,
    homogeneity_check,
    kappa_full_recursion_residual,
    left_right_closed_forms,
    ordering_and_parity_checks,
    parity_check,
    star,
    termination_check,
)
from algebroid_fedosov.ring import BasePoly, InputError, Q, Truncation
from algebroid_fedosov.samples import random_base, random_section
from algebroid_fedosov.sections import EFormSeries, PolySection
from algebroid_fedosov.wsl import delta_inv

from conftest import FIXTURES, KAPPAS, P, cached_solution, from_oracle, make_setup, to_oracle
from oracles import flat_kappa_product, moyal_product


def closed_B(n, N, scale=1, nu_power=0):
    """``scale * nu^nu_power * e^1 ^ e^2``; closed on every bundled chart of rank >= 2."""
    if N < 2:
        return EFormSeries.zero(n, N)
    return EFormSeries.from_entries(n, N, [(nu_power, (0, 1), BasePoly.const(n, scale))])


# -- derived values from the independent oracles -----------------------------


@pytest.mark.parametrize("kappa", KAPPAS + (Q(1, 3),))
@pytest.mark.parametrize("name", ["tangent1", "tangent2"])
def test_flat_cotangent_product_matches_ordered_oracle(name, kappa):
    st = make_setup(name, kappa, L=4)
    sol = st.solution()
    rng = random.Random(21)
    for _ in range(15):
        f = random_section(rng, st.n, st.N, max_fibre=3)
        g = random_section(rng, st.n, st.N, max_fibre=3)
        expect = flat_kappa_product(to_oracle(f), to_oracle(g), st.n, Fraction(kappa), 4)
        assert sol.star_section(f, g) == from_oracle(expect, st.n, st.N)


def test_heisenberg_weyl_product_matches_moyal_oracle():
    sol = cached_solution("heis3", Q(1, 2), 4)
    p3 = {(0, (0, 0, 1), ()): Fraction(1)}
    pi = {(0, 1): {k: -c for k, c in p3.items()}, (1, 0): p3}
    rng = random.Random(22)
    for _ in range(15):
        f = random_section(rng, 0, 3, max_fibre=3)
        g = random_section(rng, 0, 3, max_fibre=3)
        assert sol.star_section(f, g) == from_oracle(moyal_product(to_oracle(f), to_oracle(g), 3, pi, 4), 0, 3)


def test_gauged_abelian_product_matches_moyal_oracle():
    # Constant B = 3 e^1 ^ e^2 gives the Poisson tensor pi^{12} = -3.
    st = make_setup("abelian2", L=4, B=closed_B(0, 2, 3))
    sol = st.solution()
    pi = {(0, 1): {(0, (0, 0), ()): Fraction(-3)}, (1, 0): {(0, (0, 0), ()): Fraction(3)}}
    rng = random.Random(23)
    for _ in range(15):
        f = random_section(rng, 0, 2, max_fibre=3)
        g = random_section(rng, 0, 2, max_fibre=3)
        assert sol.star_section(f, g) == from_oracle(moyal_product(to_oracle(f), to_oracle(g), 2, pi, 4), 0, 2)


def test_frozen_products():
    # Values below come from the oracles above.
    heis = cached_solution("heis3", Q(1, 2), 4)
    assert str(heis.star_section(P("p1", heis), P("p2", heis))) == "p1*p2 - (1/2) nu p3"
    assert str(heis.star_section(P("p1^2", heis), P("p2^2", heis))) == (
        "p1^2*p2^2 - 2 nu p1*p2*p3 + (1/2) nu^2 p3^2"
    )
    t0 = cached_solution("tangent1", Q(0), 4)
    assert str(t0.star_section(P("p1", t0), P("q1", t0))) == "q1*p1 - nu"
    assert str(t0.star_section(P("p1^2", t0), P("q1^2", t0))) == "q1^2*p1^2 - 4 nu q1*p1 + 2 nu^2"


# -- the Fedosov solution -----------------------------------------------------


@pytest.mark.parametrize("name", FIXTURES)
def test_solution_equations(name):
    st = make_setup(name, L=3, T=5, B=closed_B(*_dims(name), 1) + closed_B(*_dims(name), 2, 1))
    sol = st.solution()
    assert not delta_inv(sol.r)
    assert not fedosov_equation_residual(sol)
    assert sol.r.max_degree("deg_s*") <= 1
    for kappa in KAPPAS:
        assert not kappa_full_recursion_residual(sol, kappa)
        assert make_setup(name, kappa, L=3, T=5, B=st.B).solution().r == sol.r


def _dims(name):
    st = make_setup(name, L=1)
    return st.n, st.N


@pytest.mark.parametrize("name", FIXTURES)
def test_r0_is_linear_in_B(name):
    n, N = _dims(name)
    one = make_setup(name, L=3, T=5, B=closed_B(n, N, 1)).solution()
    two = make_setup(name, L=3, T=5, B=closed_B(n, N, 2)).solution()
    assert two.r0 == one.r0.scale(2)
    assert two.r1 == one.r1
    assert one.r == one.r0 + one.r1


def test_non_closed_B_is_rejected():
    c = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for b in (1, 2):
        c[0][b][b], c[b][0][b] = 1, -1
    from algebroid_fedosov.algebroid import AlgebroidChart, half_connection

    ch = AlgebroidChart(0, 3, c=c)
    with pytest.raises(InputError, match="not d_E-closed"):
        B = EFormSeries.from_entries(0, 3, [(0, (1, 2), BasePoly.const(0, 1))])
        FedosovSetup(ch, half_connection(ch), B, Q(1, 2), Truncation(2, 2))


# -- the star product -----------------------------------------------------------


@pytest.mark.parametrize("kappa", KAPPAS)
@pytest.mark.parametrize("name", FIXTURES)
def test_associativity_and_first_orders(name, kappa):
    sol = cached_solution(name, kappa, 4)
    rep = associativity_report(sol, seed=5, trials=8, max_fibre=2)
    assert rep.passed, str(rep)


@pytest.mark.parametrize("name", ["so3", "anchor2", "axb"])
def test_termination_and_C_r_degrees(name):
    sol = cached_solution(name, Q(1, 2), 5)
    rng = random.Random(24)
    for _ in range(10):
        f = random_section(rng, sol.setup.n, sol.setup.N, max_fibre=2, max_base=1)
        g = random_section(rng, sol.setup.n, sol.setup.N, max_fibre=2, max_base=1)
        assert termination_check(f, g, sol)


def test_linear_functions_commute_by_the_bracket():
    # For a Lie algebra, p_a * f - f * p_a = -nu p_g c^g_{ab} d f / d p_b exactly.
    sol = cached_solution("so3", Q(1, 2), 4)
    ch = sol.setup.chart
    from algebroid_fedosov.algebroid import poisson_bracket_coordinates

    rng = random.Random(25)
    for _ in range(10):
        f = random_section(rng, 0, 3, max_fibre=3)
        for a in range(3):
            pa = PolySection.p(0, 3, a)
            com = sol.star_section(pa, f) - sol.star_section(f, pa)
            assert com == poisson_bracket_coordinates(pa, f, ch).nu_shift(1)


def test_star_stabilization_flag():
    st = make_setup("so3", L=4, T=4)
    sol = st.solution()
    res = star(P("p1^2", sol), P("p2", sol), sol, stabilize=True)
    assert str(res) == str(sol.star_section(P("p1^2", sol), P("p2", sol)))
    assert res.C_r(0) == P("p1^2*p2", sol)
    # T = L already gives stable products on the bundled charts.
    for L in (1, 2, 3):
        low = make_setup("anchor2", L=L, T=L).solution()
        star(P("p1^2", low), P("q1*p2^2", low), low, stabilize=True)


def test_star_rejects_wrong_arity():
    sol = cached_solution("so3", Q(1, 2), 4)
    with pytest.raises(InputError):
        star(PolySection.p(0, 2, 0), PolySection.p(0, 3, 0), sol)


# -- ordering identities -----------------------------------------------------


@pytest.mark.parametrize("name", FIXTURES)
def test_standard_and_antistandard_identities(name):
    rng = random.Random(26)
    s0 = cached_solution(name, Q(0), 4)
    s1 = cached_solution(name, Q(1), 4)
    n, N = s0.setup.n, s0.setup.N
    for _ in range(6):
        u = PolySection.from_base(random_base(rng, n), N)
        f = random_section(rng, n, N, max_fibre=2)
        assert s0.star_section(u, f) == u * f
        assert s1.star_section(f, u) == f * u


@pytest.mark.parametrize("kappa", KAPPAS + (Q(1, 3),))
@pytest.mark.parametrize("name", ["anchor2", "tangent2", "so3"])
def test_closed_form_multiplications(name, kappa):
    sol = cached_solution(name, kappa, 4)
    n, N = sol.setup.n, sol.setup.N
    rng = random.Random(27)
    for _ in range(5):
        u = random_base(rng, n, 2, 2) if n else BasePoly.const(0, 3)
        f = random_section(rng, n, N, max_fibre=3)
        left, right = left_right_closed_forms(u, f, sol)
        U = PolySection.from_base(u, N)
        assert sol.star_section(U, f) == left
        assert sol.star_section(f, U) == right


# -- homogeneity and parity ---------------------------------------------------


@pytest.mark.parametrize("name", ["abelian2", "so3", "anchor2"])
def test_homogeneity(name):
    n, N = _dims(name)
    rng = random.Random(28)
    quantum = make_setup(name, L=4, B=closed_B(n, N, 1, nu_power=1)).solution()
    assert homogeneity_check(quantum, rng, 4) == (True, None)
    classical = make_setup(name, L=4, B=closed_B(n, N, 1)).solution()
    ok, witness = homogeneity_check(classical, rng, 4)
    assert not ok and "defect" in witness


@pytest.mark.parametrize("name", FIXTURES)
def test_weyl_parity(name):
    n, N = _dims(name)
    sol = make_setup(name, L=4, B=closed_B(n, N, 2) + closed_B(n, N, 1, nu_power=2)).solution()
    assert parity_check(sol, random.Random(29), 6)


def test_parity_fails_for_odd_B():
    sol = make_setup("abelian2", L=3, B=closed_B(0, 2, 1, nu_power=1)).solution()
    assert not parity_check(sol, random.Random(30), 6)


@pytest.mark.parametrize("name", ["heis3", "tangent1"])
def test_combined_ordering_report(name):
    rep = ordering_and_parity_checks(cached_solution(name, Q(1, 2), 4), random.Random(31), 4)
    assert rep.passed, str(rep)
