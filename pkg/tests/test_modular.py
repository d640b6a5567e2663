import random

import pytest

from algebroid_fedosov.modular import (
    DensityWeights,
    ExtractedOperator,
    div_E,
    div_mu,
    divergence_property_failures,
    euler_defect,
    extract_operator,
    formal_adjoint_unit,
    is_unimodular_witness,
    modular_vector_field,
    tr_ad,
    tr_ad_failures,
    trace_certificate,
)
from algebroid_fedosov.ring import BasePoly, InputError, Q
from algebroid_fedosov.sections import EFormSeries, PolySection

from conftest import FIXTURES, P, cached_solution, make_setup


def chart(name):
    return make_setup(name, L=1).chart


def weights_for(ch, wM="0", wE="0"):
    return DensityWeights(BasePoly.parse(wM, ch.n), BasePoly.parse(wE, ch.n))


@pytest.mark.parametrize("name", FIXTURES)
def test_divergence_identities(name):
    ch = chart(name)
    rng = random.Random(41)
    for dw in (DensityWeights.constant(ch.n), weights_for(ch, "q1^2" if ch.n else "0", "q1" if ch.n else "0")):
        assert divergence_property_failures(ch, dw, rng, 4) == []
        assert tr_ad_failures(ch, dw, rng, 4) == []


def test_divergence_values():
    ch = chart("anchor2")
    dw = DensityWeights.constant(1)
    s = [BasePoly.parse("q1", 1), BasePoly.zero(1)]
    assert div_mu(s, dw, ch) == BasePoly.const(1, 1)
    assert div_E(s, dw, ch) == BasePoly.parse("q1 - 1", 1)


@pytest.mark.parametrize(
    "name, expected",
    [
        ("heis3", None),
        ("so3", None),
        ("abelian2", None),
        ("tangent2", None),
        ("axb", [(0, (0,), "1")]),
        ("anchor2", [(0, (0,), "1"), (0, (1,), "q1")]),
    ],
)
def test_tr_ad_values(name, expected):
    ch = chart(name)
    t = tr_ad(DensityWeights.constant(ch.n), ch)
    if expected is None:
        assert not t
    else:
        assert t == EFormSeries.from_entries(ch.n, ch.N, [(k, i, BasePoly.parse(v, ch.n)) for k, i, v in expected])


def test_anchor2_is_unimodular_after_a_density_shift():
    ch = chart("anchor2")
    dw = DensityWeights.constant(1)
    assert is_unimodular_witness(ch, dw, BasePoly.parse("q1", 1))
    assert not is_unimodular_witness(ch, dw, BasePoly.parse("-q1", 1))
    assert not tr_ad(weights_for(ch, "-q1"), ch)


def test_axb_has_no_witness():
    ch = chart("axb")
    assert not is_unimodular_witness(ch, DensityWeights.constant(0), BasePoly.zero(0))


@pytest.mark.parametrize("name", FIXTURES)
def test_modular_vector_field_routes_agree(name):
    ch = chart(name)
    X = modular_vector_field(DensityWeights.constant(ch.n), ch)
    assert X.is_zero() == (not tr_ad(DensityWeights.constant(ch.n), ch))


def test_modular_vector_field_value():
    ch = chart("axb")
    assert str(modular_vector_field(DensityWeights.constant(0), ch)) == "(1) d/dp1"


def test_adjoint_of_q_dq_on_flat_line():
    D = ExtractedOperator(1, 1, {((1,), (0,)): PolySection.parse("q1", 1, 1)})
    assert formal_adjoint_unit(D, DensityWeights.constant(1)) == PolySection.parse("-1", 1, 1)
    # With the density exp(q1): D*(1) = -(1 + q1).
    assert formal_adjoint_unit(D, weights_for(chart("tangent1"), "q1")) == PolySection.parse("-1 - q1", 1, 1)


def test_extracted_operator_values():
    sol = cached_solution("tangent1", Q(0), 3)
    D = extract_operator(P("p1", sol), 1, "left", sol)
    assert str(D) == "(-1) d/dq1"
    assert formal_adjoint_unit(D, DensityWeights.constant(1)) == PolySection.zero(1, 1)
    weyl = cached_solution("tangent1", Q(1, 2), 3)
    assert str(extract_operator(P("q1", weyl), 1, "left", weyl)) == "((1/2)) d/dp1"


def test_extracted_operator_reproduces_C_r():
    sol = cached_solution("anchor2", Q(1, 2), 3)
    f = P("q1*p1*p2", sol)
    for r in (1, 2, 3):
        D = extract_operator(f, r, "left", sol)
        g = P("q1^2*p2^2 + p1^3", sol)
        assert D.apply(g) == sol.star_section(f, g).nu_part(r)


def test_extraction_arguments_are_checked():
    sol = cached_solution("so3", Q(1, 2), 3)
    with pytest.raises(InputError, match="exceeds the truncation"):
        extract_operator(P("p1^2", sol), 4, "left", sol)
    with pytest.raises(InputError, match="at least the nu-order"):
        extract_operator(P("p1^2", sol), 2, "left", sol, m=1)
    with pytest.raises(InputError, match="unknown side"):
        extract_operator(P("p1^2", sol), 1, "middle", sol)


@pytest.mark.parametrize("name", ["so3", "anchor2", "heis3"])
def test_euler_homogeneity_of_C_r(name):
    sol = cached_solution(name, Q(1, 2), 3)
    for text in ("p1", "p1*p2", "p2^3"):
        f = P(text, sol)
        k = f.fibre_degree()
        for r in (1, 2, 3):
            for side in ("left", "commutator"):
                assert euler_defect(extract_operator(f, r, side, sol), k, r) is None


@pytest.mark.parametrize("name", ["heis3", "so3", "abelian2", "tangent2"])
def test_trace_certificate_small(name):
    sol = cached_solution(name, Q(1, 2), 2)
    cert = trace_certificate(sol, DensityWeights.constant(sol.setup.n), 2, 2)
    assert cert.passed, str(cert)


def test_trace_certificate_with_density_shift():
    sol = cached_solution("anchor2", Q(1, 2), 2)
    cert = trace_certificate(sol, DensityWeights.constant(1), 2, 2, u=BasePoly.parse("q1", 1))
    assert cert.passed, str(cert)


def test_trace_certificate_refuses_axb():
    sol = cached_solution("axb", Q(1, 2), 2)
    cert = trace_certificate(sol, DensityWeights.constant(0), 2, 2)
    assert not cert.passed
    assert str(cert).startswith("REFUSED tr ad = e[1]")


def test_trace_integral_fails_for_the_wrong_density():
    # Constant density on anchor2 is not invariant; some commutator has nonzero adjoint unit.
    sol = cached_solution("anchor2", Q(1, 2), 2)
    flat = DensityWeights.constant(1)
    units = [formal_adjoint_unit(extract_operator(P(f, sol), 1, "commutator", sol), flat) for f in ("p1", "p2")]
    assert any(units)
