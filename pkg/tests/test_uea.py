import random

import pytest

from algebroid_fedosov.ring import InputError, Q
from algebroid_fedosov.uea import (
    UEAWord,
    associativity_test,
    confluence_test,
    exact_rank,
    gutt_compare,
    normal_order,
    pbw_product,
    pbw_words,
    phi,
    phi_check,
    sym,
    sym_inverse,
)

from conftest import P, cached_solution, make_setup

LIE = ["heis3", "so3", "axb", "abelian2"]


def chart(name):
    return make_setup(name, L=1).chart


def test_normal_order_examples():
    h = chart("heis3")
    assert str(normal_order(UEAWord.word(3, [1, 0]), h)) == "e1*e2 + nu e3"
    assert str(normal_order(UEAWord.word(3, [1, 1, 0]), h)) == "e1*e2*e2 + 2 nu e2*e3"
    so = chart("so3")
    assert str(normal_order(UEAWord.word(3, [2, 1, 0]), so)) == (
        "e1*e2*e3 + nu e1*e1 - nu e2*e2 + nu e3*e3"
    )


@pytest.mark.parametrize("name", LIE)
def test_rewriting_is_confluent_and_associative(name):
    ch = chart(name)
    assert confluence_test(ch, random.Random(1), words=40, max_len=5)
    assert associativity_test(ch, random.Random(2), trials=15, max_len=3)


def test_pbw_product_of_normal_words():
    h = chart("heis3")
    e1, e2 = UEAWord.word(3, [0]), UEAWord.word(3, [1])
    assert pbw_product(e2, e1, h) == normal_order(UEAWord.word(3, [1, 0]), h)
    assert pbw_product(e1, e2, h).is_normal()


def test_pbw_word_count():
    # Monomials of degree <= 3 in three variables.
    assert len(pbw_words(3, 3)) == 20


def test_non_point_base_is_rejected():
    with pytest.raises(InputError):
        normal_order(UEAWord.word(2, [1, 0]), chart("anchor2"))


def test_exact_rank():
    rank, kernel = exact_rank([{"a": Q(1), "b": Q(2)}, {"a": Q(2), "b": Q(4)}])
    assert rank == 1
    assert kernel == [Q(-2), Q(1)]
    assert exact_rank([{"a": Q(1)}, {"b": Q(1)}]) == (2, None)


def test_symmetrisation():
    st = make_setup("heis3", L=1)
    assert str(sym(P("p1*p2", st))) == "(1/2) e1*e2 + (1/2) e2*e1"
    x = normal_order(UEAWord.word(3, [1, 0]), chart("heis3"))
    assert sym_inverse(x, chart("heis3")) == P("p1*p2 + (1/2)*nu*p3", st)


@pytest.mark.parametrize("name", LIE)
def test_phi_relations_and_rank(name):
    sol = cached_solution(name, Q(1, 2), 4)
    rep = phi_check(sol, 3)
    assert rep.passed, str(rep)


def test_phi_requires_weyl_point():
    sol = cached_solution("heis3", Q(0), 3)
    with pytest.raises(InputError, match="kappa = 1/2"):
        phi_check(sol, 2)


def test_phi_of_a_commutator_word():
    sol = cached_solution("so3", Q(1, 2), 4)
    w = UEAWord.word(3, [0, 1]) - UEAWord.word(3, [1, 0])
    assert phi(w, sol) == P("-nu*p3", sol)


def test_gutt_equality_for_heisenberg_and_abelian():
    for name in ("heis3", "abelian2"):
        lines = gutt_compare(cached_solution(name, Q(1, 2), 4), 3)
        assert all(line.equal for line in lines)


def test_gutt_mismatch_on_so3_is_reported():
    # Recorded finding: the Weyl product with the connection c/2 differs from
    # the symmetrisation route already for p1 * p1 on so(3).
    lines = gutt_compare(cached_solution("so3", Q(1, 2), 4), 2)
    bad = [line for line in lines if not line.equal]
    assert bad
    assert str(bad[0]) == "MISMATCH f=p1 g=p1 : star=p1^2 + (1/8) nu^2 ; sym-route=p1^2"
