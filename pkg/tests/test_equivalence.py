import random

import pytest

from algebroid_fedosov.algebroid import EConnection, d_E
from algebroid_fedosov.equivalence import (
    bernoulli,
    connection_report,
    default_gamma_tr,
    derivation_from_closed_A,
    gauge_iso,
    gauge_report,
    inner_automorphism,
    intertwining_defect,
    kappa_equivalence,
    make_connection_change,
    make_gauge,
    make_ordering_change,
    nu_ad_star,
    ordering_report,
)
from algebroid_fedosov.ring import BasePoly, InputError, Q
from algebroid_fedosov.samples import random_section
from algebroid_fedosov.sections import EFormSeries, PolySection

from conftest import P, make_setup


def form(n, N, entries):
    """``[(k, (a,), "poly")]`` -> E-one-form series."""
    return EFormSeries.from_entries(n, N, [(k, idx, BasePoly.parse(t, n)) for k, idx, t in entries])


def pairs_for(st, count=4, seed=0, max_fibre=2):
    rng = random.Random(seed)
    n, N = st.n, st.N
    return [
        (random_section(rng, n, N, max_fibre=max_fibre, max_base=1), random_section(rng, n, N, max_fibre=max_fibre, max_base=1))
        for _ in range(count)
    ]


def test_bernoulli_numbers():
    assert bernoulli(6) == [Q(1), Q(-1, 2), Q(1, 6), Q(0), Q(-1, 30), Q(0), Q(1, 42)]


GAUGE_CASES = [
    ("tangent2", Q(1, 2), [(0, (1,), "q1")]),
    ("so3", Q(1, 2), [(0, (0,), "1")]),
    ("anchor2", Q(1, 3), [(0, (0,), "q1"), (1, (1,), "q1^2")]),
    ("heis3", Q(0), [(0, (2,), "1"), (1, (0,), "2")]),
]


@pytest.mark.parametrize("name, kappa, entries", GAUGE_CASES)
def test_gauge_equivalence(name, kappa, entries):
    st = make_setup(name, kappa, L=3)
    A = form(st.n, st.N, entries)
    g = make_gauge(st, A)
    assert g.setup_prime.B == st.B - d_E(A, st.chart).truncated(st.trunc)
    rep = gauge_report(g, pairs_for(st), [f for f, _ in pairs_for(st, 3, 1)])
    assert rep.passed, str(rep)


def test_gauge_image_value():
    st = make_setup("tangent2", L=3)
    g = make_gauge(st, form(2, 2, [(0, (1,), "q1")]))
    assert str(gauge_iso(P("p1*p2", st), g)) == "q1*p1 + p1*p2"
    assert str(g.setup_prime.B) == "-e[1,2]"


def test_gauge_rejects_inconsistent_B_prime():
    st = make_setup("tangent2", L=2)
    A = form(2, 2, [(0, (1,), "q1")])
    with pytest.raises(InputError, match="witness"):
        make_gauge(st, A, B_prime=EFormSeries.zero(2, 2))


def test_gauge_rejects_two_forms():
    st = make_setup("tangent2", L=2)
    with pytest.raises(InputError):
        make_gauge(st, form(2, 2, [(0, (0, 1), "1")]))


@pytest.mark.parametrize("kappa", [Q(0), Q(1, 2), Q(1)])
@pytest.mark.parametrize("name, u", [("tangent1", "q1^2"), ("anchor2", "q1"), ("tangent2", "q1*q2")])
def test_exact_A_gives_inner_automorphism(name, u, kappa):
    st = make_setup(name, kappa, L=3)
    sol = st.solution()
    ub = BasePoly.parse(u, st.n)
    A = d_E(EFormSeries.function(ub, st.N), st.chart).nu_shift(1)
    g = make_gauge(st, A)
    assert g.setup_prime.B == st.B
    U = PolySection.from_base(ub, st.N)
    inner = inner_automorphism(U, sol)
    D = derivation_from_closed_A(d_E(EFormSeries.function(ub, st.N), st.chart), st)
    for f in [f for f, _ in pairs_for(st, 3, 2)]:
        assert gauge_iso(f, g) == inner(f)
        assert D(f).truncated_nu(st.trunc.L - 1) == nu_ad_star(U, sol)(f)


def test_derivation_rejects_non_closed_A():
    st = make_setup("anchor2", L=2)
    with pytest.raises(InputError, match="not d_E-closed"):
        derivation_from_closed_A(form(1, 2, [(0, (0,), "q1^2")]), st)


def test_intertwining_defect_detects_a_wrong_map():
    st = make_setup("tangent2", L=2)
    sol = st.solution()
    f, g = P("p1", st), P("q1", st)
    assert intertwining_defect(lambda s: s, f, g, sol, sol) == PolySection.zero(2, 2)
    assert intertwining_defect(lambda s: s.scale(2), f, g, sol, sol)


CONNECTION_CASES = [
    ("tangent1", Q(1, 2), 3, [[["q1"]]]),
    ("anchor2", Q(0), 3, None),
    ("heis3", Q(1, 2), 4, None),
]


def _perturbed(st, gamma):
    N, n = st.N, st.n
    base = st.conn.gamma
    if gamma is not None:
        return EConnection(n, N, gamma)
    # add a symmetric tensor S_{ab}^g = delta_{a0} delta_{b0} delta_{g, N-1} (q1 if available)
    g = [[[base[a][b][c] for c in range(N)] for b in range(N)] for a in range(N)]
    bump = BasePoly.parse("q1" if n else "1", n)
    g[0][0][N - 1] = g[0][0][N - 1] + bump
    return EConnection(n, N, g)


@pytest.mark.parametrize("name, kappa, L, gamma", CONNECTION_CASES)
def test_connection_equivalence(name, kappa, L, gamma):
    st = make_setup(name, kappa, L=L)
    cc = make_connection_change(st, _perturbed(st, gamma))
    rep = connection_report(cc, pairs_for(st, 3, 3))
    assert rep.passed, str(rep)


def test_connection_change_rejects_torsion():
    st = make_setup("heis3", L=2)
    with pytest.raises(InputError):
        make_connection_change(st, EConnection(0, 3))


ORDERING_CASES = [
    ("abelian2", Q(0), Q(1, 2)),
    ("heis3", Q(0), Q(1)),
    ("so3", Q(1, 2), Q(0)),
    ("axb", Q(0), Q(1)),
    ("anchor2", Q(0), Q(1, 2)),
    ("tangent2", Q(1), Q(1, 3)),
]


@pytest.mark.parametrize("name, k0, k1", ORDERING_CASES)
def test_ordering_equivalence(name, k0, k1):
    st = make_setup(name, k0, L=3)
    oc = make_ordering_change(st, k1)
    rep = ordering_report(oc, pairs_for(st, 3, 4))
    assert rep.passed, str(rep)


@pytest.mark.parametrize(
    "name, expected",
    [("axb", "(1/2) e[1]"), ("anchor2", "-(1/2) q1 e[2] - (1/2) e[1] + (1/2) e[2]"), ("so3", "0"), ("heis3", "0")],
)
def test_trace_one_form_values(name, expected):
    gamma = default_gamma_tr(make_setup(name, L=2))
    got = str(gamma)
    # compare as forms, independent of term order
    assert gamma == _parse_form(expected, gamma.n, gamma.N), got


def _parse_form(text, n, N):
    if text == "0":
        return EFormSeries.zero(n, N)
    out = EFormSeries.zero(n, N)
    for part in text.replace("- ", "+ -").split("+ "):
        part = part.strip()
        if not part:
            continue
        coef, _, rest = part.rpartition("e[")
        idx = int(rest.rstrip("]")) - 1
        coef = coef.strip() or "1"
        coef = {"-": "-1"}.get(coef, coef).replace("(", "").replace(")", "").replace(" ", "*")
        out = out + EFormSeries.from_entries(n, N, [(0, (idx,), BasePoly.parse(coef, n))])
    return out


def test_ordering_change_rejects_bad_gamma():
    st = make_setup("axb", L=2)
    with pytest.raises(InputError, match="witness"):
        make_ordering_change(st, Q(1), gamma_tr=form(0, 2, [(0, (1,), "1")]))


def test_kappa_equivalence_value_on_flat_plane():
    # On flat R^1 the standard-to-Weyl map is exp((nu/2) d_q d_p).
    st = make_setup("tangent1", Q(0), L=3)
    oc = make_ordering_change(st, Q(1, 2))
    assert kappa_equivalence(P("q1*p1", st), oc) == P("q1*p1 + (1/2)*nu", st)
