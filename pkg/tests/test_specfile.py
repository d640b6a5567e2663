import pytest

from algebroid_fedosov.ring import InputError, Q, Truncation
from algebroid_fedosov.specfile import fixture_names, load_fixture, parse_spec


def test_fixture_list():
    assert fixture_names() == [
        "abelian1",
        "abelian2",
        "anchor2",
        "axb",
        "heis3",
        "so3",
        "tangent1",
        "tangent2",
    ]


def test_spec_with_chart_include_and_overrides():
    spec = parse_spec("chart = heis3\nkappa = 0\nL = 3\nT = 5\nB[1] = (1,2): 2\n")
    assert spec.name == "heis3"
    assert spec.kappa == Q(0)
    assert spec.truncation == Truncation(3, 5)
    B = spec.B_series()
    assert str(B) == "2 nu e[1,2]"
    st = spec.fedosov_setup()
    assert st.N == 3 and st.kappa == 0


def test_antisymmetric_completion_is_noted():
    spec = load_fixture("anchor2")
    assert spec.c[(1, 0, 1)] == "-(1)"
    assert any("completed c[2][1][2]" in s for s in spec.notes)


@pytest.mark.parametrize(
    "text, needle",
    [
        ("N = 2\nc[1][2][3] = 1\n", "out of range"),
        ("N = 2\nfoo = 1\n", "line 2, column 1"),
        ("N = 2\nkappa = x\n", "kappa must be rational"),
        ("N = 2\nL = 4\nT = 2\n", "T >= L"),
        ("N = 2\nanchor[0][1] = 1\n", "indices start at 1"),
        ("n = 1\nN = 1\nanchor[1][1] = q2\n", "unknown base variable"),
        ("N = 1\nc[1][1][1] = 1\n", "must vanish"),
        ("n = 0\n", "missing the fibre dimension"),
        ("N = 2\nB[0] = 1,2: 1\n", "B entries"),
        ("N = 2\nchart = nowhere\n", "chart file not found"),
    ],
)
def test_spec_errors(text, needle):
    with pytest.raises(InputError, match=needle):
        parse_spec(text)


def test_echo_is_one_based_and_canonical():
    text = load_fixture("anchor2").echo()
    assert "anchor[2][1] = q1" in text
    assert "c[1][2][1] = -q1 + 1" in text
    assert parse_spec(text).echo() == text
