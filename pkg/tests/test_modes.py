import pytest
from hypothesis import given, strategies as st

from sax.diagnostics import SaxError
from sax.modes import ModeTheory

from conftest import codes


def test_order_is_reflexive_and_transitive():
    mt = ModeTheory.build([("a", "lin", False), ("b", "aff", False), ("c", "unr", True)],
                          [("a", "b"), ("b", "c")])
    assert mt.leq("a", "a")
    assert mt.leq("a", "c")
    assert not mt.leq("c", "a")
    assert mt.geq("c", "a")
    assert mt.is_seq_only("c") and not mt.is_seq_only("a")
    assert mt.check() == []


def test_structural_properties():
    mt = ModeTheory.build([("l", "lin", False), ("a", "aff", False), ("s", "strict", False), ("u", "unr", False)])
    assert [mt.weakenable(m) for m in "lasu"] == [False, True, False, True]
    assert [mt.contractible(m) for m in "lasu"] == [False, False, True, True]


def test_monotonicity_violation_is_reported():
    mt = ModeTheory.build([("u", "unr", False), ("l", "lin", False)], [("u", "l")])
    assert [d.code for d in mt.check()] == ["SigmaNotMonotone"]


def test_unknown_mode():
    mt = ModeTheory.build([("m", "lin", False)])
    with pytest.raises(SaxError) as e:
        mt.leq("m", "zz")
    assert e.value.code == "UnknownMode"


def test_duplicate_mode_in_source():
    assert "DuplicateMode" in codes("mode m lin\nmode m unr\n")


KINDS = ["lin", "aff", "strict", "unr"]


@st.composite
def theories(draw):
    n = draw(st.integers(1, 5))
    names = [f"m{i}" for i in range(n)]
    kinds = draw(st.lists(st.sampled_from(KINDS), min_size=n, max_size=n))
    edges = draw(st.lists(st.tuples(st.sampled_from(names), st.sampled_from(names)), max_size=8))
    return ModeTheory.build([(m, k, False) for m, k in zip(names, kinds)], edges), names, edges


@given(theories())
def test_closure_is_a_preorder(t):
    mt, names, edges = t
    for a in names:
        assert mt.leq(a, a)
        for b in names:
            for c in names:
                if mt.leq(a, b) and mt.leq(b, c):
                    assert mt.leq(a, c)
    for lo, hi in edges:
        assert mt.leq(lo, hi)


@given(theories())
def test_check_agrees_with_definition(t):
    mt, names, _ = t
    violated = any(mt.leq(k, m) and not mt.sigma[m] >= mt.sigma[k] for k in names for m in names)
    assert bool(mt.check()) == violated
