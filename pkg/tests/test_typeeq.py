from hypothesis import given, settings, strategies as st

from sax.ast import Down, Lolli, One, Plus, TVar, Tensor, Up, With
from sax.typeeq import equal_bounded, expand_head, types_equal, unfold

from conftest import checked

PROG = checked("""
    mode m lin
    mode u unr
    order m < u
    type nat @ m = +{zero: 1, suc: nat}
    type nat2 @ m = +{zero: 1, suc: +{zero: 1, suc: nat2}}
    type stream @ m = &{head: nat * stream}
    type stream2 @ m = &{head: nat2 * &{head: nat * stream2}}
    type odd @ m = +{zero: 1, suc: nat}
    type fun @ m = nat -o fun
    type alias @ m = nat
""")
SIG = PROG.sig
NAT = TVar("nat", "m")


def tv(n):
    return TVar(n, "m")


def test_unfolding_and_alias():
    assert types_equal(SIG, NAT, tv("alias"))
    assert types_equal(SIG, NAT, unfold(SIG, NAT))
    assert isinstance(expand_head(SIG, tv("alias")), Plus)


def test_equirecursive_equalities():
    assert types_equal(SIG, NAT, tv("nat2"))
    assert types_equal(SIG, tv("stream"), tv("stream2"))
    assert types_equal(SIG, tv("odd"), NAT)


def test_inequalities():
    one = One("m")
    assert not types_equal(SIG, NAT, one)
    assert not types_equal(SIG, NAT, Plus((("zero", one),), "m"))
    assert not types_equal(SIG, Plus((("a", one),), "m"), With((("a", one),), "m"))
    assert not types_equal(SIG, Down("u", "m", One("u")), Up("m", "m", one))
    assert not types_equal(SIG, tv("fun"), Lolli(NAT, NAT, "m"))


def test_branch_order_is_irrelevant():
    one = One("m")
    a = Plus((("x", one), ("y", NAT)), "m")
    b = Plus((("y", NAT), ("x", one)), "m")
    assert types_equal(SIG, a, b)


def types(depth=3):
    leaf = st.sampled_from([One("m"), NAT, tv("nat2"), tv("stream"), tv("alias")])
    labels = st.sampled_from(["a", "b", "zero", "suc"])

    def grow(inner):
        branches = st.dictionaries(labels, inner, min_size=1, max_size=3).map(lambda d: tuple(d.items()))
        return st.one_of(
            branches.map(lambda b: Plus(b, "m")),
            branches.map(lambda b: With(b, "m")),
            st.tuples(inner, inner).map(lambda p: Tensor(p[0], p[1], "m")),
            st.tuples(inner, inner).map(lambda p: Lolli(p[0], p[1], "m")),
        )

    return st.recursive(leaf, grow, max_leaves=8)


@settings(max_examples=200)
@given(types())
def test_reflexive_and_invariant_under_unfolding(t):
    assert types_equal(SIG, t, t)
    assert types_equal(SIG, t, expand_head(SIG, t))


@settings(max_examples=200)
@given(types(), types())
def test_symmetric_and_agrees_with_bounded_unrolling(a, b):
    eq = types_equal(SIG, a, b)
    assert eq == types_equal(SIG, b, a)
    if eq:
        # the coinductive answer must survive any finite number of unfoldings
        assert equal_bounded(SIG, a, b, 12)
    else:
        assert not equal_bounded(SIG, a, b, 12)


@settings(max_examples=100)
@given(types(), types(), types())
def test_transitive(a, b, c):
    if types_equal(SIG, a, b) and types_equal(SIG, b, c):
        assert types_equal(SIG, a, c)
