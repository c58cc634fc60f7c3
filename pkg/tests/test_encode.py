from hypothesis import given, strategies as st

from sax import library
from sax.encode import (
    decode_bin, decode_int, decode_nat, encode_bin, encode_int, encode_nat, encode_tree, fold_tree,
    numeral_kind, tree_size,
)


@given(st.integers(0, 2**64))
def test_binary_round_trip(n):
    assert decode_bin(encode_bin(n)) == n


@given(st.integers(0, 300))
def test_unary_round_trip(n):
    assert decode_nat(encode_nat(n)) == n
    assert decode_nat(encode_nat(n, "z", "s"), "z", "s") == n


def test_six_is_lsb_first():
    assert encode_bin(6) == ("label", "b0", ("label", "b1", ("label", "b1", ("label", "e", ("unit",)))))


def test_malformed_numbers():
    assert decode_bin(("label", "b0", ("unit",))) is None
    assert decode_nat(("label", "suc", ("label", "b0", ("unit",)))) is None


def test_number_kinds():
    counter = library.program("counter.sax")
    bin_t = counter.sig.decls["succ"].result[1]
    nat_t = counter.sig.decls["main"].params[0][1]
    assert numeral_kind(counter.sig, bin_t) == ("bin", ())
    assert numeral_kind(counter.sig, nat_t) == ("nat", ("zero", "suc"))
    assert decode_int(counter.sig, nat_t, encode_int(counter.sig, nat_t, 9)) == 9


trees = st.recursive(st.none(), lambda t: st.tuples(t, st.integers(0, 5), t), max_leaves=20)


@given(trees)
def test_fold_counts_nodes(shape):
    assert fold_tree(shape, 0, lambda l, _, r: l + 1 + r) == tree_size(shape)
    enc = encode_tree(shape)
    assert enc[1] == ("empty" if shape is None else "node")
