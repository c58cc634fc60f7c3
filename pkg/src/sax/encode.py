"""Conversions between Python integers and trees and their encodings as values.

Value trees are the nested tuples used by :func:`sax.runtime.build` and
:func:`sax.runtime.decode`.
"""

from __future__ import annotations

from .ast import One, Plus
from .typeeq import expand_head

UNIT = ("unit",)


def encode_bin(n: int):
    """Binary numbers, least significant bit first, ending in ``e(<>)``."""
    if n < 0:
        raise ValueError("negative numbers have no encoding")
    tree = ("label", "e", UNIT)
    bits = []
    while n:
        bits.append(n & 1)
        n >>= 1
    for b in reversed(bits):
        tree = ("label", f"b{b}", tree)
    return tree


def decode_bin(tree) -> int | None:
    n, weight = 0, 1
    while tree[0] == "label" and tree[1] in ("b0", "b1"):
        n += weight * (tree[1] == "b1")
        weight *= 2
        tree = tree[2]
    if tree == ("label", "e", UNIT):
        return n
    return None


def encode_nat(n: int, zero: str = "zero", suc: str = "suc"):
    if n < 0:
        raise ValueError("negative numbers have no encoding")
    tree = ("label", zero, UNIT)
    for _ in range(n):
        tree = ("label", suc, tree)
    return tree


def decode_nat(tree, zero: str = "zero", suc: str = "suc") -> int | None:
    n = 0
    while tree[0] == "label" and tree[1] == suc:
        n += 1
        tree = tree[2]
    return n if tree == ("label", zero, UNIT) else None


def encode_tree(shape, elem=encode_nat):
    """``shape`` is None for a leaf or ``(left, x, right)`` for a node."""
    if shape is None:
        return ("label", "empty", UNIT)
    left, x, right = shape
    return ("label", "node", ("pair", encode_tree(left, elem), ("pair", elem(x), encode_tree(right, elem))))


def fold_tree(shape, z, f):
    """The reference fold: ``f(fold l, x, fold r)`` at nodes and ``z`` at leaves."""
    if shape is None:
        return z
    left, x, right = shape
    return f(fold_tree(left, z, f), x, fold_tree(right, z, f))


def tree_size(shape) -> int:
    return 0 if shape is None else 1 + tree_size(shape[0]) + tree_size(shape[2])


# -------------------------------------------------- integers at a named type


def numeral_kind(sig, ty) -> tuple[str, tuple[str, ...]] | None:
    """Recognise binary (``b0``/``b1``/``e``) and unary number types.

    Returns ``("bin", ())`` or ``("nat", (zero, suc))``.
    """
    h = expand_head(sig, ty)
    if not isinstance(h, Plus):
        return None
    branches = dict(h.branches)
    if set(branches) == {"b0", "b1", "e"}:
        return ("bin", ())
    if len(branches) == 2:
        base = [l for l, t in branches.items() if isinstance(expand_head(sig, t), One)]
        step = [l for l, t in branches.items() if l not in base]
        if len(base) == 1 and len(step) == 1 and isinstance(expand_head(sig, branches[step[0]]), Plus):
            return ("nat", (base[0], step[0]))
    return None


def encode_int(sig, ty, n: int):
    kind = numeral_kind(sig, ty)
    if kind is None:
        raise ValueError("the type is not a number type")
    if kind[0] == "bin":
        return encode_bin(n)
    return encode_nat(n, *kind[1])


def decode_int(sig, ty, tree) -> int | None:
    kind = numeral_kind(sig, ty)
    if kind is None:
        return None
    if kind[0] == "bin":
        return decode_bin(tree)
    return decode_nat(tree, *kind[1])


def decode_result(sig, ty, tree):
    """An integer for number types, looking through shifts and the left of ``/\\``."""
    from .ast import And, Down
    from .elaborate import unfold_vars

    n = decode_int(sig, ty, tree)
    if n is not None:
        return n
    sugar = unfold_vars(sig, ty)
    if isinstance(sugar, And) and tree[0] == "pair" and tree[1][0] == "shift":
        return decode_result(sig, sugar.left, tree[1][1])
    h = expand_head(sig, ty)
    if isinstance(h, Down) and tree[0] == "shift":
        return decode_result(sig, h.body, tree[1])
    return None
