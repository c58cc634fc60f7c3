"""Equirecursive type equality, decided coinductively."""

from __future__ import annotations

from .ast import (
    And, Arrow, Down, Fut, Imp, Lolli, Monad, One, Par, Plus, Signature, Tensor,
    TVar, Type, Up, With,
)
from .diagnostics import Diagnostic, SaxError

POSITIVE = (Plus, Tensor, One, Down)
NEGATIVE = (With, Lolli, Up)


def unfold(sig: Signature, t: Type) -> Type:
    """Replace a type variable by its definition; anything else is returned as is."""
    if not isinstance(t, TVar):
        return t
    body = sig.type_body(t.name)
    if body is None:
        raise SaxError(Diagnostic("UnknownTypeVar", f"type {t.name} is not defined", t.pos))
    return body


def desugar_type_head(t: Type) -> Type:
    """Rewrite one layer of type sugar into kernel constructors."""
    match t:
        case Arrow(arg=a, result=b, mode=m):
            return Lolli(a, b, m, pos=t.pos)
        case Par(left=a, right=b, mode=m):
            return Tensor(a, b, m, pos=t.pos)
        case Monad(body=a, mode=m):
            return Up(a.mode, m, a, pos=t.pos)
        case And(left=a, right=b, mode=m):
            return Tensor(Down(a.mode, m, a, pos=t.pos), b, m, pos=t.pos)
        case Imp(left=a, right=b, mode=m):
            return Lolli(Down(a.mode, m, a, pos=t.pos), b, m, pos=t.pos)
        case Fut(body=a, mode=m):
            return Down(m, m, Down(m, m, a, pos=t.pos), pos=t.pos)
    return t


def expand_head(sig: Signature, t: Type) -> Type:
    """Unfold variables and sugar until the head is a kernel constructor."""
    for _ in range(10_000):
        if isinstance(t, TVar):
            t = unfold(sig, t)
            continue
        nxt = desugar_type_head(t)
        if nxt is t:
            return t
        t = nxt
    raise SaxError(Diagnostic("NonContractive", "type does not reach a constructor"))


def is_positive(sig: Signature, t: Type) -> bool:
    return isinstance(expand_head(sig, t), POSITIVE)


def types_equal(sig: Signature, a: Type, b: Type, assumed: set | None = None) -> bool:
    """Coinductive equality: revisited pairs count as equal."""
    return _eq(sig, a, b, set() if assumed is None else assumed)


def _eq(sig: Signature, a: Type, b: Type, assumed: set) -> bool:
    if a == b:
        return True
    key = (a, b)
    if key in assumed or (b, a) in assumed:
        return True
    if a.mode != b.mode:
        return False
    assumed.add(key)
    a = expand_head(sig, a)
    b = expand_head(sig, b)
    if type(a) is not type(b) or a.mode != b.mode:
        return False
    match a:
        case Plus() | With():
            da, db = dict(a.branches), dict(b.branches)
            if da.keys() != db.keys():
                return False
            return all(_eq(sig, da[k], db[k], assumed) for k in da)
        case Tensor():
            return _eq(sig, a.left, b.left, assumed) and _eq(sig, a.right, b.right, assumed)
        case Lolli():
            return _eq(sig, a.arg, b.arg, assumed) and _eq(sig, a.result, b.result, assumed)
        case One():
            return True
        case Down() | Up():
            return a.source == b.source and _eq(sig, a.body, b.body, assumed)
    return False


def equal_bounded(sig: Signature, a: Type, b: Type, depth: int) -> bool:
    """Reference check: compare unfoldings up to ``depth`` constructors deep."""
    if depth == 0:
        return a.mode == b.mode
    if a.mode != b.mode:
        return False
    a = expand_head(sig, a)
    b = expand_head(sig, b)
    if type(a) is not type(b) or a.mode != b.mode:
        return False
    d = depth - 1
    match a:
        case Plus() | With():
            da, db = dict(a.branches), dict(b.branches)
            return da.keys() == db.keys() and all(equal_bounded(sig, da[k], db[k], d) for k in da)
        case Tensor():
            return equal_bounded(sig, a.left, b.left, d) and equal_bounded(sig, a.right, b.right, d)
        case Lolli():
            return equal_bounded(sig, a.arg, b.arg, d) and equal_bounded(sig, a.result, b.result, d)
        case One():
            return True
        case Down() | Up():
            return a.source == b.source and equal_bounded(sig, a.body, b.body, d)
    return False
