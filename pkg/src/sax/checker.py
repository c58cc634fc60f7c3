"""Kernel type checker for processes, calls and runtime configurations.

Contexts map names (strings or runtime addresses) to types.  A cut hands
the left premise exactly the hypotheses it mentions; hypotheses at modes
with contraction that are mentioned on both sides go to both.  Axioms
then demand that whatever is left over may be weakened.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx

from .ast import (
    Addr, AtomContWrite, AtomIdWrite, AtomValWrite, Branches, Call, Case, Cut, Down, Id, Label,
    Lolli, One, Pair, PairMatch, Plus, ShiftMatch, Shift, Signature, Tensor, UnitMatch, UnitVal,
    Up, With, Write, cont_free_vars, free_vars,
)
from .diagnostics import Diagnostic, SaxError
from .modes import ModeTheory
from .printer import name as show_name, show_type
from .typeeq import expand_head, types_equal


def _show(n) -> str:
    return show_name(n)


class Checker:
    def __init__(self, sig: Signature, mt: ModeTheory):
        self.sig = sig
        self.mt = mt
        self.where = None

    # ------------------------------------------------------------ helpers
    def fail(self, code, msg, pos=None):
        raise SaxError(Diagnostic(code, msg, pos or self.where))

    def head(self, t):
        return expand_head(self.sig, t)

    def eq(self, a, b) -> bool:
        return types_equal(self.sig, a, b)

    def expect_eq(self, found, expected, what):
        if not self.eq(found, expected):
            self.fail("TypeMismatch",
                      f"{what}: expected {show_type(expected)} @ {expected.mode}, "
                      f"found {show_type(found)} @ {found.mode}")

    def lookup(self, ctx, v, gone):
        if v in ctx:
            return ctx[v]
        if v in gone:
            self.fail("LinearReused", f"{_show(v)} was already consumed")
        self.fail("UnboundVariable", f"{_show(v)} is not in scope")

    def weakenable(self, t) -> bool:
        return self.mt.weakenable(t.mode)

    def contractible(self, t) -> bool:
        return self.mt.contractible(t.mode)

    def leftovers(self, ctx, used, code="LinearUnused"):
        """Everything in ``ctx`` not in ``used`` must admit weakening."""
        for v, t in ctx.items():
            if v not in used and not self.weakenable(t):
                self.fail(code, f"{_show(v)} : {show_type(t)} @ {t.mode} is never used")

    def uses(self, ctx, names, gone):
        """Look up every name; a name listed twice needs contraction."""
        seen = set()
        for v in names:
            t = self.lookup(ctx, v, gone)
            if v in seen and not self.contractible(t):
                self.fail("LinearReused", f"{_show(v)} is used twice")
            seen.add(v)
        return seen

    def bind(self, ctx, v, t):
        old = ctx.get(v)
        if old is not None and not self.weakenable(old):
            self.fail("LinearUnused", f"{_show(v)} is shadowed before it is used")
        out = dict(ctx)
        out[v] = t
        return out

    def expect_dest(self, d, dest):
        if d != dest:
            self.fail("TypeMismatch", f"process writes {_show(d)} but its destination is {_show(dest)}")

    # ------------------------------------------------------------- entry
    def check_process(self, ctx: dict, p, dest, dest_ty, gone=frozenset()):
        """Check ``ctx |- p :: (dest : dest_ty)``; raises ``SaxError`` on the first problem."""
        for v, t in ctx.items():
            if not self.mt.leq(dest_ty.mode, t.mode):
                self.fail("ModeSideCondition",
                          f"presupposition: {_show(v)} at mode {t.mode} is not above {dest_ty.mode}")
        self.chk(dict(ctx), p, dest, dest_ty, frozenset(gone))

    def chk(self, ctx, p, dest, C, gone):
        if getattr(p, "pos", None) is not None:
            self.where = p.pos
        match p:
            case Cut():
                self.chk_cut(ctx, p, dest, C, gone)
            case Id(dest=d, src=s):
                self.expect_dest(d, dest)
                self.expect_eq(self.lookup(ctx, s, gone), C, f"forwarding {_show(s)}")
                self.leftovers(ctx, {s})
            case Write(subject=s, value=v) if s == dest:
                self.chk_value(ctx, s, v, C, gone)
            case Write(subject=s, value=v):
                self.chk_send(ctx, s, v, dest, C, gone)
            case Case(subject=s, cont=k) if s == dest:
                self.chk_negative_right(ctx, s, k, C, gone)
            case Case(subject=s, cont=k):
                self.chk_positive_left(ctx, s, k, dest, C, gone)
            case Call():
                self.check_call(ctx, p, dest, C, gone)
            case AtomValWrite(outer=o, inner=i, value=v):
                A = self.atomic(ctx, p, o, dest, C)
                self.chk_value(ctx, i, v, A, gone)
            case AtomContWrite(outer=o, inner=i, cont=k):
                A = self.atomic(ctx, p, o, dest, C)
                self.chk_negative_right(ctx, i, k, A, gone)
            case AtomIdWrite(outer=o, inner=i, src=s):
                A = self.atomic(ctx, p, o, dest, C)
                self.expect_eq(self.lookup(ctx, s, gone), A, f"forwarding {_show(s)}")
                self.leftovers(ctx, {s})
            case _:
                self.fail("SyntaxError", f"not a kernel process: {type(p).__name__}")

    def chk_cut(self, ctx, p: Cut, dest, C, gone):
        A = p.ty
        if A is None:
            self.fail("CannotInferType", f"cut variable {p.var} has no type")
        m = A.mode
        if p.mode is not None and p.mode != m:
            self.fail("ModeMismatch", f"cut at mode {p.mode} binds a variable of mode {m}")
        if self.mt.is_seq_only(m) and p.origin is None:
            self.fail("SeqOnlyViolation", f"concurrent cut of {p.var} at sequential-only mode {m}")
        if not self.mt.leq(C.mode, m):
            self.fail("ModeSideCondition", f"cut: mode {m} of {p.var} is not above {C.mode}")
        fv_left = free_vars(p.left) - {p.var}
        fv_right = free_vars(p.right)
        left_ctx, right_ctx = {}, {}
        for v, t in ctx.items():
            if v in fv_left:
                left_ctx[v] = t
                if not self.mt.leq(m, t.mode):
                    self.fail("ModeSideCondition",
                              f"cut: {_show(v)} at mode {t.mode} is used to build {p.var} at mode {m}")
                if self.contractible(t) and v in fv_right:
                    right_ctx[v] = t
            else:
                right_ctx[v] = t
        moved = frozenset(v for v in left_ctx if v not in right_ctx)
        self.chk(left_ctx, p.left, p.var, A, gone)
        self.chk(self.bind(right_ctx, p.var, A), p.right, dest, C, gone | moved)

    def atomic(self, ctx, p, outer, dest, C):
        self.expect_dest(outer, dest)
        h = self.head(C)
        if not isinstance(h, Down):
            self.fail("TypeMismatch", f"atomic write to {_show(outer)} needs a down-shifted type")
        A = h.body
        if p.inner_ty is not None:
            self.expect_eq(p.inner_ty, A, f"atomic write of {_show(p.inner)}")
        m = A.mode
        for v, t in ctx.items():
            if v in free_vars(p) and not self.mt.leq(m, t.mode):
                self.fail("ModeSideCondition",
                          f"atomic write: {_show(v)} at mode {t.mode} is below {m}")
        return A

    def chk_value(self, ctx, s, v, C, gone):
        h = self.head(C)
        match (v, h):
            case (Label(label=l, arg=y), Plus()):
                types = dict(h.branches)
                if l not in types:
                    self.fail("UnknownLabel", f"label {l} is not part of {show_type(C)}")
                self.expect_eq(self.lookup(ctx, y, gone), types[l], f"payload of {l}")
                self.leftovers(ctx, {y})
            case (Pair(first=a, second=b), Tensor()):
                used = self.uses(ctx, [a, b], gone)
                self.expect_eq(ctx[a], h.left, "first component")
                self.expect_eq(ctx[b], h.right, "second component")
                self.leftovers(ctx, used)
            case (UnitVal(), One()):
                self.leftovers(ctx, set())
            case (Shift(arg=y), Down()):
                self.expect_eq(self.lookup(ctx, y, gone), h.body, "shifted value")
                self.leftovers(ctx, {y})
            case _:
                self.fail("TypeMismatch", f"value written to {_show(s)} does not match {show_type(C)}")

    def chk_send(self, ctx, s, v, dest, C, gone):
        T = self.lookup(ctx, s, gone)
        h = self.head(T)
        match (v, h):
            case (Label(label=l, arg=y), With()):
                types = dict(h.branches)
                if l not in types:
                    self.fail("UnknownLabel", f"label {l} is not part of {show_type(T)}")
                self.expect_dest(y, dest)
                self.expect_eq(C, types[l], f"result of sending {l}")
                self.leftovers(ctx, {s})
            case (Pair(first=a, second=y), Lolli()):
                self.expect_dest(y, dest)
                used = self.uses(ctx, [s, a], gone)
                self.expect_eq(ctx[a], h.arg, "argument")
                self.expect_eq(C, h.result, "result")
                self.leftovers(ctx, used)
            case (Shift(arg=y), Up()):
                self.expect_dest(y, dest)
                self.expect_eq(C, h.body, "result of forcing")
                self.leftovers(ctx, {s})
            case _:
                self.fail("TypeMismatch", f"cannot send this value to {_show(s)} : {show_type(T)}")

    def check_labels(self, arms, types, T):
        labels = [l for l, _, _ in arms]
        if len(set(labels)) != len(labels):
            self.fail("DuplicateLabel", "a label has two branches")
        for l in labels:
            if l not in types:
                self.fail("UnknownLabel", f"label {l} is not part of {show_type(T)}")
        missing = [l for l in types if l not in labels]
        if missing:
            self.fail("TypeMismatch", f"missing branch for {', '.join(missing)}")

    def chk_negative_right(self, ctx, s, k, C, gone):
        h = self.head(C)
        match (k, h):
            case (Branches(arms=arms), With()):
                types = dict(h.branches)
                self.check_labels(arms, types, C)
                for l, y, body in arms:
                    self.chk(ctx, body, y, types[l], gone)
            case (PairMatch(first=a, second=y, body=body), Lolli()):
                self.chk(self.bind(ctx, a, h.arg), body, y, h.result, gone)
            case (ShiftMatch(var=y, body=body), Up()):
                self.chk(ctx, body, y, h.body, gone)
            case _:
                self.fail("TypeMismatch", f"continuation written to {_show(s)} does not match {show_type(C)}")

    def chk_positive_left(self, ctx, s, k, dest, C, gone):
        T = self.lookup(ctx, s, gone)
        h = self.head(T)
        keep = self.contractible(T)

        def branch_ctx(body, binders):
            out = dict(ctx)
            if not (keep and s in (free_vars(body) - set(binders))):
                del out[s]
            for v, t in binders.items():
                out = self.bind(out, v, t)
            return out

        gone2 = gone if keep else gone | {s}
        match (k, h):
            case (Branches(arms=arms), Plus()):
                types = dict(h.branches)
                self.check_labels(arms, types, T)
                for l, y, body in arms:
                    self.chk(branch_ctx(body, {y: types[l]}), body, dest, C, gone2)
            case (PairMatch(first=a, second=b, body=body), Tensor()):
                if a == b:
                    self.fail("TypeMismatch", "pair pattern binds the same name twice")
                self.chk(branch_ctx(body, {a: h.left, b: h.right}), body, dest, C, gone2)
            case (UnitMatch(body=body), One()):
                self.chk(branch_ctx(body, {}), body, dest, C, gone2)
            case (ShiftMatch(var=y, body=body), Down()):
                self.chk(branch_ctx(body, {y: h.body}), body, dest, C, gone2)
            case _:
                self.fail("TypeMismatch", f"continuation does not match the type of {_show(s)} : {show_type(T)}")

    def check_call(self, ctx, p: Call, dest, C, gone=frozenset()):
        self.expect_dest(p.dest, dest)
        decl = self.sig.decls.get(p.proc)
        if decl is None:
            self.fail("UnknownProcess", f"process {p.proc} is not declared")
        if len(decl.params) != len(p.args):
            self.fail("ArityMismatch", f"{p.proc} expects {len(decl.params)} arguments, got {len(p.args)}")
        used = self.uses(ctx, list(p.args), gone)
        for a, (x, t) in zip(p.args, decl.params):
            self.expect_eq(ctx[a], t, f"argument {x} of {p.proc}")
        self.expect_eq(decl.result[1], C, f"result of {p.proc}")
        self.leftovers(ctx, used, "LinearResidue")


def check_process(sig, mt, ctx, p, dest, dest_ty):
    Checker(sig, mt).check_process(ctx, p, dest, dest_ty)


def check_call(sig, mt, ctx, dest, proc, args, dest_ty):
    Checker(sig, mt).check_call(dict(ctx), Call(dest, proc, tuple(args)), dest, dest_ty)


# ------------------------------------------------------------ configurations


@dataclass(frozen=True)
class ObjectTyping:
    addr: Addr
    reads: tuple
    kind: str  # thread | value | cont


def _object_reads(obj, addr):
    kind, body = obj
    if kind == "thread":
        fv = free_vars(body)
    elif kind == "value":
        fv = free_vars(Write(addr, body))
    else:
        fv = {addr} | cont_free_vars(body)
    return sorted((a for a in fv if a != addr), key=lambda a: (not isinstance(a, Addr), str(a)))


def check_configuration(sig: Signature, mt: ModeTheory, inputs: dict, objects: dict, types: dict):
    """Type a configuration and return the offered context.

    ``objects`` maps each address to ``("thread", P)``, ``("value", V)`` or
    ``("cont", K)``; ``types`` gives every address its type.  Objects are
    visited in a writer-before-reader order, ties broken by address.
    """
    g = nx.DiGraph()
    g.add_nodes_from(objects)
    reads = {a: _object_reads(o, a) for a, o in objects.items()}
    for a, rs in reads.items():
        for r in rs:
            if r in objects:
                g.add_edge(r, a)
    try:
        order = list(nx.lexicographical_topological_sort(g, key=lambda a: a.id))
    except nx.NetworkXUnfeasible:
        raise SaxError(Diagnostic("NoValidOrder", "objects read each other in a cycle"))
    checker = Checker(sig, mt)
    delta = dict(inputs)
    for a in order:
        kind, body = objects[a]
        if a not in types:
            raise SaxError(Diagnostic("ObjectIllTyped", f"{a} has no recorded type"))
        T = types[a]
        local = {}
        for r in reads[a]:
            if r not in delta:
                raise SaxError(Diagnostic("ObjectIllTyped", f"{a} reads {_show(r)}, which nothing before it offers"))
            local[r] = delta[r]
        try:
            if kind == "thread":
                checker.check_process(local, body, a, T)
            elif kind == "value":
                checker.check_process(local, Write(a, body), a, T)
            else:
                checker.check_process(local, Case(a, body), a, T)
        except SaxError as e:
            raise SaxError(Diagnostic("ObjectIllTyped", f"{a}: {e.diagnostics[0].code}: {e.diagnostics[0].message}"))
        for r in reads[a]:
            if not mt.contractible(delta[r].mode):
                del delta[r]
        delta[a] = T
    return delta
