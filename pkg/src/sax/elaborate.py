"""Sugar expansion into the kernel language.

The pure rewriting functions (``expand_value_seq``, ``slash_subst``,
``percent_subst`` and friends) operate on trees alone.  ``Elaborator`` walks
a definition with the types of all variables in hand: it picks the polarity
of value sequences, recognises sugar that is keyed on a type (pairs over
``/\\`` and ``==>``), infers the type of every cut variable and records it on
the generated kernel ``Cut``.
"""

from __future__ import annotations

from dataclasses import replace

from .ast import (
    STAR, And, Apply, AtomContWrite, AtomIdWrite, AtomValWrite, Branches, Call, Case, CbnCut,
    Cut, Down, Fut, FutureMake, Id, Imp, Label, Lambda, Lolli, Monad, MonadBind, MonadBrace,
    One, Pair, Par, ParPair, ParPat, PairMatch, PatCont, Plus, SeqCut, Shift, ShiftMatch, ShortCut,
    Signature, Tensor, Touch, TVar, UnitMatch, UnitVal, Up, With, Write, all_names, fresh,
    free_vars, is_base_value, is_name, substitute,
)
from .diagnostics import Diagnostic, SaxError
from .modes import ModeTheory
from .parser import build_cont
from .typeeq import expand_head, unfold

NEGATIVE = (With, Lolli, Up)
POSITIVE = (Plus, Tensor, One, Down)


def _err(code, msg, pos=None):
    raise SaxError(Diagnostic(code, msg, pos))


# ------------------------------------------------------------- pure rewrites


def expand_shorthands(p):
    """Rewrite ``x <- y ; Q`` and ``x <- f <- ys ; Q`` into explicit cuts, everywhere."""
    if isinstance(p, ShortCut):
        ctor = {"<-": lambda *a, **k: Cut(a[0], None, *a[1:], **k), "<=": SeqCut, "<~": CbnCut}[p.kind]
        return ctor(p.var, p.inner, expand_shorthands(p.body), ty=p.ty, pos=p.pos)
    return _map_children(p, expand_shorthands)


def _map_children(p, f):
    """Apply ``f`` to every immediate sub-process of ``p``."""
    match p:
        case Cut(left=l, right=r) | SeqCut(left=l, right=r) | CbnCut(left=l, right=r):
            return replace(p, left=f(l), right=f(r))
        case ShortCut(body=b):
            return replace(p, body=f(b))
        case Case(cont=k):
            return replace(p, cont=_map_cont(k, f))
        case AtomContWrite(cont=k):
            return replace(p, cont=_map_cont(k, f))
        case Lambda(body=b) | MonadBrace(body=b) | MonadBind(body=b) | FutureMake(body=b) | Touch(body=b):
            return replace(p, body=f(b))
        case Apply(fn=a, arg=b):
            return replace(p, fn=f(a), arg=f(b))
        case ParPair(left=a, right=b):
            return replace(p, left=f(a), right=f(b))
    return p


def _map_cont(k, f):
    match k:
        case Branches(arms=arms):
            return replace(k, arms=tuple((l, y, f(b)) for l, y, b in arms))
        case PairMatch(body=b) | UnitMatch(body=b) | ShiftMatch(body=b):
            return replace(k, body=f(b))
        case PatCont(arms=arms):
            return replace(k, arms=tuple((pat, f(b)) for pat, b in arms))
    return k


def _inner(v):
    return v.second if isinstance(v, Pair) else v.arg


def _with_inner(v, new):
    return replace(v, second=new) if isinstance(v, Pair) else replace(v, arg=new)


def expand_value_seq(w: Write, positive: bool, avoid: set[str], sequential: bool = False):
    """Peel one layer off a nested value written by (or sent to) ``w.subject``."""
    v = w.value
    if is_base_value(v):
        return w
    x = w.subject
    xp = fresh(x if isinstance(x, str) else "v", avoid)
    inner = _inner(v)
    if positive:
        left, right = Write(xp, inner, pos=w.pos), Write(x, _with_inner(v, xp), pos=w.pos)
    else:
        left, right = Write(x, _with_inner(v, xp), pos=w.pos), Write(xp, inner, pos=w.pos)
    if sequential:
        return SeqCut(xp, left, right, pos=w.pos)
    return Cut(xp, None, left, right, pos=w.pos)


def expand_pattern_case(c: Case, avoid: set[str]):
    """Turn one level of nested patterns into a kernel continuation."""
    k = c.cont
    if not isinstance(k, PatCont):
        return c
    arms = list(k.arms)
    if len(arms) == 1 and isinstance(arms[0][0], ParPat):
        pat, body = arms[0]
        return replace(c, cont=PairMatch(pat.left, pat.right, body, pos=k.pos))
    if all(isinstance(p, Label) for p, _ in arms):
        seen = set()
        out = []
        for pat, body in arms:
            if pat.label in seen:
                _err("OverlappingLabels", f"label {pat.label} matched twice at one level", pat.pos or k.pos)
            seen.add(pat.label)
            if isinstance(pat.arg, str):
                out.append((pat.label, pat.arg, body))
            else:
                y = fresh(pat.label, avoid)
                out.append((pat.label, y, Case(y, build_cont([(pat.arg, body)], pat.pos), pos=pat.pos)))
        return replace(c, cont=Branches(tuple(out), pos=k.pos))
    if len(arms) != 1:
        _err("OverlappingLabels", "only label patterns may have several arms", k.pos)
    pat, body = arms[0]
    if isinstance(pat, UnitVal):
        return replace(c, cont=UnitMatch(body, pos=k.pos))
    if isinstance(pat, Pair):
        if isinstance(pat.second, str):
            return replace(c, cont=PairMatch(pat.first, pat.second, body, pos=k.pos))
        y = fresh(pat.first, avoid)
        inner = Case(y, build_cont([(pat.second, body)], pat.pos), pos=pat.pos)
        return replace(c, cont=PairMatch(pat.first, y, inner, pos=k.pos))
    if isinstance(pat, Shift):
        if isinstance(pat.arg, str):
            return replace(c, cont=ShiftMatch(pat.arg, body, pos=k.pos))
        y = fresh("s", avoid)
        inner = Case(y, build_cont([(pat.arg, body)], pat.pos), pos=pat.pos)
        return replace(c, cont=ShiftMatch(y, inner, pos=k.pos))
    _err("SyntaxError", "unsupported pattern", k.pos)


def slash_subst(p, x: str, xp: str, ty, avoid: set[str]):
    """Make every write to ``x`` in kernel ``p`` also publish ``shift(x)`` at ``xp``.

    The three write forms become atomic writes.  Calls and left-rule axioms
    whose destination is ``x`` finish into a fresh cell whose contents are
    then moved atomically.
    """
    match p:
        case Write(subject=s, value=v) if s == x:
            return AtomValWrite(xp, x, v, ty, pos=p.pos)
        case Case(subject=s, cont=k) if s == x:
            return AtomContWrite(xp, x, k, ty, pos=p.pos)
        case Id(dest=d, src=y) if d == x:
            return AtomIdWrite(xp, x, y, ty, pos=p.pos)
        case Cut(right=r):
            return replace(p, right=slash_subst(r, x, xp, ty, avoid))
        case Case(cont=k):
            return replace(p, cont=_map_cont(k, lambda b: slash_subst(b, x, xp, ty, avoid)))
    if x not in free_vars(p):
        raise ValueError(f"{x} is not written by {p!r}")
    x0 = fresh(x, avoid)
    moved = substitute(p, {x: x0})
    return Cut(x0, ty.mode, moved, AtomIdWrite(xp, x, x0, ty, pos=p.pos), ty, "seq", pos=p.pos)


def seqcut_kernel(x: str, ty, left, right, avoid: set[str], pos=None):
    """``x <= P ; Q`` for kernel ``P`` and ``Q``."""
    xp = fresh(x, avoid)
    m = ty.mode
    return Cut(xp, m, slash_subst(left, x, xp, ty, avoid),
               Case(xp, ShiftMatch(x, right), pos=pos), Down(m, m, ty), "seq", pos=pos)


def _reads(p, x) -> bool:
    match p:
        case Write(subject=s) | Case(subject=s):
            return s == x
        case Id(src=s) | AtomIdWrite(src=s):
            return s == x
    return False


def _passes(p, x) -> bool:
    from .ast import value_names
    match p:
        case Write(value=v) | AtomValWrite(value=v):
            return x in value_names(v)
        case Call(args=args):
            return x in args
    return False


class Percent:
    """Call-by-name substitution: every use of ``x`` first forces the thunk ``xp``."""

    def __init__(self, sig: Signature, x: str, xp: str, ty, avoid: set[str]):
        self.sig, self.x, self.xp, self.ty, self.avoid = sig, x, xp, ty, avoid

    def force(self, w: str, then, ty=None):
        return Cut(w, (ty or self.ty).mode, Write(self.xp, Shift(w)), then, ty or self.ty, "cbn")

    def lazy_ok(self, ty, depth=0) -> bool:
        h = expand_head(self.sig, ty)
        if isinstance(h, NEGATIVE):
            return True
        if isinstance(h, Plus) and len(h.branches) == 1 and depth < 4:
            return self.lazy_ok(h.branches[0][1], depth + 1)
        return False

    def lazy(self, ty, dest, force):
        """A value of ``ty`` at ``dest`` whose parts are computed only on demand.

        ``force(w, k)`` must produce a process that obtains the full value of
        ``ty`` in ``w`` and then runs ``k``.
        """
        h = expand_head(self.sig, ty)
        if isinstance(h, With):
            arms = []
            for lab, _ in h.branches:
                y, w = fresh("r", self.avoid), fresh("w", self.avoid)
                arms.append((lab, y, force(w, Write(w, Label(lab, y)))))
            return Case(dest, Branches(tuple(arms)))
        if isinstance(h, Lolli):
            a, y, w = fresh("a", self.avoid), fresh("r", self.avoid), fresh("w", self.avoid)
            return Case(dest, PairMatch(a, y, force(w, Write(w, Pair(a, y)))))
        if isinstance(h, Up):
            y, w = fresh("r", self.avoid), fresh("w", self.avoid)
            return Case(dest, ShiftMatch(y, force(w, Write(w, Shift(y)))))
        lab, body = h.branches[0]
        y = fresh("p", self.avoid)

        def force_body(v, k):
            w = fresh("w", self.avoid)
            return force(w, Case(w, Branches(((lab, v, k),))))

        return Cut(y, body.mode, self.lazy(body, y, force_body), Write(dest, Label(lab, y)), body, "cbn")

    def prefix(self, p):
        return self.force(self.x, p)

    def __call__(self, p):
        x = self.x
        if x not in free_vars(p):
            return p
        if _reads(p, x):
            return self.prefix(p)
        if _passes(p, x):
            if self.lazy_ok(self.ty):
                made = self.lazy(self.ty, x, lambda w, k: self.force(w, k))
            else:
                made = Write(self.xp, Shift(x))
            return seqcut_kernel(x, self.ty, made, p, self.avoid)
        match p:
            case Cut(left=l, right=r):
                return replace(p, left=self(l), right=self(r))
            case Case(cont=k) | AtomContWrite(cont=k):
                return replace(p, cont=_map_cont(k, self))
        raise ValueError(f"unexpected use of {x} in {p!r}")


def percent_subst(sig: Signature, q, x: str, xp: str, ty, avoid: set[str]):
    return Percent(sig, x, xp, ty, avoid)(q)


# ---------------------------------------------------------------- elaborator


def unfold_vars(sig: Signature, t):
    """Unfold type variables but keep type-level sugar visible."""
    for _ in range(10_000):
        if not isinstance(t, TVar):
            return t
        t = unfold(sig, t)
    _err("NonContractive", "type does not reach a constructor")


class Elaborator:
    def __init__(self, sig: Signature, mt: ModeTheory):
        self.sig = sig
        self.mt = mt
        self.avoid: set[str] = set()

    # -- helpers
    def head(self, t):
        return expand_head(self.sig, t)

    def lookup(self, ctx, v, pos):
        if v not in ctx:
            _err("UnboundVariable", f"variable {v} is not in scope", pos)
        return ctx[v]

    def fresh(self, base):
        return fresh(base if isinstance(base, str) else "v", self.avoid)

    def star(self, p, name):
        return substitute(p, {STAR: name})

    def elaborate(self, ctx: dict, p, dest, dest_ty):
        self.avoid |= all_names(p) | {v for v in ctx if isinstance(v, str)}
        if isinstance(dest, str):
            self.avoid.add(dest)
        return self.elab(ctx, p, dest, dest_ty)

    def cut_type(self, ctx, x, left, right, dest, dest_ty, ty, pos):
        if ty is not None:
            return ty
        found = Inference(self).infer(ctx, x, left, right, dest, dest_ty)
        if found is None:
            _err("CannotInferType", f"cannot infer the type of {x}; annotate it as '{x} : A <- ...'", pos)
        return found

    # -- main walk
    def elab(self, ctx: dict, p, dest, C):
        match p:
            case Cut(var=x, left=l, right=r):
                A = self.cut_type(ctx, x, l, r, dest, C, p.ty, p.pos)
                if p.origin == "vseq" and self.mt.is_seq_only(A.mode):
                    return self.elab(ctx, SeqCut(x, l, r, A, pos=p.pos), dest, C)
                origin = None if p.origin == "vseq" else p.origin
                l2 = self.elab(ctx, l, x, A)
                r2 = self.elab({**ctx, x: A}, r, dest, C)
                return Cut(x, A.mode, l2, r2, A, origin, pos=p.pos)
            case ShortCut(var=x, kind=kind, inner=inner, body=b, ty=ty):
                if kind == "<-":
                    q = Cut(x, None, inner, b, ty, pos=p.pos)
                elif kind == "<=":
                    q = SeqCut(x, inner, b, ty, pos=p.pos)
                else:
                    q = CbnCut(x, inner, b, ty, pos=p.pos)
                return self.elab(ctx, q, dest, C)
            case SeqCut(var=x, left=l, right=r):
                A = self.cut_type(ctx, x, l, r, dest, C, p.ty, p.pos)
                l2 = self.elab(ctx, l, x, A)
                r2 = self.elab({**ctx, x: A}, r, dest, C)
                return seqcut_kernel(x, A, l2, r2, self.avoid, p.pos)
            case CbnCut(var=x, left=l, right=r):
                A = self.cut_type(ctx, x, l, r, dest, C, p.ty, p.pos)
                l2 = self.elab(ctx, l, x, A)
                r2 = self.elab({**ctx, x: A}, r, dest, C)
                xp = self.fresh(x)
                m = A.mode
                return Cut(xp, m, Case(xp, ShiftMatch(x, l2), pos=p.pos),
                           percent_subst(self.sig, r2, x, xp, A, self.avoid), Up(m, m, A), "cbn", pos=p.pos)
            case Id() | Call():
                return p
            case Write(subject=s, value=v):
                return self.elab_write(ctx, p, s, v, dest, C)
            case Case(subject=s, cont=k):
                return self.elab_case(ctx, p, s, k, dest, C)
            case AtomValWrite() | AtomIdWrite():
                return replace(p, inner_ty=self.atom_inner(p, dest, C))
            case AtomContWrite(inner=i, cont=k):
                A = self.atom_inner(p, dest, C)
                body = self.elab(ctx, Case(i, k, pos=p.pos), i, A)
                return replace(p, cont=body.cont, inner_ty=A)
            case Lambda(dest=z, var=x, body=b):
                self.expect_dest(z, dest, p)
                h = self.head(C)
                if not isinstance(h, Lolli):
                    _err("TypeMismatch", f"a function is written to {z}, whose type is not a function type", p.pos)
                y = self.fresh("y")
                body = self.elab({**ctx, x: h.arg}, self.star(b, y), y, h.result)
                return Case(z, PairMatch(x, y, body, pos=p.pos), pos=p.pos)
            case Apply(dest=y, fn=fp, arg=ap):
                self.expect_dest(y, dest, p)
                inf = Inference(self)
                fty = inf.synth(ctx, fp, STAR)
                if fty is not None:
                    h = self.head(fty)
                    if not isinstance(h, Lolli):
                        _err("TypeMismatch", "the applied process does not produce a function", p.pos)
                    aty = h.arg
                else:
                    aty = inf.synth(ctx, ap, STAR)
                    if aty is None:
                        _err("CannotInferType", "cannot infer the function type of an application", p.pos)
                    fty = Lolli(aty, C, C.mode)
                f, x = self.fresh("f"), self.fresh("x")
                q = SeqCut(f, self.star(fp, f),
                           SeqCut(x, self.star(ap, x), Write(f, Pair(x, y), pos=p.pos), aty, pos=p.pos),
                           fty, pos=p.pos)
                return self.elab(ctx, q, dest, C)
            case ParPair(dest=z, left=lp, right=rp):
                self.expect_dest(z, dest, p)
                h = self.head(C)
                if not isinstance(h, Tensor):
                    _err("TypeMismatch", f"a parallel pair is written to {z}, whose type is not a pair", p.pos)
                A, B = h.left, h.right
                x, y = self.fresh("x"), self.fresh("y")
                xp, yp = self.fresh(x), self.fresh(y)
                pk = self.elab(ctx, self.star(lp, x), x, A)
                qk = self.elab(ctx, self.star(rp, y), y, B)
                join = Case(xp, ShiftMatch(x, Case(yp, ShiftMatch(y, Write(z, Pair(x, y), pos=p.pos)))))
                inner = Cut(yp, B.mode, slash_subst(qk, y, yp, B, self.avoid), join,
                            Down(B.mode, B.mode, B), "exempt", pos=p.pos)
                return Cut(xp, A.mode, slash_subst(pk, x, xp, A, self.avoid), inner,
                           Down(A.mode, A.mode, A), "exempt", pos=p.pos)
            case MonadBrace(dest=d, body=b):
                self.expect_dest(d, dest, p)
                h = self.head(C)
                if not isinstance(h, Up) or h.source == h.target:
                    _err("ModeMismatch", f"{d} must have a monadic type to be written with braces", p.pos)
                x = self.fresh("x")
                return Case(d, ShiftMatch(x, self.elab(ctx, self.star(b, x), x, h.body)), pos=p.pos)
            case MonadBind(dest=c, body=b):
                self.expect_dest(c, dest, p)
                T = Inference(self).synth(ctx, b, STAR)
                if T is None:
                    ups = [m for m in self.mt.above(C.mode) if m != C.mode and not self.mt.leq(m, C.mode)]
                    if len(ups) != 1:
                        _err("ModeMismatch", "cannot determine the mode of the monadic computation", p.pos)
                    T = Monad(C, ups[0])
                h = self.head(T)
                if not isinstance(h, Up) or h.source == h.target:
                    _err("ModeMismatch", "binding requires a monadic computation", p.pos)
                y = self.fresh("y")
                q = SeqCut(y, self.star(b, y), Write(y, Shift(c), pos=p.pos), T, pos=p.pos)
                return self.elab(ctx, q, dest, C)
            case FutureMake(dest=x, body=b):
                self.expect_dest(x, dest, p)
                A = self.future_payload(C, p)
                z = self.fresh("z")
                zp = self.fresh(z)
                pk = self.elab(ctx, self.star(b, z), z, A)
                m = A.mode
                return Cut(zp, m, slash_subst(pk, z, zp, A, self.avoid), Write(x, Shift(zp), pos=p.pos),
                           Down(m, m, A), "exempt", pos=p.pos)
            case Touch(subject=x, var=z, body=b):
                T = self.lookup(ctx, x, p.pos)
                A = self.future_payload(T, p)
                zp = self.fresh(z)
                m = A.mode
                body = self.elab({**ctx, zp: Down(m, m, A), z: A}, b, dest, C)
                return Case(x, ShiftMatch(zp, Case(zp, ShiftMatch(z, body))), pos=p.pos)
        raise TypeError(f"not a process: {p!r}")

    def expect_dest(self, d, dest, p):
        if d != dest:
            _err("TypeMismatch", f"this construct must write the destination {dest}, not {d}", p.pos)

    def future_payload(self, T, p):
        h = self.head(T)
        if isinstance(h, Down) and h.source == h.target:
            h2 = self.head(h.body)
            if isinstance(h2, Down) and h2.source == h2.target:
                return h2.body
        _err("TypeMismatch", "expected a future type", p.pos)

    def atom_inner(self, p, dest, C):
        self.expect_dest(p.outer, dest, p)
        h = self.head(C)
        if not isinstance(h, Down):
            _err("TypeMismatch", f"an atomic write needs a shifted destination, {dest} is not", p.pos)
        return h.body

    def elab_write(self, ctx, p, s, v, dest, C):
        if s == dest:
            T, positive = C, True
        else:
            T = self.lookup(ctx, s, p.pos)
            positive = False
        if not is_base_value(v):
            h = self.head(T)
            if positive and not isinstance(h, POSITIVE):
                _err("PolarityUnknown", f"a value sequence is written to {s}, whose type is not positive", p.pos)
            if not positive and not isinstance(h, NEGATIVE):
                _err("PolarityUnknown", f"a value sequence is sent to {s}, whose type is not negative", p.pos)
            q = expand_value_seq(p, positive, self.avoid)
            return self.elab(ctx, replace(q, origin="vseq") if isinstance(q, Cut) else q, dest, C)
        sugar = unfold_vars(self.sig, T)
        if isinstance(sugar, (And, Imp)) and isinstance(sugar, And) == positive and isinstance(v, Pair):
            a = v.first
            if a in ctx and ctx[a].mode != sugar.mode:
                x = self.fresh("x")
                S, N = sugar.left.mode, sugar.mode
                return Cut(x, N, Write(x, Shift(a), pos=p.pos), Write(s, Pair(x, v.second), pos=p.pos),
                           Down(S, N, sugar.left), "exempt", pos=p.pos)
        return p

    def elab_case(self, ctx, p, s, k, dest, C):
        if s == dest:
            sugar = unfold_vars(self.sig, C)
            if isinstance(sugar, Imp) and isinstance(k, PairMatch):
                x = self.fresh("x")
                A = sugar.left
                body = self.elab({**ctx, k.first: A}, k.body, k.second, sugar.right)
                inner = Case(x, ShiftMatch(k.first, body), pos=p.pos)
                return Case(s, PairMatch(x, k.second, inner, pos=k.pos), pos=p.pos)
            h = self.head(C)
            match (k, h):
                case (Branches(arms=arms), With()):
                    types = dict(h.branches)
                    out = []
                    for lab, y, b in arms:
                        if lab not in types:
                            _err("UnknownLabel", f"label {lab} is not part of the type", k.pos or p.pos)
                        out.append((lab, y, self.elab(ctx, b, y, types[lab])))
                    return replace(p, cont=replace(k, arms=tuple(out)))
                case (PairMatch(first=a, second=y, body=b), Lolli()):
                    return replace(p, cont=replace(k, body=self.elab({**ctx, a: h.arg}, b, y, h.result)))
                case (ShiftMatch(var=y, body=b), Up()):
                    return replace(p, cont=replace(k, body=self.elab(ctx, b, y, h.body)))
            _err("TypeMismatch", f"continuation does not match the type of {s}", p.pos)
        T = self.lookup(ctx, s, p.pos)
        if isinstance(k, PatCont):
            return self.elab(ctx, expand_pattern_case(p, self.avoid), dest, C)
        sugar = unfold_vars(self.sig, T)
        if isinstance(sugar, And) and isinstance(k, PairMatch):
            x = self.fresh("x")
            body = self.elab({**ctx, k.first: sugar.left, k.second: sugar.right}, k.body, dest, C)
            inner = Case(x, ShiftMatch(k.first, body), pos=p.pos)
            return Case(s, PairMatch(x, k.second, inner, pos=k.pos), pos=p.pos)
        h = self.head(T)
        match (k, h):
            case (Branches(arms=arms), Plus()):
                types = dict(h.branches)
                out = []
                for lab, y, b in arms:
                    if lab not in types:
                        _err("UnknownLabel", f"label {lab} is not part of the type", k.pos or p.pos)
                    out.append((lab, y, self.elab({**ctx, y: types[lab]}, b, dest, C)))
                return replace(p, cont=replace(k, arms=tuple(out)))
            case (PairMatch(first=a, second=b, body=body), Tensor()):
                return replace(p, cont=replace(k, body=self.elab({**ctx, a: h.left, b: h.right}, body, dest, C)))
            case (UnitMatch(body=body), One()):
                return replace(p, cont=replace(k, body=self.elab(ctx, body, dest, C)))
            case (ShiftMatch(var=y, body=body), Down()):
                return replace(p, cont=replace(k, body=self.elab({**ctx, y: h.body}, body, dest, C)))
        _err("TypeMismatch", f"continuation does not match the type of {s}", p.pos)


# ----------------------------------------------------------------- inference


class Inference:
    """Best-effort discovery of a cut variable's type.

    ``synth`` reads the type off the process that writes the variable;
    ``use`` reads it off the places where the continuation uses it.
    """

    def __init__(self, el: Elaborator):
        self.el = el
        self.sig = el.sig

    def head(self, t):
        try:
            return expand_head(self.sig, t)
        except SaxError:
            return None

    def infer(self, ctx, x, left, right, dest, C):
        return self.synth(ctx, left, x) or self.use(ctx, right, x, dest, C)

    def _bind_cut(self, ctx, p, dest, C):
        z = p.var
        ty = getattr(p, "ty", None)
        if ty is None:
            left = p.inner if isinstance(p, ShortCut) else p.left
            right = p.body if isinstance(p, ShortCut) else p.right
            ty = self.synth(ctx, left, z) or self.use(ctx, right, z, dest, C)
        return ty

    def synth(self, ctx, p, x):
        """The type of ``x`` as determined by a process writing ``x``."""
        match p:
            case Id(dest=d, src=y) if d == x:
                return ctx.get(y)
            case Call(dest=d, proc=f) if d == x:
                decl = self.sig.decls.get(f)
                return decl.result[1] if decl else None
            case Write(subject=y, value=v) if y != x and y in ctx:
                return self._walk_neg(ctx[y], v, x)
            case Case(subject=y, cont=k) if y != x and y in ctx:
                for ctx2, body in self._positive_arms(ctx, y, k):
                    t = self.synth(ctx2, body, x)
                    if t is not None:
                        return t
                return None
            case Cut(right=r) | SeqCut(right=r) | CbnCut(right=r):
                ty = self._bind_cut(ctx, p, x, None)
                return self.synth({**ctx, p.var: ty} if ty else ctx, r, x)
            case ShortCut(body=r):
                ty = self._bind_cut(ctx, p, x, None)
                return self.synth({**ctx, p.var: ty} if ty else ctx, r, x)
            case Touch(subject=y, var=z, body=b) if y in ctx:
                h = self.head(ctx[y])
                if isinstance(h, Down):
                    h2 = self.head(h.body)
                    if isinstance(h2, Down):
                        return self.synth({**ctx, z: h2.body}, b, x)
                return None
            case MonadBind(dest=d, body=b) if d == x:
                t = self.synth(ctx, b, STAR)
                h = self.head(t) if t is not None else None
                return h.body if isinstance(h, Up) else None
            case Apply(dest=d, fn=f) if d == x:
                t = self.synth(ctx, f, STAR)
                h = self.head(t) if t is not None else None
                return h.result if isinstance(h, Lolli) else None
            case ParPair(dest=d, left=l, right=r) if d == x:
                a, b = self.synth(ctx, l, STAR), self.synth(ctx, r, STAR)
                return Par(a, b, a.mode) if a is not None and b is not None else None
            case FutureMake(dest=d, body=b) if d == x:
                t = self.synth(ctx, b, STAR)
                return Fut(t, t.mode) if t is not None else None
            case AtomIdWrite(outer=o, src=y) if o == x and y in ctx:
                t = ctx[y]
                return Down(t.mode, t.mode, t)
        return None

    def _walk_neg(self, T, v, x):
        """Follow a message sent to a negative variable until it reaches ``x``."""
        h = self.head(T)
        match (v, h):
            case (Label(label=l, arg=a), With()):
                nxt = dict(h.branches).get(l)
            case (Pair(second=a), Lolli()):
                nxt = h.result
            case (Pair(second=a), _) if isinstance(unfold_vars(self.sig, T), Imp):
                nxt = unfold_vars(self.sig, T).right
            case (Shift(arg=a), Up()):
                nxt = h.body
            case _:
                return None
        if nxt is None:
            return None
        if is_name(a):
            return nxt if a == x else None
        return self._walk_neg(nxt, a, x)

    def _positive_arms(self, ctx, y, k):
        T = ctx[y]
        sugar = unfold_vars(self.sig, T) if T is not None else None
        if isinstance(k, PatCont):
            try:
                k = expand_pattern_case(Case(y, k), set(self.el.avoid)).cont
            except SaxError:
                return []
        if isinstance(sugar, And) and isinstance(k, PairMatch):
            return [({**ctx, k.first: sugar.left, k.second: sugar.right}, k.body)]
        h = self.head(T)
        match (k, h):
            case (Branches(arms=arms), Plus()):
                types = dict(h.branches)
                return [({**ctx, v: types.get(l)}, b) for l, v, b in arms]
            case (PairMatch(first=a, second=b, body=body), Tensor()):
                return [({**ctx, a: h.left, b: h.right}, body)]
            case (UnitMatch(body=body), One()):
                return [(ctx, body)]
            case (ShiftMatch(var=v, body=body), Down()):
                return [({**ctx, v: h.body}, body)]
        return []

    def _walk_pos(self, T, v, x):
        """Type expected for ``x`` inside a value written at type ``T``."""
        sugar = unfold_vars(self.sig, T)
        if isinstance(sugar, And) and isinstance(v, Pair):
            if v.first == x:
                return sugar.left
            return self._sub(sugar.right, v.second, x)
        h = self.head(T)
        match (v, h):
            case (Label(label=l, arg=a), Plus()):
                return self._sub(dict(h.branches).get(l), a, x)
            case (Pair(first=a, second=b), Tensor()):
                if a == x:
                    return h.left
                return self._sub(h.right, b, x)
            case (Shift(arg=a), Down()):
                return self._sub(h.body, a, x)
        return None

    def _use_neg(self, T, v, x):
        """Type of ``x`` when it occurs in a message sent to a negative type ``T``."""
        if T is None or is_name(v):
            return None
        sugar = unfold_vars(self.sig, T)
        if isinstance(v, Pair) and isinstance(sugar, Imp):
            return sugar.left if v.first == x else self._use_neg(sugar.right, v.second, x)
        h = self.head(T)
        match (v, h):
            case (Pair(first=a, second=b), Lolli()):
                return h.arg if a == x else self._use_neg(h.result, b, x)
            case (Label(label=l, arg=a), With()):
                return self._use_neg(dict(h.branches).get(l), a, x)
            case (Shift(arg=a), Up()):
                return self._use_neg(h.body, a, x)
        return None

    def _sub(self, T, a, x):
        if T is None:
            return None
        if is_name(a):
            return T if a == x else None
        return self._walk_pos(T, a, x)

    def use(self, ctx, q, x, dest, C):
        """The type ``q`` expects for ``x``, judging from how it uses ``x``."""
        if x not in free_vars(q):
            return None
        match q:
            case Call(proc=f, args=args):
                decl = self.sig.decls.get(f)
                if decl is None:
                    return None
                for a, (_, t) in zip(args, decl.params):
                    if a == x:
                        return t
                return None
            case Id(dest=d, src=s) if s == x and d == dest:
                return C
            case Write(subject=s, value=v) if s == dest and C is not None:
                return self._walk_pos(C, v, x)
            case Write(subject=s, value=v) if s != x and s in ctx:
                return self._use_neg(ctx[s], v, x)
            case Case(subject=s, cont=k) if s == x:
                if isinstance(k, ShiftMatch):
                    inner = self.use(ctx, k.body, k.var, dest, C)
                    if inner is not None:
                        return Down(inner.mode, inner.mode, inner)
                return None
            case Case(subject=s, cont=k) if s == dest and C is not None:
                return self._use_neg_arms(ctx, q, k, x, C)
            case Case(subject=s, cont=k) if s in ctx:
                for ctx2, body in self._positive_arms(ctx, s, k):
                    t = self.use(ctx2, body, x, dest, C)
                    if t is not None:
                        return t
                return None
            case Cut() | SeqCut() | CbnCut() | ShortCut():
                left = q.inner if isinstance(q, ShortCut) else q.left
                right = q.body if isinstance(q, ShortCut) else q.right
                ty = self._bind_cut(ctx, q, dest, C)
                return self.use(ctx, left, x, q.var, ty) or self.use(
                    {**ctx, q.var: ty} if ty else ctx, right, x, dest, C)
            case Touch(subject=s, var=z, body=b):
                if s == x:
                    inner = self.use(ctx, b, z, dest, C)
                    if inner is not None:
                        return Fut(inner, inner.mode)
                    return None
                h = self.head(ctx[s]) if s in ctx else None
                zt = None
                if isinstance(h, Down):
                    h2 = self.head(h.body)
                    zt = h2.body if isinstance(h2, Down) else None
                return self.use({**ctx, z: zt} if zt else ctx, b, x, dest, C)
            case AtomValWrite(outer=o, inner=i, value=v) if C is not None:
                h = self.head(C)
                return self._walk_pos(h.body, v, x) if isinstance(h, Down) else None
            case AtomIdWrite(src=s) if s == x and C is not None:
                h = self.head(C)
                return h.body if isinstance(h, Down) else None
            case AtomContWrite(inner=i, cont=k) if C is not None:
                h = self.head(C)
                if isinstance(h, Down):
                    return self.use(ctx, Case(i, k), x, i, h.body)
                return None
            case Lambda(var=v, body=b) if C is not None:
                h = self.head(C)
                if isinstance(h, Lolli):
                    return self.use({**ctx, v: h.arg}, b, x, STAR, h.result)
                return None
            case ParPair(left=l, right=r):
                h = self.head(C) if C is not None else None
                lt, rt = (h.left, h.right) if isinstance(h, Tensor) else (None, None)
                return self.use(ctx, l, x, STAR, lt) or self.use(ctx, r, x, STAR, rt)
            case MonadBrace(body=b) | FutureMake(body=b):
                h = self.head(C) if C is not None else None
                inner = None
                if isinstance(q, MonadBrace) and isinstance(h, Up):
                    inner = h.body
                if isinstance(q, FutureMake) and isinstance(h, Down):
                    h2 = self.head(h.body)
                    inner = h2.body if isinstance(h2, Down) else None
                return self.use(ctx, b, x, STAR, inner)
            case MonadBind(body=b) | Apply(fn=b):
                t = self.use(ctx, b, x, STAR, None)
                if t is None and isinstance(q, Apply):
                    t = self.use(ctx, q.arg, x, STAR, None)
                return t
        return None

    def _use_neg_arms(self, ctx, q, k, x, C):
        sugar = unfold_vars(self.sig, C)
        if isinstance(sugar, Imp) and isinstance(k, PairMatch):
            return self.use({**ctx, k.first: sugar.left}, k.body, x, k.second, sugar.right)
        h = self.head(C)
        match (k, h):
            case (Branches(arms=arms), With()):
                types = dict(h.branches)
                for lab, y, b in arms:
                    t = self.use(ctx, b, x, y, types.get(lab))
                    if t is not None:
                        return t
            case (PairMatch(first=a, second=y, body=b), Lolli()):
                return self.use({**ctx, a: h.arg}, b, x, y, h.result)
            case (ShiftMatch(var=y, body=b), Up()):
                return self.use(ctx, b, x, y, h.body)
        return None
