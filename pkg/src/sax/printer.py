"""Pretty printer producing surface syntax that parses back to the same tree."""

from __future__ import annotations

from .ast import (
    STAR, Addr, And, Apply, Arrow, AtomContWrite, AtomIdWrite, AtomValWrite, Branches, Call,
    Case, CbnCut, Cut, Down, Fut, FutureMake, Id, Imp, Include, Label, Lambda, Lolli, ModeDecl,
    Monad, MonadBind, MonadBrace, One, OrderDecl, Pair, Par, ParPair, ParPat, PairMatch, PatCont,
    Plus, ProcDecl, ProcDef, SeqCut, Shift, ShiftMatch, ShortCut, Tensor, Touch, TVar, TypeDef,
    UnitMatch, UnitVal, Up, With, Write,
)

INDENT = "  "


def name(n) -> str:
    return str(n) if isinstance(n, Addr) else n


# --------------------------------------------------------------------- types


def _annotated(t) -> str:
    """A type whose mode must be recoverable on its own."""
    if isinstance(t, TVar):
        return t.name
    return f"({show_type(t)} @ {t.mode})"


def show_type(t) -> str:
    match t:
        case Lolli(arg=a, result=b) | Arrow(arg=a, result=b):
            op = "-o" if isinstance(t, Lolli) else "->"
            return f"{_ptype(a)} {op} {show_type(b)}"
        case Imp(left=a, right=b):
            return f"{_annotated(a)} ==> {show_type(b)}"
    return _ptype(t)


def _ptype(t) -> str:
    match t:
        case Tensor(left=a, right=b) | Par(left=a, right=b):
            op = "*" if isinstance(t, Tensor) else "||"
            return f"{_atype(a)} {op} {_ptype(b)}"
        case And(left=a, right=b):
            return f"{_annotated(a)} /\\ {_ptype(b)}"
    return _atype(t)


def _atype(t) -> str:
    match t:
        case One():
            return "1"
        case TVar(name=n):
            return n
        case Plus(branches=bs) | With(branches=bs):
            sym = "+" if isinstance(t, Plus) else "&"
            inner = ", ".join(f"{l}: {show_type(b)}" for l, b in bs)
            return f"{sym}{{{inner}}}"
        case Down(source=r, body=b):
            return f"down[{r}] {_atype(b)}"
        case Up(source=k, body=b):
            return f"up[{k}] {_atype(b)}"
        case Fut(body=b):
            return f"fut {_atype(b)}"
        case Monad(body=b):
            return f"{{{_annotated(b) if not isinstance(b, TVar) else b.name}}}"
    return f"({show_type(t)})"


def show_binding(x: str, t) -> str:
    if isinstance(t, TVar):
        return f"({x} : {t.name})"
    return f"({x} : {show_type(t)} @ {t.mode})"


def show_type_at(t) -> str:
    return show_type(t) if isinstance(t, TVar) else f"{show_type(t)} @ {t.mode}"


# -------------------------------------------------------------------- values


def show_value(v) -> str:
    if isinstance(v, (str, Addr)):
        return name(v)
    match v:
        case Label(label=l, arg=a):
            return f"{l}({show_value(a)})"
        case Pair(first=a, second=b):
            return f"<{name(a)}, {show_value(b)}>"
        case UnitVal():
            return "<>"
        case Shift(arg=a):
            return f"shift({show_value(a)})"
        case ParPat(left=a, right=b):
            return f"<{a} | {b}>"
    raise TypeError(f"not a value: {v!r}")


# ----------------------------------------------------------------- processes


def _needs_parens_as_left(p) -> bool:
    return isinstance(p, (Cut, ShortCut, SeqCut, CbnCut, MonadBind, Id, Call, Apply))


def _arms(k):
    match k:
        case Branches(arms=arms):
            return [(f"{l}({name(y)})", body) for l, y, body in arms]
        case PairMatch(first=a, second=b, body=body):
            return [(f"<{name(a)}, {name(b)}>", body)]
        case UnitMatch(body=body):
            return [("<>", body)]
        case ShiftMatch(var=y, body=body):
            return [(f"shift({name(y)})", body)]
        case PatCont(arms=arms):
            return [(show_value(p), body) for p, body in arms]
    raise TypeError(f"not a continuation: {k!r}")


def show_cont(k, depth: int) -> str:
    arms = _arms(k)
    pad = INDENT * (depth + 1)
    if len(arms) == 1:
        pat, body = arms[0]
        inner = show_proc(body, depth + 1)
        if "\n" not in inner:
            return f"({pat} => {inner})"
        return f"({pat} =>\n{pad}{inner})"
    out = []
    for j, (pat, body) in enumerate(arms):
        lead = "( " if j == 0 else pad + "| "
        inner = show_proc(body, depth + 3)
        sep = " "
        if "\n" in inner:
            sep = "\n" + INDENT * (depth + 3)
        out.append(f"{lead}{pat} =>{sep}{inner}")
    return "\n".join(out) + "\n" + pad + ")"


def _arrow_kind(p) -> str:
    if isinstance(p, SeqCut):
        return "<="
    if isinstance(p, CbnCut):
        return "<~"
    return "<-"


def show_proc(p, depth: int = 0) -> str:
    pad = INDENT * depth
    match p:
        case Cut() | SeqCut() | CbnCut():
            head = name(p.var) + (f" : {show_type_at(p.ty)}" if p.ty is not None else "")
            left = show_proc(p.left, depth + 1)
            if isinstance(p.left, Apply) and p.left.dest == p.var:
                left = f"({show_proc(p.left.fn, depth + 1)})({show_proc(p.left.arg, depth + 1)})"
            elif _needs_parens_as_left(p.left):
                left = f"({left})"
            tag = f" % {p.origin}" if isinstance(p, Cut) and p.origin else ""
            return f"{head} {_arrow_kind(p)} {left} ;{tag}\n{pad}{show_proc(p.right, depth)}"
        case ShortCut(var=x, kind=kind, inner=inner, body=body, ty=ty):
            head = name(x) + (f" : {show_type_at(ty)}" if ty is not None else "")
            if isinstance(inner, Id):
                rhs = name(inner.src)
            else:
                rhs = " ".join([inner.proc, "<-", *map(name, inner.args)])
            return f"{head} {kind} {rhs} ;\n{pad}{show_proc(body, depth)}"
        case Id(dest=d, src=s):
            return f"{name(d)} <- {name(s)}"
        case Call(dest=d, proc=f, args=args):
            return " ".join([name(d), "<-", f, "<-", *map(name, args)])
        case Write(subject=x, value=v):
            return f"{name(x)}.{show_value(v)}"
        case Case(subject=x, cont=k):
            return f"case {name(x)} {show_cont(k, depth)}"
        case AtomValWrite(outer=o, inner=i, value=v):
            return f"{name(o)}.shift({name(i)}.{show_value(v)})"
        case AtomContWrite(outer=o, inner=i, cont=k):
            return f"{name(o)}.shift(case {name(i)} {show_cont(k, depth)})"
        case AtomIdWrite(outer=o, inner=i, src=s):
            return f"{name(o)}.shift({name(i)} <- {name(s)})"
        case Lambda(dest=d, var=x, body=b):
            return f"{name(d)}.(fn {x} => {show_proc(b, depth + 1)})"
        case Apply(dest=d, fn=f, arg=a):
            return f"{name(d)} <- ({show_proc(f, depth + 1)})({show_proc(a, depth + 1)})"
        case ParPair(dest=d, left=l, right=r):
            return f"{name(d)}.<{show_proc(l, depth + 1)} | {show_proc(r, depth + 1)}>"
        case MonadBrace(dest=d, body=b):
            return f"{name(d)}.{{{show_proc(b, depth + 1)}}}"
        case MonadBind(dest=d, body=b):
            return f"{{{name(d)}}} <- {show_proc(b, depth)}"
        case FutureMake(dest=d, body=b):
            return f"{name(d)}.(future {show_proc(b, depth + 1)})"
        case Touch(subject=x, var=z, body=b):
            return f"touch {name(x)} (<{z}> => {show_proc(b, depth + 1)})"
    raise TypeError(f"not a process: {p!r}")


# --------------------------------------------------------------------- items


def show_item(it) -> str:
    match it:
        case ModeDecl(name=n, structural=k, seq=seq):
            return f"mode {n} {k}" + (" seq" if seq else "")
        case OrderDecl(lower=a, upper=b):
            return f"order {a} < {b}"
        case TypeDef(name=n, mode=m, body=b):
            return f"type {n} @ {m} = {show_type(b)}"
        case ProcDecl(name=n, params=ps, result=(z, c)):
            params = " ".join(show_binding(x, t) for x, t in ps)
            return f"decl {n} :{' ' + params if params else ''} |- {show_binding(z, c)}"
        case ProcDef(name=n, dest=d, params=ps, body=b):
            head = " ".join(["proc", d, "<-", n, *(["<-", *ps] if ps else [])])
            return f"{head} =\n{INDENT}{show_proc(b, 1)}"
        case Include(path=path):
            return f'include "{path}"'
    raise TypeError(f"not an item: {it!r}")


def show_items(items) -> str:
    if not items:
        return ""
    return "\n\n".join(show_item(it) for it in items) + "\n"
