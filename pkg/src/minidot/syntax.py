"""Unified abstract syntax for the calculus ladder from F-sub up to DOT.

One AST serves all eight levels; ``gate_type``/``gate_term`` restrict which
constructors are legal at a given level.  Binders use a locally nameless
representation: bound occurrences are de Bruijn indices, free occurrences
are named and live in one of two disjoint namespaces (ordinary term
variables vs. variables introduced by subtype comparisons).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Optional, Union


class StructuralError(Exception):
    """Malformed syntax input (dangling index, unbound name, bad label)."""


# ---------------------------------------------------------------------------
# Calculus levels


class Level(IntEnum):
    FSUB = 0
    DSUB = 1
    DSUB_BOT = 2
    DSUB_BOT_AND_OR = 3
    DSUB_BOT_AND_OR_REC = 4
    DSUB_BOT_AND_OR_REC_FIX = 5
    DSUB_BOT_AND_OR_REC_FIX_MUT = 6
    DOT = 7


LEVEL_NAMES = {
    "fsub": Level.FSUB,
    "dsub": Level.DSUB,
    "dsubbot": Level.DSUB_BOT,
    "dsubbotandor": Level.DSUB_BOT_AND_OR,
    "dsubbotandorrec": Level.DSUB_BOT_AND_OR_REC,
    "dsubbotandorrecfix": Level.DSUB_BOT_AND_OR_REC_FIX,
    "dsubbotandorrecfixmut": Level.DSUB_BOT_AND_OR_REC_FIX_MUT,
    "dot": Level.DOT,
}

LEVEL_TAGS = {v: k for k, v in LEVEL_NAMES.items()}


def parse_level(name: str) -> Level:
    key = name.strip().lower().replace("_", "").replace("-", "")
    if key not in LEVEL_NAMES:
        raise StructuralError(f"unknown calculus level: {name!r}")
    return LEVEL_NAMES[key]


# ---------------------------------------------------------------------------
# Labels and variable references

TYPE_LABEL = "type"
VALUE_LABEL = "value"
METHOD_LABEL = "method"


@dataclass(frozen=True)
class Label:
    kind: str
    name: str

    def __post_init__(self):
        if self.kind not in (TYPE_LABEL, VALUE_LABEL, METHOD_LABEL):
            raise StructuralError(f"bad label kind: {self.kind!r}")

    def __str__(self):
        return self.name


def TL(name: str) -> Label:
    return Label(TYPE_LABEL, name)


def VL(name: str) -> Label:
    return Label(VALUE_LABEL, name)


def ML(name: str) -> Label:
    return Label(METHOD_LABEL, name)


# The single, global type label of the D-sub levels.
TYPE_TAG_LABEL = TL("Type")


TERM_NS = "term"
CMP_NS = "cmp"


@dataclass(frozen=True)
class Bound:
    """Nameless reference to the idx-th enclosing binder."""

    idx: int

    def __str__(self):
        return f"#{self.idx}"


@dataclass(frozen=True)
class Free:
    """Named free variable; ns is 'term' or 'cmp' (comparison variables)."""

    ns: str
    name: str

    def __post_init__(self):
        if self.ns not in (TERM_NS, CMP_NS):
            raise StructuralError(f"bad namespace: {self.ns!r}")

    def __str__(self):
        return self.name if self.ns == TERM_NS else f"%{self.name}"


VarRef = Union[Bound, Free]


def tv(name: str) -> Free:
    return Free(TERM_NS, name)


def cv(name: str) -> Free:
    return Free(CMP_NS, name)


# ---------------------------------------------------------------------------
# Types


class Ty:
    """Base class for types."""

    __slots__ = ()


@dataclass(frozen=True)
class Top(Ty):
    def __str__(self):
        return "Top"


@dataclass(frozen=True)
class Bot(Ty):
    def __str__(self):
        return "Bot"


TOP = Top()
BOT = Bot()


@dataclass(frozen=True)
class And(Ty):
    left: Ty
    right: Ty

    def __str__(self):
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class Or(Ty):
    left: Ty
    right: Ty

    def __str__(self):
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class TypeMem(Ty):
    """Labelled type member with bounds: { L : lo .. hi } (DOT level)."""

    label: Label
    lo: Ty
    hi: Ty

    def __str__(self):
        return f"{{ {self.label} : {self.lo} .. {self.hi} }}"


@dataclass(frozen=True)
class Fld(Ty):
    """Value member: { l : T }."""

    label: Label
    ty: Ty

    def __str__(self):
        return f"{{ {self.label} : {self.ty} }}"


@dataclass(frozen=True)
class Method(Ty):
    """Method member m(x:S):U; result is under one binder (the parameter)."""

    label: Label
    param: Ty
    result: Ty

    def __str__(self):
        return f"{self.label}(_:{self.param}):{self.result}"


@dataclass(frozen=True)
class Sel(Ty):
    """Path-dependent type selection x.L."""

    var: VarRef
    label: Label

    def __str__(self):
        return f"{self.var}.{self.label}"


@dataclass(frozen=True)
class BindSelf(Ty):
    """Recursive self type { z => T }; body is under one binder."""

    body: Ty

    def __str__(self):
        return f"rec(_) {self.body}"


@dataclass(frozen=True)
class DepFun(Ty):
    """Dependent function type all(x:S)U; result is under one binder."""

    param: Ty
    result: Ty

    def __str__(self):
        return f"all(_:{self.param}){self.result}"


@dataclass(frozen=True)
class TypeTag(Ty):
    """Unlabelled type-of-types of the D-sub levels: { Type : lo .. hi }."""

    lo: Ty
    hi: Ty

    def __str__(self):
        if self.lo == self.hi:
            return f"{{ Type = {self.lo} }}"
        if self.lo == BOT:
            return f"{{ Type <: {self.hi} }}"
        return f"{{ Type : {self.lo} .. {self.hi} }}"


@dataclass(frozen=True)
class RefTy(Ty):
    ty: Ty

    def __str__(self):
        return f"Ref {self.ty}"


@dataclass(frozen=True)
class FVar(Ty):
    """F-sub type variable occurrence."""

    var: VarRef

    def __str__(self):
        return str(self.var)


@dataclass(frozen=True)
class AllSub(Ty):
    """F-sub bounded quantifier forall(Z<:T)U; body under one binder."""

    bound: Ty
    body: Ty

    def __str__(self):
        return f"forall(_<:{self.bound}){self.body}"


@dataclass(frozen=True)
class Arrow(Ty):
    param: Ty
    result: Ty

    def __str__(self):
        return f"({self.param} -> {self.result})"


# ---------------------------------------------------------------------------
# Terms and initializations


class Tm:
    """Base class for terms."""

    __slots__ = ()


class Decl:
    """Base class for member initializations."""

    __slots__ = ()


@dataclass(frozen=True)
class Var(Tm):
    var: VarRef

    def __str__(self):
        return str(self.var)


@dataclass(frozen=True)
class Lam(Tm):
    """fun(x:T) t; body under one binder.

    ``result`` is filled in by typecheck elaboration (the inferred result
    type, under the same binder); it is ignored by equality-sensitive
    source-level operations only in the sense that source terms carry None.
    """

    annot: Ty
    body: Tm
    result: Optional[Ty] = None

    def __str__(self):
        return f"fun(_:{self.annot}) {self.body}"


@dataclass(frozen=True)
class App(Tm):
    fn: Tm
    arg: Tm

    def __str__(self):
        return f"({self.fn} {self.arg})"


@dataclass(frozen=True)
class TyLam(Tm):
    """tfun(X<:T) t (F-sub type abstraction); body under one binder."""

    bound: Ty
    body: Tm

    def __str__(self):
        return f"tfun(_<:{self.bound}) {self.body}"


@dataclass(frozen=True)
class TyApp(Tm):
    fn: Tm
    ty: Ty

    def __str__(self):
        return f"({self.fn} [{self.ty}])"


@dataclass(frozen=True)
class TypeVal(Tm):
    """First-class type value { Type = T }."""

    ty: Ty

    def __str__(self):
        return f"typeval {self.ty}"


@dataclass(frozen=True)
class Rec(Tm):
    """Record without a self binder (pre-DOT record levels)."""

    decls: tuple

    def __str__(self):
        return "new { " + "; ".join(str(d) for d in self.decls) + " }"


@dataclass(frozen=True)
class SelField(Tm):
    obj: Tm
    label: Label

    def __str__(self):
        return f"{self.obj}.{self.label}"


@dataclass(frozen=True)
class Invoke(Tm):
    obj: Tm
    label: Label
    arg: Tm

    def __str__(self):
        return f"{self.obj}.{self.label}({self.arg})"


@dataclass(frozen=True)
class Obj(Tm):
    """DOT object { x => d... }; every decl is under the self binder."""

    decls: tuple

    def __str__(self):
        return "new (_) { " + "; ".join(str(d) for d in self.decls) + " }"


@dataclass(frozen=True)
class Fix(Tm):
    """fix(x:T) t; both the annotation and the body are under one binder."""

    annot: Ty
    body: Tm

    def __str__(self):
        return f"fix(_:{self.annot}) {self.body}"


@dataclass(frozen=True)
class RefNew(Tm):
    """ref t; ``annot`` is the elaborated static type of the content."""

    tm: Tm
    annot: Optional[Ty] = None

    def __str__(self):
        return f"ref {self.tm}"


@dataclass(frozen=True)
class Deref(Tm):
    tm: Tm

    def __str__(self):
        return f"!{self.tm}"


@dataclass(frozen=True)
class Assign(Tm):
    target: Tm
    source: Tm

    def __str__(self):
        return f"({self.target} := {self.source})"


@dataclass(frozen=True)
class Loc(Tm):
    """Store location; introduced only by the evaluator / machine."""

    loc: int

    def __str__(self):
        return f"loc#{self.loc}"


@dataclass(frozen=True)
class TypeInit(Decl):
    """L = T (lo == hi) or the bounded form L : lo .. hi."""

    label: Label
    lo: Ty
    hi: Ty

    def __str__(self):
        if self.lo == self.hi:
            return f"{self.label} = {self.lo}"
        return f"{self.label} : {self.lo} .. {self.hi}"


@dataclass(frozen=True)
class FieldInit(Decl):
    """l = t; ``ty`` is the elaborated field type."""

    label: Label
    tm: Tm
    ty: Optional[Ty] = None

    def __str__(self):
        return f"{self.label} = {self.tm}"


@dataclass(frozen=True)
class MethodInit(Decl):
    """m(y:S):U = t; body under two binders: #0 parameter, #1 object self."""

    label: Label
    param: Ty
    result: Ty
    body: Tm

    def __str__(self):
        return f"{self.label}(_:{self.param}):{self.result} = {self.body}"


# ---------------------------------------------------------------------------
# Binder plumbing: opening, closing, free variables, substitution
#
# Every binding construct introduces exactly one binder.  ``k`` tracks the
# index bound by the nearest enclosing binder of interest.


def _open_ref(r: VarRef, k: int, v: Free) -> VarRef:
    if isinstance(r, Bound):
        if r.idx == k:
            return v
        return r
    return r


def open_ty(t: Ty, v: Free, k: int = 0) -> Ty:
    """Replace Bound(k) with the free variable v (the paper's T^x)."""
    if isinstance(t, (Top, Bot)):
        return t
    if isinstance(t, And):
        return And(open_ty(t.left, v, k), open_ty(t.right, v, k))
    if isinstance(t, Or):
        return Or(open_ty(t.left, v, k), open_ty(t.right, v, k))
    if isinstance(t, TypeMem):
        return TypeMem(t.label, open_ty(t.lo, v, k), open_ty(t.hi, v, k))
    if isinstance(t, Fld):
        return Fld(t.label, open_ty(t.ty, v, k))
    if isinstance(t, Method):
        return Method(t.label, open_ty(t.param, v, k), open_ty(t.result, v, k + 1))
    if isinstance(t, Sel):
        return Sel(_open_ref(t.var, k, v), t.label)
    if isinstance(t, BindSelf):
        return BindSelf(open_ty(t.body, v, k + 1))
    if isinstance(t, DepFun):
        return DepFun(open_ty(t.param, v, k), open_ty(t.result, v, k + 1))
    if isinstance(t, TypeTag):
        return TypeTag(open_ty(t.lo, v, k), open_ty(t.hi, v, k))
    if isinstance(t, RefTy):
        return RefTy(open_ty(t.ty, v, k))
    if isinstance(t, FVar):
        return FVar(_open_ref(t.var, k, v))
    if isinstance(t, AllSub):
        return AllSub(open_ty(t.bound, v, k), open_ty(t.body, v, k + 1))
    if isinstance(t, Arrow):
        return Arrow(open_ty(t.param, v, k), open_ty(t.result, v, k))
    raise StructuralError(f"open_ty: not a type: {t!r}")


def _close_ref(r: VarRef, k: int, v: Free) -> VarRef:
    if isinstance(r, Free) and r == v:
        return Bound(k)
    return r


def close_ty(t: Ty, v: Free, k: int = 0) -> Ty:
    """Inverse of open_ty: abstract the free variable v as Bound(k)."""
    if isinstance(t, (Top, Bot)):
        return t
    if isinstance(t, And):
        return And(close_ty(t.left, v, k), close_ty(t.right, v, k))
    if isinstance(t, Or):
        return Or(close_ty(t.left, v, k), close_ty(t.right, v, k))
    if isinstance(t, TypeMem):
        return TypeMem(t.label, close_ty(t.lo, v, k), close_ty(t.hi, v, k))
    if isinstance(t, Fld):
        return Fld(t.label, close_ty(t.ty, v, k))
    if isinstance(t, Method):
        return Method(t.label, close_ty(t.param, v, k), close_ty(t.result, v, k + 1))
    if isinstance(t, Sel):
        return Sel(_close_ref(t.var, k, v), t.label)
    if isinstance(t, BindSelf):
        return BindSelf(close_ty(t.body, v, k + 1))
    if isinstance(t, DepFun):
        return DepFun(close_ty(t.param, v, k), close_ty(t.result, v, k + 1))
    if isinstance(t, TypeTag):
        return TypeTag(close_ty(t.lo, v, k), close_ty(t.hi, v, k))
    if isinstance(t, RefTy):
        return RefTy(close_ty(t.ty, v, k))
    if isinstance(t, FVar):
        return FVar(_close_ref(t.var, k, v))
    if isinstance(t, AllSub):
        return AllSub(close_ty(t.bound, v, k), close_ty(t.body, v, k + 1))
    if isinstance(t, Arrow):
        return Arrow(close_ty(t.param, v, k), close_ty(t.result, v, k))
    raise StructuralError(f"close_ty: not a type: {t!r}")


def open_ty_with_ty(t: Ty, u: Ty, k: int = 0) -> Ty:
    """Fill the outermost binder hole with a whole type (F-sub type application).

    Only FVar occurrences of the hole can be filled; a Sel on the hole would
    require a variable and is a structural error.
    """
    if isinstance(t, (Top, Bot)):
        return t
    if isinstance(t, FVar):
        if isinstance(t.var, Bound) and t.var.idx == k:
            return u
        return t
    if isinstance(t, Sel):
        if isinstance(t.var, Bound) and t.var.idx == k:
            raise StructuralError("cannot substitute a type into a path selection")
        return t
    if isinstance(t, And):
        return And(open_ty_with_ty(t.left, u, k), open_ty_with_ty(t.right, u, k))
    if isinstance(t, Or):
        return Or(open_ty_with_ty(t.left, u, k), open_ty_with_ty(t.right, u, k))
    if isinstance(t, TypeMem):
        return TypeMem(t.label, open_ty_with_ty(t.lo, u, k), open_ty_with_ty(t.hi, u, k))
    if isinstance(t, Fld):
        return Fld(t.label, open_ty_with_ty(t.ty, u, k))
    if isinstance(t, Method):
        return Method(t.label, open_ty_with_ty(t.param, u, k), open_ty_with_ty(t.result, u, k + 1))
    if isinstance(t, BindSelf):
        return BindSelf(open_ty_with_ty(t.body, u, k + 1))
    if isinstance(t, DepFun):
        return DepFun(open_ty_with_ty(t.param, u, k), open_ty_with_ty(t.result, u, k + 1))
    if isinstance(t, TypeTag):
        return TypeTag(open_ty_with_ty(t.lo, u, k), open_ty_with_ty(t.hi, u, k))
    if isinstance(t, RefTy):
        return RefTy(open_ty_with_ty(t.ty, u, k))
    if isinstance(t, AllSub):
        return AllSub(open_ty_with_ty(t.bound, u, k), open_ty_with_ty(t.body, u, k + 1))
    if isinstance(t, Arrow):
        return Arrow(open_ty_with_ty(t.param, u, k), open_ty_with_ty(t.result, u, k))
    raise StructuralError(f"open_ty_with_ty: not a type: {t!r}")


def _open_decl(d: Decl, v: Free, k: int) -> Decl:
    if isinstance(d, TypeInit):
        return TypeInit(d.label, open_ty(d.lo, v, k), open_ty(d.hi, v, k))
    if isinstance(d, FieldInit):
        ty = open_ty(d.ty, v, k) if d.ty is not None else None
        return FieldInit(d.label, open_tm(d.tm, v, k), ty)
    if isinstance(d, MethodInit):
        return MethodInit(d.label, open_ty(d.param, v, k),
                          open_ty(d.result, v, k + 1), open_tm(d.body, v, k + 1))
    raise StructuralError(f"not a decl: {d!r}")


def open_tm(t: Tm, v: Free, k: int = 0) -> Tm:
    """Replace Bound(k) with the free variable v throughout a term."""
    if isinstance(t, Var):
        return Var(_open_ref(t.var, k, v))
    if isinstance(t, Lam):
        res = open_ty(t.result, v, k + 1) if t.result is not None else None
        return Lam(open_ty(t.annot, v, k), open_tm(t.body, v, k + 1), res)
    if isinstance(t, App):
        return App(open_tm(t.fn, v, k), open_tm(t.arg, v, k))
    if isinstance(t, TyLam):
        return TyLam(open_ty(t.bound, v, k), open_tm(t.body, v, k + 1))
    if isinstance(t, TyApp):
        return TyApp(open_tm(t.fn, v, k), open_ty(t.ty, v, k))
    if isinstance(t, TypeVal):
        return TypeVal(open_ty(t.ty, v, k))
    if isinstance(t, Rec):
        return Rec(tuple(_open_decl(d, v, k) for d in t.decls))
    if isinstance(t, SelField):
        return SelField(open_tm(t.obj, v, k), t.label)
    if isinstance(t, Invoke):
        return Invoke(open_tm(t.obj, v, k), t.label, open_tm(t.arg, v, k))
    if isinstance(t, Obj):
        return Obj(tuple(_open_decl(d, v, k + 1) for d in t.decls))
    if isinstance(t, Fix):
        return Fix(open_ty(t.annot, v, k + 1), open_tm(t.body, v, k + 1))
    if isinstance(t, RefNew):
        annot = open_ty(t.annot, v, k) if t.annot is not None else None
        return RefNew(open_tm(t.tm, v, k), annot)
    if isinstance(t, Deref):
        return Deref(open_tm(t.tm, v, k))
    if isinstance(t, Assign):
        return Assign(open_tm(t.target, v, k), open_tm(t.source, v, k))
    if isinstance(t, Loc):
        return t
    raise StructuralError(f"open_tm: not a term: {t!r}")


def _close_decl(d: Decl, v: Free, k: int) -> Decl:
    if isinstance(d, TypeInit):
        return TypeInit(d.label, close_ty(d.lo, v, k), close_ty(d.hi, v, k))
    if isinstance(d, FieldInit):
        ty = close_ty(d.ty, v, k) if d.ty is not None else None
        return FieldInit(d.label, close_tm(d.tm, v, k), ty)
    if isinstance(d, MethodInit):
        return MethodInit(d.label, close_ty(d.param, v, k),
                          close_ty(d.result, v, k + 1), close_tm(d.body, v, k + 1))
    raise StructuralError(f"not a decl: {d!r}")


def close_tm(t: Tm, v: Free, k: int = 0) -> Tm:
    if isinstance(t, Var):
        return Var(_close_ref(t.var, k, v))
    if isinstance(t, Lam):
        res = close_ty(t.result, v, k + 1) if t.result is not None else None
        return Lam(close_ty(t.annot, v, k), close_tm(t.body, v, k + 1), res)
    if isinstance(t, App):
        return App(close_tm(t.fn, v, k), close_tm(t.arg, v, k))
    if isinstance(t, TyLam):
        return TyLam(close_ty(t.bound, v, k), close_tm(t.body, v, k + 1))
    if isinstance(t, TyApp):
        return TyApp(close_tm(t.fn, v, k), close_ty(t.ty, v, k))
    if isinstance(t, TypeVal):
        return TypeVal(close_ty(t.ty, v, k))
    if isinstance(t, Rec):
        return Rec(tuple(_close_decl(d, v, k) for d in t.decls))
    if isinstance(t, SelField):
        return SelField(close_tm(t.obj, v, k), t.label)
    if isinstance(t, Invoke):
        return Invoke(close_tm(t.obj, v, k), t.label, close_tm(t.arg, v, k))
    if isinstance(t, Obj):
        return Obj(tuple(_close_decl(d, v, k + 1) for d in t.decls))
    if isinstance(t, Fix):
        return Fix(close_ty(t.annot, v, k + 1), close_tm(t.body, v, k + 1))
    if isinstance(t, RefNew):
        annot = close_ty(t.annot, v, k) if t.annot is not None else None
        return RefNew(close_tm(t.tm, v, k), annot)
    if isinstance(t, Deref):
        return Deref(close_tm(t.tm, v, k))
    if isinstance(t, Assign):
        return Assign(close_tm(t.target, v, k), close_tm(t.source, v, k))
    if isinstance(t, Loc):
        return t
    raise StructuralError(f"close_tm: not a term: {t!r}")


def shift_ty(t: Ty, d: int = 1, cutoff: int = 0) -> Ty:
    """Add d to every dangling de Bruijn index at or above the cutoff."""
    def ref(r: VarRef, c: int) -> VarRef:
        if isinstance(r, Bound) and r.idx >= c:
            return Bound(r.idx + d)
        return r

    def go(u: Ty, c: int) -> Ty:
        if isinstance(u, (Top, Bot)):
            return u
        if isinstance(u, And):
            return And(go(u.left, c), go(u.right, c))
        if isinstance(u, Or):
            return Or(go(u.left, c), go(u.right, c))
        if isinstance(u, TypeMem):
            return TypeMem(u.label, go(u.lo, c), go(u.hi, c))
        if isinstance(u, Fld):
            return Fld(u.label, go(u.ty, c))
        if isinstance(u, Method):
            return Method(u.label, go(u.param, c), go(u.result, c + 1))
        if isinstance(u, Sel):
            return Sel(ref(u.var, c), u.label)
        if isinstance(u, BindSelf):
            return BindSelf(go(u.body, c + 1))
        if isinstance(u, DepFun):
            return DepFun(go(u.param, c), go(u.result, c + 1))
        if isinstance(u, TypeTag):
            return TypeTag(go(u.lo, c), go(u.hi, c))
        if isinstance(u, RefTy):
            return RefTy(go(u.ty, c))
        if isinstance(u, FVar):
            return FVar(ref(u.var, c))
        if isinstance(u, AllSub):
            return AllSub(go(u.bound, c), go(u.body, c + 1))
        if isinstance(u, Arrow):
            return Arrow(go(u.param, c), go(u.result, c))
        raise StructuralError(f"shift_ty: not a type: {u!r}")

    return go(t, cutoff)


def subst_tm_in_tm(t: Tm, s: Tm, k: int = 0) -> Tm:
    """Fill the outermost term binder with a term (small-step beta).

    Path selections on the hole demand that s is a variable reference; the
    small-step machine only ever substitutes store names there.
    """
    if isinstance(t, Var):
        if isinstance(t.var, Bound) and t.var.idx == k:
            return s
        return t

    def sub_ty(u: Ty, k2: int) -> Ty:
        if isinstance(s, Var):
            return open_ty(u, s.var, k2) if isinstance(s.var, Free) else u
        # A non-variable value never appears inside path types; refuse if it
        # would have to.
        probe = Free(CMP_NS, "$beta-probe")
        opened = open_ty(u, probe, k2)
        if probe in fv_ty(opened):
            raise StructuralError("substituting a non-variable into a path type")
        return opened

    if isinstance(t, Lam):
        res = sub_ty(t.result, k + 1) if t.result is not None else None
        return Lam(sub_ty(t.annot, k), subst_tm_in_tm(t.body, s, k + 1), res)
    if isinstance(t, App):
        return App(subst_tm_in_tm(t.fn, s, k), subst_tm_in_tm(t.arg, s, k))
    if isinstance(t, TypeVal):
        return TypeVal(sub_ty(t.ty, k))
    if isinstance(t, Loc):
        return t
    raise StructuralError(f"subst_tm_in_tm: unsupported term: {t!r}")


def fv_ty(t: Ty) -> frozenset:
    """Free (named) variables of a type."""
    if isinstance(t, (Top, Bot)):
        return frozenset()
    if isinstance(t, (And, Or)):
        return fv_ty(t.left) | fv_ty(t.right)
    if isinstance(t, (TypeMem, TypeTag)):
        return fv_ty(t.lo) | fv_ty(t.hi)
    if isinstance(t, Fld):
        return fv_ty(t.ty)
    if isinstance(t, (Method, DepFun)):
        return fv_ty(t.param) | fv_ty(t.result)
    if isinstance(t, Sel):
        return frozenset([t.var]) if isinstance(t.var, Free) else frozenset()
    if isinstance(t, BindSelf):
        return fv_ty(t.body)
    if isinstance(t, RefTy):
        return fv_ty(t.ty)
    if isinstance(t, FVar):
        return frozenset([t.var]) if isinstance(t.var, Free) else frozenset()
    if isinstance(t, AllSub):
        return fv_ty(t.bound) | fv_ty(t.body)
    if isinstance(t, Arrow):
        return fv_ty(t.param) | fv_ty(t.result)
    raise StructuralError(f"fv_ty: not a type: {t!r}")


def _fv_decl(d: Decl) -> frozenset:
    if isinstance(d, TypeInit):
        return fv_ty(d.lo) | fv_ty(d.hi)
    if isinstance(d, FieldInit):
        extra = fv_ty(d.ty) if d.ty is not None else frozenset()
        return fv_tm(d.tm) | extra
    if isinstance(d, MethodInit):
        return fv_ty(d.param) | fv_ty(d.result) | fv_tm(d.body)
    raise StructuralError(f"not a decl: {d!r}")


def fv_tm(t: Tm) -> frozenset:
    """Free (named) variables of a term, annotations included."""
    if isinstance(t, Var):
        return frozenset([t.var]) if isinstance(t.var, Free) else frozenset()
    if isinstance(t, Lam):
        extra = fv_ty(t.result) if t.result is not None else frozenset()
        return fv_ty(t.annot) | fv_tm(t.body) | extra
    if isinstance(t, App):
        return fv_tm(t.fn) | fv_tm(t.arg)
    if isinstance(t, TyLam):
        return fv_ty(t.bound) | fv_tm(t.body)
    if isinstance(t, TyApp):
        return fv_tm(t.fn) | fv_ty(t.ty)
    if isinstance(t, TypeVal):
        return fv_ty(t.ty)
    if isinstance(t, (Rec, Obj)):
        out = frozenset()
        for d in t.decls:
            out |= _fv_decl(d)
        return out
    if isinstance(t, SelField):
        return fv_tm(t.obj)
    if isinstance(t, Invoke):
        return fv_tm(t.obj) | fv_tm(t.arg)
    if isinstance(t, Fix):
        return fv_ty(t.annot) | fv_tm(t.body)
    if isinstance(t, RefNew):
        extra = fv_ty(t.annot) if t.annot is not None else frozenset()
        return fv_tm(t.tm) | extra
    if isinstance(t, Deref):
        return fv_tm(t.tm)
    if isinstance(t, Assign):
        return fv_tm(t.target) | fv_tm(t.source)
    if isinstance(t, Loc):
        return frozenset()
    raise StructuralError(f"fv_tm: not a term: {t!r}")


def subst_ty_in_ty(t: Ty, v: Free, u: Ty) -> Ty:
    """Capture-avoiding substitution of u for the free variable v in t.

    Occurrences of v in path positions (Sel) require u to be a variable
    occurrence (FVar or Sel-able); otherwise this is a structural error.
    """
    def ref_target() -> VarRef:
        if isinstance(u, FVar) and isinstance(u.var, Free):
            return u.var
        raise StructuralError("substituting a non-variable into a path selection")

    if isinstance(t, (Top, Bot)):
        return t
    if isinstance(t, And):
        return And(subst_ty_in_ty(t.left, v, u), subst_ty_in_ty(t.right, v, u))
    if isinstance(t, Or):
        return Or(subst_ty_in_ty(t.left, v, u), subst_ty_in_ty(t.right, v, u))
    if isinstance(t, TypeMem):
        return TypeMem(t.label, subst_ty_in_ty(t.lo, v, u), subst_ty_in_ty(t.hi, v, u))
    if isinstance(t, Fld):
        return Fld(t.label, subst_ty_in_ty(t.ty, v, u))
    if isinstance(t, Method):
        return Method(t.label, subst_ty_in_ty(t.param, v, u), subst_ty_in_ty(t.result, v, u))
    if isinstance(t, Sel):
        if t.var == v:
            return Sel(ref_target(), t.label)
        return t
    if isinstance(t, BindSelf):
        return BindSelf(subst_ty_in_ty(t.body, v, u))
    if isinstance(t, DepFun):
        return DepFun(subst_ty_in_ty(t.param, v, u), subst_ty_in_ty(t.result, v, u))
    if isinstance(t, TypeTag):
        return TypeTag(subst_ty_in_ty(t.lo, v, u), subst_ty_in_ty(t.hi, v, u))
    if isinstance(t, RefTy):
        return RefTy(subst_ty_in_ty(t.ty, v, u))
    if isinstance(t, FVar):
        return u if t.var == v else t
    if isinstance(t, AllSub):
        return AllSub(subst_ty_in_ty(t.bound, v, u), subst_ty_in_ty(t.body, v, u))
    if isinstance(t, Arrow):
        return Arrow(subst_ty_in_ty(t.param, v, u), subst_ty_in_ty(t.result, v, u))
    raise StructuralError(f"subst_ty_in_ty: not a type: {t!r}")


def locally_closed_ty(t: Ty, depth: int = 0) -> bool:
    """True iff every de Bruijn index is bound by an enclosing binder."""
    if isinstance(t, (Top, Bot)):
        return True
    if isinstance(t, (And, Or)):
        return locally_closed_ty(t.left, depth) and locally_closed_ty(t.right, depth)
    if isinstance(t, (TypeMem, TypeTag)):
        return locally_closed_ty(t.lo, depth) and locally_closed_ty(t.hi, depth)
    if isinstance(t, Fld):
        return locally_closed_ty(t.ty, depth)
    if isinstance(t, Method):
        return locally_closed_ty(t.param, depth) and locally_closed_ty(t.result, depth + 1)
    if isinstance(t, Sel):
        return not isinstance(t.var, Bound) or t.var.idx < depth
    if isinstance(t, BindSelf):
        return locally_closed_ty(t.body, depth + 1)
    if isinstance(t, DepFun):
        return locally_closed_ty(t.param, depth) and locally_closed_ty(t.result, depth + 1)
    if isinstance(t, RefTy):
        return locally_closed_ty(t.ty, depth)
    if isinstance(t, FVar):
        return not isinstance(t.var, Bound) or t.var.idx < depth
    if isinstance(t, AllSub):
        return locally_closed_ty(t.bound, depth) and locally_closed_ty(t.body, depth + 1)
    if isinstance(t, Arrow):
        return locally_closed_ty(t.param, depth) and locally_closed_ty(t.result, depth)
    raise StructuralError(f"locally_closed_ty: not a type: {t!r}")


# ---------------------------------------------------------------------------
# Typing contexts

TERM_SEG = "term"
CMP_SEG = "cmp"


@dataclass(frozen=True)
class Binding:
    var: Free
    ty: Ty
    seg: str = TERM_SEG
    tyvar: bool = False  # F-sub X<:T binding rather than x:T

    def __str__(self):
        rel = "<:" if self.tyvar else ":"
        return f"{self.var}{rel}{self.ty}"


@dataclass(frozen=True)
class TypingCtx:
    """Ordered environment: term bindings, then comparison bindings."""

    entries: tuple = ()

    def lookup(self, var: Free) -> Optional[Binding]:
        for b in reversed(self.entries):
            if b.var == var:
                return b
        return None

    def extend(self, var: Free, ty: Ty, seg: str = TERM_SEG, tyvar: bool = False) -> "TypingCtx":
        return TypingCtx(self.entries + (Binding(var, ty, seg, tyvar),))

    def fresh(self, hint: str, ns: str = CMP_NS) -> Free:
        names = {b.var.name for b in self.entries}
        if hint not in names:
            return Free(ns, hint)
        i = 0
        while f"{hint}{i}" in names:
            i += 1
        return Free(ns, f"{hint}{i}")

    def __contains__(self, var: Free) -> bool:
        return self.lookup(var) is not None

    def __iter__(self) -> Iterator[Binding]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __str__(self):
        return ", ".join(str(b) for b in self.entries)


def ctx_restrict(ctx: TypingCtx, var: Free) -> TypingCtx:
    """The paper's restricted environment: drop comparison bindings right of var."""
    pos = None
    for i, b in enumerate(ctx.entries):
        if b.var == var:
            pos = i
    if pos is None:
        raise StructuralError(f"ctx_restrict: {var} not bound")
    kept = list(ctx.entries[: pos + 1])
    for b in ctx.entries[pos + 1:]:
        if b.seg == TERM_SEG:
            kept.append(b)
    return TypingCtx(tuple(kept))


def wf(ctx: TypingCtx, t: Ty) -> bool:
    """Every free name of t (including Sel subjects) is bound in ctx."""
    if not locally_closed_ty(t):
        return False
    return all(v in ctx for v in fv_ty(t))


# ---------------------------------------------------------------------------
# Level gating


def _is_dsub_sel(t: Sel) -> bool:
    return t.label == TYPE_TAG_LABEL


def gate_type(level: Level, t: Ty) -> bool:
    """True iff every constructor of t is in the level's grammar row."""
    if not locally_closed_ty(t):
        raise StructuralError("gate_type: dangling bound index")
    return _gate_ty(level, t)


def _gate_ty(level: Level, t: Ty) -> bool:
    lv = level
    if isinstance(t, Top):
        return True
    if isinstance(t, Bot):
        return lv >= Level.DSUB_BOT
    if isinstance(t, (And, Or)):
        return lv >= Level.DSUB_BOT_AND_OR and _gate_ty(lv, t.left) and _gate_ty(lv, t.right)
    if isinstance(t, TypeMem):
        return lv == Level.DOT and _gate_ty(lv, t.lo) and _gate_ty(lv, t.hi)
    if isinstance(t, Fld):
        return (lv == Level.DOT or Level.DSUB_BOT_AND_OR_REC <= lv) and _gate_ty(lv, t.ty)
    if isinstance(t, Method):
        return lv == Level.DOT and _gate_ty(lv, t.param) and _gate_ty(lv, t.result)
    if isinstance(t, Sel):
        if t.label.kind != TYPE_LABEL:
            return False
        if lv == Level.DOT:
            return True
        return Level.DSUB <= lv <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT and _is_dsub_sel(t)
    if isinstance(t, BindSelf):
        return (lv == Level.DOT or lv >= Level.DSUB_BOT_AND_OR_REC_FIX) and _gate_ty(lv, t.body)
    if isinstance(t, DepFun):
        return (Level.DSUB <= lv <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT
                and _gate_ty(lv, t.param) and _gate_ty(lv, t.result))
    if isinstance(t, TypeTag):
        if not Level.DSUB <= lv <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT:
            return False
        if lv == Level.DSUB and not (t.lo == BOT or t.lo == t.hi):
            return False
        return _gate_ty(lv, t.lo) and _gate_ty(lv, t.hi)
    if isinstance(t, RefTy):
        return lv == Level.DSUB_BOT_AND_OR_REC_FIX_MUT and _gate_ty(lv, t.ty)
    if isinstance(t, FVar):
        return lv == Level.FSUB
    if isinstance(t, AllSub):
        return lv == Level.FSUB and _gate_ty(lv, t.bound) and _gate_ty(lv, t.body)
    if isinstance(t, Arrow):
        return lv == Level.FSUB and _gate_ty(lv, t.param) and _gate_ty(lv, t.result)
    raise StructuralError(f"gate_type: not a type: {t!r}")


def gate_term(level: Level, t: Tm) -> bool:
    """True iff every constructor of t (and its embedded types) is admitted."""
    return _gate_tm(level, t)


def _gate_decl(level: Level, d: Decl) -> bool:
    if isinstance(d, TypeInit):
        return level == Level.DOT and _gate_ty(level, d.lo) and _gate_ty(level, d.hi)
    if isinstance(d, FieldInit):
        return _gate_tm(level, d.tm)
    if isinstance(d, MethodInit):
        return (level == Level.DOT and _gate_ty(level, d.param)
                and _gate_ty(level, d.result) and _gate_tm(level, d.body))
    raise StructuralError(f"not a decl: {d!r}")


def _gate_tm(level: Level, t: Tm) -> bool:
    lv = level
    if isinstance(t, Var):
        return True
    if isinstance(t, Lam):
        return lv != Level.DOT and _gate_ty(lv, t.annot) and _gate_tm(lv, t.body)
    if isinstance(t, App):
        return lv != Level.DOT and _gate_tm(lv, t.fn) and _gate_tm(lv, t.arg)
    if isinstance(t, TyLam):
        return lv == Level.FSUB and _gate_ty(lv, t.bound) and _gate_tm(lv, t.body)
    if isinstance(t, TyApp):
        return lv == Level.FSUB and _gate_tm(lv, t.fn) and _gate_ty(lv, t.ty)
    if isinstance(t, TypeVal):
        return Level.DSUB <= lv <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT and _gate_ty(lv, t.ty)
    if isinstance(t, Rec):
        if not Level.DSUB_BOT_AND_OR_REC <= lv <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT:
            return False
        return all(isinstance(d, FieldInit) and _gate_decl(lv, d) for d in t.decls)
    if isinstance(t, SelField):
        return ((lv == Level.DOT or lv >= Level.DSUB_BOT_AND_OR_REC)
                and t.label.kind == VALUE_LABEL and _gate_tm(lv, t.obj))
    if isinstance(t, Invoke):
        return (lv == Level.DOT and t.label.kind == METHOD_LABEL
                and _gate_tm(lv, t.obj) and _gate_tm(lv, t.arg))
    if isinstance(t, Obj):
        if lv != Level.DOT:
            return False
        labels = [d.label for d in t.decls]
        if len(set(labels)) != len(labels):
            return False
        return all(_gate_decl(lv, d) for d in t.decls)
    if isinstance(t, Fix):
        return (Level.DSUB_BOT_AND_OR_REC_FIX <= lv <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT
                and _gate_ty(lv, t.annot) and _gate_tm(lv, t.body))
    if isinstance(t, RefNew):
        return lv == Level.DSUB_BOT_AND_OR_REC_FIX_MUT and _gate_tm(lv, t.tm)
    if isinstance(t, (Deref,)):
        return lv == Level.DSUB_BOT_AND_OR_REC_FIX_MUT and _gate_tm(lv, t.tm)
    if isinstance(t, Assign):
        return (lv == Level.DSUB_BOT_AND_OR_REC_FIX_MUT
                and _gate_tm(lv, t.target) and _gate_tm(lv, t.source))
    if isinstance(t, Loc):
        return False  # never legal in source programs
    raise StructuralError(f"gate_term: not a term: {t!r}")


def gate_offender(level: Level, t) -> Optional[str]:
    """Name of the first constructor not admitted at the level, if any."""
    check = _gate_ty if isinstance(t, Ty) else _gate_tm
    if check(level, t):
        return None

    def find(node):
        if isinstance(node, Ty):
            if not _gate_ty(level, node):
                for child in _ty_children(node):
                    r = find(child)
                    if r:
                        return r
                return type(node).__name__
            return None
        if isinstance(node, Tm):
            if not _gate_tm(level, node):
                for child in _tm_children(node):
                    r = find(child)
                    if r:
                        return r
                return type(node).__name__
            return None
        return None

    return find(t)


def _ty_children(t: Ty):
    if isinstance(t, (And, Or)):
        return [t.left, t.right]
    if isinstance(t, (TypeMem, TypeTag)):
        return [t.lo, t.hi]
    if isinstance(t, (Fld, RefTy)):
        return [t.ty]
    if isinstance(t, (Method, DepFun, Arrow)):
        return [t.param, t.result]
    if isinstance(t, BindSelf):
        return [t.body]
    if isinstance(t, AllSub):
        return [t.bound, t.body]
    return []


def _tm_children(t: Tm):
    if isinstance(t, Lam):
        return [t.annot, t.body]
    if isinstance(t, App):
        return [t.fn, t.arg]
    if isinstance(t, TyLam):
        return [t.bound, t.body]
    if isinstance(t, TyApp):
        return [t.fn, t.ty]
    if isinstance(t, TypeVal):
        return [t.ty]
    if isinstance(t, (Rec, Obj)):
        out = []
        for d in t.decls:
            if isinstance(d, TypeInit):
                out += [d.lo, d.hi]
            elif isinstance(d, FieldInit):
                out.append(d.tm)
            elif isinstance(d, MethodInit):
                out += [d.param, d.result, d.body]
        return out
    if isinstance(t, SelField):
        return [t.obj]
    if isinstance(t, Invoke):
        return [t.obj, t.arg]
    if isinstance(t, Fix):
        return [t.annot, t.body]
    if isinstance(t, (RefNew, Deref)):
        return [t.tm]
    if isinstance(t, Assign):
        return [t.target, t.source]
    return []


# ---------------------------------------------------------------------------
# Size metric shared by the enumerators and the CLI --size flag


def ty_size(t: Ty) -> int:
    """Number of type constructors."""
    return 1 + sum(ty_size(c) for c in _ty_children(t) if isinstance(c, Ty))


def tm_size(t: Tm) -> int:
    """Number of term constructors; annotation types count 1 each."""
    if isinstance(t, Var) or isinstance(t, Loc):
        return 1
    n = 1
    for c in _tm_children(t):
        if isinstance(c, Tm):
            n += tm_size(c)
        else:
            n += 1  # one unit per annotation, independent of its shape
    return n
