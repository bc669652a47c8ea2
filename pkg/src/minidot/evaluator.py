"""Fuel-indexed definitional interpreter shared by all levels.

Every entry to eval consumes one fuel unit; premises run on whatever is
left.  Exhausted fuel yields Timeout.  Error is reserved for genuinely
wrong shapes (applying a non-function, selecting a missing label); a
well-typed program never produces it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .syntax import (App, Assign, BindSelf, Bound, Deref, FieldInit, Fix,
                     Free, Invoke, Label, Lam, Level, Loc, MethodInit, Obj,
                     Rec, RefNew, RefTy, SelField, StructuralError, TERM_NS,
                     Tm, Ty, TyApp, TyLam, TypeInit, TypeTag, TypeVal, TOP,
                     Var, open_tm, open_ty)


# ---------------------------------------------------------------------------
# Runtime values


class Value:
    __slots__ = ()


@dataclass(frozen=True)
class Env:
    """Runtime environment: an immutable name-to-value map."""

    entries: tuple = ()

    def lookup(self, name: Free) -> Optional["Value"]:
        for k, v in reversed(self.entries):
            if k == name:
                return v
        return None

    def extend(self, name: Free, value: "Value") -> "Env":
        return Env(self.entries + ((name, value),))

    def names(self):
        return [k for k, _ in self.entries]

    def __len__(self):
        return len(self.entries)

    def __str__(self):
        return "{" + ", ".join(f"{k}={v}" for k, v in self.entries) + "}"


EMPTY_ENV = Env()


@dataclass(frozen=True)
class Closure(Value):
    env: Env
    annot: Ty
    body: Tm
    result: Optional[Ty] = None

    def __str__(self):
        return f"<fun(_:{self.annot})>"


@dataclass(frozen=True)
class TyClosure(Value):
    """A first-class type paired with its defining environment."""

    env: Env
    ty: Ty

    def __str__(self):
        return f"<type {self.ty}>"


@dataclass(frozen=True)
class TyAbsClosure(Value):
    env: Env
    bound: Ty
    body: Tm

    def __str__(self):
        return f"<tfun(_<:{self.bound})>"


@dataclass(frozen=True)
class ObjValue(Value):
    """Object (or plain record when has_self is False) with lazy fields."""

    env: Env
    decls: tuple
    has_self: bool = True

    def __str__(self):
        ls = ", ".join(str(d.label) for d in self.decls)
        return f"<obj {{{ls}}}>" if self.has_self else f"<rec {{{ls}}}>"


@dataclass(frozen=True)
class LocValue(Value):
    loc: int

    def __str__(self):
        return f"<loc {self.loc}>"


@dataclass(frozen=True)
class FixThunk(Value):
    """Delayed fixpoint; forced (re-evaluated) at each variable lookup."""

    env: Env
    annot: Ty
    body: Tm

    def __str__(self):
        return f"<fix(_:{self.annot})>"


# ---------------------------------------------------------------------------
# Results


class Result:
    __slots__ = ()


@dataclass(frozen=True)
class Timeout(Result):
    def __str__(self):
        return "timeout"


@dataclass(frozen=True)
class Done(Result):
    pass


@dataclass(frozen=True)
class ErrorRes(Done):
    message: str

    def __str__(self):
        return f"error: {self.message}"


@dataclass(frozen=True)
class ValRes(Done):
    value: Value

    def __str__(self):
        return str(self.value)


TIMEOUT = Timeout()


# ---------------------------------------------------------------------------
# Store and store typing


@dataclass
class Store:
    cells: List[Value] = field(default_factory=list)

    def alloc(self, v: Value) -> int:
        self.cells.append(v)
        return len(self.cells) - 1

    def read(self, i: int) -> Optional[Value]:
        if 0 <= i < len(self.cells):
            return self.cells[i]
        return None

    def write(self, i: int, v: Value) -> bool:
        if 0 <= i < len(self.cells):
            self.cells[i] = v
            return True
        return False

    def __len__(self):
        return len(self.cells)


@dataclass
class StoreTyping:
    """Append-only map from location to its environment-paired slot type."""

    entries: List[Tuple[Env, Ty]] = field(default_factory=list)

    def alloc(self, env: Env, ty: Ty) -> int:
        self.entries.append((env, ty))
        return len(self.entries) - 1

    def lookup(self, i: int) -> Optional[Tuple[Env, Ty]]:
        if 0 <= i < len(self.entries):
            return self.entries[i]
        return None

    def snapshot(self) -> tuple:
        return tuple(self.entries)

    def extends(self, earlier: tuple) -> bool:
        """True iff this typing only appended to the earlier snapshot."""
        if len(self.entries) < len(earlier):
            return False
        return all(self.entries[i] == e for i, e in enumerate(earlier))

    def __len__(self):
        return len(self.entries)


# ---------------------------------------------------------------------------
# The interpreter


class EvalRun:
    """Mutable state threaded through one evaluation: store plus gensym."""

    def __init__(self, level: Level, store: Optional[Store] = None,
                 styping: Optional[StoreTyping] = None):
        self.level = level
        self.store = store if store is not None else Store()
        self.styping = styping if styping is not None else StoreTyping()
        self._counter = 0

    def fresh(self, hint: str = "x") -> Free:
        self._counter += 1
        return Free(TERM_NS, f"${hint}{self._counter}")


def eval_tm(run: EvalRun, n: int, env: Env, t: Tm) -> Tuple[int, Result]:
    """Evaluate with at most n fuel units; returns (fuel left, result)."""
    if n <= 0:
        return 0, TIMEOUT
    n -= 1

    if isinstance(t, Var):
        if not isinstance(t.var, Free):
            return n, ErrorRes("dangling bound variable")
        v = env.lookup(t.var)
        if v is None:
            return n, ErrorRes(f"unbound variable {t.var}")
        if isinstance(v, FixThunk):
            return _force_fix(run, n, v)
        return n, ValRes(v)

    if isinstance(t, Lam):
        return n, ValRes(Closure(env, t.annot, t.body, t.result))

    if isinstance(t, TyLam):
        return n, ValRes(TyAbsClosure(env, t.bound, t.body))

    if isinstance(t, TypeVal):
        return n, ValRes(TyClosure(env, t.ty))

    if isinstance(t, App):
        n, rf = eval_tm(run, n, env, t.fn)
        if not isinstance(rf, ValRes):
            return n, rf
        n, ra = eval_tm(run, n, env, t.arg)
        if not isinstance(ra, ValRes):
            return n, ra
        f = rf.value
        if not isinstance(f, Closure):
            return n, ErrorRes("applying a non-function")
        x = run.fresh("x")
        return eval_tm(run, n, f.env.extend(x, ra.value), open_tm(f.body, x))

    if isinstance(t, TyApp):
        n, rf = eval_tm(run, n, env, t.fn)
        if not isinstance(rf, ValRes):
            return n, rf
        f = rf.value
        if not isinstance(f, TyAbsClosure):
            return n, ErrorRes("type-applying a non-type-function")
        x = run.fresh("X")
        env2 = f.env.extend(x, TyClosure(env, t.ty))
        return eval_tm(run, n, env2, open_tm(f.body, x))

    if isinstance(t, Rec):
        return n, ValRes(ObjValue(env, t.decls, has_self=False))

    if isinstance(t, Obj):
        return n, ValRes(ObjValue(env, t.decls, has_self=True))

    if isinstance(t, SelField):
        n, ro = eval_tm(run, n, env, t.obj)
        if not isinstance(ro, ValRes):
            return n, ro
        return _select(run, n, ro.value, t.label)

    if isinstance(t, Invoke):
        n, ro = eval_tm(run, n, env, t.obj)
        if not isinstance(ro, ValRes):
            return n, ro
        n, ra = eval_tm(run, n, env, t.arg)
        if not isinstance(ra, ValRes):
            return n, ra
        return _invoke(run, n, ro.value, t.label, ra.value)

    if isinstance(t, Fix):
        return n, ValRes(FixThunk(env, t.annot, t.body))

    if isinstance(t, RefNew):
        n, rv = eval_tm(run, n, env, t.tm)
        if not isinstance(rv, ValRes):
            return n, rv
        slot_ty = t.annot if t.annot is not None else _dyn_tag(rv.value)
        loc = run.store.alloc(rv.value)
        run.styping.alloc(env, slot_ty)
        return n, ValRes(LocValue(loc))

    if isinstance(t, Deref):
        n, rv = eval_tm(run, n, env, t.tm)
        if not isinstance(rv, ValRes):
            return n, rv
        v = rv.value
        if not isinstance(v, LocValue):
            return n, ErrorRes("dereferencing a non-location")
        cell = run.store.read(v.loc)
        if cell is None:
            return n, ErrorRes("dangling location")
        return n, ValRes(cell)

    if isinstance(t, Assign):
        n, rt = eval_tm(run, n, env, t.target)
        if not isinstance(rt, ValRes):
            return n, rt
        n, rs = eval_tm(run, n, env, t.source)
        if not isinstance(rs, ValRes):
            return n, rs
        tgt = rt.value
        if not isinstance(tgt, LocValue):
            return n, ErrorRes("assigning to a non-location")
        if not run.store.write(tgt.loc, rs.value):
            return n, ErrorRes("dangling location")
        return n, ValRes(rs.value)

    if isinstance(t, Loc):
        return n, ValRes(LocValue(t.loc))

    return n, ErrorRes(f"no evaluation rule for {type(t).__name__}")


def _force_fix(run: EvalRun, n: int, thunk: FixThunk) -> Tuple[int, Result]:
    x = run.fresh("fix")
    env2 = thunk.env.extend(x, thunk)
    return eval_tm(run, n, env2, open_tm(thunk.body, x))


def _dyn_tag(v: Value) -> Ty:
    if isinstance(v, TyClosure):
        return TypeTag(v.ty, v.ty)
    return TOP


def _find_decl(obj: ObjValue, label: Label):
    for d in obj.decls:
        if getattr(d, "label", None) == label:
            return d
    return None


def _self_env(run: EvalRun, obj: ObjValue) -> Tuple[Env, Optional[Free]]:
    if not obj.has_self:
        return obj.env, None
    x = run.fresh("self")
    return obj.env.extend(x, obj), x


def _select(run: EvalRun, n: int, v: Value, label: Label) -> Tuple[int, Result]:
    if not isinstance(v, ObjValue):
        return n, ErrorRes("selecting from a non-object")
    d = _find_decl(v, label)
    if not isinstance(d, FieldInit):
        return n, ErrorRes(f"no field {label}")
    env, x = _self_env(run, v)
    body = open_tm(d.tm, x) if x is not None else d.tm
    return eval_tm(run, n, env, body)


def _invoke(run: EvalRun, n: int, v: Value, label: Label,
            arg: Value) -> Tuple[int, Result]:
    if not isinstance(v, ObjValue):
        return n, ErrorRes("invoking on a non-object")
    d = _find_decl(v, label)
    if not isinstance(d, MethodInit):
        return n, ErrorRes(f"no method {label}")
    env, x = _self_env(run, v)
    y = run.fresh("y")
    body = d.body
    if x is not None:
        body = open_tm(body, x, 1)
    body = open_tm(body, y, 0)
    return eval_tm(run, n, env.extend(y, arg), body)


def evaluate(level: Level, fuel: int, t: Tm, env: Env = EMPTY_ENV,
             run: Optional[EvalRun] = None) -> Tuple[Result, EvalRun]:
    """Run the interpreter on a closed (or env-covered) term."""
    if run is None:
        run = EvalRun(level)
    _, r = eval_tm(run, fuel, env, t)
    return r, run
