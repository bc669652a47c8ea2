"""Dynamic type checking over runtime values and environment-paired types.

A type only means something together with the environment its free
variables live in, so every query relates pairs (H1, T1) <: (H2, T2).
Hypothetical variables introduced while comparing binders are collected in
an abstract environment J; concrete variables resolve through the runtime
environments to actual values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from . import mutations
from .evaluator import (Closure, EMPTY_ENV, Env, FixThunk, LocValue,
                        ObjValue, Store, StoreTyping, TyAbsClosure,
                        TyClosure, Value)
from .judgment import (Fuel, Judgment, TraceNode, Verdict, PROVED, REFUTED,
                       UNKNOWN)
from .static_checker import Typechecker, _and_fold
from .syntax import (And, AllSub, Arrow, BOT, BindSelf, Bot, Bound, CMP_NS,
                     DepFun, FVar, FieldInit, Fld, Free, Label, Level,
                     Method, MethodInit, Or, RefTy, Sel, TERM_NS, TOP, Top,
                     Ty, TypeInit, TypeMem, TypeTag, TYPE_TAG_LABEL,
                     TypingCtx, close_ty, fv_ty, open_ty)


class Mode(Enum):
    IMPRECISE = "imprecise"
    PRECISE = "precise"
    INVERTIBLE = "invertible"


@dataclass(frozen=True)
class TyPair:
    """A type together with the runtime environment closing it."""

    env: Env
    ty: Ty

    def with_ty(self, ty: Ty) -> "TyPair":
        return TyPair(self.env, ty)

    def __str__(self):
        return f"<{self.ty}>"


@dataclass(frozen=True)
class AbsEnv:
    """Hypothetical bindings for variables introduced during comparison."""

    entries: tuple = ()

    def lookup(self, name: Free) -> Optional[TyPair]:
        for k, p in reversed(self.entries):
            if k == name:
                return p
        return None

    def extend(self, name: Free, pair: TyPair) -> "AbsEnv":
        return AbsEnv(self.entries + ((name, pair),))

    def fresh(self, hint: str = "z") -> Free:
        names = {k.name for k, _ in self.entries}
        i = 0
        while f"{hint}{i}" in names:
            i += 1
        return Free(CMP_NS, f"{hint}{i}")

    def __len__(self):
        return len(self.entries)


EMPTY_J = AbsEnv()


def _dnode(rule, p1, p2, children=(), **meta) -> TraceNode:
    m = {"lhs": p1, "rhs": p2}
    m.update(meta)
    return TraceNode(rule, f"{p1} <: {p2}", tuple(children), m)


class DynChecker:
    """Runtime subtype and value-type checker over a shared fuel budget."""

    def __init__(self, level: Level, styping: StoreTyping, fuel: Fuel,
                 mode: Mode = Mode.IMPRECISE, want_trace: bool = False):
        self.level = level
        self.styping = styping
        self.fuel = fuel
        self.mode = mode
        self.want_trace = want_trace
        self._gen = 0

    def _fresh(self, hint="z") -> Free:
        self._gen += 1
        return Free(CMP_NS, f"%{hint}{self._gen}")

    # -- entry points ---------------------------------------------------------

    def subtype(self, j: AbsEnv, p1: TyPair, p2: TyPair) -> Judgment:
        before = self.fuel.used
        v, tr = self._sub(j, p1, p2, self.mode)
        return Judgment(v, self.fuel.used - before,
                        tr if self.want_trace else None,
                        reason="" if v is PROVED else f"{p1} <: {p2}")

    # -- concrete and abstract variable resolution -----------------------------

    def _resolve(self, j: AbsEnv, env: Env, var: Free):
        """('val', v) for a concrete value, ('hyp', pair) for a hypothesis."""
        if var.ns == CMP_NS:
            p = j.lookup(var)
            return ("hyp", p) if p is not None else (None, None)
        v = env.lookup(var)
        return ("val", v) if v is not None else (None, None)

    def _tag_bounds(self, j: AbsEnv, env: Env, var: Free, label: Label,
                    depth: int = 8) -> Tuple[List[Tuple[TyPair, TyPair, int]], bool]:
        """(lo, hi, premise_j_len) bound pairs for var.label, plus a cut flag.

        For a concrete object the premises must run under an empty abstract
        environment; the third component records what the premises will use
        so traces expose it.
        """
        kind, got = self._resolve(j, env, var)
        if kind == "val":
            return self._value_bounds(j, got, label, depth)
        if kind == "hyp":
            return self._hyp_bounds(j, got, label, depth)
        return [], False

    def _value_bounds(self, j: AbsEnv, v: Value, label: Label, depth: int):
        if isinstance(v, TyClosure) and label == TYPE_TAG_LABEL:
            p = TyPair(v.env, v.ty)
            return [(p, p, len(j), False)], False
        if isinstance(v, ObjValue):
            # Unpack the object's member; premises run with J emptied.
            env_s, x = self._obj_self(v)
            out = []
            for d in v.decls:
                if isinstance(d, TypeInit) and d.label == label:
                    lo = open_ty(d.lo, x) if v.has_self else d.lo
                    hi = open_ty(d.hi, x) if v.has_self else d.hi
                    plen = len(j) if mutations.DISABLE_UNPACK_GUARD else 0
                    out.append((TyPair(env_s, lo), TyPair(env_s, hi), plen, True))
            return out, False
        return [], False

    def _hyp_bounds(self, j: AbsEnv, p: TyPair, label: Label, depth: int):
        """Chase a hypothesis' type structurally for member bounds."""
        if depth <= 0:
            return [], True
        out, cut = [], False

        def walk(pair: TyPair, d: int):
            nonlocal cut
            if d <= 0:
                cut = True
                return
            t = pair.ty
            if isinstance(t, TypeMem) and t.label == label:
                out.append((pair.with_ty(t.lo), pair.with_ty(t.hi), len(j), False))
            elif isinstance(t, TypeTag) and label == TYPE_TAG_LABEL:
                out.append((pair.with_ty(t.lo), pair.with_ty(t.hi), len(j), False))
            elif isinstance(t, Bot):
                out.append((pair.with_ty(TOP), pair.with_ty(BOT), len(j), False))
            elif isinstance(t, And):
                walk(pair.with_ty(t.left), d - 1)
                walk(pair.with_ty(t.right), d - 1)
            elif isinstance(t, Sel) and isinstance(t.var, Free):
                inner, c = self._tag_bounds(j, pair.env, t.var, t.label, d - 1)
                cut = cut or c
                for _, hi, _, _ in inner:
                    walk(hi, d - 1)

        walk(p, depth)
        return out, cut

    def _obj_self(self, v: ObjValue) -> Tuple[Env, Optional[Free]]:
        if not v.has_self:
            return v.env, None
        x = self._fresh("self")
        return v.env.extend(x, v), x

    # -- the relation -----------------------------------------------------------

    def _sub(self, j: AbsEnv, p1: TyPair, p2: TyPair,
             mode: Mode) -> Tuple[Verdict, Optional[TraceNode]]:
        if not self.fuel.spend():
            return UNKNOWN, None
        t1, t2 = p1.ty, p2.ty
        saw_unknown = False

        if isinstance(t1, Bot):
            return PROVED, _dnode("Bot", p1, p2)
        if isinstance(t2, Top):
            return PROVED, _dnode("Top", p1, p2)

        # Same concrete value on both sides of a selection.
        if isinstance(t1, Sel) and isinstance(t2, Sel) and t1.label == t2.label:
            k1, v1 = self._resolve(j, p1.env, t1.var) if isinstance(t1.var, Free) else (None, None)
            k2, v2 = self._resolve(j, p2.env, t2.var) if isinstance(t2.var, Free) else (None, None)
            if k1 == "val" and k2 == "val" and v1 is v2:
                return PROVED, _dnode("SelV", p1, p2)
            if (k1 == "hyp" and k2 == "hyp"
                    and isinstance(t1.var, Free) and t1.var == t2.var):
                return PROVED, _dnode("SelZ", p1, p2)
        if isinstance(t1, FVar) and isinstance(t2, FVar):
            k1, v1 = self._resolve(j, p1.env, t1.var) if isinstance(t1.var, Free) else (None, None)
            k2, v2 = self._resolve(j, p2.env, t2.var) if isinstance(t2.var, Free) else (None, None)
            if k1 == "val" and k2 == "val" and v1 is v2:
                return PROVED, _dnode("VarV", p1, p2)
            if (k1 == "hyp" and k2 == "hyp"
                    and isinstance(t1.var, Free) and t1.var == t2.var):
                return PROVED, _dnode("VarZ", p1, p2)

        if mode is Mode.INVERTIBLE:
            st = self._structural(j, p1, p2, mode)
            if st is not None:
                v, tr = st
                if v is PROVED:
                    return PROVED, tr
                saw_unknown |= v is UNKNOWN

        if isinstance(t2, And):
            v1, tr1 = self._sub(j, p1, p2.with_ty(t2.left), mode)
            if v1 is REFUTED:
                return REFUTED, None
            v2, tr2 = self._sub(j, p1, p2.with_ty(t2.right), mode)
            if v1 is PROVED and v2 is PROVED:
                return PROVED, _dnode("And2", p1, p2, [tr1, tr2])
            return (REFUTED if v2 is REFUTED else UNKNOWN), None
        if isinstance(t1, Or):
            v1, tr1 = self._sub(j, p1.with_ty(t1.left), p2, mode)
            if v1 is REFUTED:
                return REFUTED, None
            v2, tr2 = self._sub(j, p1.with_ty(t1.right), p2, mode)
            if v1 is PROVED and v2 is PROVED:
                return PROVED, _dnode("Or1", p1, p2, [tr1, tr2])
            return (REFUTED if v2 is REFUTED else UNKNOWN), None

        # Left selection: upcast through the member's upper bound.
        if isinstance(t1, Sel) and isinstance(t1.var, Free):
            cands, cut = self._tag_bounds(j, p1.env, t1.var, t1.label)
            saw_unknown |= cut
            for lo, hi, plen, unpack in cands:
                jp = j if plen == len(j) else EMPTY_J
                v, tr = self._sub(jp, hi, p2, self._premise_mode(mode))
                if v is PROVED:
                    return PROVED, _dnode("SelHi", p1, p2, [tr],
                                          premise_j_len=len(jp), unpack=unpack)
                saw_unknown |= v is UNKNOWN

        # Right selection: downcast into the member's lower bound.
        if isinstance(t2, Sel) and isinstance(t2.var, Free):
            cands, cut = self._tag_bounds(j, p2.env, t2.var, t2.label)
            saw_unknown |= cut
            for lo, hi, plen, unpack in cands:
                jp = j if plen == len(j) else EMPTY_J
                v, tr = self._sub(jp, p1, lo, self._premise_mode(mode))
                if v is PROVED:
                    return PROVED, _dnode("SelLo", p1, p2, [tr],
                                          premise_j_len=len(jp), unpack=unpack)
                saw_unknown |= v is UNKNOWN

        # Concrete F-sub type variables equal their bound value.
        if isinstance(t1, FVar) and isinstance(t1.var, Free):
            kind, got = self._resolve(j, p1.env, t1.var)
            if kind == "val" and isinstance(got, TyClosure):
                v, tr = self._sub(j, TyPair(got.env, got.ty), p2,
                                  self._premise_mode(mode))
                if v is PROVED:
                    return PROVED, _dnode("VarHi", p1, p2, [tr])
                saw_unknown |= v is UNKNOWN
            elif kind == "hyp":
                v, tr = self._sub(j, got, p2, self._premise_mode(mode))
                if v is PROVED:
                    return PROVED, _dnode("VarHyp", p1, p2, [tr])
                saw_unknown |= v is UNKNOWN
        if isinstance(t2, FVar) and isinstance(t2.var, Free):
            kind, got = self._resolve(j, p2.env, t2.var)
            if kind == "val" and isinstance(got, TyClosure):
                v, tr = self._sub(j, p1, TyPair(got.env, got.ty),
                                  self._premise_mode(mode))
                if v is PROVED:
                    return PROVED, _dnode("VarLo", p1, p2, [tr])
                saw_unknown |= v is UNKNOWN

        if isinstance(t1, And):
            for rule, b in (("And11", t1.left), ("And12", t1.right)):
                v, tr = self._sub(j, p1.with_ty(b), p2, mode)
                if v is PROVED:
                    return PROVED, _dnode(rule, p1, p2, [tr])
                saw_unknown |= v is UNKNOWN
        if isinstance(t2, Or):
            for rule, b in (("Or21", t2.left), ("Or22", t2.right)):
                v, tr = self._sub(j, p1, p2.with_ty(b), mode)
                if v is PROVED:
                    return PROVED, _dnode(rule, p1, p2, [tr])
                saw_unknown |= v is UNKNOWN

        if isinstance(t1, BindSelf) and isinstance(t2, BindSelf):
            z = j.fresh("z")
            s_z = p1.with_ty(open_ty(t1.body, z))
            u_z = p2.with_ty(open_ty(t2.body, z))
            v, tr = self._sub(j.extend(z, s_z), s_z, u_z, mode)
            if v is PROVED:
                return PROVED, _dnode("BindX", p1, p2, [tr])
            saw_unknown |= v is UNKNOWN
        elif isinstance(t1, BindSelf):
            z = j.fresh("z")
            s_z = p1.with_ty(open_ty(t1.body, z))
            if z not in fv_ty(t2):
                v, tr = self._sub(j.extend(z, s_z), s_z, p2, mode)
                if v is PROVED:
                    return PROVED, _dnode("Bind1", p1, p2, [tr])
                saw_unknown |= v is UNKNOWN

        if mode is not Mode.INVERTIBLE:
            st = self._structural(j, p1, p2, mode)
            if st is not None:
                v, tr = st
                if v is PROVED:
                    return PROVED, tr
                saw_unknown |= v is UNKNOWN

        return (UNKNOWN if saw_unknown else REFUTED), None

    def _premise_mode(self, mode: Mode) -> Mode:
        # Precise lookup keeps precision through the bound; the other two
        # continue unrestricted.
        return Mode.PRECISE if mode is Mode.PRECISE else Mode.IMPRECISE

    def _structural(self, j, p1, p2, mode):
        t1, t2 = p1.ty, p2.ty
        body_mode = Mode.IMPRECISE if mode is Mode.INVERTIBLE else mode
        if isinstance(t1, Fld) and isinstance(t2, Fld) and t1.label == t2.label:
            v, tr = self._sub(j, p1.with_ty(t1.ty), p2.with_ty(t2.ty), body_mode)
            return (v, _dnode("Fld", p1, p2, [tr]) if v is PROVED else None)
        if (isinstance(t1, TypeMem) and isinstance(t2, TypeMem)
                and t1.label == t2.label):
            return self._bounds(j, p1, p2, t1.lo, t1.hi, t2.lo, t2.hi,
                                "Mem", body_mode)
        if isinstance(t1, TypeTag) and isinstance(t2, TypeTag):
            return self._bounds(j, p1, p2, t1.lo, t1.hi, t2.lo, t2.hi,
                                "Tag", body_mode)
        if ((isinstance(t1, DepFun) and isinstance(t2, DepFun))
                or (isinstance(t1, Method) and isinstance(t2, Method)
                    and t1.label == t2.label)):
            return self._fun(j, p1, p2, t1.param, t1.result, t2.param,
                             t2.result, "Fun", body_mode)
        if isinstance(t1, Arrow) and isinstance(t2, Arrow):
            v1, tr1 = self._sub(j, p2.with_ty(t2.param), p1.with_ty(t1.param),
                                body_mode)
            if v1 is REFUTED:
                return REFUTED, None
            v2, tr2 = self._sub(j, p1.with_ty(t1.result),
                                p2.with_ty(t2.result), body_mode)
            if v1 is PROVED and v2 is PROVED:
                return PROVED, _dnode("Arrow", p1, p2, [tr1, tr2])
            return (REFUTED if v2 is REFUTED else UNKNOWN), None
        if isinstance(t1, AllSub) and isinstance(t2, AllSub):
            v1, tr1 = self._sub(j, p2.with_ty(t2.bound), p1.with_ty(t1.bound),
                                body_mode)
            if v1 is REFUTED:
                return REFUTED, None
            z = j.fresh("Z")
            j2 = j.extend(z, p2.with_ty(t2.bound))
            v2, tr2 = self._sub(j2, p1.with_ty(open_ty(t1.body, z)),
                                p2.with_ty(open_ty(t2.body, z)), body_mode)
            if v1 is PROVED and v2 is PROVED:
                return PROVED, _dnode("All", p1, p2, [tr1, tr2])
            return (REFUTED if v2 is REFUTED else UNKNOWN), None
        if isinstance(t1, RefTy) and isinstance(t2, RefTy):
            v1, tr1 = self._sub(j, p1.with_ty(t1.ty), p2.with_ty(t2.ty),
                                body_mode)
            if v1 is REFUTED:
                return REFUTED, None
            v2, tr2 = self._sub(j, p2.with_ty(t2.ty), p1.with_ty(t1.ty),
                                body_mode)
            if v1 is PROVED and v2 is PROVED:
                return PROVED, _dnode("Ref", p1, p2, [tr1, tr2])
            return (REFUTED if v2 is REFUTED else UNKNOWN), None
        return None

    def _bounds(self, j, p1, p2, lo1, hi1, lo2, hi2, rule, mode):
        v1, tr1 = self._sub(j, p2.with_ty(lo2), p1.with_ty(lo1), mode)
        if v1 is REFUTED:
            return REFUTED, None
        v2, tr2 = self._sub(j, p1.with_ty(hi1), p2.with_ty(hi2), mode)
        if v1 is PROVED and v2 is PROVED:
            return PROVED, _dnode(rule, p1, p2, [tr1, tr2])
        return (REFUTED if v2 is REFUTED else UNKNOWN), None

    def _fun(self, j, p1, p2, param1, res1, param2, res2, rule, mode):
        v1, tr1 = self._sub(j, p2.with_ty(param2), p1.with_ty(param1), mode)
        if v1 is REFUTED:
            return REFUTED, None
        z = j.fresh("z")
        j2 = j.extend(z, p2.with_ty(param2))
        v2, tr2 = self._sub(j2, p1.with_ty(open_ty(res1, z)),
                            p2.with_ty(open_ty(res2, z)), mode)
        if v1 is PROVED and v2 is PROVED:
            return PROVED, _dnode(rule, p1, p2, [tr1, tr2])
        return (REFUTED if v2 is REFUTED else UNKNOWN), None

    # -- value typing -----------------------------------------------------------

    def precise_pair(self, v: Value) -> Optional[TyPair]:
        """The tightest environment-paired type derivable for a value."""
        if isinstance(v, Closure):
            if v.result is not None:
                return TyPair(v.env, DepFun(v.annot, v.result))
            res = self._infer_closure_result(v)
            if res is None:
                return None
            if self.level == Level.FSUB:
                return TyPair(v.env, Arrow(v.annot, res))
            x = Free(TERM_NS, "$vt")
            return TyPair(v.env, DepFun(v.annot, close_ty(res, x)))
        if isinstance(v, TyClosure):
            return TyPair(v.env, TypeTag(v.ty, v.ty))
        if isinstance(v, TyAbsClosure):
            return None  # handled via direct structural check below
        if isinstance(v, ObjValue):
            parts: List[Ty] = []
            for d in v.decls:
                if isinstance(d, TypeInit):
                    parts.append(TypeMem(d.label, d.lo, d.hi))
                elif isinstance(d, MethodInit):
                    parts.append(Method(d.label, d.param, d.result))
                elif isinstance(d, FieldInit):
                    if d.ty is None:
                        return None
                    parts.append(Fld(d.label, d.ty))
            body = _and_fold(parts)
            if v.has_self:
                return TyPair(v.env, BindSelf(body))
            return TyPair(v.env, body)
        if isinstance(v, LocValue):
            got = self.styping.lookup(v.loc)
            if got is None:
                return None
            env_s, ty_s = got
            return TyPair(env_s, RefTy(ty_s))
        if isinstance(v, FixThunk):
            return TyPair(v.env, BindSelf(v.annot))
        return None

    def _infer_closure_result(self, v: Closure) -> Optional[Ty]:
        """Static result inference for closures built without elaboration."""
        ctx = self._ctx_of_env(v.env)
        x = Free(TERM_NS, "$vt")
        tc = Typechecker(self.level, self.fuel)
        from .syntax import open_tm
        got = tc.infer(ctx.extend(x, v.annot), open_tm(v.body, x))
        if got.proved:
            return got.ty
        return None

    def _ctx_of_env(self, env: Env) -> TypingCtx:
        ctx = TypingCtx()
        for name, val in env.entries:
            p = self.precise_pair(val)
            if p is not None and not fv_ty(p.ty):
                ctx = ctx.extend(name, p.ty)
        return ctx

    def value_type(self, v: Value, expected: TyPair,
                   j: AbsEnv = EMPTY_J) -> Judgment:
        """One precise-type step followed by one subsumption step."""
        if isinstance(v, TyAbsClosure):
            return self._tyabs_type(v, expected)
        p = self.precise_pair(v)
        if p is None:
            return Judgment(UNKNOWN, self.fuel.used,
                            reason="no precise type derivable")
        return self.subtype(j, p, expected)

    def _tyabs_type(self, v: TyAbsClosure, expected: TyPair) -> Judgment:
        if isinstance(expected.ty, Top):
            return Judgment(PROVED, self.fuel.used)
        if not isinstance(expected.ty, AllSub):
            return Judgment(REFUTED, self.fuel.used,
                            reason="type abstraction against a non-quantifier")
        ctx = self._ctx_of_env(v.env)
        x = Free(TERM_NS, "$vt")
        tc = Typechecker(self.level, self.fuel)
        from .syntax import open_tm
        got = tc.infer(ctx.extend(x, v.bound, tyvar=True), open_tm(v.body, x))
        if not got.proved:
            return Judgment(got.judgment.verdict, self.fuel.used,
                            reason="untypable abstraction body")
        mine = TyPair(v.env, AllSub(v.bound, close_ty(got.ty, x)))
        return self.subtype(EMPTY_J, mine, expected)


# ---------------------------------------------------------------------------
# Convenience wrappers


def dyn_subtype(level: Level, styping: StoreTyping, j: AbsEnv, p1: TyPair,
                p2: TyPair, mode: Mode = Mode.IMPRECISE, fuel: int = 2000,
                trace: bool = False) -> Judgment:
    return DynChecker(level, styping, Fuel(fuel), mode, trace).subtype(j, p1, p2)


def value_type(level: Level, styping: StoreTyping, v: Value, env: Env,
               ty: Ty, fuel: int = 2000, mode: Mode = Mode.IMPRECISE) -> Judgment:
    chk = DynChecker(level, styping, Fuel(fuel), mode)
    return chk.value_type(v, TyPair(env, ty))


def consistent_env(level: Level, styping: StoreTyping, ctx: TypingCtx,
                   env: Env, j: AbsEnv, fuel: int = 4000) -> Judgment:
    """Pointwise: each static binding is witnessed by its runtime entry."""
    chk = DynChecker(level, styping, Fuel(fuel))
    verdicts = []
    for b in ctx.entries:
        if b.seg == "term" and not b.tyvar:
            v = env.lookup(b.var)
            if v is None:
                return Judgment(REFUTED, reason=f"{b.var} missing at runtime")
            verdicts.append(chk.value_type(v, TyPair(env, b.ty), j).verdict)
        else:
            p = j.lookup(b.var)
            if p is None:
                v = env.lookup(b.var)
                if v is None:
                    return Judgment(REFUTED, reason=f"{b.var} has no hypothesis")
                verdicts.append(chk.value_type(v, TyPair(env, b.ty), j).verdict)
            else:
                verdicts.append(chk.subtype(j, p, TyPair(env, b.ty)).verdict)
    from .judgment import all_of
    return Judgment(all_of(*verdicts) if verdicts else PROVED, chk.fuel.used)
