"""Static subtyping and type assignment for the whole calculus ladder.

The subtype algorithm has no free-standing transitivity rule; transitivity
is fused into the variable-bound rules (selections upcast through their
upper bound, type variables through their declared bound).  A separate
declarative search re-adds an explicit transitivity step for exploring
what the declarative system proves that the algorithm does not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from . import mutations
from .judgment import (Fuel, Judgment, TraceNode, Verdict,
                       PROVED, REFUTED, UNKNOWN)
from .syntax import (And, AllSub, Arrow, BOT, BindSelf, Bot, Bound, CMP_NS,
                     CMP_SEG, DepFun, FVar, FieldInit, Fix, Fld, Free, Label,
                     Lam, Level, Loc, Method, MethodInit, Obj, Or, Rec,
                     RefNew, RefTy, Sel, SelField, StructuralError, TERM_NS,
                     TERM_SEG, TL, TOP, Tm, Top, Ty, TyApp, TyLam, TypeInit,
                     TypeMem, TypeTag, TypeVal, TYPE_TAG_LABEL, TypingCtx,
                     Var, Assign, Deref, Invoke, App, close_ty, ctx_restrict,
                     fv_tm, fv_ty, gate_term, gate_type, open_tm, open_ty,
                     open_ty_with_ty, wf)

_LOOKUP_DEPTH = 12
_MAX_QUERY_DEPTH = 300


def _node(rule: str, lhs, rhs, children=(), **meta) -> TraceNode:
    m = {"lhs": lhs, "rhs": rhs}
    m.update(meta)
    return TraceNode(rule, f"{lhs} <: {rhs}", tuple(children), m)


class Subtyper:
    """Algorithmic subtype checker over a shared fuel budget."""

    def __init__(self, fuel: Fuel, want_trace: bool = False):
        self.fuel = fuel
        self.want_trace = want_trace
        self._depth = 0

    # -- member bound lookup -------------------------------------------------

    def member_bounds(self, ctx: TypingCtx, x: Free, label: Label,
                      depth: int = _LOOKUP_DEPTH) -> Tuple[List[Tuple[Ty, Ty]], bool]:
        """All (lo, hi) bounds for x.label visible from the context.

        The second component flags that the search was cut off, in which
        case a missing candidate must taint the verdict to unknown.
        """
        b = ctx.lookup(x)
        if b is None:
            return [], False
        return self._bounds_in(ctx, x, b.ty, label, depth)

    def _bounds_in(self, ctx: TypingCtx, x: Free, ty: Ty, label: Label,
                   depth: int) -> Tuple[List[Tuple[Ty, Ty]], bool]:
        if depth <= 0:
            return [], True
        if isinstance(ty, TypeMem) and ty.label == label:
            return [(ty.lo, ty.hi)], False
        if isinstance(ty, TypeTag) and label == TYPE_TAG_LABEL:
            return [(ty.lo, ty.hi)], False
        if isinstance(ty, Bot):
            # From Bot anything follows; extremal bounds make both
            # selection directions succeed.
            return [(TOP, BOT)], False
        if isinstance(ty, And):
            l, cut1 = self._bounds_in(ctx, x, ty.left, label, depth - 1)
            r, cut2 = self._bounds_in(ctx, x, ty.right, label, depth - 1)
            return l + r, cut1 or cut2
        if isinstance(ty, BindSelf):
            return self._bounds_in(ctx, x, open_ty(ty.body, x), label, depth - 1)
        if isinstance(ty, Sel) and isinstance(ty.var, Free):
            # Upcast through the selection's own upper bounds first.
            inner, cut = self.member_bounds(ctx, ty.var, ty.label, depth - 1)
            out: List[Tuple[Ty, Ty]] = []
            for _, hi in inner:
                found, c2 = self._bounds_in(ctx, x, hi, label, depth - 1)
                out += found
                cut = cut or c2
            return out, cut
        return [], False

    # -- the algorithm -------------------------------------------------------

    def subtype(self, ctx: TypingCtx, s: Ty, u: Ty) -> Judgment:
        before = self.fuel.used
        v, tr = self._sub(ctx, s, u)
        return Judgment(v, self.fuel.used - before, tr if self.want_trace else None,
                        reason="" if v is PROVED else f"{s} <: {u}")

    def _sub(self, ctx: TypingCtx, s: Ty, u: Ty) -> Tuple[Verdict, Optional[TraceNode]]:
        if not self.fuel.spend():
            return UNKNOWN, None
        # Cyclic bounds can nest queries faster than fuel drains; cap the
        # stack depth well below the interpreter's recursion limit.
        if self._depth >= _MAX_QUERY_DEPTH:
            return UNKNOWN, None
        self._depth += 1
        try:
            return self._sub_inner(ctx, s, u)
        finally:
            self._depth -= 1

    def _sub_inner(self, ctx: TypingCtx, s: Ty, u: Ty) -> Tuple[Verdict, Optional[TraceNode]]:
        saw_unknown = False

        if isinstance(s, Bot):
            return PROVED, _node("Bot", s, u)
        if isinstance(u, Top):
            return PROVED, _node("Top", s, u)

        if (isinstance(s, Sel) and isinstance(u, Sel)
                and s.var == u.var and s.label == u.label):
            return PROVED, _node("SelX", s, u)
        if isinstance(s, FVar) and isinstance(u, FVar) and s.var == u.var:
            return PROVED, _node("VarRefl", s, u)

        # Invertible right-hand connectives first.
        if isinstance(u, And):
            v1, t1 = self._sub(ctx, s, u.left)
            if v1 is REFUTED:
                return REFUTED, None
            v2, t2 = self._sub(ctx, s, u.right)
            v = Verdict.PROVED if (v1 is PROVED and v2 is PROVED) else (
                REFUTED if v2 is REFUTED else UNKNOWN)
            if v is PROVED:
                return PROVED, _node("And2", s, u, [t1, t2])
            return v, None
        if isinstance(s, Or):
            v1, t1 = self._sub(ctx, s.left, u)
            if v1 is REFUTED:
                return REFUTED, None
            v2, t2 = self._sub(ctx, s.right, u)
            if v1 is PROVED and v2 is PROVED:
                return PROVED, _node("Or1", s, u, [t1, t2])
            return (REFUTED if v2 is REFUTED else UNKNOWN), None

        # Upcast a left selection through its upper bounds.
        if isinstance(s, Sel) and isinstance(s.var, Free):
            cands, cut = self.member_bounds(ctx, s.var, s.label)
            saw_unknown |= cut
            for lo, hi in cands:
                v, tr = self._sub(ctx, hi, u)
                if v is PROVED:
                    return PROVED, _node("Sel1", s, u, [tr], var=s.var, bound=hi)
                saw_unknown |= v is UNKNOWN

        # Downcast into a right selection through its lower bounds.
        if isinstance(u, Sel) and isinstance(u.var, Free):
            cands, cut = self.member_bounds(ctx, u.var, u.label)
            saw_unknown |= cut
            for lo, hi in cands:
                v, tr = self._sub(ctx, s, lo)
                if v is PROVED:
                    return PROVED, _node("Sel2", s, u, [tr], var=u.var, bound=lo)
                saw_unknown |= v is UNKNOWN

        # Pick a branch of a left intersection / right union.
        if isinstance(s, And):
            for rule, branch in (("And11", s.left), ("And12", s.right)):
                v, tr = self._sub(ctx, branch, u)
                if v is PROVED:
                    return PROVED, _node(rule, s, u, [tr])
                saw_unknown |= v is UNKNOWN
        if isinstance(u, Or):
            for rule, branch in (("Or21", u.left), ("Or22", u.right)):
                v, tr = self._sub(ctx, s, branch)
                if v is PROVED:
                    return PROVED, _node(rule, s, u, [tr])
                saw_unknown |= v is UNKNOWN

        # Recursive self types.
        if isinstance(s, BindSelf) and isinstance(u, BindSelf):
            z = ctx.fresh("z")
            s_z = open_ty(s.body, z)
            u_z = open_ty(u.body, z)
            v, tr = self._sub(ctx.extend(z, s_z, CMP_SEG), s_z, u_z)
            if v is PROVED:
                return PROVED, _node("BindX", s, u, [tr], var=z)
            saw_unknown |= v is UNKNOWN
        elif isinstance(s, BindSelf):
            z = ctx.fresh("z")
            s_z = open_ty(s.body, z)
            if z not in fv_ty(u):
                v, tr = self._sub(ctx.extend(z, s_z, CMP_SEG), s_z, u)
                if v is PROVED:
                    return PROVED, _node("Bind1", s, u, [tr], var=z)
                saw_unknown |= v is UNKNOWN

        # Structural rules.
        st = self._structural(ctx, s, u)
        if st is not None:
            v, tr = st
            if v is PROVED:
                return PROVED, tr
            saw_unknown |= v is UNKNOWN

        # A left type variable upcasts through its declared bound.
        if isinstance(s, FVar) and isinstance(s.var, Free):
            b = ctx.lookup(s.var)
            if b is not None and b.tyvar:
                v, tr = self._sub(ctx, b.ty, u)
                if v is PROVED:
                    return PROVED, _node("VarBound", s, u, [tr], var=s.var)
                saw_unknown |= v is UNKNOWN

        return (UNKNOWN if saw_unknown else REFUTED), None

    def _structural(self, ctx: TypingCtx, s: Ty, u: Ty):
        if isinstance(s, Fld) and isinstance(u, Fld) and s.label == u.label:
            v, tr = self._sub(ctx, s.ty, u.ty)
            return (v, _node("Fld", s, u, [tr]) if v is PROVED else None)
        if isinstance(s, TypeMem) and isinstance(u, TypeMem) and s.label == u.label:
            return self._bounds_rule("Mem", ctx, s, u, s.lo, s.hi, u.lo, u.hi)
        if isinstance(s, TypeTag) and isinstance(u, TypeTag):
            return self._bounds_rule("Tag", ctx, s, u, s.lo, s.hi, u.lo, u.hi)
        if isinstance(s, Method) and isinstance(u, Method) and s.label == u.label:
            return self._fun_rule("Fun", ctx, s, u, s.param, s.result, u.param, u.result)
        if isinstance(s, DepFun) and isinstance(u, DepFun):
            return self._fun_rule("All", ctx, s, u, s.param, s.result, u.param, u.result)
        if isinstance(s, RefTy) and isinstance(u, RefTy):
            v1, t1 = self._sub(ctx, s.ty, u.ty)
            if v1 is REFUTED:
                return REFUTED, None
            v2, t2 = self._sub(ctx, u.ty, s.ty)
            if v1 is PROVED and v2 is PROVED:
                return PROVED, _node("Ref", s, u, [t1, t2])
            return (REFUTED if v2 is REFUTED else UNKNOWN), None
        if isinstance(s, Arrow) and isinstance(u, Arrow):
            v1, t1 = self._sub(ctx, u.param, s.param)
            if v1 is REFUTED:
                return REFUTED, None
            v2, t2 = self._sub(ctx, s.result, u.result)
            if v1 is PROVED and v2 is PROVED:
                return PROVED, _node("Arrow", s, u, [t1, t2])
            return (REFUTED if v2 is REFUTED else UNKNOWN), None
        if isinstance(s, AllSub) and isinstance(u, AllSub):
            v1, t1 = self._sub(ctx, u.bound, s.bound)
            if v1 is REFUTED:
                return REFUTED, None
            z = ctx.fresh("Z")
            ctx2 = ctx.extend(z, u.bound, CMP_SEG, tyvar=True)
            v2, t2 = self._sub(ctx2, open_ty(s.body, z), open_ty(u.body, z))
            if v1 is PROVED and v2 is PROVED:
                return PROVED, _node("AllSub", s, u, [t1, t2], var=z)
            return (REFUTED if v2 is REFUTED else UNKNOWN), None
        return None

    def _bounds_rule(self, rule, ctx, s, u, slo, shi, ulo, uhi):
        v1, t1 = self._sub(ctx, ulo, slo)
        if v1 is REFUTED:
            return REFUTED, None
        v2, t2 = self._sub(ctx, shi, uhi)
        if v1 is PROVED and v2 is PROVED:
            return PROVED, _node(rule, s, u, [t1, t2])
        return (REFUTED if v2 is REFUTED else UNKNOWN), None

    def _fun_rule(self, rule, ctx, s, u, sp, sr, up, ur):
        v1, t1 = self._sub(ctx, up, sp)
        if v1 is REFUTED:
            return REFUTED, None
        x = ctx.fresh("x")
        ctx2 = ctx.extend(x, up, CMP_SEG)
        v2, t2 = self._sub(ctx2, open_ty(sr, x), open_ty(ur, x))
        if v1 is PROVED and v2 is PROVED:
            return PROVED, _node(rule, s, u, [t1, t2], var=x)
        return (REFUTED if v2 is REFUTED else UNKNOWN), None


def subtype(ctx: TypingCtx, s: Ty, u: Ty, fuel: int = 1000,
            trace: bool = False) -> Judgment:
    """One-shot algorithmic subtype query with a fresh fuel budget."""
    return Subtyper(Fuel(fuel), trace).subtype(ctx, s, u)


# ---------------------------------------------------------------------------
# Declarative search with an explicit transitivity step


def subtype_declarative(ctx: TypingCtx, s: Ty, u: Ty,
                        middles: Tuple[Ty, ...] = (), fuel: int = 2000,
                        trace: bool = False, _depth: int = 4) -> Judgment:
    """Algorithmic check, then transitivity through the candidate middles.

    The middles widen the declarative system relative to the algorithm;
    with an empty tuple this is the plain algorithm.
    """
    f = Fuel(fuel)
    j = Subtyper(f, trace).subtype(ctx, s, u)
    if j.proved or _depth <= 0:
        return j
    saw_unknown = j.unknown
    for m in middles:
        if m == s or m == u:
            continue
        left = subtype_declarative(ctx, s, m, middles, f.remaining,
                                   trace, _depth - 1)
        if not left.proved:
            saw_unknown |= left.unknown
            continue
        right = subtype_declarative(ctx, m, u, middles, f.remaining,
                                    trace, _depth - 1)
        if right.proved:
            tr = None
            if trace:
                tr = _node("Trans", s, u, [left.trace, right.trace], middle=m)
            return Judgment(PROVED, fuel - f.remaining, tr)
        saw_unknown |= right.unknown
    return Judgment(UNKNOWN if saw_unknown else REFUTED, fuel - f.remaining,
                    reason=f"{s} <: {u}")


def trans_candidates(ctx: TypingCtx) -> Tuple[Ty, ...]:
    """Middle types worth trying for transitivity: paths and their bounds."""
    out = []
    for b in ctx.entries:
        ty = b.ty
        stack = [ty]
        while stack:
            t = stack.pop()
            if isinstance(t, TypeMem):
                out.append(Sel(b.var, t.label))
                stack += [t.lo, t.hi]
            elif isinstance(t, TypeTag):
                out.append(Sel(b.var, TYPE_TAG_LABEL))
                stack += [t.lo, t.hi]
            elif isinstance(t, And):
                stack += [t.left, t.right]
            elif isinstance(t, BindSelf):
                stack.append(open_ty(t.body, b.var))
    seen, uniq = set(), []
    for t in out:
        if t not in seen:
            seen.add(t)
            uniq.append(t)
    return tuple(uniq)


# ---------------------------------------------------------------------------
# Good bounds


def collect_members(ctx: TypingCtx, ty: Ty, sub: Subtyper,
                    depth: int = _LOOKUP_DEPTH):
    """Flatten a type into its labelled members, seeing through self binders.

    Returns (members, cut) where members maps a label to the list of
    (lo, hi) bound pairs contributed by each conjunct.
    """
    members: dict = {}
    cut = False

    def add(label, lo, hi):
        members.setdefault(label, []).append((lo, hi))

    def walk(t: Ty, d: int):
        nonlocal cut
        if d <= 0:
            cut = True
            return
        if isinstance(t, TypeMem):
            add(t.label, t.lo, t.hi)
        elif isinstance(t, TypeTag):
            add(TYPE_TAG_LABEL, t.lo, t.hi)
        elif isinstance(t, And):
            walk(t.left, d - 1)
            walk(t.right, d - 1)
        elif isinstance(t, BindSelf):
            z = ctx.fresh("self")
            walk(open_ty(t.body, z), d - 1)
        elif isinstance(t, Sel) and isinstance(t.var, Free):
            cands, c = sub.member_bounds(ctx, t.var, t.label, d - 1)
            cut = cut or c
            for _, hi in cands:
                walk(hi, d - 1)

    walk(ty, depth)
    return members, cut


def good_bounds(ctx: TypingCtx, ty: Ty, fuel: int = 1000) -> Judgment:
    """Each labelled member's merged lower bound must subtype its upper one."""
    if mutations.DISABLE_GOOD_BOUNDS:
        return Judgment(PROVED)
    f = Fuel(fuel)
    sub = Subtyper(f)
    members, cut = collect_members(ctx, ty, sub)
    saw_unknown = cut
    for label, pairs in members.items():
        lo = pairs[0][0]
        hi = pairs[0][1]
        for lo2, hi2 in pairs[1:]:
            lo = Or(lo, lo2)
            hi = And(hi, hi2)
        j = sub.subtype(ctx, lo, hi)
        if j.refuted:
            return Judgment(REFUTED, f.used, reason=f"bad bounds for {label}")
        saw_unknown |= j.unknown
    return Judgment(UNKNOWN if saw_unknown else PROVED, f.used)


# ---------------------------------------------------------------------------
# Type assignment


@dataclass(frozen=True)
class TypeResult:
    judgment: Judgment
    ty: Optional[Ty] = None
    term: Optional[Tm] = None

    @property
    def proved(self):
        return self.judgment.proved


class Typechecker:
    """Bidirectional type assignment; infer() also elaborates the term."""

    def __init__(self, level: Level, fuel: Fuel):
        self.level = level
        self.fuel = fuel
        self.sub = Subtyper(fuel)

    def _fail(self, reason: str) -> TypeResult:
        return TypeResult(Judgment(REFUTED, self.fuel.used, reason=reason))

    def _unknown(self) -> TypeResult:
        return TypeResult(Judgment(UNKNOWN, self.fuel.used))

    # -- member exposure -----------------------------------------------------

    def _expose(self, ctx: TypingCtx, ty: Ty, pick, subject: Optional[Free],
                depth: int = _LOOKUP_DEPTH):
        """Candidates extracted by `pick` from ty, seen through And, self
        binders (only when the subject is a variable), selections, and Bot."""
        if depth <= 0:
            return [], True
        got = pick(ty)
        if got is not None:
            return [got], False
        if isinstance(ty, And):
            l, c1 = self._expose(ctx, ty.left, pick, subject, depth - 1)
            r, c2 = self._expose(ctx, ty.right, pick, subject, depth - 1)
            return l + r, c1 or c2
        if isinstance(ty, BindSelf) and subject is not None:
            return self._expose(ctx, open_ty(ty.body, subject), pick,
                                subject, depth - 1)
        if isinstance(ty, Sel) and isinstance(ty.var, Free):
            cands, cut = self.sub.member_bounds(ctx, ty.var, ty.label, depth - 1)
            out = []
            for _, hi in cands:
                found, c = self._expose(ctx, hi, pick, subject, depth - 1)
                out += found
                cut = cut or c
            return out, cut
        return [], False

    def expose_fun(self, ctx, ty, subject):
        def pick(t):
            if isinstance(t, DepFun):
                return (t.param, t.result)
            if isinstance(t, Bot):
                return (TOP, BOT)
            return None
        return self._expose(ctx, ty, pick, subject)

    def expose_method(self, ctx, ty, label, subject):
        def pick(t):
            if isinstance(t, Method) and t.label == label:
                return (t.param, t.result)
            if isinstance(t, Bot):
                return (TOP, BOT)
            return None
        return self._expose(ctx, ty, pick, subject)

    def expose_fld(self, ctx, ty, label, subject):
        def pick(t):
            if isinstance(t, Fld) and t.label == label:
                return t.ty
            if isinstance(t, Bot):
                return BOT
            return None
        return self._expose(ctx, ty, pick, subject)

    def expose_ref(self, ctx, ty, subject):
        def pick(t):
            if isinstance(t, RefTy):
                return t.ty
            if isinstance(t, Bot):
                return BOT
            return None
        return self._expose(ctx, ty, pick, subject)

    def expose_all(self, ctx, ty):
        def pick(t):
            if isinstance(t, AllSub):
                return (t.bound, t.body)
            return None
        if isinstance(ty, FVar) and isinstance(ty.var, Free):
            b = ctx.lookup(ty.var)
            if b is not None and b.tyvar:
                return self.expose_all(ctx, b.ty)
        return self._expose(ctx, ty, pick, None)

    # -- inference -----------------------------------------------------------

    def infer(self, ctx: TypingCtx, t: Tm) -> TypeResult:
        if not self.fuel.spend():
            return self._unknown()

        if isinstance(t, Var):
            if not isinstance(t.var, Free):
                return self._fail("dangling bound variable")
            b = ctx.lookup(t.var)
            if b is None or b.tyvar:
                return self._fail(f"unbound variable {t.var}")
            seen_by = ctx if mutations.DISABLE_CTX_RESTRICT else ctx_restrict(ctx, t.var)
            if not wf(seen_by, b.ty):
                return self._fail(f"type of {t.var} escapes its scope")
            return TypeResult(Judgment(PROVED, self.fuel.used), b.ty, t)

        if isinstance(t, Lam):
            if not wf(ctx, t.annot):
                return self._fail("ill-formed parameter type")
            x = ctx.fresh("x", TERM_NS)
            body = self.infer(ctx.extend(x, t.annot), open_tm(t.body, x))
            if not body.proved:
                return TypeResult(body.judgment)
            if self.level == Level.FSUB:
                ty: Ty = Arrow(t.annot, body.ty)
                elab = Lam(t.annot, close_tm_safe(body.term, x), body.ty)
            else:
                res = close_ty(body.ty, x)
                ty = DepFun(t.annot, res)
                elab = Lam(t.annot, close_tm_safe(body.term, x), res)
            return TypeResult(body.judgment, ty, elab)

        if isinstance(t, App):
            fn = self.infer(ctx, t.fn)
            if not fn.proved:
                return TypeResult(fn.judgment)
            arg = self.infer(ctx, t.arg)
            if not arg.proved:
                return TypeResult(arg.judgment)
            if self.level == Level.FSUB:
                return self._apply_arrow(ctx, fn, arg, t)
            return self._apply_depfun(ctx, fn, arg, t)

        if isinstance(t, TyLam):
            if self.level != Level.FSUB:
                return self._fail("type abstraction outside its level")
            x = ctx.fresh("X", TERM_NS)
            body = self.infer(ctx.extend(x, t.bound, tyvar=True),
                              open_tm(t.body, x))
            if not body.proved:
                return TypeResult(body.judgment)
            return TypeResult(body.judgment,
                              AllSub(t.bound, close_ty(body.ty, x)),
                              TyLam(t.bound, close_tm_safe(body.term, x)))

        if isinstance(t, TyApp):
            fn = self.infer(ctx, t.fn)
            if not fn.proved:
                return TypeResult(fn.judgment)
            if not wf(ctx, t.ty):
                return self._fail("ill-formed type argument")
            cands, cut = self.expose_all(ctx, fn.ty)
            saw_unknown = cut
            for bound, body in cands:
                j = self.sub.subtype(ctx, t.ty, bound)
                if j.proved:
                    return TypeResult(Judgment(PROVED, self.fuel.used),
                                      open_ty_with_ty(body, t.ty),
                                      TyApp(fn.term, t.ty))
                saw_unknown |= j.unknown
            if saw_unknown:
                return self._unknown()
            return self._fail("type argument outside the quantifier bound")

        if isinstance(t, TypeVal):
            if not wf(ctx, t.ty):
                return self._fail("ill-formed type value")
            gb = good_bounds(ctx, TypeTag(t.ty, t.ty), self.fuel.remaining + 1)
            if gb.refuted:
                return self._fail("type value with bad bounds")
            return TypeResult(Judgment(PROVED if gb.proved else UNKNOWN,
                                       self.fuel.used),
                              TypeTag(t.ty, t.ty) if gb.proved else None,
                              TypeVal(t.ty) if gb.proved else None)

        if isinstance(t, Rec):
            labels = [d.label for d in t.decls]
            if len(set(labels)) != len(labels):
                return self._fail("duplicate record labels")
            parts: List[Ty] = []
            elab: List[FieldInit] = []
            for d in t.decls:
                if not isinstance(d, FieldInit):
                    return self._fail("record members must be fields")
                fr = self.infer(ctx, d.tm)
                if not fr.proved:
                    return TypeResult(fr.judgment)
                parts.append(Fld(d.label, fr.ty))
                elab.append(FieldInit(d.label, fr.term, fr.ty))
            ty = _and_fold(parts)
            return TypeResult(Judgment(PROVED, self.fuel.used), ty,
                              Rec(tuple(elab)))

        if isinstance(t, SelField):
            obj = self.infer(ctx, t.obj)
            if not obj.proved:
                return TypeResult(obj.judgment)
            subject = _subject_var(t.obj)
            cands, cut = self.expose_fld(ctx, obj.ty, t.label, subject)
            if cands:
                return TypeResult(Judgment(PROVED, self.fuel.used), cands[0],
                                  SelField(obj.term, t.label))
            if cut:
                return self._unknown()
            return self._fail(f"no field {t.label} in {obj.ty}")

        if isinstance(t, Invoke):
            obj = self.infer(ctx, t.obj)
            if not obj.proved:
                return TypeResult(obj.judgment)
            arg = self.infer(ctx, t.arg)
            if not arg.proved:
                return TypeResult(arg.judgment)
            subject = _subject_var(t.obj)
            cands, cut = self.expose_method(ctx, obj.ty, t.label, subject)
            saw_unknown = cut
            for param, result in cands:
                res = self._try_apply(ctx, param, result, arg)
                if res is None:
                    continue
                if isinstance(res, Ty):
                    return TypeResult(Judgment(PROVED, self.fuel.used), res,
                                      Invoke(obj.term, t.label, arg.term))
                saw_unknown = True
            if saw_unknown:
                return self._unknown()
            return self._fail(f"no applicable method {t.label} in {obj.ty}")

        if isinstance(t, Obj):
            return self._infer_obj(ctx, t)

        if isinstance(t, Fix):
            x = ctx.fresh("x", TERM_NS)
            annot_x = open_ty(t.annot, x)
            if not wf(ctx.extend(x, TOP), annot_x):
                return self._fail("ill-formed fixpoint annotation")
            body = self.check(ctx.extend(x, annot_x), open_tm(t.body, x), annot_x)
            if not body.proved:
                return TypeResult(body.judgment)
            return TypeResult(body.judgment, BindSelf(t.annot),
                              Fix(t.annot, close_tm_safe(body.term, x)))

        if isinstance(t, RefNew):
            inner = self.infer(ctx, t.tm)
            if not inner.proved:
                return TypeResult(inner.judgment)
            return TypeResult(inner.judgment, RefTy(inner.ty),
                              RefNew(inner.term, inner.ty))

        if isinstance(t, Deref):
            inner = self.infer(ctx, t.tm)
            if not inner.proved:
                return TypeResult(inner.judgment)
            subject = _subject_var(t.tm)
            cands, cut = self.expose_ref(ctx, inner.ty, subject)
            if cands:
                return TypeResult(Judgment(PROVED, self.fuel.used), cands[0],
                                  Deref(inner.term))
            if cut:
                return self._unknown()
            return self._fail("dereference of a non-reference")

        if isinstance(t, Assign):
            tgt = self.infer(ctx, t.target)
            if not tgt.proved:
                return TypeResult(tgt.judgment)
            src = self.infer(ctx, t.source)
            if not src.proved:
                return TypeResult(src.judgment)
            subject = _subject_var(t.target)
            cands, cut = self.expose_ref(ctx, tgt.ty, subject)
            saw_unknown = cut
            for slot in cands:
                j = self.sub.subtype(ctx, src.ty, slot)
                if j.proved:
                    return TypeResult(Judgment(PROVED, self.fuel.used), slot,
                                      Assign(tgt.term, src.term))
                saw_unknown |= j.unknown
            if saw_unknown:
                return self._unknown()
            return self._fail("assignment to a non-reference or wrong type")

        if isinstance(t, Loc):
            return self._fail("store locations are not source terms")

        return self._fail(f"no typing rule for {type(t).__name__}")

    def _apply_depfun(self, ctx, fn: TypeResult, arg: TypeResult, t: App) -> TypeResult:
        subject = _subject_var(t.fn)
        cands, cut = self.expose_fun(ctx, fn.ty, subject)
        saw_unknown = cut
        for param, result in cands:
            res = self._try_apply(ctx, param, result, arg)
            if res is None:
                continue
            if isinstance(res, Ty):
                return TypeResult(Judgment(PROVED, self.fuel.used), res,
                                  App(fn.term, arg.term))
            saw_unknown = True
        if saw_unknown:
            return self._unknown()
        return self._fail("inapplicable function")

    def _try_apply(self, ctx, param: Ty, result: Ty, arg: TypeResult):
        """Typed result of the application, True for unknown, None for refuted."""
        j = self.sub.subtype(ctx, arg.ty, param)
        if j.unknown:
            return True
        if j.refuted:
            # A variable argument may still fit after unpacking its self type.
            av = _subject_var_tm(arg.term)
            if av is not None:
                j2 = self._var_check(ctx, av, arg.ty, param)
                if j2 is None or not j2.proved:
                    return True if (j2 is not None and j2.unknown) else None
            else:
                return None
        av = _subject_var_tm(arg.term)
        if av is not None:
            return open_ty(result, av)
        probe = ctx.fresh("$probe")
        opened = open_ty(result, probe)
        if probe in fv_ty(opened) and isinstance(arg.ty, TypeTag) \
                and arg.ty.lo == arg.ty.hi:
            # A precise tag pins the selection, so the dependency can be
            # discharged without naming the argument.
            opened = _resolve_sel(opened, probe, arg.ty.lo)
        if probe in fv_ty(opened):
            return None  # dependent result needs a variable argument
        return opened

    def _apply_arrow(self, ctx, fn: TypeResult, arg: TypeResult, t: App) -> TypeResult:
        ty = fn.ty
        saw_unknown = False
        while isinstance(ty, FVar) and isinstance(ty.var, Free):
            b = ctx.lookup(ty.var)
            if b is None or not b.tyvar:
                break
            ty = b.ty
        if isinstance(ty, Arrow):
            j = self.sub.subtype(ctx, arg.ty, ty.param)
            if j.proved:
                return TypeResult(Judgment(PROVED, self.fuel.used), ty.result,
                                  App(fn.term, arg.term))
            saw_unknown = j.unknown
        if saw_unknown:
            return self._unknown()
        return self._fail("inapplicable function")

    def _infer_obj(self, ctx: TypingCtx, t: Obj) -> TypeResult:
        labels = [d.label for d in t.decls]
        if len(set(labels)) != len(labels):
            return self._fail("duplicate object labels")
        x = ctx.fresh("x", TERM_NS)
        opened = [open_decl_public(d, x) for d in t.decls]

        parts: List[Ty] = []
        fields: List[Tuple[int, FieldInit]] = []
        for i, d in enumerate(opened):
            if isinstance(d, TypeInit):
                parts.append(TypeMem(d.label, d.lo, d.hi))
            elif isinstance(d, MethodInit):
                parts.append(Method(d.label, d.param, d.result))
            elif isinstance(d, FieldInit):
                fields.append((i, d))
            else:
                return self._fail("unknown member form")

        # Field initializers are checked without the self binding, so a
        # field cannot refer to its siblings through the self reference.
        elab = list(opened)
        for i, d in fields:
            if x in fv_tm(d.tm):
                return self._fail(f"field {d.label} refers to self")
            fr = self.infer(ctx, d.tm)
            if not fr.proved:
                return TypeResult(fr.judgment)
            parts.append(Fld(d.label, fr.ty))
            elab[i] = FieldInit(d.label, fr.term, fr.ty)

        self_ty = _and_fold(parts) if parts else TOP
        ctx_self = ctx.extend(x, self_ty)

        gb = good_bounds(ctx_self, self_ty, self.fuel.remaining + 1)
        if gb.refuted:
            return self._fail("object with bad member bounds")
        if gb.unknown:
            return self._unknown()

        for i, d in enumerate(elab):
            if not isinstance(d, MethodInit):
                continue
            if not wf(ctx_self, d.param):
                return self._fail("ill-formed method parameter type")
            y = ctx_self.fresh("y", TERM_NS)
            res = self.check(ctx_self.extend(y, d.param),
                             open_tm(d.body, y), open_ty(d.result, y))
            if not res.proved:
                return TypeResult(res.judgment)
            elab[i] = MethodInit(d.label, d.param, d.result,
                                 close_tm_safe(res.term, y))

        closed = tuple(close_decl_public(d, x) for d in elab)
        return TypeResult(Judgment(PROVED, self.fuel.used),
                          BindSelf(close_ty(self_ty, x)), Obj(closed))

    # -- checking against an expected type ------------------------------------

    def _var_check(self, ctx: TypingCtx, x: Free, ty: Ty,
                   expected: Ty) -> Optional[Judgment]:
        """Packing / unpacking steps available only to variable subjects."""
        if isinstance(expected, BindSelf):
            return self.sub.subtype(ctx, ty, open_ty(expected.body, x))
        if isinstance(ty, BindSelf):
            return self.sub.subtype(ctx, open_ty(ty.body, x), expected)
        return None

    def check(self, ctx: TypingCtx, t: Tm, expected: Ty) -> TypeResult:
        got = self.infer(ctx, t)
        if not got.proved:
            return got
        j = self.sub.subtype(ctx, got.ty, expected)
        if j.proved:
            return TypeResult(j, expected, got.term)
        if isinstance(t, Var) and isinstance(t.var, Free):
            j2 = self._var_check(ctx, t.var, got.ty, expected)
            if j2 is not None and j2.proved:
                return TypeResult(j2, expected, got.term)
            if j2 is not None and j2.unknown:
                j = j2
        if j.unknown:
            return self._unknown()
        return self._fail(f"{got.ty} is not a subtype of {expected}")


def _resolve_sel(t: Ty, var: Free, ty: Ty) -> Ty:
    """Replace var.Type selections with the known tag content."""
    if isinstance(t, Sel) and t.var == var and t.label == TYPE_TAG_LABEL:
        return ty
    if isinstance(t, And):
        return And(_resolve_sel(t.left, var, ty), _resolve_sel(t.right, var, ty))
    if isinstance(t, Or):
        return Or(_resolve_sel(t.left, var, ty), _resolve_sel(t.right, var, ty))
    if isinstance(t, TypeTag):
        return TypeTag(_resolve_sel(t.lo, var, ty), _resolve_sel(t.hi, var, ty))
    if isinstance(t, TypeMem):
        return TypeMem(t.label, _resolve_sel(t.lo, var, ty),
                       _resolve_sel(t.hi, var, ty))
    if isinstance(t, Fld):
        return Fld(t.label, _resolve_sel(t.ty, var, ty))
    if isinstance(t, DepFun):
        return DepFun(_resolve_sel(t.param, var, ty),
                      _resolve_sel(t.result, var, ty))
    if isinstance(t, Method):
        return Method(t.label, _resolve_sel(t.param, var, ty),
                      _resolve_sel(t.result, var, ty))
    if isinstance(t, BindSelf):
        return BindSelf(_resolve_sel(t.body, var, ty))
    if isinstance(t, RefTy):
        return RefTy(_resolve_sel(t.ty, var, ty))
    return t


def _and_fold(parts: List[Ty]) -> Ty:
    if not parts:
        return TOP
    ty = parts[0]
    for p in parts[1:]:
        ty = And(ty, p)
    return ty


def _subject_var(t: Tm) -> Optional[Free]:
    if isinstance(t, Var) and isinstance(t.var, Free):
        return t.var
    return None


def _subject_var_tm(t: Optional[Tm]) -> Optional[Free]:
    return _subject_var(t) if t is not None else None


def open_decl_public(d, x: Free):
    from .syntax import _open_decl
    return _open_decl(d, x, 0)


def close_decl_public(d, x: Free):
    from .syntax import _close_decl
    return _close_decl(d, x, 0)


def close_tm_safe(t: Optional[Tm], x: Free) -> Optional[Tm]:
    from .syntax import close_tm
    return close_tm(t, x) if t is not None else None


def typecheck(level: Level, ctx: TypingCtx, t: Tm, fuel: int = 10000,
              expected: Optional[Ty] = None) -> TypeResult:
    """Gate, then infer (or check) a term at the given level."""
    try:
        ok = gate_term(level, t)
    except StructuralError as e:
        return TypeResult(Judgment(REFUTED, reason=str(e)))
    if not ok:
        return TypeResult(Judgment(REFUTED, reason="construct outside level"))
    tc = Typechecker(level, Fuel(fuel))
    if expected is None:
        return tc.infer(ctx, t)
    return tc.check(ctx, t, expected)
