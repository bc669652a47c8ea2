"""Term and type enumeration for the soundness and agreement suites.

Exhaustive enumeration ranges over a fixed, documented universe: each
level has a small pool of annotation types, and terms are built from the
level's constructors up to a size bound (one unit per term constructor,
one per annotation).  Random generation draws from the same universe.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Tuple

from .syntax import (And, AllSub, App, Arrow, Assign, BOT, BindSelf, Bound,
                     DepFun, Deref, FVar, FieldInit, Fix, Fld, Free, Invoke,
                     Lam, Level, Method, ML, MethodInit, Obj, Or, Rec,
                     RefNew, SelField, TERM_NS, TL, TOP, Tm, Ty, TyApp,
                     TyLam, TypeInit, TypeMem, TypeTag, TypeVal,
                     TYPE_TAG_LABEL, VL, Var, Sel, gate_term, tm_size,
                     ty_size)

L_FLD = VL("l")
L_TY = TL("A")
L_M = ML("m")


def annot_pool(level: Level) -> List[Ty]:
    """Annotation types available to binders at each level."""
    if level == Level.FSUB:
        return [TOP, Arrow(TOP, TOP)]
    if level == Level.DOT:
        return [TOP, BOT, TypeMem(L_TY, BOT, TOP), Fld(L_FLD, TOP)]
    pool = [TOP, TypeTag(TOP, TOP), DepFun(TOP, TOP)]
    if level >= Level.DSUB_BOT:
        pool += [BOT, TypeTag(BOT, TOP)]
    if level >= Level.DSUB_BOT_AND_OR_REC:
        pool += [Fld(L_FLD, TOP)]
    return pool


def tag_pool(level: Level) -> List[Ty]:
    """Types usable as first-class type values."""
    if level == Level.DSUB:
        return [TOP, TypeTag(TOP, TOP)]
    return [TOP, BOT]


def typeinit_pool() -> List[Tuple[Ty, Ty]]:
    """Bound pairs for type members of enumerated objects.

    The reversed pair is deliberately included: creation must refute it.
    """
    return [(BOT, TOP), (TOP, TOP), (BOT, BOT), (TOP, BOT)]


def method_param_pool() -> List[Ty]:
    # In parameter position the object self is Bound(0).
    return [TOP, BOT, Sel(Bound(0), L_TY)]


def method_result_pool() -> List[Ty]:
    # In result position the parameter is Bound(0) and self is Bound(1).
    return [TOP, Sel(Bound(1), L_TY)]


# ---------------------------------------------------------------------------
# Exhaustive closed-term enumeration


class TermEnumerator:
    def __init__(self, level: Level):
        self.level = level
        self._memo: Dict[Tuple[int, int], List[Tm]] = {}

    def terms(self, size: int, depth: int) -> List[Tm]:
        """All candidate terms of exactly the given size under depth binders."""
        key = (size, depth)
        if key in self._memo:
            return self._memo[key]
        out: List[Tm] = []
        lv = self.level
        if size == 1:
            out += [Var(Bound(i)) for i in range(depth)]
        if size >= 2:
            if lv != Level.DOT:
                for annot in annot_pool(lv):
                    for body in self.terms(size - 2, depth + 1):
                        out.append(Lam(annot, body))
            if Level.DSUB <= lv <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT and size == 2:
                out += [TypeVal(t) for t in tag_pool(lv)]
            if lv == Level.FSUB:
                for bound in annot_pool(lv):
                    for body in self.terms(size - 2, depth + 1):
                        out.append(TyLam(bound, body))
                for ty in annot_pool(lv):
                    for fn in self.terms(size - 2, depth):
                        out.append(TyApp(fn, ty))
        if size >= 3 and lv != Level.DOT:
            for s1 in range(1, size - 1):
                for fn in self.terms(s1, depth):
                    for arg in self.terms(size - 1 - s1, depth):
                        out.append(App(fn, arg))
        if lv >= Level.DSUB_BOT_AND_OR_REC and lv != Level.DOT:
            if size >= 2:
                for t in self.terms(size - 1, depth):
                    out.append(Rec((FieldInit(L_FLD, t),)))
        if lv >= Level.DSUB_BOT_AND_OR_REC or lv == Level.DOT:
            if size >= 2:
                for t in self.terms(size - 1, depth):
                    out.append(SelField(t, L_FLD))
        if Level.DSUB_BOT_AND_OR_REC_FIX <= lv <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT:
            if size >= 3:
                for annot in annot_pool(lv):
                    for body in self.terms(size - 2, depth + 1):
                        out.append(Fix(annot, body))
        if lv == Level.DSUB_BOT_AND_OR_REC_FIX_MUT:
            if size >= 2:
                for t in self.terms(size - 1, depth):
                    out.append(RefNew(t))
                    out.append(Deref(t))
            if size >= 3:
                for s1 in range(1, size - 1):
                    for tg in self.terms(s1, depth):
                        for src in self.terms(size - 1 - s1, depth):
                            out.append(Assign(tg, src))
        if lv == Level.DOT:
            out += self._dot_objects(size, depth)
            if size >= 3:
                for s1 in range(1, size - 1):
                    for obj in self.terms(s1, depth):
                        for arg in self.terms(size - 1 - s1, depth):
                            out.append(Invoke(obj, L_M, arg))
        self._memo[key] = out
        return out

    def _dot_objects(self, size: int, depth: int) -> List[Tm]:
        out: List[Tm] = []
        if size == 3:
            for lo, hi in typeinit_pool():
                out.append(Obj((TypeInit(L_TY, lo, hi),)))
        if size >= 2:
            # Field bodies sit under the self binder without using it.
            for t in self.terms(size - 1, depth):
                out.append(Obj((FieldInit(L_FLD, t),)))
        if size >= 4:
            for param in method_param_pool():
                for result in method_result_pool():
                    for body in self.terms(size - 3, depth + 2):
                        out.append(Obj((MethodInit(L_M, param, result, body),)))
        if size >= 6:
            for lo, hi in typeinit_pool()[:2]:
                for param in method_param_pool():
                    for result in method_result_pool():
                        for body in self.terms(size - 5, depth + 2):
                            out.append(Obj((TypeInit(L_TY, lo, hi),
                                            MethodInit(L_M, param, result, body))))
        return out


def enum_closed_terms(level: Level, max_size: int) -> List[Tm]:
    """All gate-valid closed candidate terms up to the size bound."""
    en = TermEnumerator(level)
    out = []
    for n in range(1, max_size + 1):
        for t in en.terms(n, 0):
            if gate_term(level, t):
                out.append(t)
    return out


def enum_well_typed(level: Level, max_size: int,
                    fuel: int = 4000) -> List[Tuple[Tm, Ty, Tm]]:
    """(source, inferred type, elaborated term) for every well-typed term."""
    from .static_checker import typecheck
    from .syntax import TypingCtx
    out = []
    for t in enum_closed_terms(level, max_size):
        r = typecheck(level, TypingCtx(), t, fuel)
        if r.proved:
            out.append((t, r.ty, r.term))
    return out


# ---------------------------------------------------------------------------
# Type enumeration (for the agreement and gallery suites)


def enum_types(level: Level, max_size: int,
               sel_vars: Tuple[Free, ...] = ()) -> List[Ty]:
    """All types up to the size bound over the level's constructor set."""
    memo: Dict[int, List[Ty]] = {}

    def types(n: int) -> List[Ty]:
        if n in memo:
            return memo[n]
        out: List[Ty] = []
        if n == 1:
            out.append(TOP)
            if level >= Level.DSUB_BOT or level == Level.DOT:
                out.append(BOT)
            for x in sel_vars:
                if level == Level.DOT:
                    out.append(Sel(x, L_TY))
                elif level >= Level.DSUB:
                    out.append(Sel(x, TYPE_TAG_LABEL))
        if n >= 2:
            if level == Level.DOT or level >= Level.DSUB_BOT_AND_OR_REC:
                out += [Fld(L_FLD, t) for t in types(n - 1)]
            if level == Level.DOT:
                pass
        if n >= 3:
            if level >= Level.DSUB_BOT_AND_OR:
                for s1 in range(1, n - 1):
                    for a in types(s1):
                        for b in types(n - 1 - s1):
                            out.append(And(a, b))
                            out.append(Or(a, b))
            for s1 in range(1, n - 1):
                for lo in types(s1):
                    for hi in types(n - 1 - s1):
                        if level == Level.DOT:
                            out.append(TypeMem(L_TY, lo, hi))
                        elif level >= Level.DSUB:
                            if level >= Level.DSUB_BOT or lo == BOT or lo == hi:
                                out.append(TypeTag(lo, hi))
            if level != Level.DOT and level >= Level.DSUB:
                for s1 in range(1, n - 1):
                    for p in types(s1):
                        for r in types(n - 1 - s1):
                            out.append(DepFun(p, r))
            if level == Level.DOT:
                for s1 in range(1, n - 1):
                    for p in types(s1):
                        for r in types(n - 1 - s1):
                            out.append(Method(L_M, p, r))
        memo[n] = out
        return out

    all_types: List[Ty] = []
    for n in range(1, max_size + 1):
        all_types += types(n)
    return all_types


# ---------------------------------------------------------------------------
# Random (possibly ill-typed) term generation for totality testing


def random_term(level: Level, rng: random.Random, max_size: int = 8) -> Tm:
    """A random gate-valid closed term; it need not be well typed."""

    def go(budget: int, depth: int) -> Tm:
        if budget <= 1:
            if depth > 0:
                return Var(Bound(rng.randrange(depth)))
            if level == Level.DOT:
                return Obj((TypeInit(L_TY, BOT, TOP),))
            return Lam(TOP, Var(Bound(0)))
        opts = []
        if depth > 0:
            opts.append("var")
        if budget >= 2 and level != Level.DOT:
            opts.append("lam")
        if budget >= 3 and level != Level.DOT:
            opts.append("app")
        if budget >= 2 and Level.DSUB <= level <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT:
            opts.append("typeval")
        if budget >= 2 and level == Level.FSUB:
            opts += ["tylam", "tyapp"]
        if budget >= 2 and (level >= Level.DSUB_BOT_AND_OR_REC
                            and level != Level.DOT):
            opts.append("rec")
        if budget >= 2 and (level >= Level.DSUB_BOT_AND_OR_REC
                            or level == Level.DOT):
            opts.append("sel")
        if budget >= 3 and (Level.DSUB_BOT_AND_OR_REC_FIX <= level
                            <= Level.DSUB_BOT_AND_OR_REC_FIX_MUT):
            opts.append("fix")
        if budget >= 2 and level == Level.DSUB_BOT_AND_OR_REC_FIX_MUT:
            opts += ["ref", "deref"]
        if budget >= 3 and level == Level.DSUB_BOT_AND_OR_REC_FIX_MUT:
            opts.append("assign")
        if budget >= 2 and level == Level.DOT:
            opts.append("obj")
        if budget >= 3 and level == Level.DOT:
            opts.append("invoke")
        if not opts:
            opts = ["lam"] if level != Level.DOT else ["obj"]
        choice = rng.choice(opts)
        pool = annot_pool(level)
        if choice == "var":
            return Var(Bound(rng.randrange(depth)))
        if choice == "lam":
            return Lam(rng.choice(pool), go(budget - 2, depth + 1))
        if choice == "app":
            s1 = rng.randint(1, budget - 2)
            return App(go(s1, depth), go(budget - 1 - s1, depth))
        if choice == "typeval":
            return TypeVal(rng.choice(tag_pool(level)))
        if choice == "tylam":
            return TyLam(rng.choice(pool), go(budget - 2, depth + 1))
        if choice == "tyapp":
            return TyApp(go(budget - 2, depth), rng.choice(pool))
        if choice == "rec":
            return Rec((FieldInit(L_FLD, go(budget - 1, depth)),))
        if choice == "sel":
            return SelField(go(budget - 1, depth), L_FLD)
        if choice == "fix":
            return Fix(rng.choice(pool), go(budget - 2, depth + 1))
        if choice == "ref":
            return RefNew(go(budget - 1, depth))
        if choice == "deref":
            return Deref(go(budget - 1, depth))
        if choice == "assign":
            s1 = rng.randint(1, budget - 2)
            return Assign(go(s1, depth), go(budget - 1 - s1, depth))
        if choice == "invoke":
            s1 = rng.randint(1, budget - 2)
            return Invoke(go(s1, depth), L_M, go(budget - 1 - s1, depth))
        # obj
        kind = rng.choice(["ty", "fld", "m"])
        if kind == "ty" and budget >= 3:
            lo, hi = rng.choice(typeinit_pool())
            return Obj((TypeInit(L_TY, lo, hi),))
        if kind == "m" and budget >= 4:
            return Obj((MethodInit(L_M, rng.choice(method_param_pool()),
                                   rng.choice(method_result_pool()),
                                   go(budget - 3, depth + 2)),))
        return Obj((FieldInit(L_FLD, go(budget - 1, depth)),))

    return go(max_size, 0)
