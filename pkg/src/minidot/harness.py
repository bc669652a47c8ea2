"""Suite drivers: soundness fuzzing, agreement checks, and the gallery.

Everything here is pure orchestration over the checker modules; the CLI
and the test suite both call into these functions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .evaluator import (Closure, Done, EMPTY_ENV, Env, ErrorRes, EvalRun,
                        LocValue, ObjValue, Result, Store, StoreTyping,
                        Timeout, TyClosure, ValRes, Value, evaluate)
from .fsub_bridge import TARGET_LEVEL, encode_tm
from .generation import (enum_closed_terms, enum_types, enum_well_typed,
                         random_term)
from .judgment import Fuel, Judgment, TraceNode, PROVED, REFUTED, UNKNOWN
from .runtime_checker import (AbsEnv, DynChecker, EMPTY_J, Mode, TyPair,
                              dyn_subtype, value_type)
from .smallstep import run as smallstep_run
from .static_checker import (Subtyper, good_bounds, subtype,
                             subtype_declarative, trans_candidates,
                             typecheck)
from .syntax import (And, BOT, Bound, DepFun, Fld, Free, Level, Obj, Sel,
                     TERM_NS, TL, TOP, Tm, Ty, TypeInit, TypeMem, TypeTag,
                     TYPE_TAG_LABEL, TypingCtx, VL, tm_size, tv)


@dataclass
class SuiteReport:
    name: str
    total: int = 0
    violations: List[str] = field(default_factory=list)
    extras: Dict = field(default_factory=dict)
    rows: List[Dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _result_class(r: Result) -> str:
    if isinstance(r, Timeout):
        return "timeout"
    if isinstance(r, ErrorRes):
        return "error"
    return "value"


# ---------------------------------------------------------------------------
# Soundness: every well-typed term evaluates to a well-typed value


def soundness_suite(level: Level, max_size: int, max_fuel: int,
                    check_fuel: int = 6000) -> SuiteReport:
    rep = SuiteReport(f"soundness[{level.name.lower()}]")
    corpus = enum_well_typed(level, max_size)
    rep.extras["well_typed_count"] = len(corpus)
    for src, ty, elab in corpus:
        rep.total += 1
        prev_done: Optional[str] = None
        done_value: Optional[Value] = None
        done_run: Optional[EvalRun] = None
        for n in range(0, max_fuel + 1):
            run = EvalRun(level)
            before = run.styping.snapshot()
            r, run = evaluate(level, n, elab)
            if not run.styping.extends(before):
                rep.violations.append(f"store typing shrank: {src}")
            cls = _result_class(r)
            if n == 0 and cls != "timeout":
                rep.violations.append(f"nonzero result at fuel 0: {src}")
            if cls == "error":
                rep.violations.append(f"well-typed term errored: {src}")
                break
            if prev_done is not None and cls == "timeout":
                rep.violations.append(f"fuel monotonicity broken: {src}")
                break
            if prev_done is not None and cls != prev_done:
                rep.violations.append(f"done result unstable: {src}")
                break
            if cls == "value":
                prev_done = cls
                done_value = r.value
                done_run = run
            if len(run.styping) != len(run.store):
                rep.violations.append(f"store/typing length mismatch: {src}")
                break
        outcome = prev_done or "timeout"
        if done_value is not None:
            j = value_type(level, done_run.styping, done_value, EMPTY_ENV,
                           ty, fuel=check_fuel)
            if not j.proved:
                rep.violations.append(
                    f"value type not provable ({j.verdict.value}): "
                    f"{src} : {ty}")
                outcome = "ill-typed value"
        rep.rows.append({"term": str(src), "size": tm_size(src),
                         "type": str(ty), "outcome": outcome})
    return rep


# ---------------------------------------------------------------------------
# Totality: the interpreter always answers, and answers monotonically


def totality_suite(level: Level, count: int, seed: int,
                   max_fuel: int = 30) -> SuiteReport:
    rep = SuiteReport(f"totality[{level.name.lower()}]")
    rng = random.Random(seed)
    for _ in range(count):
        t = random_term(level, rng)
        rep.total += 1
        prev: Optional[str] = None
        for n in range(0, max_fuel + 1):
            r, _ = evaluate(level, n, t)
            cls = _result_class(r)
            if n == 0 and cls != "timeout":
                rep.violations.append(f"fuel 0 not a timeout: {t}")
                break
            if prev is not None and prev != "timeout" and cls != prev:
                rep.violations.append(f"done result unstable: {t}")
                break
            prev = cls
    return rep


# ---------------------------------------------------------------------------
# The bad-bounds gallery


def gallery_suite() -> SuiteReport:
    rep = SuiteReport("gallery")
    x = tv("x")
    t_int = Fld(VL("l1"), TOP)
    t_str = Fld(VL("l2"), TOP)
    a = TL("A")

    # (a) a bogus bound lets transitivity relate arbitrary types
    ctx = TypingCtx().extend(x, TypeMem(a, t_int, t_str))
    empty = TypingCtx()
    mid = trans_candidates(ctx)
    with_hyp = subtype_declarative(ctx, t_int, t_str, mid)
    without = subtype_declarative(empty, t_int, t_str, ())
    lower = subtype(ctx, t_int, Sel(x, a))
    upper = subtype(ctx, Sel(x, a), t_str)
    rep.extras["trans_proves"] = with_hyp.verdict.value
    rep.extras["empty_env"] = without.verdict.value
    rep.total += 1
    if not (with_hyp.proved and without.refuted
            and lower.proved and upper.proved):
        rep.violations.append("transitivity collapse did not reproduce")

    # (b) narrowing destroys good bounds
    t_b = TypeMem(TL("B"), t_str, t_str)
    subject = And(Sel(x, a), TypeMem(TL("B"), t_int, t_int))
    wide = TypingCtx().extend(x, TypeMem(a, BOT, TOP))
    narrow = TypingCtx().extend(x, TypeMem(a, t_b, t_b))
    gb_before = good_bounds(wide, subject)
    gb_after = good_bounds(narrow, subject)
    rep.extras["good_bounds_before"] = gb_before.verdict.value
    rep.extras["good_bounds_after"] = gb_after.verdict.value
    rep.total += 1
    if not (gb_before.proved and gb_after.refuted):
        rep.violations.append("narrowing did not flip good bounds")

    # (c) creation rejects an object whose member bounds are absurd
    bad_obj = Obj((TypeInit(a, TOP, BOT),))
    r = typecheck(Level.DOT, TypingCtx(), bad_obj)
    rep.extras["bad_new"] = r.judgment.verdict.value
    rep.total += 1
    if not r.judgment.refuted:
        rep.violations.append("object with absurd bounds was accepted")
    return rep


# ---------------------------------------------------------------------------
# Agreement of the three precision modes


def _concrete_envs(level: Level) -> List[Tuple[Env, Tuple[Free, ...], StoreTyping]]:
    """Runtime environments with up to two concrete bindings."""
    x, y = tv("x"), tv("y")
    sty = StoreTyping()
    if level == Level.DOT:
        vx = ObjValue(EMPTY_ENV, (TypeInit(TL("A"), BOT, TOP),))
        vy = ObjValue(EMPTY_ENV, (TypeInit(TL("A"), TOP, TOP),))
    else:
        vx = TyClosure(EMPTY_ENV, TOP)
        vy = TyClosure(EMPTY_ENV, BOT)
    return [
        (EMPTY_ENV, (), sty),
        (EMPTY_ENV.extend(x, vx), (x,), sty),
        (EMPTY_ENV.extend(x, vx).extend(y, vy), (x, y), sty),
    ]


def pushback_suite(level: Level, max_ty_size: int = 4,
                   fuel: int = 4000) -> SuiteReport:
    rep = SuiteReport(f"pushback[{level.name.lower()}]")
    for env, names, sty in _concrete_envs(level):
        tys = enum_types(level, max_ty_size, names)
        for t1 in tys:
            for t2 in tys:
                rep.total += 1
                p1, p2 = TyPair(env, t1), TyPair(env, t2)
                got = {m: dyn_subtype(level, sty, EMPTY_J, p1, p2, m, fuel)
                       for m in Mode}
                verdicts = {m: j.verdict for m, j in got.items()}
                if len(set(verdicts.values())) != 1:
                    rep.violations.append(
                        f"{t1} <: {t2}: " + ", ".join(
                            f"{m.value}={v.value}" for m, v in verdicts.items()))
    return rep


# ---------------------------------------------------------------------------
# Static subtyping transfers to the dynamic relation


def _consistent_triples(level: Level):
    """(ctx, env, j, styping) tuples built consistently by construction."""
    sty = StoreTyping()
    x, y = tv("x"), tv("y")
    z = Free("cmp", "z")
    tag_top = TyClosure(EMPTY_ENV, TOP)
    tag_bot = TyClosure(EMPTY_ENV, BOT)
    if level == Level.DOT:
        vx = ObjValue(EMPTY_ENV, (TypeInit(TL("A"), BOT, TOP),))
        vy = ObjValue(EMPTY_ENV, (TypeInit(TL("A"), TOP, TOP),))
        tx = TypeMem(TL("A"), BOT, TOP)
        ty_ = TypeMem(TL("A"), TOP, TOP)
    else:
        vx, vy = tag_top, tag_bot
        tx = TypeTag(TOP, TOP)
        ty_ = TypeTag(BOT, BOT)
    out = []
    out.append((TypingCtx(), EMPTY_ENV, EMPTY_J, sty))
    out.append((TypingCtx().extend(x, tx), EMPTY_ENV.extend(x, vx),
                EMPTY_J, sty))
    out.append((TypingCtx().extend(x, tx).extend(y, ty_),
                EMPTY_ENV.extend(x, vx).extend(y, vy), EMPTY_J, sty))
    out.append((TypingCtx().extend(x, tx).extend(z, tx, "cmp"),
                EMPTY_ENV.extend(x, vx),
                EMPTY_J.extend(z, TyPair(EMPTY_ENV, tx)), sty))
    return out


def transfer_suite(level: Level, max_ty_size: int = 3,
                   fuel: int = 4000) -> SuiteReport:
    rep = SuiteReport(f"transfer[{level.name.lower()}]")
    for ctx, env, j, sty in _consistent_triples(level):
        names = tuple(b.var for b in ctx.entries)
        tys = enum_types(level, max_ty_size, names)
        for t1 in tys:
            for t2 in tys:
                st = subtype(ctx, t1, t2, fuel)
                if not st.proved:
                    continue
                rep.total += 1
                dy = dyn_subtype(level, sty, j, TyPair(env, t1),
                                 TyPair(env, t2), Mode.IMPRECISE, fuel)
                if not dy.proved:
                    rep.violations.append(
                        f"static {t1} <: {t2} did not transfer "
                        f"({dy.verdict.value})")
    return rep


def substitution_probe(level: Level, count: int = 1000, seed: int = 7,
                       fuel: int = 4000) -> SuiteReport:
    """Replacing a hypothesis by a conforming concrete value never breaks
    a proved query."""
    rep = SuiteReport(f"substitution[{level.name.lower()}]")
    rng = random.Random(seed)
    sty = StoreTyping()
    z = Free("cmp", "z")
    x = tv("x")
    if level == Level.DOT:
        hyp_ty: Ty = TypeMem(TL("A"), BOT, TOP)
        witnesses = [ObjValue(EMPTY_ENV, (TypeInit(TL("A"), BOT, TOP),)),
                     ObjValue(EMPTY_ENV, (TypeInit(TL("A"), TOP, TOP),)),
                     ObjValue(EMPTY_ENV, (TypeInit(TL("A"), BOT, BOT),))]
    else:
        hyp_ty = TypeTag(BOT, TOP)
        witnesses = [TyClosure(EMPTY_ENV, TOP), TyClosure(EMPTY_ENV, BOT)]
    tys = enum_types(level, 3, (z,))
    j = EMPTY_J.extend(z, TyPair(EMPTY_ENV, hyp_ty))
    proved_pairs = [
        (a, b) for a in tys for b in tys
        if dyn_subtype(level, sty, j, TyPair(EMPTY_ENV, a),
                       TyPair(EMPTY_ENV, b), Mode.IMPRECISE, fuel).proved]
    rep.extras["proved_pairs"] = len(proved_pairs)
    if not proved_pairs:
        rep.violations.append("no proved hypothetical queries to probe")
        return rep
    for _ in range(count):
        t1, t2 = rng.choice(proved_pairs)
        rep.total += 1
        w = rng.choice(witnesses)
        ok = value_type(level, sty, w, EMPTY_ENV, hyp_ty, fuel)
        if not ok.proved:
            continue
        env = EMPTY_ENV.extend(x, w)
        s1 = _rename_sel(t1, z, x)
        s2 = _rename_sel(t2, z, x)
        after = dyn_subtype(level, sty, EMPTY_J, TyPair(env, s1),
                            TyPair(env, s2), Mode.IMPRECISE, fuel)
        if after.refuted:
            rep.violations.append(f"{t1} <: {t2} broke under substitution")
    return rep


def _rename_sel(t: Ty, old: Free, new: Free) -> Ty:
    from .syntax import close_ty, open_ty
    return open_ty(close_ty(t, old), new)


# ---------------------------------------------------------------------------
# Small-step versus big-step


def smallstep_agreement(max_size: int = 6, step_limit: int = 200,
                        max_fuel: int = 30) -> SuiteReport:
    rep = SuiteReport("smallstep")
    corpus = enum_well_typed(Level.DSUB, max_size)
    rep.extras["well_typed_count"] = len(corpus)
    for src, ty, elab in corpus:
        rep.total += 1
        big = "timeout"
        for n in range(max_fuel + 1):
            r, _ = evaluate(Level.DSUB, n, src)
            cls = _result_class(r)
            if cls != "timeout":
                big = cls
                break
        small = smallstep_run(src, step_limit)
        mapping = {"value": "value", "stuck": "error", "limit": "timeout"}
        if mapping[small.kind] != big:
            rep.violations.append(
                f"{src}: big-step {big}, small-step {small.kind}")
    return rep


# ---------------------------------------------------------------------------
# The F-sub bridge


def bridge_check(t: Tm, fuel: int = 4000, max_fuel: int = 30):
    """(source verdict, image verdict, source class, image class)."""
    src_r = typecheck(Level.FSUB, TypingCtx(), t, fuel)
    img = encode_tm(t)
    img_r = typecheck(TARGET_LEVEL, TypingCtx(), img, fuel)

    def sweep(level, term):
        for n in range(max_fuel + 1):
            r, _ = evaluate(level, n, term)
            cls = _result_class(r)
            if cls != "timeout":
                return cls
        return "timeout"

    return (src_r.judgment.verdict, img_r.judgment.verdict,
            sweep(Level.FSUB, t), sweep(TARGET_LEVEL, img))


def load_bridge_corpus() -> List[Tm]:
    """Parse the bundled bounded-polymorphism example programs."""
    from importlib import resources
    from .parser import parse_program
    base = resources.files("minidot").joinpath("corpus/fsub")
    out = []
    for entry in sorted(base.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".mdt"):
            out.append(parse_program(entry.read_text()))
    return out


def bridge_suite(programs: List[Tm], max_size: int = 5) -> SuiteReport:
    rep = SuiteReport("bridge")
    corpus = list(programs)
    corpus += enum_closed_terms(Level.FSUB, max_size)
    rep.extras["corpus_size"] = len(corpus)
    for t in corpus:
        rep.total += 1
        src_v, img_v, src_cls, img_cls = bridge_check(t)
        if src_v is PROVED and img_v is not PROVED:
            rep.violations.append(f"typability lost: {t}")
            continue
        if src_v is PROVED and src_cls != img_cls:
            rep.violations.append(
                f"outcome changed: {t} ({src_cls} vs {img_cls})")
    return rep


# ---------------------------------------------------------------------------
# Mutable state: a store cycle stays well typed


CYCLIC_PROGRAM = (
    "(fun(c: Ref (all(x:Top)Top)) "
    "((fun(u:Top) !c) (c := fun(x:Top) (!c) x))) "
    "(ref (fun(x:Top) x))"
)


def cyclic_store_check(fuel: int = 100) -> SuiteReport:
    from .parser import parse_term
    rep = SuiteReport("cyclic-store")
    level = Level.DSUB_BOT_AND_OR_REC_FIX_MUT
    t = parse_term(CYCLIC_PROGRAM, level)
    r = typecheck(level, TypingCtx(), t, 8000)
    rep.total += 1
    if not r.proved:
        rep.violations.append("cyclic store program did not typecheck")
        return rep
    run = EvalRun(level)
    snap0 = run.styping.snapshot()
    res, run = evaluate(level, fuel, r.term, run=run)
    if not isinstance(res, ValRes):
        rep.violations.append(f"cyclic store program did not finish: {res}")
        return rep
    if not run.styping.extends(snap0):
        rep.violations.append("store typing was rewritten")
    if len(run.styping) != len(run.store):
        rep.violations.append("store and typing out of step")
    j = value_type(level, run.styping, res.value, EMPTY_ENV, r.ty, 8000)
    rep.extras["value_type"] = j.verdict.value
    if not j.proved:
        rep.violations.append("final value not typable at the program type")
    # The cell really is cyclic: its content closes over its own location.
    cell = run.store.read(0)
    if not (isinstance(cell, Closure)
            and any(isinstance(v, LocValue) and v.loc == 0
                    for _, v in cell.env.entries)):
        rep.violations.append("expected a self-referring store cell")
    return rep


# ---------------------------------------------------------------------------
# Trace replay


_STATIC_RULES = {"Bot", "Top", "SelX", "VarRefl", "And2", "Or1", "Sel1",
                 "Sel2", "And11", "And12", "Or21", "Or22", "BindX", "Bind1",
                 "Fld", "Mem", "Tag", "Fun", "All", "Ref", "Arrow", "AllSub",
                 "VarBound", "Trans"}


def replay_trace(node: TraceNode) -> bool:
    """Schema-level validation that each step really follows its rule."""
    from .syntax import (And as TAnd, Bot as TBot, Or as TOr, Sel as TSel,
                         Top as TTop, BindSelf as TBind)
    if node.rule not in _STATIC_RULES:
        return False
    lhs, rhs = node.meta.get("lhs"), node.meta.get("rhs")
    kids = node.children

    def kid_is(i, l, r):
        k = kids[i]
        return k.meta.get("lhs") == l and k.meta.get("rhs") == r

    try:
        if node.rule == "Bot":
            return isinstance(lhs, TBot) and not kids
        if node.rule == "Top":
            return isinstance(rhs, TTop) and not kids
        if node.rule == "SelX":
            return (isinstance(lhs, TSel) and lhs == rhs and not kids)
        if node.rule == "VarRefl":
            return lhs == rhs and not kids
        if node.rule == "And2":
            return (isinstance(rhs, TAnd) and len(kids) == 2
                    and kid_is(0, lhs, rhs.left) and kid_is(1, lhs, rhs.right))
        if node.rule == "Or1":
            return (isinstance(lhs, TOr) and len(kids) == 2
                    and kid_is(0, lhs.left, rhs) and kid_is(1, lhs.right, rhs))
        if node.rule == "And11":
            return isinstance(lhs, TAnd) and kid_is(0, lhs.left, rhs)
        if node.rule == "And12":
            return isinstance(lhs, TAnd) and kid_is(0, lhs.right, rhs)
        if node.rule == "Or21":
            return isinstance(rhs, TOr) and kid_is(0, lhs, rhs.left)
        if node.rule == "Or22":
            return isinstance(rhs, TOr) and kid_is(0, lhs, rhs.right)
        if node.rule == "Sel1":
            bound = node.meta.get("bound")
            return (isinstance(lhs, TSel) and len(kids) == 1
                    and kid_is(0, bound, rhs))
        if node.rule == "Sel2":
            bound = node.meta.get("bound")
            return (isinstance(rhs, TSel) and len(kids) == 1
                    and kid_is(0, lhs, bound))
        if node.rule == "Trans":
            mid = node.meta.get("middle")
            return (len(kids) == 2 and kids[0].meta.get("lhs") == lhs
                    and kids[0].meta.get("rhs") == mid
                    and kids[1].meta.get("lhs") == mid
                    and kids[1].meta.get("rhs") == rhs)
        if node.rule in ("BindX", "Bind1"):
            return isinstance(lhs, TBind) and len(kids) == 1
        # Remaining structural rules: premise count is the contract.
        return len(kids) in (1, 2)
    finally:
        pass


def replay_all(node: TraceNode) -> bool:
    return all(replay_trace(n) for n in node.walk())
