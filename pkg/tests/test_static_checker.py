"""Tests for the static subtype checker and bidirectional typechecker."""

import pytest

from minidot.judgment import PROVED, REFUTED, UNKNOWN, TraceNode
from minidot.parser import parse_term, parse_type
from minidot.static_checker import (
    Subtyper,
    collect_members,
    good_bounds,
    subtype,
    subtype_declarative,
    trans_candidates,
    typecheck,
)
from minidot.syntax import (
    BOT,
    TOP,
    And,
    BindSelf,
    Bound,
    DepFun,
    Fld,
    Free,
    Label,
    Level,
    Or,
    Sel,
    TypeMem,
    TypeTag,
    TypingCtx,
    CMP_NS,
    TERM_NS,
)

x = Free(TERM_NS, "x")
y = Free(TERM_NS, "y")
A = Label("type", "A")
B = Label("type", "B")
L = Label("value", "l")

T_INT = Fld(Label("value", "l1"), TOP)
T_STR = Fld(Label("value", "l2"), TOP)


def ctx_with(*bindings):
    ctx = TypingCtx()
    for var, ty in bindings:
        ctx = ctx.extend(var, ty)
    return ctx


def test_top_bot_refl():
    ctx = TypingCtx()
    assert subtype(ctx, BOT, TOP).proved
    assert subtype(ctx, TOP, TOP).proved
    assert subtype(ctx, BOT, BOT).proved
    assert subtype(ctx, TOP, BOT).refuted


def test_sel_reflexive_without_bounds():
    ctx = ctx_with((x, TOP))
    assert subtype(ctx, Sel(x, A), Sel(x, A)).proved


def test_sel_through_bounds():
    ctx = ctx_with((x, TypeMem(A, T_INT, T_STR)))
    # Sel1: x.A <: upper bound
    assert subtype(ctx, Sel(x, A), T_STR).proved
    # Sel2: lower bound <: x.A
    assert subtype(ctx, T_INT, Sel(x, A)).proved
    # nothing gives x.A <: lower bound
    assert not subtype(ctx, Sel(x, A), T_INT).proved


def test_transitivity_through_member_fused():
    # the algorithmic checker proves s <: x.A <: u without a Trans rule
    ctx = ctx_with((x, TypeMem(A, T_INT, TOP)))
    assert subtype(ctx, T_INT, Sel(x, A)).proved
    assert subtype(ctx, Sel(x, A), TOP).proved


def test_and_or_lattice():
    ctx = TypingCtx()
    s = And(T_INT, T_STR)
    assert subtype(ctx, s, T_INT).proved
    assert subtype(ctx, s, T_STR).proved
    assert subtype(ctx, T_INT, Or(T_INT, T_STR)).proved
    assert subtype(ctx, T_STR, Or(T_INT, T_STR)).proved
    assert subtype(ctx, Or(T_INT, T_STR), TOP).proved
    assert subtype(ctx, And(T_INT, T_STR), Or(T_STR, T_INT)).proved


def test_structural_field_covariant():
    ctx = TypingCtx()
    assert subtype(ctx, Fld(L, BOT), Fld(L, TOP)).proved
    assert subtype(ctx, Fld(L, TOP), Fld(L, BOT)).refuted


def test_type_member_variance():
    ctx = TypingCtx()
    lo_wide = TypeMem(A, BOT, TOP)
    lo_tight = TypeMem(A, T_INT, T_INT)
    # lower bound is contravariant, upper covariant
    assert subtype(ctx, lo_tight, lo_wide).proved
    assert subtype(ctx, lo_wide, lo_tight).refuted


def test_dep_fun_variance():
    ctx = TypingCtx()
    f1 = DepFun(TOP, T_INT)
    f2 = DepFun(T_INT, TOP)
    assert subtype(ctx, f1, f2).proved
    assert subtype(ctx, f2, f1).refuted


def test_dep_fun_dependent_result():
    # fun(x: {A: Bot..Top}) x.A  <:  fun(x: {A: Int..Int}) Top
    f1 = DepFun(TypeMem(A, BOT, TOP), Sel(Bound(0), A))
    f2 = DepFun(TypeMem(A, T_INT, T_INT), TOP)
    assert subtype(TypingCtx(), f1, f2).proved


def test_bind_self_intro():
    inner = TypeMem(A, T_INT, T_INT)
    rec = BindSelf(inner)
    assert subtype(TypingCtx(), rec, rec).proved
    # Bind1: unfold on the left against a non-binder right side
    assert subtype(TypingCtx(), rec, TypeMem(A, T_INT, T_INT)).proved


def test_bad_bound_sel_unknown_or_refuted():
    # with absurd bounds the checker must not claim PROVED for unrelated types
    ctx = ctx_with((x, TypeMem(A, TOP, BOT)))
    j = subtype(ctx, T_INT, T_STR)
    assert not j.proved


def test_fuel_exhaustion_is_unknown():
    ctx = ctx_with((x, TypeMem(A, Sel(x, A), Sel(x, A))))
    j = subtype(ctx, Sel(x, A), T_INT, fuel=3)
    assert j.verdict in (UNKNOWN, REFUTED)
    deep = subtype(ctx, Sel(x, A), T_INT, fuel=2000)
    assert not deep.proved


def test_judgment_reports_fuel_used():
    j = subtype(TypingCtx(), Fld(L, Fld(L, TOP)), Fld(L, TOP))
    assert j.fuel_used > 0


def test_trace_structure():
    ctx = ctx_with((x, TypeMem(A, T_INT, T_STR)))
    j = subtype(ctx, Sel(x, A), T_STR, trace=True)
    assert j.proved and j.trace is not None
    rules = [n.rule for n in j.trace.walk()]
    assert any("Sel" in r for r in rules)


def test_declarative_agrees_on_provable():
    ctx = ctx_with((x, TypeMem(A, T_INT, T_STR)))
    for s, u in [(Sel(x, A), T_STR), (T_INT, Sel(x, A)), (BOT, Sel(x, A))]:
        assert subtype_declarative(ctx, s, u, middles=trans_candidates(ctx)).proved


def test_declarative_trans_chain():
    # trans through an explicit middle: Int <: x.A and x.A <: Str, so Int <: Str
    ctx = ctx_with((x, TypeMem(A, T_INT, T_STR)))
    j = subtype_declarative(ctx, T_INT, T_STR, middles=(Sel(x, A),), trace=True)
    assert j.proved


def test_declarative_never_exceeds_algorithmic_on_closed_types():
    ctx = TypingCtx()
    tys = [TOP, BOT, T_INT, T_STR, And(T_INT, T_STR), Or(T_INT, T_STR), Fld(L, T_INT)]
    for s in tys:
        for u in tys:
            alg = subtype(ctx, s, u)
            dec = subtype_declarative(ctx, s, u)
            assert alg.proved == dec.proved, (s, u)


def test_collect_members_merges_labels():
    from minidot.judgment import Fuel

    sub = Subtyper(Fuel(1000))
    ty = And(TypeMem(A, T_INT, T_INT), TypeMem(A, T_STR, T_STR))
    members, cut = collect_members(TypingCtx(), ty, sub)
    assert not cut
    assert A in members
    assert len(members[A]) == 2


def test_good_bounds_accepts_and_rejects():
    ok = TypeMem(A, T_INT, TOP)
    assert good_bounds(TypingCtx(), ok).proved
    bad = TypeMem(A, TOP, BOT)
    assert not good_bounds(TypingCtx(), bad).proved


def test_good_bounds_intersection_conflict():
    # A: Str..Str combined with A: Int..Int needs Or(Str,Int) <: And(Str,Int): false
    ty = And(TypeMem(A, T_STR, T_STR), TypeMem(A, T_INT, T_INT))
    assert not good_bounds(TypingCtx(), ty).proved


def test_good_bounds_narrowing_breaks():
    subject = And(Sel(x, A), TypeMem(B, T_INT, T_INT))
    t_b = TypeMem(B, T_STR, T_STR)
    wide = ctx_with((x, TypeMem(A, BOT, TOP)))
    narrow = ctx_with((x, TypeMem(A, t_b, t_b)))
    assert good_bounds(wide, subject).proved
    assert not good_bounds(narrow, subject).proved


def test_typecheck_lambda_app():
    t = parse_term("(fun(x: Top) x) (fun(y: Top) y)")
    r = typecheck(Level.DSUB, TypingCtx(), t)
    assert r.judgment.proved
    assert r.ty == TOP


def test_typecheck_object_with_good_member():
    t = parse_term("new (s) { A = Top }")
    r = typecheck(Level.DOT, TypingCtx(), t)
    assert r.judgment.proved


def test_typecheck_object_with_bad_member_refuted():
    t = parse_term("new (s) { A : Top .. Bot }")
    r = typecheck(Level.DOT, TypingCtx(), t)
    assert r.judgment.refuted


def test_typecheck_field_selection():
    t = parse_term("(fun(x: { l : Top }) x.l) (new { l = fun(y: Top) y })")
    r = typecheck(Level.DSUB_BOT_AND_OR_REC, TypingCtx(), t)
    assert r.judgment.proved
    assert r.ty == TOP


def test_typecheck_method_invocation_via_self():
    t = parse_term("new (s) { m(x: Top): Top = s.m(x) }")
    r = typecheck(Level.DOT, TypingCtx(), t)
    assert r.judgment.proved


def test_typecheck_selection_needs_variable_subject():
    # member access unpacks a self binder only through a variable
    t = parse_term("(new (s) { m(x: Top): Top = x }).m (new (z) {})")
    r = typecheck(Level.DOT, TypingCtx(), t)
    assert not r.judgment.proved


def test_typecheck_elaborates_lambda_result():
    t = parse_term("fun(x: Top) x")
    r = typecheck(Level.DSUB, TypingCtx(), t)
    assert r.judgment.proved
    assert r.term is not None
    assert r.term.result is not None


def test_typecheck_ill_typed_app():
    t = parse_term("fun(x: Top) x x")
    r = typecheck(Level.DSUB, TypingCtx(), t)
    assert not r.judgment.proved


def test_typecheck_respects_expected_type():
    t = parse_term("fun(x: Top) x")
    want = DepFun(BOT, TOP)
    r = typecheck(Level.DSUB, TypingCtx(), t, expected=want)
    assert r.judgment.proved
    bad = DepFun(TOP, BOT)
    r2 = typecheck(Level.DSUB, TypingCtx(), t, expected=bad)
    assert not r2.judgment.proved


def test_typecheck_dependent_app_with_var():
    src = "(fun(y: { Type : Bot .. Top }) fun(z: y.Type) z) (typeval Top)"
    t = parse_term(src)
    r = typecheck(Level.DSUB_BOT, TypingCtx(), t)
    assert r.judgment.proved
