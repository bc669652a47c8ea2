"""Tests for the dynamic subtype and value typing checker."""

import pytest

from minidot.evaluator import (
    Closure,
    EMPTY_ENV,
    Env,
    LocValue,
    ObjValue,
    StoreTyping,
    TyClosure,
    ValRes,
    evaluate,
)
from minidot.parser import parse_term, parse_type
from minidot.runtime_checker import (
    AbsEnv,
    EMPTY_J,
    Mode,
    TyPair,
    consistent_env,
    dyn_subtype,
    value_type,
)
from minidot.syntax import (
    BOT,
    TOP,
    And,
    CMP_NS,
    DepFun,
    Fld,
    Free,
    Label,
    Level,
    Or,
    Sel,
    TERM_NS,
    TypeMem,
    TypeTag,
    TypingCtx,
)

A = Label("type", "A")
L = Label("value", "l")
T_INT = Fld(Label("value", "l1"), TOP)
T_STR = Fld(Label("value", "l2"), TOP)

x = Free(TERM_NS, "x")


def closed(ty):
    return TyPair(EMPTY_ENV, ty)


def sub(p1, p2, level=Level.DOT, styping=None, j=EMPTY_J, mode=Mode.IMPRECISE):
    return dyn_subtype(level, styping or StoreTyping(), j, p1, p2, mode=mode)


def eval_value(src, level=Level.DOT, fuel=100):
    res, run = evaluate(level, fuel, parse_term(src))
    assert isinstance(res, ValRes)
    return res.value, run


def test_lattice_on_closed_types():
    assert sub(closed(BOT), closed(TOP)).proved
    assert sub(closed(T_INT), closed(Or(T_INT, T_STR))).proved
    assert sub(closed(And(T_INT, T_STR)), closed(T_INT)).proved
    assert sub(closed(TOP), closed(BOT)).refuted


def test_modes_agree_on_simple_queries():
    queries = [
        (closed(BOT), closed(TOP)),
        (closed(T_INT), closed(TOP)),
        (closed(TOP), closed(T_INT)),
        (closed(And(T_INT, T_STR)), closed(Or(T_STR, T_INT))),
    ]
    for p1, p2 in queries:
        outcomes = {sub(p1, p2, mode=m).verdict for m in Mode}
        assert len(outcomes) == 1, (p1, p2, outcomes)


def test_sel_resolves_through_concrete_tyclosure():
    # x holds a type value carrying T_INT; x.Type behaves like T_INT
    v, _ = eval_value("typeval Top", Level.DSUB)
    env = Env().extend(x, v)
    p_sel = TyPair(env, parse_type("x.Type"))
    assert sub(p_sel, closed(TOP), level=Level.DSUB).proved
    assert sub(closed(BOT), p_sel, level=Level.DSUB).proved
    # the tag's payload flows both ways
    assert sub(p_sel, closed(TOP)).proved


def test_sel_reflexive_same_value_different_envs():
    v, _ = eval_value("typeval Bot", Level.DSUB)
    y = Free(TERM_NS, "y")
    env1 = Env().extend(x, v)
    env2 = Env().extend(y, v)
    p1 = TyPair(env1, parse_type("x.Type"))
    p2 = TyPair(env2, parse_type("y.Type"))
    # same underlying value object, so the selections coincide
    assert sub(p1, p2, level=Level.DSUB).proved


def test_sel_through_object_member():
    v, _ = eval_value("new (s) { A = Top }", Level.DOT)
    env = Env().extend(x, v)
    p_sel = TyPair(env, parse_type("x.A"))
    assert sub(p_sel, closed(TOP)).proved
    assert sub(closed(TOP), p_sel).proved  # A = Top exactly


def test_hypothetical_variables_use_their_bounds():
    z = Free(CMP_NS, "z0")
    j = AbsEnv().extend(z, closed(TypeTag(BOT, T_INT)))
    p = TyPair(EMPTY_ENV, Sel(z, Label("type", "Type")))
    assert sub(p, closed(T_INT), j=j).proved
    assert not sub(p, closed(T_STR), j=j).proved


def test_structural_function_rule():
    f1 = closed(DepFun(TOP, T_INT))
    f2 = closed(DepFun(T_INT, TOP))
    assert sub(f1, f2, level=Level.DSUB).proved
    assert sub(f2, f1, level=Level.DSUB).refuted


def test_value_type_closure():
    v, run = eval_value("fun(y: Top) y", Level.DSUB)
    j = value_type(Level.DSUB, run.styping, v, EMPTY_ENV, DepFun(TOP, TOP))
    assert j.proved
    j2 = value_type(Level.DSUB, run.styping, v, EMPTY_ENV, DepFun(TOP, BOT))
    assert not j2.proved


def test_value_type_top_for_everything():
    for src, lvl in [("fun(y: Top) y", Level.DSUB),
                     ("typeval Top", Level.DSUB),
                     ("new (s) {}", Level.DOT)]:
        v, run = eval_value(src, lvl)
        assert value_type(lvl, run.styping, v, EMPTY_ENV, TOP).proved


def test_value_type_tyclosure():
    v, run = eval_value("typeval Top", Level.DSUB)
    assert value_type(Level.DSUB, run.styping, v, EMPTY_ENV,
                      TypeTag(BOT, TOP)).proved
    assert not value_type(Level.DSUB, run.styping, v, EMPTY_ENV,
                          TypeTag(BOT, BOT)).proved


def test_value_type_object():
    v, run = eval_value("new (s) { A = Top; m(y: Top): Top = y }", Level.DOT)
    want = parse_type("{ A : Bot .. Top }")
    assert value_type(Level.DOT, run.styping, v, EMPTY_ENV, want).proved
    want_m = parse_type("m(y: Top): Top")
    assert value_type(Level.DOT, run.styping, v, EMPTY_ENV, want_m).proved
    bad = parse_type("{ A : Top .. Bot }")
    assert not value_type(Level.DOT, run.styping, v, EMPTY_ENV, bad).proved


def test_value_type_location():
    from minidot.static_checker import typecheck

    lvl = Level.DSUB_BOT_AND_OR_REC_FIX_MUT
    tr = typecheck(lvl, TypingCtx(), parse_term("ref (fun(y: Top) y)"))
    assert tr.judgment.proved
    res, run = evaluate(lvl, 100, tr.term)
    v = res.value
    assert isinstance(v, LocValue)
    assert run.styping.lookup(v.loc) is not None
    got = value_type(lvl, run.styping, v, EMPTY_ENV, parse_type("Ref (all(y:Top)Top)"))
    assert got.proved


def test_value_type_location_unelaborated_falls_back_to_tag():
    # without elaboration the slot type defaults to a coarse dynamic tag
    lvl = Level.DSUB_BOT_AND_OR_REC_FIX_MUT
    v, run = eval_value("ref (fun(y: Top) y)", lvl)
    assert isinstance(v, LocValue)
    assert value_type(lvl, run.styping, v, EMPTY_ENV, parse_type("Ref Top")).proved


def test_value_type_wrong_shape_refuted():
    v, run = eval_value("fun(y: Top) y", Level.DSUB)
    assert not value_type(Level.DSUB, run.styping, v, EMPTY_ENV,
                          TypeTag(BOT, TOP)).proved


def test_consistent_env():
    v, run = eval_value("fun(y: Top) y", Level.DSUB)
    ctx = TypingCtx().extend(x, DepFun(TOP, TOP))
    env = Env().extend(x, v)
    assert consistent_env(Level.DSUB, run.styping, ctx, env, EMPTY_J).proved
    bad_ctx = TypingCtx().extend(x, TypeTag(BOT, TOP))
    assert not consistent_env(Level.DSUB, run.styping, bad_ctx, env, EMPTY_J).proved


def test_invertible_mode_structural_first():
    # invertible mode still proves structural queries under hypotheses
    z = Free(CMP_NS, "z0")
    j = AbsEnv().extend(z, closed(TypeTag(BOT, TOP)))
    p1 = closed(DepFun(TOP, T_INT))
    p2 = closed(DepFun(T_INT, TOP))
    assert sub(p1, p2, level=Level.DSUB, j=j, mode=Mode.INVERTIBLE).proved


def test_unpack_premises_checked_under_empty_hypotheses():
    # unpacking an object discards outer hypotheses in its premises
    v, run = eval_value("new (s) { A = { l1 : Top } }", Level.DOT)
    env = Env().extend(x, v)
    z = Free(CMP_NS, "z0")
    j = AbsEnv().extend(z, closed(TypeTag(BOT, TOP)))
    got = dyn_subtype(Level.DOT, run.styping, j,
                      TyPair(env, parse_type("x.A")), closed(T_INT),
                      trace=True)
    assert got.proved
    seen = [n.meta for n in got.trace.walk() if n.meta.get("unpack")]
    assert seen and all(m.get("premise_j_len") == 0 for m in seen)


def test_fuel_exhaustion_unknown():
    v, run = eval_value("new (s) { A = Top }", Level.DOT)
    env = Env().extend(x, v)
    got = dyn_subtype(Level.DOT, run.styping, EMPTY_J,
                      TyPair(env, parse_type("x.A")), closed(T_INT), fuel=1)
    assert got.unknown or got.refuted
