"""Core syntax: binders, gates, contexts."""

import pytest
from hypothesis import given, strategies as st

from minidot.syntax import (And, App, Arrow, BOT, BindSelf, Bound, DepFun,
                            Deref, Fld, Free, Lam, Level, Obj, Or, Rec,
                            RefNew, RefTy, Sel, SelField, StructuralError,
                            TL, TOP, TyLam, TypeInit, TypeMem, TypeTag,
                            TypeVal, TYPE_TAG_LABEL, TypingCtx, VL, Var,
                            close_ty, close_tm, ctx_restrict, cv, fv_ty,
                            gate_offender, gate_term, gate_type,
                            locally_closed_ty, open_ty, open_tm,
                            parse_level, shift_ty, tm_size, ty_size, tv, wf)

x = tv("x")
y = tv("y")


def test_parse_level_names():
    assert parse_level("fsub") == Level.FSUB
    assert parse_level("dsub") == Level.DSUB
    assert parse_level("DOT") == Level.DOT
    assert parse_level("dsub_bot_and_or") == Level.DSUB_BOT_AND_OR
    with pytest.raises(StructuralError):
        parse_level("dotty")


def test_open_close_roundtrip_simple():
    t = DepFun(TOP, Sel(Bound(0), TYPE_TAG_LABEL))
    opened = open_ty(t.result, x)
    assert opened == Sel(x, TYPE_TAG_LABEL)
    assert close_ty(opened, x) == t.result


def test_open_under_nested_binders():
    # in the function result the outer binder sits one index higher
    body = DepFun(Sel(Bound(0), TL("A")), Sel(Bound(1), TL("A")))
    t = BindSelf(body)
    opened = open_ty(t.body, x, 0)
    assert opened == DepFun(Sel(x, TL("A")), Sel(x, TL("A")))
    inner = open_ty(opened.result, y, 0)
    assert inner == Sel(x, TL("A"))


def test_locally_closed():
    assert locally_closed_ty(BindSelf(Sel(Bound(0), TL("A"))))
    assert not locally_closed_ty(Sel(Bound(0), TL("A")))
    assert locally_closed_ty(TOP)


def test_shift_ty():
    t = DepFun(Sel(Bound(0), TYPE_TAG_LABEL), Sel(Bound(1), TYPE_TAG_LABEL))
    s = shift_ty(t)
    # the bound parameter (inside its own binder) is untouched,
    # the dangling index moves up
    assert s == DepFun(Sel(Bound(1), TYPE_TAG_LABEL),
                       Sel(Bound(2), TYPE_TAG_LABEL))


simple_tys = st.sampled_from([
    TOP, BOT, TypeTag(BOT, TOP), Fld(VL("l"), TOP),
    And(TOP, BOT), DepFun(TOP, TOP),
])


@given(simple_tys, simple_tys)
def test_close_open_identity(a, b):
    t = DepFun(a, close_ty(b, x))
    assert open_ty(close_ty(b, x), x) == b
    assert t == DepFun(a, close_ty(open_ty(close_ty(b, x), x), x))


@given(simple_tys)
def test_fv_after_close_is_gone(t):
    assert x not in fv_ty(close_ty(t, x))


def test_gate_type_examples():
    assert gate_type(Level.DOT, BOT)
    assert not gate_type(Level.DSUB, BOT)
    assert not gate_type(Level.DSUB, And(TOP, TOP))
    assert gate_type(Level.DSUB_BOT_AND_OR, And(TOP, TOP))
    assert gate_type(Level.DSUB, TypeTag(TOP, TOP))       # lo == hi
    assert not gate_type(Level.DSUB, TypeTag(DepFun(TOP, TOP), TOP))
    assert gate_type(Level.DSUB_BOT, TypeTag(TOP, BOT))   # any bounds
    assert not gate_type(Level.DOT, DepFun(TOP, TOP))
    assert gate_type(Level.DOT, TypeMem(TL("A"), BOT, TOP))
    assert not gate_type(Level.DSUB, TypeMem(TL("A"), BOT, TOP))
    assert gate_type(Level.DSUB_BOT_AND_OR_REC_FIX_MUT, RefTy(TOP))
    assert not gate_type(Level.DOT, RefTy(TOP))


def test_gate_term_examples():
    assert not gate_term(Level.DOT, Lam(TOP, Var(Bound(0))))
    assert gate_term(Level.DSUB, Lam(TOP, Var(Bound(0))))
    assert not gate_term(Level.DSUB, TyLam(TOP, Var(Bound(0))))
    assert gate_term(Level.FSUB, TyLam(TOP, Var(Bound(0))))
    assert gate_term(Level.DSUB_BOT_AND_OR_REC_FIX_MUT,
                     RefNew(TypeVal(TOP)))
    assert not gate_term(Level.DSUB_BOT_AND_OR_REC, RefNew(TypeVal(TOP)))
    assert gate_term(Level.DOT, Obj((TypeInit(TL("A"), BOT, TOP),)))
    assert not gate_term(Level.DSUB, Obj((TypeInit(TL("A"), BOT, TOP),)))


def test_gate_monotone_along_dsub_chain():
    samples = [
        Lam(TOP, Var(Bound(0))),
        TypeVal(TOP),
        Rec((),),
        SelField(TypeVal(TOP), VL("l")),
        Deref(TypeVal(TOP)),
    ]
    chain = [Level.DSUB, Level.DSUB_BOT, Level.DSUB_BOT_AND_OR,
             Level.DSUB_BOT_AND_OR_REC, Level.DSUB_BOT_AND_OR_REC_FIX,
             Level.DSUB_BOT_AND_OR_REC_FIX_MUT]
    for t in samples:
        admitted = [gate_term(lv, t) for lv in chain]
        # once a construct is admitted it stays admitted up the chain
        assert admitted == sorted(admitted)


def test_gate_offender_names_the_constructor():
    assert gate_offender(Level.DSUB, And(TOP, TOP)) == "And"
    assert gate_offender(Level.DSUB,
                         Lam(And(TOP, TOP), Var(Bound(0)))) == "And"
    assert gate_offender(Level.DOT, BOT) is None


def test_ctx_restrict_drops_later_cmp_entries():
    z = cv("z")
    w = cv("w")
    ctx = (TypingCtx().extend(x, TOP).extend(z, TOP, "cmp")
           .extend(y, TOP).extend(w, TOP, "cmp"))
    r = ctx_restrict(ctx, x)
    assert [b.var for b in r.entries] == [x, y]
    r2 = ctx_restrict(ctx, y)
    assert [b.var for b in r2.entries] == [x, z, y]


def test_ctx_restrict_unbound_is_an_error():
    with pytest.raises(StructuralError):
        ctx_restrict(TypingCtx(), x)


def test_wf_requires_bound_names():
    ctx = TypingCtx().extend(x, TypeMem(TL("A"), BOT, TOP))
    assert wf(ctx, Sel(x, TL("A")))
    assert not wf(ctx, Sel(y, TL("A")))
    assert not wf(ctx, Sel(Bound(0), TL("A")))


def test_sizes():
    assert tm_size(Var(x)) == 1
    assert tm_size(Lam(TOP, Var(Bound(0)))) == 3
    assert tm_size(App(Var(x), Var(y))) == 3
    assert tm_size(Obj((TypeInit(TL("A"), BOT, TOP),))) == 3
    assert ty_size(And(TOP, BOT)) == 3


def test_open_tm_hits_annotations():
    # both the annotation and the body see the outer binder being opened
    t = Lam(Sel(Bound(0), TL("A")), Var(Bound(1)))
    opened = open_tm(t, x)
    assert opened == Lam(Sel(x, TL("A")), Var(x))
    assert close_tm(opened, x) == t
