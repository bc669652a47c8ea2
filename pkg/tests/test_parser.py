"""Surface syntax round trips and level gating at parse time."""

import pytest

from minidot.parser import (GateError, ParseError, parse_program, parse_term,
                            parse_type, render_tm, render_ty)
from minidot.syntax import (And, Arrow, BOT, BindSelf, Bound, DepFun, Fld,
                            Lam, Level, Obj, Or, Rec, RefTy, Sel, TL, TOP,
                            TypeInit, TypeMem, TypeTag, TypeVal,
                            TYPE_TAG_LABEL, VL, Var, tv)


def test_parse_type_atoms():
    assert parse_type("Top") == TOP
    assert parse_type("Bot") == BOT
    assert parse_type("Top & Bot") == And(TOP, BOT)
    assert parse_type("Top | Bot | Top") == Or(Or(TOP, BOT), TOP)
    assert parse_type("Ref Top") == RefTy(TOP)


def test_parse_members():
    assert parse_type("{ A : Bot .. Top }") == TypeMem(TL("A"), BOT, TOP)
    assert parse_type("{ l : Top }") == Fld(VL("l"), TOP)
    assert parse_type("{ Type = Top }") == TypeTag(TOP, TOP)
    assert parse_type("{ Type <: Top }") == TypeTag(BOT, TOP)
    assert parse_type("{ Type : Bot .. Top }") == TypeTag(BOT, TOP)


def test_parse_binding_types():
    t = parse_type("all(x:Top) x.Type")
    assert t == DepFun(TOP, Sel(Bound(0), TYPE_TAG_LABEL))
    r = parse_type("rec(z) { A : Bot .. z.A }")
    assert r == BindSelf(TypeMem(TL("A"), BOT, Sel(Bound(0), TL("A"))))
    f = parse_type("Top -> Top -> Top")
    assert f == Arrow(TOP, Arrow(TOP, TOP))


def test_parse_terms():
    assert parse_term("fun(x:Top) x") == Lam(TOP, Var(Bound(0)))
    assert parse_term("typeval Top") == TypeVal(TOP)
    t = parse_term("new (s) { A : Bot .. Top }")
    assert t == Obj((TypeInit(TL("A"), BOT, TOP),))
    r = parse_term("new { l = typeval Top }")
    assert isinstance(r, Rec)


def test_application_is_left_associative():
    t = parse_term("f g h")
    assert render_tm(t) == "f g h"
    assert str(t) == "((f g) h)"


def test_gate_error_names_offender():
    with pytest.raises(GateError, match="And"):
        parse_type("Top & Top", Level.DSUB)
    with pytest.raises(GateError, match="Lam"):
        parse_term("fun(x:Top) x", Level.DOT)
    with pytest.raises(GateError, match="RefNew"):
        parse_term("ref (typeval Top)", Level.DSUB)


def test_program_macros():
    src = """
    # a tiny program
    type T = { Type <: Top }
    mk = fun(x:T) x
    mk (typeval Top)
    """
    t = parse_program(src, Level.DSUB_BOT)
    assert render_tm(t) == "(fun(x:{ Type <: Top }) x) (typeval (Top))"


def test_program_needs_content():
    with pytest.raises(ParseError):
        parse_program("# nothing here\n")


def test_render_parse_roundtrip_types():
    samples = [
        "Top", "Bot", "Top & Bot | Top", "{ A : Bot .. Top }",
        "{ l : Top & Top }", "all(x:{ Type <: Top }) x.Type",
        "rec(z) { A : Bot .. z.A } & { l : Top }",
        "m(x:Top):Top", "Ref { Type = Top }",
        "forall(X<:Top) X -> X",
    ]
    for src in samples:
        t = parse_type(src)
        assert parse_type(render_ty(t)) == t


def test_render_parse_roundtrip_terms():
    samples = [
        "fun(x:Top) x", "typeval Top",
        "fun(x:{ Type <: Top }) typeval Bot",
        "new (s) { A : Bot .. Top ; m(y:s.A):Top = y }",
        "fix(x:Top) x", "fun(c:Ref Top) (c := !c)",
        "tfun(X<:Top) fun(x:X) x",
        "new { l = fun(x:Top) x }",
    ]
    for src in samples:
        t = parse_term(src)
        assert parse_term(render_tm(t)) == t


def test_comments_and_blank_lines():
    src = "\n# comment only\n\nfun(x:Top) x  # trailing\n"
    assert parse_program(src) == Lam(TOP, Var(Bound(0)))
