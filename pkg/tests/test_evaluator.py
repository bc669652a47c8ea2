"""Tests for the fuel indexed definitional interpreter."""

import pytest

from minidot.evaluator import (
    Closure,
    EMPTY_ENV,
    ErrorRes,
    EvalRun,
    LocValue,
    ObjValue,
    Timeout,
    TyClosure,
    ValRes,
    evaluate,
)
from minidot.parser import parse_program, parse_term
from minidot.syntax import Level, TOP


def run(src, level=Level.DOT, fuel=50):
    res, _ = evaluate(level, fuel, parse_term(src))
    return res


def test_lambda_is_a_value():
    res = run("fun(x: Top) x", Level.DSUB)
    assert isinstance(res, ValRes)
    assert isinstance(res.value, Closure)


def test_identity_application():
    res = run("(fun(x: Top) x) (fun(y: Top) y)", Level.DSUB)
    assert isinstance(res, ValRes)
    assert isinstance(res.value, Closure)


def test_typeval_is_a_value():
    res = run("typeval Top", Level.DSUB)
    assert isinstance(res, ValRes)
    assert isinstance(res.value, TyClosure)
    assert res.value.ty == TOP


def test_zero_fuel_times_out():
    res = run("fun(x: Top) x", Level.DSUB, fuel=0)
    assert isinstance(res, Timeout)


def test_fuel_monotone_on_results():
    # once a term finishes at fuel n it gives the same kind of result for m > n
    src = "(fun(x: Top) x) ((fun(y: Top) y) (fun(z: Top) z))"
    kinds = []
    for fuel in range(0, 20):
        res = run(src, Level.DSUB, fuel=fuel)
        kinds.append(type(res).__name__)
    settled = [k for k in kinds if k != "Timeout"]
    assert settled and all(k == settled[0] for k in settled)
    # timeouts only appear as a prefix
    first_done = kinds.index(settled[0])
    assert all(k == "Timeout" for k in kinds[:first_done])


def test_apply_non_function_is_error():
    res = run("(typeval Top) (typeval Top)", Level.DSUB)
    assert isinstance(res, ErrorRes)


def test_unbound_variable_is_error():
    res = run("zxq", Level.DSUB)
    assert isinstance(res, ErrorRes)


def test_divergence_times_out():
    src = ("(fun(f: all(x:Top)Top) f (fun(y: Top) y)) "
           "(fix(g: all(x:Top)Top) fun(x: Top) g x)")
    res = run(src, Level.DSUB_BOT_AND_OR_REC_FIX, fuel=100)
    assert isinstance(res, Timeout)


def test_fix_unrolls_when_forced_through_a_variable():
    src = ("(fun(f: all(x:Top)Top) f (fun(y: Top) y)) "
           "(fix(g: all(x:Top)Top) fun(x: Top) x)")
    res = run(src, Level.DSUB_BOT_AND_OR_REC_FIX)
    assert isinstance(res, ValRes)
    assert isinstance(res.value, Closure)


def test_fix_literal_is_a_value_but_not_directly_applicable():
    src = "fix(g: all(x:Top)Top) fun(x: Top) x"
    res = run(src, Level.DSUB_BOT_AND_OR_REC_FIX)
    assert isinstance(res, ValRes)
    direct = run(f"({src}) (fun(y: Top) y)", Level.DSUB_BOT_AND_OR_REC_FIX)
    assert isinstance(direct, ErrorRes)


def test_object_fields_are_lazy():
    # the bad field body is never forced when we only call m
    src = "(new (s) { l = s.nope; m(x: Top): Top = x }).m(new (z) {})"
    t = parse_term(src)
    res, _ = evaluate(Level.DOT, 50, t)
    assert isinstance(res, ValRes)
    bad = parse_term("(new (s) { l = s.nope }).l")
    res2, _ = evaluate(Level.DOT, 50, bad)
    assert isinstance(res2, ErrorRes)


def test_object_value_shape():
    res = run("new (s) { m(x: Top): Top = x }", Level.DOT)
    assert isinstance(res, ValRes)
    assert isinstance(res.value, ObjValue)


def test_method_sees_self():
    # s.m(x) recurses through self, so it must diverge rather than error
    src = "new (s) { m(x: Top): Top = s.m(x) }"
    t = parse_term(src)
    res, _ = evaluate(Level.DOT, 10, t)
    assert isinstance(res, ValRes)


def test_field_selection_evaluates():
    src = "(fun(x: { l : Top }) x.l) (new { l = fun(y: Top) y })"
    res = run(src, Level.DSUB_BOT_AND_OR_REC)
    assert isinstance(res, ValRes)
    assert isinstance(res.value, Closure)


def test_missing_field_is_error():
    src = "(fun(x: Top) x.nope) (new { l = fun(y: Top) y })"
    res = run(src, Level.DSUB_BOT_AND_OR_REC)
    assert isinstance(res, ErrorRes)


def test_ref_cells_round_trip():
    level = Level.DSUB_BOT_AND_OR_REC_FIX_MUT
    src = "(fun(c: Ref (all(x:Top)Top)) !c) (ref (fun(x: Top) x))"
    res = run(src, level)
    assert isinstance(res, ValRes)
    assert isinstance(res.value, Closure)


def test_assignment_returns_new_value():
    level = Level.DSUB_BOT_AND_OR_REC_FIX_MUT
    src = ("(fun(c: Ref (all(x:Top)Top)) "
           "(fun(u: all(x:Top)Top) !c) (c := fun(y: Top) y y)) "
           "(ref (fun(x: Top) x))")
    res = run(src, level)
    assert isinstance(res, ValRes)


def test_store_typing_grows_append_only():
    level = Level.DSUB_BOT_AND_OR_REC_FIX_MUT
    t = parse_term("ref (fun(x: Top) x)")
    res, run1 = evaluate(level, 50, t)
    assert isinstance(res, ValRes)
    assert isinstance(res.value, LocValue)
    snap = run1.styping.snapshot()
    t2 = parse_term("ref (fun(x: Top) x)")
    res2, run2 = evaluate(level, 50, t2, run=run1)
    assert isinstance(res2, ValRes)
    assert run2.styping.extends(snap)
    assert res2.value.loc != res.value.loc


def test_deref_non_location_is_error():
    level = Level.DSUB_BOT_AND_OR_REC_FIX_MUT
    res = run("!(fun(x: Top) x)", level)
    assert isinstance(res, ErrorRes)


def test_program_macros_evaluate():
    src = "id = fun(x: Top) x\nid id\n"
    level, t = Level.DSUB, parse_program(src)
    res, _ = evaluate(level, 50, t)
    assert isinstance(res, ValRes)
