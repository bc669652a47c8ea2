"""Acceptance criteria for the workbench, one check per criterion.

Each test prints a single PASS/FAIL line so the whole gate reads as a
checklist under pytest -v -s.
"""

import random

import pytest

from minidot import mutations
from minidot.evaluator import EMPTY_ENV, Env, ObjValue, StoreTyping
from minidot.harness import (
    bridge_suite,
    cyclic_store_check,
    gallery_suite,
    load_bridge_corpus,
    pushback_suite,
    smallstep_agreement,
    soundness_suite,
    substitution_probe,
    totality_suite,
    transfer_suite,
)
from minidot.runtime_checker import AbsEnv, TyPair, dyn_subtype
from minidot.static_checker import typecheck
from minidot.syntax import (
    BOT,
    TOP,
    CMP_NS,
    CMP_SEG,
    Fld,
    Free,
    Label,
    Level,
    Obj,
    Sel,
    TERM_NS,
    TypeInit,
    TypeMem,
    TypeTag,
    TypingCtx,
    Var,
)


def report(name, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def test_criterion_1_soundness_suites():
    reps = [
        soundness_suite(Level.DSUB, 5, 20),
        soundness_suite(Level.DSUB_BOT_AND_OR_REC, 5, 30),
        soundness_suite(Level.DOT, 6, 30),
    ]
    bad = [v for r in reps for v in r.violations]
    detail = ", ".join(f"{r.name}={r.total}" for r in reps)
    report("soundness suites (well-typed terms never go wrong)",
           not bad and all(r.total > 0 for r in reps),
           detail + (f"; first: {bad[0]}" if bad else ""))


def test_criterion_2_totality_and_fuel_laws():
    bad = []
    totals = 0
    for level in Level:
        rep = totality_suite(level, 10_000, seed=int(level))
        totals += rep.total
        bad += rep.violations
    report("evaluator totality and fuel laws (10^4 random terms per level)",
           not bad and totals == 10_000 * len(Level),
           f"{totals} runs" + (f"; first: {bad[0]}" if bad else ""))


def test_criterion_3_bad_bounds_gallery():
    rep = gallery_suite()
    want = {"trans_proves": "proved", "empty_env": "refuted",
            "good_bounds_before": "proved", "good_bounds_after": "refuted",
            "bad_new": "refuted"}
    exact = all(rep.extras.get(k) == v for k, v in want.items())
    report("bad-bounds gallery (all three exhibits exact)",
           rep.ok and exact, str(rep.extras))


def test_criterion_4_pushback_equivalence():
    reps = [pushback_suite(Level.DSUB_BOT_AND_OR, max_ty_size=4),
            pushback_suite(Level.DOT, max_ty_size=4)]
    bad = [v for r in reps for v in r.violations]
    detail = ", ".join(f"{r.name}={r.total}" for r in reps)
    report("precision modes agree on all concrete queries",
           not bad, detail + (f"; first: {bad[0]}" if bad else ""))


def test_criterion_5_static_implies_dynamic():
    reps = [transfer_suite(Level.DSUB_BOT_AND_OR, max_ty_size=3),
            transfer_suite(Level.DOT, max_ty_size=3),
            substitution_probe(Level.DSUB, count=1000, seed=7)]
    bad = [v for r in reps for v in r.violations]
    detail = ", ".join(f"{r.name}={r.total}" for r in reps)
    report("static subtyping transfers to the dynamic relation",
           not bad, detail + (f"; first: {bad[0]}" if bad else ""))


def test_criterion_6_smallstep_agreement():
    rep = smallstep_agreement(max_size=6, step_limit=200, max_fuel=30)
    report("small-step and big-step outcome classes agree",
           rep.ok and rep.total > 0,
           f"{rep.total} terms" + (f"; first: {rep.violations[0]}"
                                   if rep.violations else ""))


def test_criterion_7_fsub_bridge():
    corpus = load_bridge_corpus()
    rep = bridge_suite(corpus, max_size=5)
    report("bounded polymorphism encodes faithfully",
           rep.ok and len(corpus) >= 20,
           f"corpus={len(corpus)}, total={rep.total}"
           + (f"; first: {rep.violations[0]}" if rep.violations else ""))


def test_criterion_8_mutable_references():
    rep = cyclic_store_check()
    mut = soundness_suite(Level.DSUB_BOT_AND_OR_REC_FIX_MUT, 5, 30)
    ok = rep.ok and rep.extras.get("value_type") == "proved" and mut.ok
    report("cyclic store stays well typed, store typing append-only",
           ok, f"mut suite={mut.total}"
           + (f"; first: {(rep.violations + mut.violations)[0]}"
              if not ok else ""))


def test_criterion_9_mutation_sensitivity(monkeypatch):
    A = Label("type", "A")
    L = Label("value", "l")
    x = Free(TERM_NS, "x")
    flips = {}

    bad_obj = Obj((TypeInit(A, TOP, BOT),))
    monkeypatch.setattr(mutations, "DISABLE_GOOD_BOUNDS", True)
    flips["good_bounds"] = typecheck(Level.DOT, TypingCtx(),
                                     bad_obj).judgment.proved
    monkeypatch.setattr(mutations, "DISABLE_GOOD_BOUNDS", False)

    v = ObjValue(EMPTY_ENV, (TypeInit(A, Fld(L, TOP), Fld(L, TOP)),))
    env = Env().extend(x, v)
    z = Free(CMP_NS, "z0")
    j = AbsEnv().extend(z, TyPair(EMPTY_ENV, TypeTag(BOT, TOP)))

    def unpack_lens():
        got = dyn_subtype(Level.DOT, StoreTyping(), j, TyPair(env, Sel(x, A)),
                          TyPair(EMPTY_ENV, Fld(L, TOP)), trace=True)
        return [n.meta["premise_j_len"] for n in got.trace.walk()
                if n.meta.get("unpack")]

    before = unpack_lens()
    monkeypatch.setattr(mutations, "DISABLE_UNPACK_GUARD", True)
    flips["unpack_guard"] = before == [0] and unpack_lens() == [len(j)]
    monkeypatch.setattr(mutations, "DISABLE_UNPACK_GUARD", False)

    zc = Free(CMP_NS, "z")
    ctx = (TypingCtx().extend(x, Sel(zc, A))
           .extend(zc, TypeMem(A, BOT, TOP), CMP_SEG))
    base = typecheck(Level.DOT, ctx, Var(x)).judgment.proved
    monkeypatch.setattr(mutations, "DISABLE_CTX_RESTRICT", True)
    flips["ctx_restrict"] = (not base
                             and typecheck(Level.DOT, ctx,
                                           Var(x)).judgment.proved)
    monkeypatch.setattr(mutations, "DISABLE_CTX_RESTRICT", False)

    report("every disabled guard flips at least one verdict",
           all(flips.values()), str(flips))
