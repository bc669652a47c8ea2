"""Tests for the checking suites and trace replay."""

import pytest

from minidot.harness import (
    CYCLIC_PROGRAM,
    bridge_suite,
    cyclic_store_check,
    gallery_suite,
    pushback_suite,
    replay_all,
    replay_trace,
    smallstep_agreement,
    soundness_suite,
    substitution_probe,
    totality_suite,
    transfer_suite,
)
from minidot.judgment import TraceNode
from minidot.parser import parse_term
from minidot.static_checker import subtype, subtype_declarative, trans_candidates
from minidot.syntax import (
    BOT,
    TOP,
    Fld,
    Free,
    Label,
    Level,
    Sel,
    TERM_NS,
    TypeMem,
    TypingCtx,
)

x = Free(TERM_NS, "x")
A = Label("type", "A")
T_INT = Fld(Label("value", "l1"), TOP)
T_STR = Fld(Label("value", "l2"), TOP)


def test_soundness_suite_small_is_clean():
    rep = soundness_suite(Level.DSUB, 4, 20)
    assert rep.ok, rep.violations[:3]
    assert rep.total > 0


def test_totality_suite_small_is_clean():
    rep = totality_suite(Level.DSUB_BOT_AND_OR_REC_FIX_MUT, 200, seed=3)
    assert rep.ok, rep.violations[:3]
    assert rep.total == 200


def test_gallery_expected_verdicts():
    rep = gallery_suite()
    assert rep.ok, rep.violations
    assert rep.extras["trans_proves"] == "proved"
    assert rep.extras["empty_env"] == "refuted"
    assert rep.extras["good_bounds_before"] == "proved"
    assert rep.extras["good_bounds_after"] == "refuted"
    assert rep.extras["bad_new"] == "refuted"


def test_pushback_suite_small_is_clean():
    rep = pushback_suite(Level.DSUB_BOT_AND_OR, max_ty_size=3)
    assert rep.ok, rep.violations[:3]
    assert rep.total > 0


def test_transfer_suite_small_is_clean():
    rep = transfer_suite(Level.DSUB_BOT_AND_OR, max_ty_size=2)
    assert rep.ok, rep.violations[:3]


def test_substitution_probe_small_is_clean():
    rep = substitution_probe(Level.DSUB, count=100, seed=11)
    assert rep.ok, rep.violations[:3]


def test_smallstep_agreement_small():
    rep = smallstep_agreement(max_size=5)
    assert rep.ok, rep.violations[:3]
    assert rep.extras["well_typed_count"] > 0


def test_bridge_suite_on_corpus():
    from minidot.harness import load_bridge_corpus

    programs = load_bridge_corpus()
    assert len(programs) >= 20
    rep = bridge_suite(programs, max_size=4)
    assert rep.ok, rep.violations[:3]


def test_cyclic_store_check():
    rep = cyclic_store_check()
    assert rep.ok, rep.violations
    assert rep.extras["value_type"] == "proved"
    parse_term(CYCLIC_PROGRAM)  # the exhibit stays parseable


def test_replay_accepts_real_traces():
    ctx = TypingCtx().extend(x, TypeMem(A, T_INT, T_STR))
    for s, u in [(Sel(x, A), T_STR), (T_INT, Sel(x, A)), (BOT, TOP),
                 (Fld(Label("value", "l1"), BOT), Fld(Label("value", "l1"), TOP))]:
        j = subtype(ctx, s, u, trace=True)
        assert j.proved
        assert replay_all(j.trace), (s, u)


def test_replay_accepts_declarative_trans():
    ctx = TypingCtx().extend(x, TypeMem(A, T_INT, T_STR))
    j = subtype_declarative(ctx, T_INT, T_STR, trans_candidates(ctx), trace=True)
    assert j.proved
    assert replay_all(j.trace)


def test_replay_rejects_corrupted_trace():
    ctx = TypingCtx().extend(x, TypeMem(A, T_INT, T_STR))
    j = subtype(ctx, Sel(x, A), T_STR, trace=True)
    assert replay_all(j.trace)

    def corrupt(node):
        meta = dict(node.meta)
        meta["rhs"] = T_INT  # claim a different conclusion
        return TraceNode(node.rule, node.subject, node.children, meta)

    assert not replay_all(corrupt(j.trace))
    bogus = TraceNode("NotARule", "junk", (), {"lhs": BOT, "rhs": TOP})
    assert not replay_trace(bogus)
