"""Tests for the term and type enumerators and the random generator."""

import random

from minidot.generation import (
    enum_closed_terms,
    enum_types,
    enum_well_typed,
    random_term,
)
from minidot.static_checker import typecheck
from minidot.syntax import (
    Free,
    Level,
    TERM_NS,
    TypingCtx,
    fv_tm,
    gate_term,
    gate_type,
    locally_closed_ty,
    tm_size,
)

x = Free(TERM_NS, "x")


def test_enumerated_terms_are_closed_and_gated():
    for level in (Level.FSUB, Level.DSUB, Level.DOT):
        for t in enum_closed_terms(level, 4):
            assert not fv_tm(t), t
            assert gate_term(level, t), t


def test_enumerated_terms_respect_size_bound():
    for t in enum_closed_terms(Level.DSUB, 5):
        assert tm_size(t) <= 5


def test_enumeration_is_deterministic():
    a = enum_closed_terms(Level.DSUB, 5)
    b = enum_closed_terms(Level.DSUB, 5)
    assert a == b


def test_closed_term_golden_counts():
    assert len(enum_closed_terms(Level.FSUB, 5)) == 56
    assert len(enum_closed_terms(Level.DSUB, 5)) == 36
    assert len(enum_closed_terms(Level.DSUB_BOT_AND_OR_REC, 5)) == 274
    assert len(enum_closed_terms(Level.DOT, 6)) == 336


def test_well_typed_golden_counts():
    assert len(enum_well_typed(Level.DSUB, 5)) == 30
    assert len(enum_well_typed(Level.DSUB, 6)) == 53
    assert len(enum_well_typed(Level.DSUB_BOT_AND_OR_REC, 5)) == 179
    assert len(enum_well_typed(Level.DOT, 6)) == 90


def test_well_typed_entries_actually_typecheck():
    for t, ty, elab in enum_well_typed(Level.DSUB, 5):
        r = typecheck(Level.DSUB, TypingCtx(), t)
        assert r.judgment.proved
        assert r.ty == ty


def test_enum_types_golden_counts():
    assert len(enum_types(Level.DSUB_BOT_AND_OR, 3, (x,))) == 39
    assert len(enum_types(Level.DSUB_BOT_AND_OR, 4, (x,))) == 39
    assert len(enum_types(Level.DOT, 3, (x,))) == 45
    assert len(enum_types(Level.DOT, 4, (x,))) == 156


def test_enum_types_are_gated_and_locally_closed():
    for ty in enum_types(Level.DOT, 3, (x,)):
        assert gate_type(Level.DOT, ty), ty
        assert locally_closed_ty(ty), ty


def test_random_terms_are_closed_gated_and_seeded():
    for level in (Level.DSUB, Level.DSUB_BOT_AND_OR_REC_FIX_MUT, Level.DOT):
        rng = random.Random(42)
        terms = [random_term(level, rng) for _ in range(200)]
        for t in terms:
            assert not fv_tm(t), t
            assert gate_term(level, t), t
        rng2 = random.Random(42)
        assert terms == [random_term(level, rng2) for _ in range(200)]
