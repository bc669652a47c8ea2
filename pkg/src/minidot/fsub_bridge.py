"""Translation from the F-sub surface into the path-dependent core.

A type variable becomes a term variable holding a first-class type;
bounded quantification becomes a dependent function over a type tag, and
type application passes the type as a value.  The image lands in the
level with Bot (tags need a bottom lower bound).
"""

from __future__ import annotations

from .syntax import (AllSub, App, Arrow, BOT, Bound, DepFun, FVar, Free,
                     Lam, Level, Sel, StructuralError, Tm, Top, Ty, TyApp,
                     TyLam, TypeTag, TypeVal, TYPE_TAG_LABEL, Var, shift_ty)

TARGET_LEVEL = Level.DSUB_BOT


def encode_ty(t: Ty) -> Ty:
    """Translate an F-sub type; binder indices are preserved one-for-one."""
    if isinstance(t, Top):
        return t
    if isinstance(t, FVar):
        return Sel(t.var, TYPE_TAG_LABEL)
    if isinstance(t, Arrow):
        # The target binds a term parameter where the source bound
        # nothing, so indices in the result shift under the new binder.
        return DepFun(encode_ty(t.param), shift_ty(encode_ty(t.result)))
    if isinstance(t, AllSub):
        return DepFun(TypeTag(BOT, encode_ty(t.bound)), encode_ty(t.body))
    raise StructuralError(f"not an F-sub type: {t!r}")


def encode_tm(t: Tm) -> Tm:
    """Translate an F-sub term into the dependent core."""
    if isinstance(t, Var):
        return t
    if isinstance(t, Lam):
        return Lam(encode_ty(t.annot), encode_tm(t.body))
    if isinstance(t, App):
        return App(encode_tm(t.fn), encode_tm(t.arg))
    if isinstance(t, TyLam):
        return Lam(TypeTag(BOT, encode_ty(t.bound)), encode_tm(t.body))
    if isinstance(t, TyApp):
        return App(encode_tm(t.fn), TypeVal(encode_ty(t.ty)))
    raise StructuralError(f"not an F-sub term: {t!r}")
