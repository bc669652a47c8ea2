"""JSON encoding of syntax, values, and checker inputs.

Used by the CLI's rtcheck path, which accepts a serialized bundle of
runtime environment, hypotheses, store typing, and the two types.
"""

from __future__ import annotations

from typing import Any, Dict

from .evaluator import (Closure, Env, FixThunk, LocValue, ObjValue,
                        StoreTyping, TyAbsClosure, TyClosure, Value)
from .runtime_checker import AbsEnv, TyPair
from .syntax import (And, AllSub, Arrow, Assign, BOT, BindSelf, Bot, Bound,
                     DepFun, Deref, FVar, FieldInit, Fix, Fld, Free, Invoke,
                     Label, Lam, Loc, Method, MethodInit, Obj, Or, Rec,
                     RefNew, RefTy, Sel, SelField, StructuralError, TOP, Tm,
                     Top, Ty, TyApp, TyLam, TypeInit, TypeMem, TypeTag,
                     TypeVal, Var, App)


def ref_to_json(v) -> Any:
    if isinstance(v, Bound):
        return {"bound": v.idx}
    return {"free": [v.ns, v.name]}


def ref_from_json(d) -> Any:
    if "bound" in d:
        return Bound(d["bound"])
    ns, name = d["free"]
    return Free(ns, name)


def label_to_json(l: Label):
    return [l.kind, l.name]


def label_from_json(d) -> Label:
    return Label(d[0], d[1])


_TY_SIMPLE = {"Top": Top, "Bot": Bot}


def ty_to_json(t: Ty) -> Dict:
    if isinstance(t, Top):
        return {"k": "Top"}
    if isinstance(t, Bot):
        return {"k": "Bot"}
    if isinstance(t, And):
        return {"k": "And", "l": ty_to_json(t.left), "r": ty_to_json(t.right)}
    if isinstance(t, Or):
        return {"k": "Or", "l": ty_to_json(t.left), "r": ty_to_json(t.right)}
    if isinstance(t, TypeMem):
        return {"k": "Mem", "label": label_to_json(t.label),
                "lo": ty_to_json(t.lo), "hi": ty_to_json(t.hi)}
    if isinstance(t, Fld):
        return {"k": "Fld", "label": label_to_json(t.label),
                "ty": ty_to_json(t.ty)}
    if isinstance(t, Method):
        return {"k": "Method", "label": label_to_json(t.label),
                "param": ty_to_json(t.param), "result": ty_to_json(t.result)}
    if isinstance(t, Sel):
        return {"k": "Sel", "var": ref_to_json(t.var),
                "label": label_to_json(t.label)}
    if isinstance(t, BindSelf):
        return {"k": "Bind", "body": ty_to_json(t.body)}
    if isinstance(t, DepFun):
        return {"k": "DepFun", "param": ty_to_json(t.param),
                "result": ty_to_json(t.result)}
    if isinstance(t, TypeTag):
        return {"k": "Tag", "lo": ty_to_json(t.lo), "hi": ty_to_json(t.hi)}
    if isinstance(t, RefTy):
        return {"k": "Ref", "ty": ty_to_json(t.ty)}
    if isinstance(t, FVar):
        return {"k": "FVar", "var": ref_to_json(t.var)}
    if isinstance(t, AllSub):
        return {"k": "All", "bound": ty_to_json(t.bound),
                "body": ty_to_json(t.body)}
    if isinstance(t, Arrow):
        return {"k": "Arrow", "param": ty_to_json(t.param),
                "result": ty_to_json(t.result)}
    raise StructuralError(f"ty_to_json: {t!r}")


def ty_from_json(d: Dict) -> Ty:
    k = d["k"]
    if k == "Top":
        return TOP
    if k == "Bot":
        return BOT
    if k == "And":
        return And(ty_from_json(d["l"]), ty_from_json(d["r"]))
    if k == "Or":
        return Or(ty_from_json(d["l"]), ty_from_json(d["r"]))
    if k == "Mem":
        return TypeMem(label_from_json(d["label"]), ty_from_json(d["lo"]),
                       ty_from_json(d["hi"]))
    if k == "Fld":
        return Fld(label_from_json(d["label"]), ty_from_json(d["ty"]))
    if k == "Method":
        return Method(label_from_json(d["label"]), ty_from_json(d["param"]),
                      ty_from_json(d["result"]))
    if k == "Sel":
        return Sel(ref_from_json(d["var"]), label_from_json(d["label"]))
    if k == "Bind":
        return BindSelf(ty_from_json(d["body"]))
    if k == "DepFun":
        return DepFun(ty_from_json(d["param"]), ty_from_json(d["result"]))
    if k == "Tag":
        return TypeTag(ty_from_json(d["lo"]), ty_from_json(d["hi"]))
    if k == "Ref":
        return RefTy(ty_from_json(d["ty"]))
    if k == "FVar":
        return FVar(ref_from_json(d["var"]))
    if k == "All":
        return AllSub(ty_from_json(d["bound"]), ty_from_json(d["body"]))
    if k == "Arrow":
        return Arrow(ty_from_json(d["param"]), ty_from_json(d["result"]))
    raise StructuralError(f"ty_from_json: {k!r}")


def tm_to_json(t: Tm) -> Dict:
    if isinstance(t, Var):
        return {"k": "Var", "var": ref_to_json(t.var)}
    if isinstance(t, Lam):
        d = {"k": "Lam", "annot": ty_to_json(t.annot),
             "body": tm_to_json(t.body)}
        if t.result is not None:
            d["result"] = ty_to_json(t.result)
        return d
    if isinstance(t, App):
        return {"k": "App", "fn": tm_to_json(t.fn), "arg": tm_to_json(t.arg)}
    if isinstance(t, TyLam):
        return {"k": "TyLam", "bound": ty_to_json(t.bound),
                "body": tm_to_json(t.body)}
    if isinstance(t, TyApp):
        return {"k": "TyApp", "fn": tm_to_json(t.fn), "ty": ty_to_json(t.ty)}
    if isinstance(t, TypeVal):
        return {"k": "TypeVal", "ty": ty_to_json(t.ty)}
    if isinstance(t, Rec):
        return {"k": "Rec", "decls": [decl_to_json(d) for d in t.decls]}
    if isinstance(t, Obj):
        return {"k": "Obj", "decls": [decl_to_json(d) for d in t.decls]}
    if isinstance(t, SelField):
        return {"k": "SelField", "obj": tm_to_json(t.obj),
                "label": label_to_json(t.label)}
    if isinstance(t, Invoke):
        return {"k": "Invoke", "obj": tm_to_json(t.obj),
                "label": label_to_json(t.label), "arg": tm_to_json(t.arg)}
    if isinstance(t, Fix):
        return {"k": "Fix", "annot": ty_to_json(t.annot),
                "body": tm_to_json(t.body)}
    if isinstance(t, RefNew):
        d = {"k": "RefNew", "tm": tm_to_json(t.tm)}
        if t.annot is not None:
            d["annot"] = ty_to_json(t.annot)
        return d
    if isinstance(t, Deref):
        return {"k": "Deref", "tm": tm_to_json(t.tm)}
    if isinstance(t, Assign):
        return {"k": "Assign", "target": tm_to_json(t.target),
                "source": tm_to_json(t.source)}
    if isinstance(t, Loc):
        return {"k": "Loc", "loc": t.loc}
    raise StructuralError(f"tm_to_json: {t!r}")


def tm_from_json(d: Dict) -> Tm:
    k = d["k"]
    if k == "Var":
        return Var(ref_from_json(d["var"]))
    if k == "Lam":
        res = ty_from_json(d["result"]) if "result" in d else None
        return Lam(ty_from_json(d["annot"]), tm_from_json(d["body"]), res)
    if k == "App":
        return App(tm_from_json(d["fn"]), tm_from_json(d["arg"]))
    if k == "TyLam":
        return TyLam(ty_from_json(d["bound"]), tm_from_json(d["body"]))
    if k == "TyApp":
        return TyApp(tm_from_json(d["fn"]), ty_from_json(d["ty"]))
    if k == "TypeVal":
        return TypeVal(ty_from_json(d["ty"]))
    if k == "Rec":
        return Rec(tuple(decl_from_json(x) for x in d["decls"]))
    if k == "Obj":
        return Obj(tuple(decl_from_json(x) for x in d["decls"]))
    if k == "SelField":
        return SelField(tm_from_json(d["obj"]), label_from_json(d["label"]))
    if k == "Invoke":
        return Invoke(tm_from_json(d["obj"]), label_from_json(d["label"]),
                      tm_from_json(d["arg"]))
    if k == "Fix":
        return Fix(ty_from_json(d["annot"]), tm_from_json(d["body"]))
    if k == "RefNew":
        annot = ty_from_json(d["annot"]) if "annot" in d else None
        return RefNew(tm_from_json(d["tm"]), annot)
    if k == "Deref":
        return Deref(tm_from_json(d["tm"]))
    if k == "Assign":
        return Assign(tm_from_json(d["target"]), tm_from_json(d["source"]))
    if k == "Loc":
        return Loc(d["loc"])
    raise StructuralError(f"tm_from_json: {k!r}")


def decl_to_json(d) -> Dict:
    if isinstance(d, TypeInit):
        return {"k": "TypeInit", "label": label_to_json(d.label),
                "lo": ty_to_json(d.lo), "hi": ty_to_json(d.hi)}
    if isinstance(d, FieldInit):
        out = {"k": "FieldInit", "label": label_to_json(d.label),
               "tm": tm_to_json(d.tm)}
        if d.ty is not None:
            out["ty"] = ty_to_json(d.ty)
        return out
    if isinstance(d, MethodInit):
        return {"k": "MethodInit", "label": label_to_json(d.label),
                "param": ty_to_json(d.param), "result": ty_to_json(d.result),
                "body": tm_to_json(d.body)}
    raise StructuralError(f"decl_to_json: {d!r}")


def decl_from_json(d: Dict):
    k = d["k"]
    if k == "TypeInit":
        return TypeInit(label_from_json(d["label"]), ty_from_json(d["lo"]),
                        ty_from_json(d["hi"]))
    if k == "FieldInit":
        ty = ty_from_json(d["ty"]) if "ty" in d else None
        return FieldInit(label_from_json(d["label"]), tm_from_json(d["tm"]), ty)
    if k == "MethodInit":
        return MethodInit(label_from_json(d["label"]), ty_from_json(d["param"]),
                          ty_from_json(d["result"]), tm_from_json(d["body"]))
    raise StructuralError(f"decl_from_json: {k!r}")


def value_to_json(v: Value) -> Dict:
    if isinstance(v, Closure):
        d = {"k": "Closure", "env": env_to_json(v.env),
             "annot": ty_to_json(v.annot), "body": tm_to_json(v.body)}
        if v.result is not None:
            d["result"] = ty_to_json(v.result)
        return d
    if isinstance(v, TyClosure):
        return {"k": "TyClosure", "env": env_to_json(v.env),
                "ty": ty_to_json(v.ty)}
    if isinstance(v, TyAbsClosure):
        return {"k": "TyAbsClosure", "env": env_to_json(v.env),
                "bound": ty_to_json(v.bound), "body": tm_to_json(v.body)}
    if isinstance(v, ObjValue):
        return {"k": "ObjValue", "env": env_to_json(v.env),
                "decls": [decl_to_json(d) for d in v.decls],
                "has_self": v.has_self}
    if isinstance(v, LocValue):
        return {"k": "LocValue", "loc": v.loc}
    if isinstance(v, FixThunk):
        return {"k": "FixThunk", "env": env_to_json(v.env),
                "annot": ty_to_json(v.annot), "body": tm_to_json(v.body)}
    raise StructuralError(f"value_to_json: {v!r}")


def value_from_json(d: Dict) -> Value:
    k = d["k"]
    if k == "Closure":
        res = ty_from_json(d["result"]) if "result" in d else None
        return Closure(env_from_json(d["env"]), ty_from_json(d["annot"]),
                       tm_from_json(d["body"]), res)
    if k == "TyClosure":
        return TyClosure(env_from_json(d["env"]), ty_from_json(d["ty"]))
    if k == "TyAbsClosure":
        return TyAbsClosure(env_from_json(d["env"]), ty_from_json(d["bound"]),
                            tm_from_json(d["body"]))
    if k == "ObjValue":
        return ObjValue(env_from_json(d["env"]),
                        tuple(decl_from_json(x) for x in d["decls"]),
                        d.get("has_self", True))
    if k == "LocValue":
        return LocValue(d["loc"])
    if k == "FixThunk":
        return FixThunk(env_from_json(d["env"]), ty_from_json(d["annot"]),
                        tm_from_json(d["body"]))
    raise StructuralError(f"value_from_json: {k!r}")


def env_to_json(env: Env):
    return [[ref_to_json(k), value_to_json(v)] for k, v in env.entries]


def env_from_json(items) -> Env:
    return Env(tuple((ref_from_json(k), value_from_json(v))
                     for k, v in items))


def styping_to_json(s: StoreTyping):
    return [[env_to_json(env), ty_to_json(ty)] for env, ty in s.entries]


def styping_from_json(items) -> StoreTyping:
    return StoreTyping([(env_from_json(e), ty_from_json(t))
                        for e, t in items])


def absenv_to_json(j: AbsEnv):
    return [[ref_to_json(k), [env_to_json(p.env), ty_to_json(p.ty)]]
            for k, p in j.entries]


def absenv_from_json(items) -> AbsEnv:
    return AbsEnv(tuple(
        (ref_from_json(k), TyPair(env_from_json(p[0]), ty_from_json(p[1])))
        for k, p in items))
