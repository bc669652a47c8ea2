"""Surface syntax: tokenizer, parser, and a parseable pretty printer.

Programs are line oriented: `#` starts a comment, `name = term` and
`type Name = T` define macros, and the last nonempty line is the main
term.  Binders are written with names and converted to the locally
nameless form by closing over the bound name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .syntax import (And, AllSub, App, Arrow, Assign, BOT, BindSelf, Bot,
                     Bound, DepFun, Deref, FVar, FieldInit, Fix, Fld, Free,
                     Invoke, Label, Lam, Level, Loc, Method, MethodInit, ML,
                     Obj, Or, Rec, RefNew, RefTy, Sel, SelField,
                     StructuralError, TERM_NS, TL, TOP, Tm, Top, Ty, TyApp,
                     TyLam, TypeInit, TypeMem, TypeTag, TypeVal,
                     TYPE_TAG_LABEL, VL, Var, close_tm, close_ty,
                     gate_offender, gate_term, gate_type, tv)


class ParseError(Exception):
    """Syntax error in the surface input."""


class GateError(ParseError):
    """Well-formed input using a construct outside the chosen level."""


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<sym><:|:=|->|\.\.|=>|[{}()\[\].,;:=!&|])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
""", re.VERBOSE)

KEYWORDS = {"Top", "Bot", "Ref", "rec", "all", "fun", "tfun", "typeval",
            "new", "fix", "ref", "forall", "type"}


def tokenize(src: str) -> List[Tuple[str, str]]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(f"bad character {src[pos]!r} at offset {pos}")
        pos = m.end()
        if m.lastgroup in ("ws", "comment"):
            continue
        kind = m.lastgroup
        text = m.group()
        if kind == "ident" and text in KEYWORDS:
            kind = text
        toks.append((kind, text))
    toks.append(("eof", ""))
    return toks


class Parser:
    def __init__(self, toks: List[Tuple[str, str]],
                 ty_macros: Optional[Dict[str, Ty]] = None,
                 tm_macros: Optional[Dict[str, Tm]] = None):
        self.toks = toks
        self.i = 0
        self.ty_macros = ty_macros or {}
        self.tm_macros = tm_macros or {}

    def peek(self, ahead: int = 0):
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        if t[0] != "eof":
            self.i += 1
        return t

    def expect(self, kind: str) -> str:
        k, text = self.next()
        if k != kind:
            raise ParseError(f"expected {kind!r}, got {text!r}")
        return text

    def at(self, kind: str) -> bool:
        return self.peek()[0] == kind

    def eat(self, kind: str) -> bool:
        if self.at(kind):
            self.next()
            return True
        return False

    # -- types ----------------------------------------------------------------

    def parse_type(self) -> Ty:
        left = self.parse_or()
        if self.peek() == ("sym", "->"):
            self.next()
            return Arrow(left, self.parse_type())
        return left

    def parse_or(self) -> Ty:
        left = self.parse_and()
        while self.peek() == ("sym", "|"):
            self.next()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Ty:
        left = self.parse_ty_atom()
        while self.peek() == ("sym", "&"):
            self.next()
            left = And(left, self.parse_ty_atom())
        return left

    def parse_ty_atom(self) -> Ty:
        k, text = self.peek()
        if k == "Top":
            self.next()
            return TOP
        if k == "Bot":
            self.next()
            return BOT
        if k == "Ref":
            self.next()
            return RefTy(self.parse_ty_atom())
        if k == "rec":
            self.next()
            self._expect_sym("(")
            z = self.expect("ident")
            self._expect_sym(")")
            body = self.parse_type()
            return BindSelf(close_ty(body, tv(z)))
        if k == "all":
            self.next()
            self._expect_sym("(")
            x = self.expect("ident")
            self._expect_sym(":")
            param = self.parse_type()
            self._expect_sym(")")
            result = self.parse_type()
            return DepFun(param, close_ty(result, tv(x)))
        if k == "forall":
            self.next()
            self._expect_sym("(")
            x = self.expect("ident")
            self._expect_sym("<:")
            bound = self.parse_type()
            self._expect_sym(")")
            body = self.parse_type()
            return AllSub(bound, close_ty(body, tv(x)))
        if self.peek() == ("sym", "{"):
            return self.parse_braced_type()
        if self.peek() == ("sym", "("):
            self.next()
            t = self.parse_type()
            self._expect_sym(")")
            return t
        if k == "ident":
            return self.parse_ty_ident()
        raise ParseError(f"expected a type, got {text!r}")

    def parse_braced_type(self) -> Ty:
        self._expect_sym("{")
        name = self.expect("ident")
        if name == "Type":
            if self.eat_sym("="):
                t = self.parse_type()
                self._expect_sym("}")
                return TypeTag(t, t)
            if self.eat_sym("<:"):
                t = self.parse_type()
                self._expect_sym("}")
                return TypeTag(BOT, t)
            self._expect_sym(":")
            lo = self.parse_type()
            self._expect_sym("..")
            hi = self.parse_type()
            self._expect_sym("}")
            return TypeTag(lo, hi)
        self._expect_sym(":")
        lo = self.parse_type()
        if self.eat_sym(".."):
            hi = self.parse_type()
            self._expect_sym("}")
            return TypeMem(TL(name), lo, hi)
        self._expect_sym("}")
        if name[0].isupper():
            raise ParseError(f"type member {name} needs bounds (lo .. hi)")
        return Fld(VL(name), lo)

    def parse_ty_ident(self) -> Ty:
        name = self.expect("ident")
        # Method member type: m(x:S):U
        if name[0].islower() and self.peek() == ("sym", "("):
            self.next()
            x = self.expect("ident")
            self._expect_sym(":")
            param = self.parse_type()
            self._expect_sym(")")
            self._expect_sym(":")
            result = self.parse_ty_atom()
            return Method(ML(name), param, close_ty(result, tv(x)))
        if self.peek() == ("sym", "."):
            self.next()
            label = self.expect("ident")
            return Sel(tv(name), TL(label))
        if name in self.ty_macros:
            return self.ty_macros[name]
        if name[0].isupper():
            return FVar(tv(name))
        raise ParseError(f"unknown type name {name!r}")

    # -- terms ----------------------------------------------------------------

    def parse_term(self) -> Tm:
        left = self.parse_app()
        if self.peek() == ("sym", ":="):
            self.next()
            return Assign(left, self.parse_term())
        return left

    def parse_app(self) -> Tm:
        t = self.parse_postfix()
        while True:
            k, text = self.peek()
            if self.peek() == ("sym", "["):
                self.next()
                ty = self.parse_type()
                self._expect_sym("]")
                t = TyApp(t, ty)
                continue
            if k in ("ident", "fun", "tfun", "typeval", "new", "fix",
                     "ref") or self.peek() in (("sym", "("), ("sym", "!")):
                t = App(t, self.parse_postfix())
                continue
            return t

    def parse_postfix(self) -> Tm:
        t = self.parse_tm_atom()
        while self.peek() == ("sym", "."):
            self.next()
            label = self.expect("ident")
            if self.peek() == ("sym", "(") and label[0].islower():
                self.next()
                arg = self.parse_term()
                self._expect_sym(")")
                t = Invoke(t, ML(label), arg)
            else:
                t = SelField(t, VL(label))
        return t

    def parse_tm_atom(self) -> Tm:
        k, text = self.peek()
        if k == "fun":
            self.next()
            self._expect_sym("(")
            x = self.expect("ident")
            self._expect_sym(":")
            annot = self.parse_type()
            self._expect_sym(")")
            body = self.parse_term()
            return Lam(annot, close_tm(body, tv(x)))
        if k == "tfun":
            self.next()
            self._expect_sym("(")
            x = self.expect("ident")
            self._expect_sym("<:")
            bound = self.parse_type()
            self._expect_sym(")")
            body = self.parse_term()
            return TyLam(bound, close_tm(body, tv(x)))
        if k == "typeval":
            self.next()
            return TypeVal(self.parse_ty_atom())
        if k == "fix":
            self.next()
            self._expect_sym("(")
            x = self.expect("ident")
            self._expect_sym(":")
            annot = self.parse_type()
            self._expect_sym(")")
            body = self.parse_term()
            return Fix(close_ty(annot, tv(x)), close_tm(body, tv(x)))
        if k == "ref":
            self.next()
            return RefNew(self.parse_tm_atom())
        if k == "new":
            return self.parse_new()
        if self.peek() == ("sym", "!"):
            self.next()
            return Deref(self.parse_tm_atom())
        if self.peek() == ("sym", "("):
            self.next()
            t = self.parse_term()
            self._expect_sym(")")
            return t
        if k == "ident":
            self.next()
            if text in self.tm_macros:
                return self.tm_macros[text]
            return Var(tv(text))
        raise ParseError(f"expected a term, got {text!r}")

    def parse_new(self) -> Tm:
        self.expect("new")
        self_name = None
        if self.peek() == ("sym", "("):
            self.next()
            self_name = self.expect("ident")
            self._expect_sym(")")
        self._expect_sym("{")
        decls = []
        while not self.eat_sym("}"):
            decls.append(self.parse_decl())
            self.eat_sym(";")
        if self_name is None:
            return Rec(tuple(decls))
        x = tv(self_name)
        from .static_checker import close_decl_public
        return Obj(tuple(close_decl_public(d, x) for d in decls))

    def parse_decl(self):
        name = self.expect("ident")
        if self.peek() == ("sym", "(") and name[0].islower():
            self.next()
            y = self.expect("ident")
            self._expect_sym(":")
            param = self.parse_type()
            self._expect_sym(")")
            self._expect_sym(":")
            result = self.parse_type()
            self._expect_sym("=")
            body = self.parse_term()
            yv = tv(y)
            return MethodInit(ML(name), param, close_ty(result, yv),
                              close_tm(body, yv))
        if name[0].isupper():
            if self.eat_sym(":"):
                lo = self.parse_type()
                self._expect_sym("..")
                hi = self.parse_type()
                return TypeInit(TL(name), lo, hi)
            self._expect_sym("=")
            t = self.parse_type()
            return TypeInit(TL(name), t, t)
        self._expect_sym("=")
        return FieldInit(VL(name), self.parse_term())

    # -- small helpers ---------------------------------------------------------

    def _expect_sym(self, text: str):
        k, t = self.next()
        if k != "sym" or t != text:
            raise ParseError(f"expected {text!r}, got {t!r}")

    def eat_sym(self, text: str) -> bool:
        if self.peek() == ("sym", text):
            self.next()
            return True
        return False

    def done(self) -> bool:
        return self.at("eof")


def parse_type(src: str, level: Optional[Level] = None,
               ty_macros=None) -> Ty:
    p = Parser(tokenize(src), ty_macros)
    t = p.parse_type()
    if not p.done():
        raise ParseError(f"trailing input after type: {p.peek()[1]!r}")
    if level is not None:
        _gate_or_raise(level, t)
    return t


def parse_term(src: str, level: Optional[Level] = None,
               ty_macros=None, tm_macros=None) -> Tm:
    p = Parser(tokenize(src), ty_macros, tm_macros)
    t = p.parse_term()
    if not p.done():
        raise ParseError(f"trailing input after term: {p.peek()[1]!r}")
    if level is not None:
        _gate_or_raise(level, t)
    return t


def _gate_or_raise(level: Level, t):
    bad = gate_offender(level, t)
    if bad is not None:
        raise GateError(f"{bad} is not available at this level")


def parse_program(src: str, level: Optional[Level] = None) -> Tm:
    """Multi-line program: macro definitions, then the main term last."""
    ty_macros: Dict[str, Ty] = {}
    tm_macros: Dict[str, Tm] = {}
    main: Optional[Tm] = None
    main_line = None
    lines = src.splitlines()
    # Find the last nonempty, non-comment line: that is the main term.
    content = [(i, ln) for i, ln in enumerate(lines)
               if ln.split("#", 1)[0].strip()]
    if not content:
        raise ParseError("empty program")
    for i, ln in content[:-1]:
        stripped = ln.split("#", 1)[0].strip()
        if stripped.startswith("type "):
            rest = stripped[len("type "):]
            name, _, body = rest.partition("=")
            name = name.strip()
            if not name.isidentifier():
                raise ParseError(f"bad type macro name on line {i + 1}")
            ty_macros[name] = parse_type(body, None, ty_macros)
        else:
            name, eq, body = stripped.partition("=")
            name = name.strip()
            if not eq or not name.isidentifier():
                raise ParseError(f"expected a definition on line {i + 1}")
            tm_macros[name] = parse_term(body, None, ty_macros, tm_macros)
    _, last = content[-1]
    main = parse_term(last.split("#", 1)[0], None, ty_macros, tm_macros)
    if level is not None:
        _gate_or_raise(level, main)
    return main


# ---------------------------------------------------------------------------
# Pretty printing (round-trips through the parser)

_NAMES = "xyzwuvabc"


def _pick(avoid, hint="x"):
    if hint not in avoid:
        return hint
    i = 0
    while f"{hint}{i}" in avoid:
        i += 1
    return f"{hint}{i}"


def render_ty(t: Ty, avoid: Optional[set] = None) -> str:
    avoid = set(avoid or ())

    def go(u: Ty, prec: int) -> str:
        if isinstance(u, Top):
            return "Top"
        if isinstance(u, Bot):
            return "Bot"
        if isinstance(u, And):
            s = f"{go(u.left, 2)} & {go(u.right, 3)}"
            return f"({s})" if prec > 2 else s
        if isinstance(u, Or):
            s = f"{go(u.left, 1)} | {go(u.right, 2)}"
            return f"({s})" if prec > 1 else s
        if isinstance(u, Arrow):
            s = f"{go(u.param, 1)} -> {go(u.result, 0)}"
            return f"({s})" if prec > 0 else s
        if isinstance(u, TypeMem):
            return f"{{ {u.label} : {go(u.lo, 0)} .. {go(u.hi, 0)} }}"
        if isinstance(u, TypeTag):
            if u.lo == u.hi:
                return f"{{ Type = {go(u.lo, 0)} }}"
            if u.lo == BOT:
                return f"{{ Type <: {go(u.hi, 0)} }}"
            return f"{{ Type : {go(u.lo, 0)} .. {go(u.hi, 0)} }}"
        if isinstance(u, Fld):
            return f"{{ {u.label} : {go(u.ty, 0)} }}"
        if isinstance(u, Method):
            x = _pick(avoid)
            avoid.add(x)
            from .syntax import open_ty
            s = f"{u.label}({x}:{go(u.param, 0)}):{go(open_ty(u.result, tv(x)), 9)}"
            avoid.discard(x)
            return s
        if isinstance(u, Sel):
            return f"{u.var}.{u.label}"
        if isinstance(u, BindSelf):
            z = _pick(avoid, "z")
            avoid.add(z)
            from .syntax import open_ty
            s = f"rec({z}) {go(open_ty(u.body, tv(z)), 9)}"
            avoid.discard(z)
            return f"({s})" if prec > 0 else s
        if isinstance(u, DepFun):
            x = _pick(avoid)
            avoid.add(x)
            from .syntax import open_ty
            s = f"all({x}:{go(u.param, 0)}){go(open_ty(u.result, tv(x)), 9)}"
            avoid.discard(x)
            return s
        if isinstance(u, AllSub):
            x = _pick(avoid, "X")
            avoid.add(x)
            from .syntax import open_ty
            s = f"forall({x}<:{go(u.bound, 0)}){go(open_ty(u.body, tv(x)), 9)}"
            avoid.discard(x)
            return s
        if isinstance(u, RefTy):
            return f"Ref {go(u.ty, 9)}"
        if isinstance(u, FVar):
            return str(u.var)
        raise StructuralError(f"render_ty: not a type: {u!r}")

    return go(t, 0)


def render_tm(t: Tm, avoid: Optional[set] = None) -> str:
    avoid = set(avoid or ())
    from .syntax import open_tm, open_ty
    from .static_checker import open_decl_public

    def binder(hint="x"):
        x = _pick(avoid, hint)
        avoid.add(x)
        return x

    def go(u: Tm, prec: int) -> str:
        if isinstance(u, Var):
            return str(u.var)
        if isinstance(u, Lam):
            x = binder()
            s = f"fun({x}:{render_ty(u.annot, avoid)}) {go(open_tm(u.body, tv(x)), 0)}"
            avoid.discard(x)
            return f"({s})" if prec > 0 else s
        if isinstance(u, App):
            s = f"{go(u.fn, 1)} {go(u.arg, 2)}"
            return f"({s})" if prec > 1 else s
        if isinstance(u, TyLam):
            x = binder("X")
            s = f"tfun({x}<:{render_ty(u.bound, avoid)}) {go(open_tm(u.body, tv(x)), 0)}"
            avoid.discard(x)
            return f"({s})" if prec > 0 else s
        if isinstance(u, TyApp):
            return f"{go(u.fn, 1)} [{render_ty(u.ty, avoid)}]"
        if isinstance(u, TypeVal):
            s = f"typeval ({render_ty(u.ty, avoid)})"
            return f"({s})" if prec > 1 else s
        if isinstance(u, Rec):
            ds = "; ".join(decl(d) for d in u.decls)
            return f"new {{ {ds} }}" if u.decls else "new { }"
        if isinstance(u, Obj):
            x = binder()
            ds = "; ".join(decl(open_decl_public(d, tv(x))) for d in u.decls)
            avoid.discard(x)
            return f"new ({x}) {{ {ds} }}"
        if isinstance(u, SelField):
            return f"{go(u.obj, 2)}.{u.label}"
        if isinstance(u, Invoke):
            return f"{go(u.obj, 2)}.{u.label}({go(u.arg, 0)})"
        if isinstance(u, Fix):
            x = binder()
            s = (f"fix({x}:{render_ty(open_ty(u.annot, tv(x)), avoid)}) "
                 f"{go(open_tm(u.body, tv(x)), 0)}")
            avoid.discard(x)
            return f"({s})" if prec > 0 else s
        if isinstance(u, RefNew):
            s = f"ref {go(u.tm, 2)}"
            return f"({s})" if prec > 1 else s
        if isinstance(u, Deref):
            return f"!{go(u.tm, 2)}"
        if isinstance(u, Assign):
            s = f"{go(u.target, 1)} := {go(u.source, 0)}"
            return f"({s})" if prec > 0 else s
        if isinstance(u, Loc):
            return f"loc#{u.loc}"
        raise StructuralError(f"render_tm: not a term: {u!r}")

    def decl(d) -> str:
        if isinstance(d, TypeInit):
            if d.lo == d.hi:
                return f"{d.label} = {render_ty(d.lo, avoid)}"
            return (f"{d.label} : {render_ty(d.lo, avoid)} "
                    f".. {render_ty(d.hi, avoid)}")
        if isinstance(d, FieldInit):
            return f"{d.label} = {go(d.tm, 0)}"
        if isinstance(d, MethodInit):
            y = binder("y")
            s = (f"{d.label}({y}:{render_ty(d.param, avoid)})"
                 f":{render_ty(open_ty(d.result, tv(y)), avoid)}"
                 f" = {go(open_tm(d.body, tv(y)), 0)}")
            avoid.discard(y)
            return s
        raise StructuralError(f"render: not a decl: {d!r}")

    return go(t, 0)
