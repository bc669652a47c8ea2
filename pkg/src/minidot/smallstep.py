"""Small-step semantics for the path-dependent core (the DSub fragment).

Type values are administratively let-bound into a store so that path
types can keep referring to them by name after substitution; lambdas
remain direct values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .syntax import (App, Free, Lam, StructuralError, TERM_NS, Tm, TypeVal,
                     Var, subst_tm_in_tm)


def is_value(t: Tm, bound_locs) -> bool:
    if isinstance(t, Lam):
        return True
    if isinstance(t, Var) and isinstance(t.var, Free) and t.var in bound_locs:
        return True
    return False


@dataclass
class MachineState:
    """Let-bound store entries (name, heap form) plus the body under focus."""

    bindings: List[Tuple[Free, Tm]] = field(default_factory=list)
    body: Tm = None

    def alloc(self, t: Tm) -> Free:
        x = Free(TERM_NS, f"$s{len(self.bindings)}")
        self.bindings.append((x, t))
        return x

    def lookup(self, x: Free) -> Optional[Tm]:
        for k, v in self.bindings:
            if k == x:
                return v
        return None

    def loc_names(self):
        return {k for k, _ in self.bindings}

    def render(self) -> str:
        binds = "; ".join(f"{k} = {v}" for k, v in self.bindings)
        return f"[{binds}] {self.body}"


@dataclass(frozen=True)
class StepResult:
    kind: str  # "step" | "value" | "stuck"
    state: Optional[MachineState] = None
    detail: str = ""


def step(st: MachineState) -> StepResult:
    locs = st.loc_names()
    new_body, stuck = _step_tm(st, st.body, locs)
    if stuck is not None:
        return StepResult("stuck", detail=stuck)
    if new_body is None:
        return StepResult("value")
    return StepResult("step", MachineState(st.bindings, new_body))


def _step_tm(st: MachineState, t: Tm, locs):
    """Leftmost call-by-value contraction; (new term, stuck reason)."""
    if is_value(t, locs):
        return None, None
    if isinstance(t, TypeVal):
        x = st.alloc(t)
        return Var(x), None
    if isinstance(t, App):
        if not is_value(t.fn, locs):
            nf, stuck = _step_tm(st, t.fn, locs)
            if stuck is not None:
                return None, stuck
            if nf is None:
                return None, "function position is a non-value normal form"
            return App(nf, t.arg), None
        if not is_value(t.arg, locs):
            na, stuck = _step_tm(st, t.arg, locs)
            if stuck is not None:
                return None, stuck
            if na is None:
                return None, "argument position is a non-value normal form"
            return App(t.fn, na), None
        fn = t.fn
        if isinstance(fn, Var):
            heap = st.lookup(fn.var)
            if isinstance(heap, Lam):
                fn = heap
            else:
                return None, "applying a store-bound type value"
        if isinstance(fn, Lam):
            try:
                return subst_tm_in_tm(fn.body, t.arg), None
            except StructuralError as e:
                return None, str(e)
        return None, "applying a non-function"
    if isinstance(t, Var):
        return None, f"free variable {t.var}"
    return None, f"no step rule for {type(t).__name__}"


@dataclass(frozen=True)
class RunOutcome:
    kind: str  # "value" | "stuck" | "limit"
    state: MachineState = None
    steps: int = 0
    detail: str = ""


def run(t: Tm, max_steps: int = 200) -> RunOutcome:
    st = MachineState([], t)
    for i in range(max_steps):
        r = step(st)
        if r.kind == "value":
            return RunOutcome("value", st, i)
        if r.kind == "stuck":
            return RunOutcome("stuck", st, i, r.detail)
        st = r.state
    return RunOutcome("limit", st, max_steps)
