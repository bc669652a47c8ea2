"""Three-state judgment results, fuel accounting, and derivation traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional


class Verdict(Enum):
    PROVED = "proved"
    REFUTED = "refuted"
    UNKNOWN = "unknown"


PROVED = Verdict.PROVED
REFUTED = Verdict.REFUTED
UNKNOWN = Verdict.UNKNOWN


@dataclass
class Fuel:
    """Mutable step budget shared across a checker run."""

    remaining: int
    used: int = 0

    def spend(self) -> bool:
        """Consume one unit; False when the budget is exhausted."""
        if self.remaining <= 0:
            return False
        self.remaining -= 1
        self.used += 1
        return True


@dataclass(frozen=True)
class TraceNode:
    """One derivation step: the rule name, its subject, and sub-derivations."""

    rule: str
    subject: str
    children: tuple = ()
    meta: dict = field(default_factory=dict)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def render(self, indent: int = 0) -> str:
        lines = ["  " * indent + f"{self.rule}: {self.subject}"]
        for c in self.children:
            lines.append(c.render(indent + 1))
        return "\n".join(lines)


@dataclass(frozen=True)
class Judgment:
    """Verdict plus how much fuel the query consumed and an optional trace."""

    verdict: Verdict
    fuel_used: int = 0
    trace: Optional[TraceNode] = None
    reason: str = ""

    @property
    def proved(self) -> bool:
        return self.verdict is PROVED

    @property
    def refuted(self) -> bool:
        return self.verdict is REFUTED

    @property
    def unknown(self) -> bool:
        return self.verdict is UNKNOWN

    def __bool__(self):
        return self.proved


def proved(trace: Optional[TraceNode] = None, fuel_used: int = 0) -> Judgment:
    return Judgment(PROVED, fuel_used, trace)


def refuted(reason: str = "", fuel_used: int = 0) -> Judgment:
    return Judgment(REFUTED, fuel_used, reason=reason)


def unknown(reason: str = "out of fuel", fuel_used: int = 0) -> Judgment:
    return Judgment(UNKNOWN, fuel_used, reason=reason)


def all_of(*parts: Verdict) -> Verdict:
    """Conjunction: any refutation refutes; otherwise unknown taints."""
    if any(p is REFUTED for p in parts):
        return REFUTED
    if any(p is UNKNOWN for p in parts):
        return UNKNOWN
    return PROVED


def any_of(*parts: Verdict) -> Verdict:
    """Disjunction: any proof proves; refuted only when every branch refutes."""
    if any(p is PROVED for p in parts):
        return PROVED
    if any(p is UNKNOWN for p in parts):
        return UNKNOWN
    return REFUTED
