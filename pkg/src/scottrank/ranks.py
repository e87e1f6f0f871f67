"""Rank values: finite ordinals, a symbolic omega, and infinity."""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering

from .errors import ParseError


@total_ordering
@dataclass(frozen=True)
class RankValue:
    kind: str  # "finite" | "omega" | "inf"
    value: int = 0

    def __post_init__(self):
        if self.kind not in ("finite", "omega", "inf"):
            raise ValueError(f"unknown rank kind {self.kind!r}")
        if self.kind == "finite" and self.value < 0:
            raise ValueError("finite rank must be a natural number")

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def _order_key(self):
        return ({"finite": 0, "omega": 1, "inf": 2}[self.kind], self.value)

    def __lt__(self, other):
        if not isinstance(other, RankValue):
            return NotImplemented
        return self._order_key() < other._order_key()

    def __str__(self):
        if self.kind == "finite":
            return str(self.value)
        return self.kind

    def __repr__(self):
        return f"RankValue({self})"

    def succ(self) -> "RankValue":
        return Finite(self.value + 1) if self.is_finite else self

    @classmethod
    def parse(cls, text: str) -> "RankValue":
        text = text.strip().lower()
        if text in ("inf", "infinity", "∞"):
            return INFINITY
        if text in ("omega", "ω"):
            return OMEGA
        try:
            n = int(text)
        except ValueError:
            raise ParseError(f"not a rank value: {text!r}") from None
        if n < 0:
            raise ParseError(f"not a rank value: {text!r}")
        return Finite(n)


def Finite(n: int) -> RankValue:
    return RankValue("finite", int(n))


OMEGA = RankValue("omega")
INFINITY = RankValue("inf")
