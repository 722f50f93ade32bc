"""Exact dyadic rational arithmetic.

Program-tree masses are sums of powers of two, so everything here is
num / 2**exp with an arbitrary-precision integer numerator. Values are
kept normalized (odd numerator, or exactly 0/2**0) so equal values are
structurally equal.
"""

from __future__ import annotations

import re
from fractions import Fraction

_PARSE = re.compile(r"^(-?\d+)/2\^(\d+)$")


class Dyadic:
    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if exp < 0:
            raise ValueError("denominator exponent must be >= 0")
        if num == 0:
            exp = 0
        elif exp > 0:
            shift = min(exp, ((num & -num).bit_length() - 1))
            num >>= shift
            exp -= shift
        self.num = num
        self.exp = exp

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        m = _PARSE.match(text.strip())
        if not m:
            raise ValueError(f"not a dyadic literal: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __add__(self, other: "Dyadic") -> "Dyadic":
        e = max(self.exp, other.exp)
        return Dyadic(
            (self.num << (e - self.exp)) + (other.num << (e - other.exp)), e
        )

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        e = max(self.exp, other.exp)
        return Dyadic(
            (self.num << (e - self.exp)) - (other.num << (e - other.exp)), e
        )

    def _cmp_key(self, other: "Dyadic") -> tuple[int, int]:
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self.num == other.num and self.exp == other.exp

    def __lt__(self, other: "Dyadic") -> bool:
        a, b = self._cmp_key(other)
        return a < b

    def __le__(self, other: "Dyadic") -> bool:
        a, b = self._cmp_key(other)
        return a <= b

    def __gt__(self, other: "Dyadic") -> bool:
        return other < self

    def __ge__(self, other: "Dyadic") -> bool:
        return other <= self

    def __hash__(self):
        return hash((self.num, self.exp))

    def floor_shift(self, k: int) -> int:
        """floor(value * 2**k), exact."""
        if k >= self.exp:
            return self.num << (k - self.exp)
        return self.num >> (self.exp - k)

    def is_zero(self) -> bool:
        return self.num == 0

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self) -> float:
        return self.num / (1 << self.exp)

    def __str__(self) -> str:
        return f"{self.num}/2^{self.exp}"

    def __repr__(self) -> str:
        return f"Dyadic({self.num}, {self.exp})"


ZERO = Dyadic(0)
ONE = Dyadic(1)
