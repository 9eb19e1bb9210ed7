"""Exact sampling probabilities for fittest-type-wins selection.

Everything here works in Python integers and :class:`fractions.Fraction`;
callers convert to float only at the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable

__all__ = [
    "SelectionRates",
    "falling_factorial",
    "stirling2",
    "p_mj",
    "q_jk",
    "s_tilde",
    "verify_replacement_identity",
    "as_fraction",
]


def as_fraction(value: int | float | str | Fraction) -> Fraction:
    """Convert a user-facing number to an exact rational.

    Floats go through their shortest decimal repr, so ``0.2`` becomes ``1/5``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rates")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def falling_factorial(x: int, j: int) -> int:
    """x (x-1) ... (x-j+1), with the empty product 1 for j = 0."""
    if j < 0:
        raise ValueError("j must be >= 0")
    out = 1
    for k in range(j):
        out *= x - k
    return out


@lru_cache(maxsize=None)
def stirling2(l: int, j: int) -> int:
    """Stirling number of the second kind S(l, j)."""
    if l < 0 or j < 0:
        raise ValueError("arguments must be >= 0")
    if l == j:
        return 1
    if j == 0 or j > l:
        return 0
    return j * stirling2(l - 1, j) + stirling2(l - 1, j - 1)


@lru_cache(maxsize=None)
def _c_mj(N: int, n: int, m: int, j: int) -> int:
    # ordered m-tuples over [N] hitting exactly j distinct lines outside a fixed n-set
    inner = sum(comb(m, l) * stirling2(l, j) * n ** (m - l) for l in range(j, m + 1))
    return falling_factorial(N - n, j) * inner


def p_mj(N: int, n: int, m: int, j: int) -> Fraction:
    """Probability that m draws with replacement from [N] hit exactly j new lines.

    "New" means outside a fixed set of n lines. Out-of-range j gives 0.
    """
    if not 0 <= n <= N or m < 0:
        raise ValueError(f"invalid arguments N={N}, n={n}, m={m}")
    if j < 0 or j > min(m, N - n):
        return Fraction(0)
    return Fraction(_c_mj(N, n, m, j), N**m)


def q_jk(N: int, n: int, j: int, k: int) -> Fraction:
    """Probability that a uniform j-subset of [N] contains exactly k lines outside a fixed n-set."""
    if not 0 <= n <= N or not 0 <= j <= N:
        raise ValueError(f"invalid arguments N={N}, n={n}, j={j}")
    if k < 0 or k > j or k > N - n or j - k > n:
        return Fraction(0)
    return Fraction(comb(N - n, k) * comb(n, j - k), comb(N, j))


@dataclass(frozen=True)
class SelectionRates:
    """Per-order selection rates s_1..s_M (with-replacement form).

    ``rates[m - 1]`` is s_m. An empty tuple means no selection.
    """

    rates: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        converted = tuple(as_fraction(x) for x in self.rates)
        if any(x < 0 for x in converted):
            raise ValueError("selection rates must be nonnegative")
        # strip trailing zeros so equal vectors compare equal
        while converted and converted[-1] == 0:
            converted = converted[:-1]
        object.__setattr__(self, "rates", converted)

    @classmethod
    def of(cls, values: Iterable[int | float | str | Fraction]) -> "SelectionRates":
        return cls(tuple(values))

    @property
    def M(self) -> int:
        return len(self.rates)

    def __getitem__(self, m: int) -> Fraction:
        """s_m for m >= 1; zero beyond the truncation order."""
        if m < 1:
            raise IndexError("selection order starts at 1")
        return self.rates[m - 1] if m <= self.M else Fraction(0)

    def items(self) -> Iterable[tuple[int, Fraction]]:
        for m, s in enumerate(self.rates, start=1):
            if s:
                yield m, s

    def total(self) -> Fraction:
        return sum(self.rates, Fraction(0))

    def scaled(self, factor: Fraction) -> "SelectionRates":
        return SelectionRates(tuple(s * factor for s in self.rates))


def s_tilde(s: SelectionRates, j: int, N: int) -> Fraction:
    """Rate of selective events whose set of distinct sampled lines has size j."""
    if j < 1:
        raise ValueError("j must be >= 1")
    return sum((sm * p_mj(N, 0, m, j) for m, sm in s.items() if m >= j), Fraction(0))


def verify_replacement_identity(
    N: int, n: int, k: int, s: SelectionRates
) -> tuple[bool, Fraction]:
    """Compare the without-replacement and with-replacement forms of the k-new-lines rate.

    Returns ``(equal, left - right)``; the difference is an exact rational.
    """
    if not 0 <= n <= N or not 1 <= k <= N - n:
        raise ValueError(f"invalid arguments N={N}, n={n}, k={k}")
    without = sum((s_tilde(s, j, N) * q_jk(N, n, j, k) for j in range(k, N + 1)), Fraction(0))
    with_ = sum((sm * p_mj(N, n, m, k) for m, sm in s.items() if m >= k), Fraction(0))
    diff = without - with_
    return diff == 0, diff

