"""Finite relabelings of population lines."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

__all__ = ["Permutation", "IDENTITY", "all_permutations"]


@dataclass(frozen=True)
class Permutation:
    """A bijection on the positive integers moving finitely many points.

    Only moved points are stored, so the identity is ``Permutation(())`` and
    the same object acts on any population size.
    """

    moved: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        pairs = tuple(sorted((a, b) for a, b in self.moved if a != b))
        if sorted(a for a, _ in pairs) != sorted(b for _, b in pairs):
            raise ValueError(f"not a bijection: {pairs}")
        object.__setattr__(self, "moved", pairs)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> "Permutation":
        return cls(tuple(mapping.items()))

    @classmethod
    def transposition(cls, a: int, b: int) -> "Permutation":
        return cls(((a, b), (b, a)))

    def __call__(self, x: int) -> int:
        for a, b in self.moved:
            if a == x:
                return b
        return x

    def inverse(self) -> "Permutation":
        return Permutation(tuple((b, a) for a, b in self.moved))

    def __matmul__(self, other: "Permutation") -> "Permutation":
        """Composition ``self ∘ other`` (apply ``other`` first)."""
        support = {a for a, _ in self.moved} | {a for a, _ in other.moved}
        return Permutation(tuple((x, self(other(x))) for x in support))

    def is_identity(self) -> bool:
        return not self.moved

    def cycles(self) -> list[tuple[int, ...]]:
        seen: set[int] = set()
        out = []
        for a, _ in self.moved:
            if a in seen:
                continue
            cyc = [a]
            seen.add(a)
            x = self(a)
            while x != a:
                cyc.append(x)
                seen.add(x)
                x = self(x)
            out.append(tuple(cyc))
        return out

    def __str__(self) -> str:
        if not self.moved:
            return "id"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles())


IDENTITY = Permutation()


def all_permutations(lines: Iterable[int]) -> Iterator[Permutation]:
    from itertools import permutations

    base = tuple(sorted(lines))
    for image in permutations(base):
        yield Permutation(tuple(zip(base, image)))
