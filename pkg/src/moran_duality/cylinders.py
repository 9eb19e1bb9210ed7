"""Cylinder sets of type configurations and backward type propagation.

A cylinder over an index set I of lines fixes some lines to ``R`` (unfit)
or ``B`` (fit) and leaves the rest unconstrained (``*``). Lines outside I
are unconstrained as well, so a cylinder is also a subset of {r, b}^J for
any J containing I. Only the non-star cells are stored.

The ``op_*`` functions take a cylinder at some backward time and return the
cylinder(s) of earlier-in-forward-time configurations that the event maps
into it.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

from .combinatorics import falling_factorial
from .permutation import Permutation

__all__ = [
    "R",
    "B",
    "STAR",
    "Cylinder",
    "meet",
    "op_coal",
    "op_mut_del",
    "op_mut_ben",
    "op_ftw",
    "op_interactive",
    "n_counts",
    "cylinder_probability",
    "contains",
    "configs_in",
    "union_configs",
    "union_as_r_cylinder",
    "set_equal",
    "pairwise_disjoint",
]

R, B, STAR = "R", "B", "*"
_TYPE_OF = {"r": R, "b": B}


def meet(a: str, b: str) -> str | None:
    """Intersection of two cells; ``None`` stands for the empty cell."""
    if a == STAR:
        return b
    if b == STAR or a == b:
        return a
    return None


class Cylinder:
    """Product set over ``index`` with cells in {R, B, *}, or the empty set."""

    __slots__ = ("index", "cells", "empty")

    def __init__(self, index: Iterable[int], cells: Mapping[int, str] | None = None, empty: bool = False):
        idx = frozenset(index)
        fixed: dict[int, str] = {}
        if not empty and cells:
            for line, c in cells.items():
                if line not in idx:
                    raise ValueError(f"cell on line {line} outside index set {sorted(idx)}")
                if c not in (R, B, STAR):
                    raise ValueError(f"bad cell {c!r}")
                if c != STAR:
                    fixed[line] = c
        object.__setattr__(self, "index", idx)
        object.__setattr__(self, "cells", fixed)
        object.__setattr__(self, "empty", bool(empty))

    def __setattr__(self, name, value):
        raise AttributeError("Cylinder is immutable")

    # construction helpers

    @classmethod
    def all_r(cls, lines: Iterable[int]) -> "Cylinder":
        lines = frozenset(lines)
        return cls(lines, {x: R for x in lines})

    @classmethod
    def empty_on(cls, lines: Iterable[int]) -> "Cylinder":
        return cls(lines, empty=True)

    @classmethod
    def from_pattern(cls, lines: Sequence[int], pattern: str) -> "Cylinder":
        """``Cylinder.from_pattern([1, 2, 4], "R*B")``."""
        if len(lines) != len(pattern):
            raise ValueError("pattern length must match the number of lines")
        return cls(lines, dict(zip(lines, pattern)))

    # access

    def __getitem__(self, line: int) -> str:
        return self.cells.get(line, STAR)

    def pattern(self, lines: Sequence[int]) -> str:
        """Cells on ``lines`` as a string, ``"∅"`` for the empty cylinder."""
        return "∅" if self.empty else "".join(self[x] for x in lines)

    def is_r_cylinder(self) -> bool:
        return self.empty or all(c == R for c in self.cells.values())

    def with_cells(self, index: Iterable[int], updates: Mapping[int, str | None]) -> "Cylinder":
        """Copy onto ``index`` with some cells replaced; a ``None`` cell empties the result."""
        if self.empty or any(c is None for c in updates.values()):
            return Cylinder.empty_on(index)
        cells = dict(self.cells)
        cells.update(updates)  # type: ignore[arg-type]
        idx = frozenset(index)
        return Cylinder(idx, {k: v for k, v in cells.items() if k in idx})

    def extend(self, lines: Iterable[int]) -> "Cylinder":
        idx = self.index | frozenset(lines)
        return Cylinder.empty_on(idx) if self.empty else Cylinder(idx, self.cells)

    def permute(self, sigma: Permutation) -> "Cylinder":
        """Image under relabeling: the cell of line x moves to line sigma(x)."""
        idx = frozenset(sigma(x) for x in self.index)
        if self.empty:
            return Cylinder.empty_on(idx)
        return Cylinder(idx, {sigma(x): c for x, c in self.cells.items()})

    # identity

    def _key(self):
        return (self.index, self.empty, tuple(sorted(self.cells.items())))

    def __eq__(self, other) -> bool:
        return isinstance(other, Cylinder) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __str__(self) -> str:
        lines = sorted(self.index)
        return f"I=[{','.join(map(str, lines))}]; {self.pattern(lines)}"

    __repr__ = __str__

    @classmethod
    def parse(cls, text: str) -> "Cylinder":
        head, _, body = text.partition(";")
        head, body = head.strip(), body.strip()
        if not (head.startswith("I=[") and head.endswith("]")):
            raise ValueError(f"cannot parse cylinder {text!r}")
        inner = head[3:-1].strip()
        lines = [int(x) for x in inner.split(",")] if inner else []
        if len(set(lines)) != len(lines) or lines != sorted(lines):
            raise ValueError("index set must be sorted and duplicate-free")
        if body == "∅":
            return cls.empty_on(lines)
        return cls.from_pattern(lines, body)


def set_equal(a: Cylinder, b: Cylinder) -> bool:
    """Equality as subsets of {r, b}^[N], ignoring index sets."""
    if a.empty or b.empty:
        return a.empty and b.empty
    return a.cells == b.cells


# ---------------------------------------------------------------------------
# backward transitions


def op_coal(C: Cylinder, alpha: int, beta: int) -> Cylinder:
    """Neutral arrow: alpha copies beta, so beta must lie in both cells."""
    if alpha not in C.index or beta == alpha:
        raise ValueError("need alpha in the index set and beta != alpha")
    index = (C.index - {alpha}) | {beta}
    if C.empty:
        return Cylinder.empty_on(index)
    return C.with_cells(index, {beta: meet(C[alpha], C[beta])})


def op_mut_del(C: Cylinder, alpha: int) -> Cylinder:
    """Deleterious mutation: the result is unfit whatever came before."""
    if alpha not in C.index:
        raise ValueError("alpha must be in the index set")
    return C.with_cells(C.index, {alpha: None if C[alpha] == B else STAR})


def op_mut_ben(C: Cylinder, alpha: int) -> Cylinder:
    """Beneficial mutation: the result is fit whatever came before."""
    if alpha not in C.index:
        raise ValueError("alpha must be in the index set")
    return C.with_cells(C.index, {alpha: None if C[alpha] == R else STAR})


def op_ftw(C: Cylinder, alpha: int, parents: Iterable[int]) -> list[Cylinder]:
    """FTW selection onto alpha with potential parents ``parents``.

    Returns disjoint cylinders. When alpha must end up fit and no constrained
    parent already guarantees it, the cylinders are split by the first fit
    line among the unconstrained parents in increasing order, with alpha's own
    previous type considered last.
    """
    parents = frozenset(parents)
    if alpha not in C.index or not parents or parents == {alpha}:
        raise ValueError("need alpha in the index set and a parent set other than {alpha}")
    index = C.index | parents
    if C.empty:
        return [Cylinder.empty_on(index)]
    ca = C[alpha]
    if ca != B:
        return [C.with_cells(index, {x: meet(ca, C[x]) for x in parents | {alpha}})]
    others = parents - {alpha}
    if any(C[x] == B for x in others):
        return [C.with_cells(index, {alpha: STAR})]
    free = sorted(x for x in others if C[x] == STAR)
    out = []
    for k, x in enumerate(free):
        upd: dict[int, str | None] = {y: R for y in free[:k]}
        upd[x] = B
        upd[alpha] = STAR
        out.append(C.with_cells(index, upd))
    out.append(C.with_cells(index, {**{y: R for y in free}, alpha: B}))
    return out


def op_interactive(C: Cylinder, alpha: int, beta: int, gamma: int) -> tuple[Cylinder, Cylinder]:
    """Interactive event with incoming line beta and checking line gamma.

    The first cylinder collects configurations in which the continuing line
    alpha keeps its type, the second those in which it takes beta's type;
    which is which depends on where the checking line sits.
    """
    if alpha not in C.index or beta == alpha:
        raise ValueError("need alpha in the index set and beta != alpha")
    index = C.index | {beta, gamma}
    if C.empty:
        e = Cylinder.empty_on(index)
        return e, e
    ca, cb, cg = C[alpha], C[beta], C[gamma]
    if gamma not in (alpha, beta):
        # checking line unfit: nothing happens; fit: alpha copies beta
        first = C.with_cells(index, {gamma: meet(R, cg)})
        second = C.with_cells(index, {alpha: STAR, beta: meet(ca, cb), gamma: meet(B, cg)})
    elif gamma == alpha:
        # alpha checks itself: it copies beta iff it was fit
        first = C.with_cells(index, {alpha: B, beta: meet(ca, cb)})
        second = C.with_cells(index, {alpha: meet(R, ca)})
    else:
        # beta checks itself: alpha becomes fit iff beta is fit
        first = C.with_cells(index, {alpha: None if ca == R else STAR, beta: meet(B, cb)})
        second = C.with_cells(index, {beta: meet(R, cb)})
    return first, second


# ---------------------------------------------------------------------------
# counting and probabilities


def n_counts(C: Cylinder) -> tuple[int, int, int]:
    """(number of R cells, number of B cells, number of * cells) over the index set."""
    if C.empty:
        raise ValueError("the empty cylinder has no cells")
    nr = sum(1 for c in C.cells.values() if c == R)
    nb = len(C.cells) - nr
    return nr, nb, len(C.index) - nr - nb


def cylinder_probability(C: Cylinder, i: int, N: int) -> Fraction:
    """Probability that a uniform sample of a population with i unfit lies in C."""
    if not 0 <= i <= N:
        raise ValueError("i must lie in [0, N]")
    if C.empty:
        return Fraction(0)
    nr, nb, _ = n_counts(C)
    return Fraction(falling_factorial(i, nr) * falling_factorial(N - i, nb), falling_factorial(N, nr + nb))


def contains(C: Cylinder, config: Mapping[int, str] | str) -> bool:
    """Membership of a configuration given on the index set.

    ``config`` is either a mapping line -> 'r'/'b' or a string aligned with
    the sorted index set.
    """
    if isinstance(config, str):
        config = dict(zip(sorted(C.index), config))
    if C.empty:
        return False
    return all(_TYPE_OF[config[x]] == c for x, c in C.cells.items())


def configs_in(C: Cylinder, lines: Sequence[int]) -> Iterator[str]:
    """All configurations over ``lines`` (as strings) that lie in C."""
    if C.empty:
        return
    if any(x not in lines for x in C.cells):
        raise ValueError("lines must cover the constrained cells")
    choices = [("r",) if C[x] == R else ("b",) if C[x] == B else ("r", "b") for x in lines]
    for combo in product(*choices):
        yield "".join(combo)


def union_configs(cylinders: Iterable[Cylinder], lines: Sequence[int]) -> set[str]:
    out: set[str] = set()
    for C in cylinders:
        out.update(configs_in(C, lines))
    return out


def pairwise_disjoint(cylinders: Sequence[Cylinder]) -> bool:
    live = [C for C in cylinders if not C.empty]
    for a_pos, a in enumerate(live):
        for b in live[a_pos + 1:]:
            if all(meet(a[x], b[x]) is not None for x in a.cells.keys() | b.cells.keys()):
                return False
    return True


def union_as_r_cylinder(cylinders: Iterable[Cylinder], index: Iterable[int] | None = None) -> Cylinder | None:
    """The union as a single R-cylinder, or ``None`` if it is not one.

    The result lives on ``index`` (default: the union of the index sets).
    """
    cyls = list(cylinders)
    idx = frozenset(index) if index is not None else frozenset().union(*(C.index for C in cyls))
    live = [C for C in cyls if not C.empty]
    if not live:
        return Cylinder.empty_on(idx)
    # the smallest R-cylinder containing the union; check it is not larger
    candidate = {x for x in live[0].cells if all(C[x] == R for C in live)}
    support = sorted(set().union(*(C.cells.keys() for C in live)))
    union = union_configs(live, support)
    target = {c for c in product("rb", repeat=len(support))
              if all(c[k] == "r" for k, x in enumerate(support) if x in candidate)}
    if {"".join(c) for c in target} != union:
        return None
    return Cylinder(idx, {x: R for x in candidate})
