"""Ancestral influence graphs and the configuration process.

Backward time is ``r = tau - s`` for forward time ``s``; the AIG started at
forward time ``tau`` with root set g0 is built over backward times [0, t].
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .combinatorics import p_mj
from .cylinders import (
    Cylinder,
    contains,
    op_coal,
    op_ftw,
    op_interactive,
    op_mut_ben,
    op_mut_del,
)
from .model import (
    Event,
    EventStream,
    Interactive,
    InteractiveQuasi,
    ModelParams,
    MutBen,
    MutDel,
    NeutralArrow,
    Selective,
    apply_event,
)

__all__ = [
    "DOWN",
    "UP",
    "flip",
    "AIG",
    "build_aig",
    "classify_interactive",
    "aig_line_count_rates",
    "forward_type_map",
    "compatible_set_bruteforce",
    "rho",
    "quasi_project",
    "lift",
    "apply_backward",
    "run_configuration_process",
    "run_configuration_on_path",
    "sample_root",
    "all_paths",
]

DOWN, UP = "down", "up"
ENUMERATION_LIMIT = 20


def flip(v: str) -> str:
    return UP if v == DOWN else DOWN


def all_paths(M: int) -> list[tuple[str, ...]]:
    return [tuple(p) for p in product((DOWN, UP), repeat=M)]


@dataclass(frozen=True)
class AIG:
    """Line sets and captured events of an ancestral influence graph.

    ``captured`` is in backward order; ``snapshots[k]`` is the line set right
    after the k-th captured event (``snapshots`` starts with the root set).
    """

    root: frozenset[int]
    horizon: float
    t: float
    captured: tuple[tuple[float, Event], ...]
    snapshots: tuple[tuple[float, frozenset[int]], ...]
    labels: tuple[str | None, ...]

    @property
    def leaves(self) -> frozenset[int]:
        return self.snapshots[-1][1]

    def line_set_at(self, r: float) -> frozenset[int]:
        current = self.root
        for when, lines in self.snapshots:
            if when > r:
                break
            current = lines
        return current

    @property
    def n_interactive(self) -> int:
        return sum(1 for _, e in self.captured if isinstance(e, (Interactive, InteractiveQuasi)))


def classify_interactive(lines: frozenset[int], e: Interactive | InteractiveQuasi) -> str:
    """Diagnostic label for an interactive event hitting a line of ``lines``."""
    a, b, g = e.alpha, e.beta, e.gamma
    if {a, b, g} <= lines:
        return "collision"
    if b not in lines and g in (a, b):
        return "binary"
    hit = len({b, g} & lines)
    return "ternary" if hit == 0 else "pairwise"


def grow(lines: frozenset[int], e: Event) -> frozenset[int]:
    """Line set after a captured event (backward in time)."""
    if isinstance(e, NeutralArrow):
        return (lines - {e.alpha}) | {e.beta}
    if isinstance(e, Selective):
        return lines | e.parents
    if isinstance(e, (Interactive, InteractiveQuasi)):
        return lines | {e.beta, e.gamma}
    return lines


def build_aig(
    stream: EventStream | Iterable[tuple[float, Event]],
    tau: float,
    g0: Iterable[int],
    t: float,
) -> AIG:
    """Time-reverse the stream at ``tau`` and follow the influencers of g0 for time t."""
    root = frozenset(g0)
    if not 0 <= t <= tau:
        raise ValueError("need 0 <= t <= tau")
    window = [(s, e) for s, e in stream if tau - t <= s <= tau]
    lines = root
    captured, snaps, labels = [], [(0.0, root)], []
    for s, e in sorted(window, key=lambda x: -x[0]):
        if e.alpha not in lines:
            continue
        r = tau - s
        label = classify_interactive(lines, e) if isinstance(e, (Interactive, InteractiveQuasi)) else None
        lines = grow(lines, e)
        captured.append((r, e))
        snaps.append((r, lines))
        labels.append(label)
    return AIG(root, float(tau), float(t), tuple(captured), tuple(snaps), tuple(labels))


def aig_line_count_rates(params: ModelParams, n: int) -> dict[int, Fraction]:
    """Jump rates of the number of AIG lines in state n."""
    N, k = params.N, params.kappa
    if not 1 <= n <= N:
        raise ValueError("need 1 <= n <= N")
    sel = {j: n * sum((sm * p_mj(N, n, m, j) for m, sm in params.s.items() if m >= j), Fraction(0))
           for j in range(1, N - n + 1)}
    rates = {j: v for j, v in sel.items() if j >= 3}
    rates[2] = k / N * Fraction(n, N) * comb(N - n, 2) + sel.get(2, Fraction(0))
    rates[1] = (2 * k / N * comb(n, 2) * Fraction(N - n, N) + k / N * n * Fraction(N - n, N)
                + sel.get(1, Fraction(0)))
    rates[-1] = params.r / N * comb(n, 2)
    return {j: v for j, v in sorted(rates.items()) if v}


# ---------------------------------------------------------------------------
# forward maps and the brute-force oracle


def forward_type_map(aig: AIG, leaf_config: Mapping[int, str]) -> dict[int, str]:
    """Types at the root set given types on the leaf set."""
    if set(leaf_config) != set(aig.leaves):
        raise ValueError("leaf configuration must be given exactly on the leaf set")
    types = dict(leaf_config)
    for _, e in reversed(aig.captured):
        apply_event(types, e)
    return {x: types[x] for x in aig.root}


def compatible_set_bruteforce(aig: AIG, S: Cylinder) -> set[str]:
    """Leaf configurations (strings over the sorted leaf set) mapped into S."""
    leaves = sorted(aig.leaves)
    if len(leaves) > ENUMERATION_LIMIT:
        raise ValueError(f"leaf set too large for enumeration ({len(leaves)} > {ENUMERATION_LIMIT})")
    out = set()
    for combo in product("rb", repeat=len(leaves)):
        root = forward_type_map(aig, dict(zip(leaves, combo)))
        if contains(S, root):
            out.add("".join(combo))
    return out


# ---------------------------------------------------------------------------
# quasi events


def rho(e: Event) -> Event:
    """Forget the incoming/checking roles of an interactive event."""
    if not isinstance(e, Interactive):
        return e
    a, b, g = e.alpha, e.beta, e.gamma
    if g in (a, b):
        return InteractiveQuasi(a, b, b)
    return InteractiveQuasi(a, min(b, g), max(b, g))


def quasi_project(stream: EventStream | Iterable[tuple[float, Event]]):
    if isinstance(stream, EventStream):
        return EventStream(stream.N, stream.horizon, tuple((t, rho(e)) for t, e in stream))
    return [(t, rho(e)) for t, e in stream]


def lift(e: Event, v: str) -> Event:
    """Resolve a quasi event along role choice ``v``; other events pass through."""
    if not isinstance(e, InteractiveQuasi):
        return e
    a, b, g = e.alpha, e.beta, e.gamma
    if b < g:
        return Interactive(a, b, g) if v == DOWN else Interactive(a, g, b)
    return Interactive(a, b, b) if v == DOWN else Interactive(a, b, a)


# ---------------------------------------------------------------------------
# the configuration process


def apply_backward(C: Cylinder, e: Event) -> list[Cylinder]:
    """Backward transition of one cylinder under one resolved event."""
    if isinstance(e, NeutralArrow):
        return [op_coal(C, e.alpha, e.beta)]
    if isinstance(e, Interactive):
        return list(op_interactive(C, e.alpha, e.beta, e.gamma))
    if isinstance(e, Selective):
        return op_ftw(C, e.alpha, e.parents)
    if isinstance(e, MutDel):
        return [op_mut_del(C, e.alpha)]
    if isinstance(e, MutBen):
        return [op_mut_ben(C, e.alpha)]
    raise TypeError(f"quasi event {e} must be lifted first")


def _run(S: Cylinder, events: Sequence[Event], path: Sequence[str] | None) -> list[Cylinder]:
    current = [S]
    lines = S.index
    k = 0
    for e in events:
        if e.alpha not in lines:
            continue
        if isinstance(e, InteractiveQuasi):
            if path is None:
                raise TypeError("quasi events need a path")
            if k >= len(path):
                raise ValueError("path exhausted")
            e = lift(e, path[k])
            k += 1
        current = [D for C in current for D in apply_backward(C, e)]
        lines = grow(lines, e)
    return current


def _backward_events(source: AIG | Iterable[tuple[float, Event]]) -> list[Event]:
    if isinstance(source, AIG):
        return [e for _, e in source.captured]
    return [e for _, e in source]


def run_configuration_process(S: Cylinder, source: AIG | Iterable[tuple[float, Event]]) -> list[Cylinder]:
    """All leaf cylinders compatible with S (empties retained).

    ``source`` is an AIG or a sequence of (backward time, event) in backward
    order; events whose tip is outside the current line set are skipped.
    """
    return _run(S, _backward_events(source), None)


def run_configuration_on_path(
    S: Cylinder, v: Sequence[str], source: AIG | Iterable[tuple[float, Event]]
) -> list[Cylinder]:
    """Configuration process with the k-th captured quasi event lifted along v[k]."""
    return _run(S, _backward_events(source), v)


def sample_root(N: int, n: int, seed: int | np.random.Generator) -> frozenset[int]:
    """Uniform n-subset of [N]."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return frozenset(int(x) + 1 for x in rng.choice(N, size=n, replace=False))
