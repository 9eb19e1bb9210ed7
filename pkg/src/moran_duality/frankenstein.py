"""Frankenstein matching and the processes built from it.

At an interactive event the configuration process splits a cylinder into
two pieces for each role choice. The Frankenstein matching recombines the
four pieces, after relabeling some of them, into two R-cylinders, one per
branch ``DOWN``/``UP``. Following one branch per event gives a single
R-cylinder whose R count is the factorial dual chain.

Branches of the Frankenstein process are labeled with the same two symbols
as role choices; the identification between them is the identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .ancestry import DOWN, UP, AIG, apply_backward, flip, lift, rho
from .combinatorics import p_mj
from .cylinders import R, Cylinder, n_counts, op_interactive, set_equal, union_as_r_cylinder
from .model import (
    Event,
    GeneratorMatrix,
    InteractiveQuasi,
    ModelParams,
    build_generator,
    event_instances,
)
from .permutation import IDENTITY, Permutation

__all__ = [
    "DELTA",
    "Match",
    "f_map",
    "frankenstein_match",
    "frankenstein_step",
    "run_frankenstein_on_path",
    "run_frankenstein",
    "z_rates",
    "r_counting_generator",
    "simulate_dual_counts",
    "induced_rate_check",
    "MessyState",
    "run_messy",
    "assemble",
]

DELTA = "Delta"


def _resolved(alpha: int, beta: int, gamma: int, v: str) -> tuple[int, int, int]:
    e = lift(InteractiveQuasi(alpha, beta, gamma), v)
    return e.alpha, e.beta, e.gamma


def _local(C: Cylinder, alpha: int, beta: int, gamma: int) -> str:
    return "".join(C[x] for x in ((alpha, beta) if beta == gamma else (alpha, beta, gamma)))


def f_map(C: Cylinder, alpha: int, beta: int, gamma: int, v: str) -> str:
    """Which role choice supplies the second piece for branch v."""
    local = _local(C, alpha, beta, gamma)
    swap = C[alpha] == R and local.count(R) == len(local) - 1
    return flip(v) if swap else v


@dataclass(frozen=True)
class Match:
    """Result of a Frankenstein matching, with the bookkeeping that produced it.

    ``pieces[v]`` is the pair from the configuration operator for role v,
    ``sigma[v]`` the relabeling applied to the second piece sent to branch v,
    and ``source[v]`` the role whose second piece is sent there.
    """

    down: Cylinder
    up: Cylinder
    pieces: dict
    source: dict
    sigma: dict
    flips: bool

    def __getitem__(self, v: str) -> Cylinder:
        return self.down if v == DOWN else self.up

    def r_deltas(self, C: Cylinder) -> tuple[int | None, int | None]:
        base = n_counts(C)[0]
        return tuple(None if X.empty else n_counts(X)[0] - base for X in (self.down, self.up))


def frankenstein_match(C: Cylinder, alpha: int, beta: int, gamma: int) -> Match:
    """Recombine the interactive-event pieces of an R-cylinder into two R-cylinders."""
    if not C.is_r_cylinder() or C.empty:
        raise ValueError("Frankenstein matching needs a nonempty R-cylinder")
    if alpha not in C.index or not (beta <= gamma and alpha not in (beta, gamma)):
        raise ValueError("need alpha in the index set and alpha != beta <= gamma != alpha")
    index = C.index | {beta, gamma}
    pieces = {v: op_interactive(C, *_resolved(alpha, beta, gamma, v)) for v in (DOWN, UP)}
    source = {v: f_map(C, alpha, beta, gamma, v) for v in (DOWN, UP)}
    full = C.extend(index)
    sigma = {}
    out = {}
    for v in (DOWN, UP):
        first, _ = pieces[v]
        src = source[v]
        union_ok = union_as_r_cylinder(pieces[src], index)
        intact = union_ok is not None and set_equal(union_ok, full)
        if beta == gamma or intact:
            sigma[v] = IDENTITY
        else:
            sigma[v] = Permutation.transposition(alpha, beta if v == DOWN else gamma)
        second = pieces[src][1].permute(sigma[v])
        merged = union_as_r_cylinder([first, second], index)
        if merged is None:
            raise AssertionError(f"matching of {C} at ({alpha},{beta},{gamma}) is not an R-cylinder")
        out[v] = merged
    return Match(out[DOWN], out[UP], pieces, source, sigma, source[DOWN] != DOWN)


@lru_cache(maxsize=None)
def _local_step(local: str, w: str) -> str:
    lines = (1, 2) if len(local) == 2 else (1, 2, 3)
    C = Cylinder.from_pattern(lines, local)
    beta, gamma = (2, 2) if len(local) == 2 else (2, 3)
    return frankenstein_match(C, 1, beta, gamma)[w].pattern(lines)


def frankenstein_step(C: Cylinder, e: InteractiveQuasi, w: str) -> Cylinder:
    """Branch w of the matching; only the cells of the event's lines change."""
    a, b, g = e.alpha, e.beta, e.gamma
    lines = (a, b) if b == g else (a, b, g)
    new = _local_step(_local(C, a, b, g), w)
    return C.with_cells(C.index | {b, g}, dict(zip(lines, new)))


def _events(source: AIG | Iterable[tuple[float, Event]]) -> list[Event]:
    pairs = source.captured if isinstance(source, AIG) else source
    return [rho(e) for _, e in pairs]


def _frankenstein(root: Cylinder, events: Sequence[Event], next_branch) -> Cylinder:
    C = root
    for e in events:
        if C.empty:
            break
        if e.alpha not in C.index:
            continue
        if isinstance(e, InteractiveQuasi):
            C = frankenstein_step(C, e, next_branch())
        else:
            (C,) = apply_backward(C, e)
    return C


def run_frankenstein_on_path(root: Cylinder, w: Sequence[str], source) -> Cylinder:
    """Frankenstein cylinder along branch sequence w; interactive events are read as quasi events."""
    it = iter(w)

    def branch() -> str:
        try:
            return next(it)
        except StopIteration:
            raise ValueError("path exhausted") from None

    return _frankenstein(root, _events(source), branch)


def run_frankenstein(root: Cylinder, source, seed: int | np.random.Generator) -> Cylinder:
    """Frankenstein process with independent fair branch choices."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _frankenstein(root, _events(source), lambda: DOWN if rng.random() < 0.5 else UP)


# ---------------------------------------------------------------------------
# the R-counting chain


def z_rates(params: ModelParams, n: int) -> dict[int | str, Fraction]:
    """Jump rates of the factorial dual chain from state n (targets n+j, n-1, Delta)."""
    N, r, k = params.N, params.r, params.kappa
    if not 0 <= n <= N:
        raise ValueError("state out of range")
    out: dict[int | str, Fraction] = {}
    for j in range(1, N - n + 1):
        rate = n * sum((sm * p_mj(N, n, m, j) for m, sm in params.s.items() if m >= j), Fraction(0))
        if j == 1:
            rate += k / N * comb(n, 2) * Fraction(N - n, N)
        if rate:
            out[n + j] = rate
    down = Fraction(comb(n, 2), N) * (r + k * Fraction(N - n + 1, N)) + params.u * params.nu1 * n
    if down and n > 0:
        out[n - 1] = down
    if params.u * params.nu0 * n:
        out[DELTA] = params.u * params.nu0 * n
    return out


def r_counting_generator(params: ModelParams, exact: bool = False) -> GeneratorMatrix:
    labels = list(range(params.N + 1)) + [DELTA]
    rows = {n: z_rates(params, n) for n in range(params.N + 1)}
    rows[DELTA] = {}
    return build_generator(labels, rows, exact)


def simulate_dual_counts(
    params: ModelParams, n0: int, T: float, seed: int | np.random.Generator
) -> list[tuple[float, int | str]]:
    """Gillespie path of the factorial dual chain; the first entry is ``(0.0, n0)``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    table = {}
    t, n = 0.0, n0
    path: list[tuple[float, int | str]] = [(t, n)]
    while n != DELTA:
        if n not in table:
            rates = z_rates(params, n)
            table[n] = (list(rates), np.cumsum([float(q) for q in rates.values()]))
        targets, cum = table[n]
        if not targets:
            break
        t += float(rng.exponential(1.0 / cum[-1]))
        if t > T:
            break
        k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        n = targets[min(k, len(targets) - 1)]
        path.append((t, n))
    return path


def induced_rate_check(params: ModelParams, n: int, stars: int | None = None) -> list[dict]:
    """Aggregate the R-count jumps of one Frankenstein step over all event instances.

    The cylinder has R on lines 1..n and ``stars`` further star cells inside
    its index set (default: none, so the remaining lines lie outside it).
    Returns one report row per target state.
    """
    N = params.N
    if not 1 <= n <= N:
        raise ValueError("need 1 <= n <= N")
    stars = 0 if stars is None else stars
    if not 0 <= stars <= N - n:
        raise ValueError("too many star cells")
    C = Cylinder(range(1, n + stars + 1), {x: R for x in range(1, n + 1)})
    induced: dict[int | str, Fraction] = {}
    for e, rate in event_instances(params, quasi=True):
        if e.alpha not in C.index:
            continue
        if isinstance(e, InteractiveQuasi):
            outcomes = [(frankenstein_step(C, e, w), rate / 2) for w in (DOWN, UP)]
        else:
            (D,) = apply_backward(C, e)
            outcomes = [(D, rate)]
        for D, q in outcomes:
            target = DELTA if D.empty else n_counts(D)[0]
            if target != n:
                induced[target] = induced.get(target, Fraction(0)) + q
    expected = z_rates(params, n)
    report = []
    for target in sorted(set(expected) | set(induced), key=lambda x: (isinstance(x, str), x)):
        e_rate = expected.get(target, Fraction(0))
        c_rate = induced.get(target, Fraction(0))
        report.append({
            "state": n,
            "target": target,
            "expected_rate": str(e_rate),
            "computed_rate": str(c_rate),
            "equal": e_rate == c_rate,
        })
    return report


# ---------------------------------------------------------------------------
# the messy process


@dataclass
class MessyState:
    """Pairs (cylinder, relabeling) tracked alongside the Frankenstein cylinder."""

    pairs: list[tuple[Cylinder, Permutation]]
    frankenstein: Cylinder
    consumed: int = 0
    history: list[list[tuple[Cylinder, Permutation]]] = field(default_factory=list)


def run_messy(root: Cylinder, w: Sequence[str], source) -> MessyState:
    """Messy process along branch sequence w.

    Each pair evolves under the event stream relabeled by the inverse of its
    permutation. At the k-th interactive event every pair is split into the
    two matching pieces for branch w[k], read in the pair's own labels.
    ``history`` keeps the pairs right after each interactive event.
    """
    if not root.is_r_cylinder():
        raise ValueError("the messy process starts from an R-cylinder")
    state = MessyState([(root, IDENTITY)], root)
    for e in _events(source):
        F = state.frankenstein
        if e.alpha not in F.index:
            continue
        if isinstance(e, InteractiveQuasi):
            if state.consumed >= len(w):
                raise ValueError("path exhausted")
            v = w[state.consumed]
            if F.empty:
                # absorbed: all pieces are already empty and stay so
                flips, sigma_k = False, IDENTITY
                F_next = Cylinder.empty_on(F.index | {e.beta, e.gamma})
            else:
                match = frankenstein_match(F, e.alpha, e.beta, e.gamma)
                flips, sigma_k, F_next = match.flips, match.sigma[v], match[v]
            new_pairs = []
            for C, s in state.pairs:
                si = s.inverse()
                a, b, g = si(e.alpha), si(e.beta), si(e.gamma)
                lo, hi = min(b, g), max(b, g)
                v_own = v if b <= g else flip(v)
                src = flip(v_own) if flips else v_own
                if a not in C.index:
                    raise AssertionError("relabeled event misses its cylinder")
                first = op_interactive(C, *_resolved(a, lo, hi, v_own))[0]
                second = op_interactive(C, *_resolved(a, lo, hi, src))[1]
                new_pairs += [(first, s), (second, sigma_k @ s)]
            state.pairs = new_pairs
            state.frankenstein = F_next
            state.consumed += 1
            state.history.append(list(new_pairs))
        else:
            new_pairs = []
            for C, s in state.pairs:
                own = e.relabel(s.inverse())
                if own.alpha not in C.index:
                    raise AssertionError("relabeled event misses its cylinder")
                new_pairs += [(D, s) for D in apply_backward(C, own)]
            state.pairs = new_pairs
            (state.frankenstein,) = apply_backward(F, e)
    return state


def assemble(state: MessyState | Sequence[tuple[Cylinder, Permutation]]) -> Cylinder:
    """Union of the relabeled pieces; raises if it is not a single R-cylinder."""
    pairs = state.pairs if isinstance(state, MessyState) else list(state)
    pieces = [C.permute(s) for C, s in pairs]
    union = union_as_r_cylinder(pieces)
    if union is None:
        raise AssertionError("messy pieces do not assemble to an R-cylinder")
    return union

