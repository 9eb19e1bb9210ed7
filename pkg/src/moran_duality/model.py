"""Model parameters, the graphical representation and the forward chain.

Lines are numbered ``1..N``. A type configuration is a string over ``"rb"``
whose character ``k - 1`` is the type of line ``k`` (r unfit, b fit).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .combinatorics import SelectionRates, as_fraction, s_tilde
from .permutation import Permutation

__all__ = [
    "ModelParams",
    "NeutralArrow",
    "Interactive",
    "InteractiveQuasi",
    "Selective",
    "MutDel",
    "MutBen",
    "Event",
    "EventStream",
    "RateEntry",
    "GeneratorMatrix",
    "event_rate_table",
    "event_instances",
    "sample_event_stream",
    "apply_event",
    "propagate_types",
    "x_rates",
    "generator_X",
    "simulate_counts",
    "event_to_record",
    "event_from_record",
]

Number = Union[int, float, str, Fraction]


@dataclass(frozen=True)
class ModelParams:
    """Population size and rates; all rates stored as exact rationals."""

    N: int
    r: Fraction = Fraction(0)
    kappa: Fraction = Fraction(0)
    s: SelectionRates = field(default_factory=SelectionRates)
    u: Fraction = Fraction(0)
    nu0: Fraction = Fraction(1, 2)
    nu1: Fraction | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.N, int) or isinstance(self.N, bool) or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        for name in ("r", "kappa", "u", "nu0"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        nu1 = 1 - self.nu0 if self.nu1 is None else as_fraction(self.nu1)
        object.__setattr__(self, "nu1", nu1)
        if not isinstance(self.s, SelectionRates):
            object.__setattr__(self, "s", SelectionRates(tuple(self.s)))
        if min(self.r, self.kappa, self.u) < 0:
            raise ValueError("rates must be nonnegative")
        if not (0 <= self.nu0 <= 1 and 0 <= nu1 <= 1 and self.nu0 + nu1 == 1):
            raise ValueError("nu0 and nu1 must be probabilities summing to 1")

    def with_(self, **changes) -> "ModelParams":
        data = {k: getattr(self, k) for k in ("N", "r", "kappa", "s", "u", "nu0", "nu1")}
        data.update(changes)
        if "nu0" in changes and "nu1" not in changes:
            data["nu1"] = None
        return ModelParams(**data)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "r": str(self.r),
            "kappa": str(self.kappa),
            "s": [str(x) for x in self.s.rates],
            "u": str(self.u),
            "nu0": str(self.nu0),
            "nu1": str(self.nu1),
        }


# ---------------------------------------------------------------------------
# graphical events


@dataclass(frozen=True)
class NeutralArrow:
    """Line ``alpha`` is replaced by an offspring of ``beta``."""

    alpha: int
    beta: int
    kind = "neutral"

    def __post_init__(self) -> None:
        if self.alpha == self.beta:
            raise ValueError("neutral arrow needs beta != alpha")

    def relabel(self, p: Permutation) -> "NeutralArrow":
        return NeutralArrow(p(self.alpha), p(self.beta))

    def lines(self) -> frozenset[int]:
        return frozenset((self.alpha, self.beta))


@dataclass(frozen=True)
class Interactive:
    """Incoming line ``beta`` replaces ``alpha`` iff checking line ``gamma`` is fit."""

    alpha: int
    beta: int
    gamma: int
    kind = "interactive"

    def __post_init__(self) -> None:
        if self.alpha == self.beta:
            raise ValueError("interactive event needs beta != alpha")

    def relabel(self, p: Permutation) -> "Interactive":
        return Interactive(p(self.alpha), p(self.beta), p(self.gamma))

    def lines(self) -> frozenset[int]:
        return frozenset((self.alpha, self.beta, self.gamma))


@dataclass(frozen=True)
class InteractiveQuasi:
    """An interactive event with the incoming/checking roles forgotten.

    Normal form: ``beta <= gamma``; ``beta == gamma`` stands for the pair of
    events whose checking line coincides with the continuing or incoming line.
    """

    alpha: int
    beta: int
    gamma: int
    kind = "interactive_quasi"

    def __post_init__(self) -> None:
        if not (self.beta <= self.gamma and self.alpha not in (self.beta, self.gamma)):
            raise ValueError(f"invalid quasi event {self}")

    def relabel(self, p: Permutation) -> "InteractiveQuasi":
        b, g = p(self.beta), p(self.gamma)
        return InteractiveQuasi(p(self.alpha), min(b, g), max(b, g))

    def lines(self) -> frozenset[int]:
        return frozenset((self.alpha, self.beta, self.gamma))


@dataclass(frozen=True)
class Selective:
    """FTW selection: ``alpha`` becomes fit iff some line of ``parents`` is fit."""

    alpha: int
    parents: frozenset[int]
    kind = "selective"

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", frozenset(self.parents))
        if not self.parents or self.parents == {self.alpha}:
            raise ValueError("selective event needs a parent set other than {alpha}")

    def relabel(self, p: Permutation) -> "Selective":
        return Selective(p(self.alpha), frozenset(p(x) for x in self.parents))

    def lines(self) -> frozenset[int]:
        return self.parents | {self.alpha}


@dataclass(frozen=True)
class MutDel:
    """Deleterious mutation: ``alpha`` becomes unfit."""

    alpha: int
    kind = "mut_del"

    def relabel(self, p: Permutation) -> "MutDel":
        return MutDel(p(self.alpha))

    def lines(self) -> frozenset[int]:
        return frozenset((self.alpha,))


@dataclass(frozen=True)
class MutBen:
    """Beneficial mutation: ``alpha`` becomes fit."""

    alpha: int
    kind = "mut_ben"

    def relabel(self, p: Permutation) -> "MutBen":
        return MutBen(p(self.alpha))

    def lines(self) -> frozenset[int]:
        return frozenset((self.alpha,))


Event = Union[NeutralArrow, Interactive, InteractiveQuasi, Selective, MutDel, MutBen]


def event_to_record(t: float, e: Event) -> dict:
    return {
        "t": t,
        "kind": e.kind,
        "alpha": e.alpha,
        "beta": getattr(e, "beta", None),
        "gamma": getattr(e, "gamma", None),
        "set": sorted(e.parents) if isinstance(e, Selective) else None,
    }


def event_from_record(rec: dict) -> tuple[float, Event]:
    kind = rec["kind"]
    a = rec["alpha"]
    if kind == "neutral":
        e: Event = NeutralArrow(a, rec["beta"])
    elif kind == "interactive":
        e = Interactive(a, rec["beta"], rec["gamma"])
    elif kind == "interactive_quasi":
        e = InteractiveQuasi(a, rec["beta"], rec["gamma"])
    elif kind == "selective":
        e = Selective(a, frozenset(rec["set"]))
    elif kind == "mut_del":
        e = MutDel(a)
    elif kind == "mut_ben":
        e = MutBen(a)
    else:
        raise ValueError(f"unknown event kind {kind!r}")
    return float(rec["t"]), e


@dataclass(frozen=True)
class EventStream:
    """A realization of the graphical representation on (0, horizon]."""

    N: int
    horizon: float
    events: tuple[tuple[float, Event], ...] = ()

    def __post_init__(self) -> None:
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        last = 0.0
        for t, e in events:
            if not last < t <= self.horizon:
                raise ValueError(f"event times must increase within (0, {self.horizon}]")
            last = t
            if any(not 1 <= x <= self.N for x in e.lines()):
                raise ValueError(f"event {e} uses a line outside [1, {self.N}]")

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[tuple[float, Event]]:
        return iter(self.events)

    def to_jsonl(self) -> str:
        header = {"schema_version": 1, "N": self.N, "horizon": self.horizon}
        lines = [json.dumps(header)]
        lines += [json.dumps(event_to_record(t, e)) for t, e in self.events]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "EventStream":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows or "horizon" not in rows[0]:
            raise ValueError("missing stream header")
        header = rows[0]
        return cls(int(header["N"]), float(header["horizon"]),
                   tuple(event_from_record(r) for r in rows[1:]))


# ---------------------------------------------------------------------------
# rates of the graphical representation


@dataclass(frozen=True)
class RateEntry:
    """One family of event instances sharing a per-instance rate."""

    kind: str
    order: int | None
    rate: Fraction
    count: int

    @property
    def total(self) -> Fraction:
        return self.rate * self.count


def event_rate_table(params: ModelParams) -> list[RateEntry]:
    """Per-instance rate and instance count for every event family with positive rate."""
    N = params.N
    out: list[RateEntry] = []
    if params.r and N > 1:
        out.append(RateEntry("neutral", None, params.r / (2 * N), N * (N - 1)))
    if params.kappa and N > 1:
        out.append(RateEntry("interactive", None, params.kappa / (2 * N * N), N * (N - 1) * N))
    for j in range(1, min(params.s.M, N) + 1):
        st = s_tilde(params.s, j, N)
        # (alpha, B) with |B| = j and B != {alpha}
        count = N * comb(N, j) - (N if j == 1 else 0)
        if st and count:
            out.append(RateEntry("selective", j, st / comb(N, j), count))
    if params.u * params.nu0:
        out.append(RateEntry("mut_ben", None, params.u * params.nu0, N))
    if params.u * params.nu1:
        out.append(RateEntry("mut_del", None, params.u * params.nu1, N))
    return out


def event_instances(params: ModelParams, quasi: bool = False) -> Iterator[tuple[Event, Fraction]]:
    """Enumerate every event instance with its rate (small N only).

    With ``quasi=True`` interactive events are replaced by their quasi
    images, each at the combined rate kappa / N^2.
    """
    N = params.N
    lines = range(1, N + 1)
    for entry in event_rate_table(params):
        if entry.kind == "neutral":
            for a in lines:
                for b in lines:
                    if b != a:
                        yield NeutralArrow(a, b), entry.rate
        elif entry.kind == "interactive":
            if quasi:
                for a in lines:
                    others = [x for x in lines if x != a]
                    for b in others:
                        for g in others:
                            if b <= g:
                                yield InteractiveQuasi(a, b, g), 2 * entry.rate
            else:
                for a in lines:
                    for b in lines:
                        if b == a:
                            continue
                        for g in lines:
                            yield Interactive(a, b, g), entry.rate
        elif entry.kind == "selective":
            for a in lines:
                for B in combinations(lines, entry.order):
                    if set(B) != {a}:
                        yield Selective(a, frozenset(B)), entry.rate
        elif entry.kind == "mut_ben":
            for a in lines:
                yield MutBen(a), entry.rate
        elif entry.kind == "mut_del":
            for a in lines:
                yield MutDel(a), entry.rate


def _draw_instance(entry: RateEntry, N: int, rng: np.random.Generator) -> Event:
    # documented draw order: alpha first, then the remaining coordinates
    alpha = int(rng.integers(1, N + 1))
    if entry.kind == "neutral":
        beta = int(rng.integers(1, N))
        return NeutralArrow(alpha, beta + (beta >= alpha))
    if entry.kind == "interactive":
        beta = int(rng.integers(1, N))
        gamma = int(rng.integers(1, N + 1))
        return Interactive(alpha, beta + (beta >= alpha), gamma)
    if entry.kind == "selective":
        j = int(entry.order)
        while True:
            B = frozenset(int(x) + 1 for x in rng.choice(N, size=j, replace=False))
            if B != {alpha}:
                return Selective(alpha, B)
    if entry.kind == "mut_ben":
        return MutBen(alpha)
    return MutDel(alpha)


def sample_event_stream(params: ModelParams, T: float, seed: int | np.random.Generator) -> EventStream:
    """Sample the graphical representation on (0, T].

    Waiting times are exponential with the total rate; each mark picks a
    family proportionally to its total rate and then an instance uniformly.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    table = event_rate_table(params)
    totals = np.array([float(e.total) for e in table])
    grand = totals.sum()
    events: list[tuple[float, Event]] = []
    if grand <= 0:
        return EventStream(params.N, float(T), ())
    cum = np.cumsum(totals) / grand
    t = 0.0
    while True:
        t += float(rng.exponential(1.0 / grand))
        if t > T:
            break
        idx = min(int(np.searchsorted(cum, rng.random(), side="right")), len(table) - 1)
        events.append((t, _draw_instance(table[idx], params.N, rng)))
    return EventStream(params.N, float(T), tuple(events))


# ---------------------------------------------------------------------------
# forward type propagation


def apply_event(types: dict[int, str], e: Event) -> None:
    """Apply one event forward in time to a partial type assignment, in place."""
    if isinstance(e, NeutralArrow):
        types[e.alpha] = types[e.beta]
    elif isinstance(e, Interactive):
        if types[e.gamma] == "b":
            types[e.alpha] = types[e.beta]
    elif isinstance(e, Selective):
        if any(types[x] == "b" for x in e.parents):
            types[e.alpha] = "b"
    elif isinstance(e, MutDel):
        types[e.alpha] = "r"
    elif isinstance(e, MutBen):
        types[e.alpha] = "b"
    else:
        raise TypeError(f"cannot propagate {e!r} forward; lift quasi events first")


def propagate_types(config: str, stream: EventStream | Iterable[tuple[float, Event]]) -> str:
    """Push a full type configuration through a stream, in time order."""
    if set(config) - {"r", "b"}:
        raise ValueError("configurations are strings over 'r' and 'b'")
    types = {k + 1: c for k, c in enumerate(config)}
    for _, e in stream:
        apply_event(types, e)
    return "".join(types[k + 1] for k in range(len(config)))


# ---------------------------------------------------------------------------
# the unfit-count chain


def x_rates(params: ModelParams, n: int) -> tuple[Fraction, Fraction]:
    """(up, down) rates of the number of unfit individuals in state n."""
    N = params.N
    if not 0 <= n <= N:
        raise ValueError("state out of range")
    x = Fraction(n, N)
    y = 1 - x
    up = params.r / 2 * (N - n) * x + params.kappa / 2 * (N - n) * x * y + (N - n) * params.u * params.nu1
    down = params.r / 2 * n * y + params.kappa / 2 * n * y * y + n * params.u * params.nu0
    down += sum((sm * n * (1 - x**m) for m, sm in params.s.items()), Fraction(0))
    return up, down


@dataclass(frozen=True)
class GeneratorMatrix:
    """Dense rate matrix with state labels (integers, plus ``"Delta"``)."""

    labels: tuple
    matrix: np.ndarray

    def index(self, label) -> int:
        return self.labels.index(label)

    def validate(self, atol: float = 1e-12) -> None:
        Q = np.asarray(self.matrix, dtype=float)
        off = Q - np.diag(np.diag(Q))
        if Q.shape != (len(self.labels),) * 2:
            raise ValueError("generator must be square and match its labels")
        if (off < -atol).any() or np.abs(Q.sum(axis=1)).max(initial=0.0) > atol * max(1.0, np.abs(Q).max(initial=0.0)):
            raise ValueError("not a generator: negative off-diagonal or nonzero row sum")


def build_generator(labels: Sequence, rows: dict, exact: bool) -> GeneratorMatrix:
    k = len(labels)
    pos = {lab: i for i, lab in enumerate(labels)}
    mat = np.full((k, k), Fraction(0), dtype=object) if exact else np.zeros((k, k))
    for src, targets in rows.items():
        i = pos[src]
        for dst, rate in targets.items():
            if rate:
                mat[i, pos[dst]] += rate if exact else float(rate)
                mat[i, i] -= rate if exact else float(rate)
    return GeneratorMatrix(tuple(labels), mat)


def generator_X(params: ModelParams, exact: bool = False) -> GeneratorMatrix:
    """Tridiagonal generator of the unfit count on {0, ..., N}."""
    N = params.N
    rows = {}
    for n in range(N + 1):
        up, down = x_rates(params, n)
        row = {}
        if n < N:
            row[n + 1] = up
        if n > 0:
            row[n - 1] = down
        rows[n] = row
    return build_generator(list(range(N + 1)), rows, exact)


def simulate_counts(
    params: ModelParams, i0: int, T: float, seed: int | np.random.Generator
) -> list[tuple[float, int]]:
    """Gillespie path of the unfit count; the first entry is ``(0.0, i0)``."""
    if not 0 <= i0 <= params.N:
        raise ValueError("initial count out of range")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    table = [tuple(float(x) for x in x_rates(params, n)) for n in range(params.N + 1)]
    t, n = 0.0, i0
    path = [(t, n)]
    while True:
        up, down = table[n]
        total = up + down
        if total <= 0:
            break
        t += float(rng.exponential(1.0 / total))
        if t > T:
            break
        n += 1 if rng.random() * total < up else -1
        path.append((t, n))
    return path


def count_at(path: Sequence[tuple[float, int]], t: float) -> int:
    """State of a piecewise-constant path at time t."""
    state = path[0][1]
    for s, n in path:
        if s > t:
            break
        state = n
    return state
