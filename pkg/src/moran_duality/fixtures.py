"""AIG fixtures: JSON round-trip, seeded generation, bundled examples, replay."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import numpy as np

from .ancestry import (
    AIG,
    all_paths,
    build_aig,
    compatible_set_bruteforce,
    grow,
    quasi_project,
    run_configuration_on_path,
    run_configuration_process,
)
from .cylinders import Cylinder, union_configs
from .frankenstein import run_frankenstein_on_path, run_messy
from .model import (
    Event,
    Interactive,
    InteractiveQuasi,
    ModelParams,
    MutBen,
    MutDel,
    NeutralArrow,
    Selective,
    event_from_record,
    event_to_record,
    sample_event_stream,
)

SCHEMA_VERSION = 1
BUNDLED = ("pairwise", "two-events")


class FixtureError(ValueError):
    """Malformed fixture document."""


@dataclass(frozen=True)
class AIGFixture:
    """Events in forward time on (0, horizon]; the AIG is built at tau = horizon over time t."""

    N: int
    root: frozenset[int]
    horizon: float
    t: float
    events: tuple[tuple[float, Event], ...]
    name: str = ""
    expected: dict | None = field(default=None, compare=False)

    def aig(self) -> AIG:
        return build_aig(self.events, self.horizon, self.root, self.t)

    def backward(self) -> list[tuple[float, Event]]:
        """Captured events as (backward time, event) in backward order."""
        return list(self.aig().captured)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "N": self.N,
            "root": sorted(self.root),
            "horizon": self.horizon,
            "t": self.t,
            "events": [event_to_record(s, e) for s, e in self.events],
        }
        if self.expected is not None:
            out["expected"] = self.expected
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "AIGFixture":
        try:
            if doc.get("schema_version") != SCHEMA_VERSION:
                raise FixtureError(f"unsupported schema_version {doc.get('schema_version')!r}")
            N = int(doc["N"])
            root = frozenset(int(x) for x in doc["root"])
            horizon, t = float(doc["horizon"]), float(doc["t"])
            events = tuple(event_from_record(r) for r in doc["events"])
        except FixtureError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FixtureError(f"malformed fixture: {exc!r}") from exc
        lines = set(range(1, N + 1))
        if not root or not root <= lines:
            raise FixtureError("root must be a nonempty subset of 1..N")
        if not 0 <= t <= horizon:
            raise FixtureError("need 0 <= t <= horizon")
        for s, e in events:
            if not 0 < s <= horizon:
                raise FixtureError(f"event time {s} outside (0, horizon]")
            if not set(e.lines()) <= lines:
                raise FixtureError(f"event {e} uses lines outside 1..N")
        return cls(N, root, horizon, t, events, str(doc.get("name", "")), doc.get("expected"))

    @classmethod
    def from_json(cls, text: str) -> "AIGFixture":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FixtureError(f"invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise FixtureError("fixture must be a JSON object")
        return cls.from_dict(doc)


def load_bundled(name: str) -> AIGFixture:
    if name not in BUNDLED:
        raise KeyError(f"no bundled fixture {name!r}; choose from {BUNDLED}")
    text = resources.files("moran_duality").joinpath("data").joinpath(f"{name}.json").read_text()
    return AIGFixture.from_json(text)


# ---------------------------------------------------------------------------
# seeded generation


def _other(a: int, N: int, rng: np.random.Generator) -> int:
    return int(rng.choice([x for x in range(1, N + 1) if x != a]))


def _random_event(rng: np.random.Generator, N: int, kind: str, a: int) -> Event:
    if kind == "neutral":
        return NeutralArrow(a, _other(a, N, rng))
    if kind == "interactive":
        return Interactive(a, _other(a, N, rng), int(rng.integers(1, N + 1)))
    if kind == "interactive_quasi":
        others = [x for x in range(1, N + 1) if x != a]
        b, g = sorted(int(x) for x in rng.choice(others, size=2, replace=True))
        return InteractiveQuasi(a, b, g)
    if kind == "selective":
        while True:
            size = int(rng.integers(1, N + 1))
            parents = frozenset(int(x) + 1 for x in rng.choice(N, size=size, replace=False))
            if parents != {a}:
                return Selective(a, parents)
    if kind == "mut_del":
        return MutDel(a)
    if kind == "mut_ben":
        return MutBen(a)
    raise ValueError(f"unknown event kind {kind!r}")


ALL_KINDS = ("neutral", "interactive", "selective", "mut_del", "mut_ben")


def random_fixture(
    seed: int | np.random.Generator,
    max_N: int = 6,
    max_events: int = 8,
    max_interactive: int | None = None,
    kinds: tuple[str, ...] = ALL_KINDS,
    root_size: int | None = None,
) -> AIGFixture:
    """A small fixture with uniformly drawn events; every event hits a current line.

    Events are drawn backward from the root so that each one is captured.
    With ``max_interactive`` set, interactive events beyond that count are
    replaced by a neutral arrow.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    N = int(rng.integers(2, max_N + 1))
    k = root_size if root_size is not None else int(rng.integers(1, N + 1))
    root = frozenset(int(x) + 1 for x in rng.choice(N, size=min(k, N), replace=False))
    n_events = int(rng.integers(0, max_events + 1))
    lines = root
    backward: list[Event] = []
    n_int = 0
    for _ in range(n_events):
        kind = kinds[int(rng.integers(len(kinds)))]
        a = int(rng.choice(sorted(lines)))
        if kind.startswith("interactive"):
            if max_interactive is not None and n_int >= max_interactive:
                kind = "neutral"
            else:
                n_int += 1
        e = _random_event(rng, N, kind, a)
        backward.append(e)
        lines = grow(lines, e)
    # the k-th backward event sits at forward time 1 - (k + 1)/(n + 1)
    times = 1.0 - (np.arange(len(backward)) + 1.0) / (len(backward) + 1.0)
    events = tuple((float(s), e) for s, e in reversed(list(zip(times, backward))))
    return AIGFixture(N, root, 1.0, 1.0, events, name=f"random-{N}")


def record_fixture(params: ModelParams, horizon: float, root, seed: int, t: float | None = None) -> AIGFixture:
    """Fixture from a sampled event stream, with its derived objects as ``expected``."""
    stream = sample_event_stream(params, horizon, seed)
    fx = AIGFixture(params.N, frozenset(root), float(horizon),
                    float(horizon if t is None else t), tuple(stream.events), name=f"seed-{seed}")
    return AIGFixture(fx.N, fx.root, fx.horizon, fx.t, fx.events, fx.name, derive(fx))


# ---------------------------------------------------------------------------
# replay


def derive(fx: AIGFixture, max_paths: int = 64) -> dict:
    """Objects derived from a fixture, in a JSON-friendly form."""
    aig = fx.aig()
    S = Cylinder.all_r(fx.root)
    leaves = sorted(aig.leaves)
    out: dict[str, Any] = {
        "leaves": leaves,
        "labels": [x for x in aig.labels if x is not None],
        "captured": len(aig.captured),
    }
    has_quasi = any(isinstance(e, InteractiveQuasi) for _, e in aig.captured)
    if len(leaves) <= 12 and not has_quasi:
        cyls = run_configuration_process(S, aig)
        out["configuration"] = sorted(union_configs(cyls, leaves))
        out["compatible"] = sorted(compatible_set_bruteforce(aig, S))
    quasi = quasi_project(list(aig.captured))
    M = sum(isinstance(e, InteractiveQuasi) for _, e in quasi)
    if 2**M <= max_paths:
        paths = {}
        for w in all_paths(M):
            F = run_frankenstein_on_path(S, w, quasi)
            state = run_messy(S, w, quasi)
            paths[",".join(w)] = {
                "configuration": [str(C) for C in run_configuration_on_path(S, w, quasi)],
                "frankenstein": str(F),
                "messy": [[str(C), str(p)] for C, p in state.pairs],
            }
        out["paths"] = paths
    return out


def replay(fx: AIGFixture) -> tuple[bool, list[str]]:
    """Re-derive everything and compare with ``expected``; returns (ok, differences)."""
    if fx.expected is None:
        raise FixtureError("fixture has no expected section to replay against")
    got = derive(fx)
    diffs = []
    for key, want in fx.expected.items():
        if key not in got:
            diffs.append(f"{key}: not derivable")
        elif got[key] != want:
            diffs.append(f"{key}: expected {want!r}, got {got[key]!r}")
    return not diffs, diffs
