"""Reference tables for the interactive operator and the Frankenstein matching.

Patterns are strings over the local lines: (alpha, beta, gamma) = (1, 2, 3)
for three-line events and (alpha, beta) = (1, 2) when beta = gamma. ``None``
stands for the empty set. ``T`` in the exception table is a free type and is
expanded over R and B.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .ancestry import DOWN, UP
from .cylinders import Cylinder, cylinder_probability, op_interactive, union_configs
from .frankenstein import frankenstein_match

# C_D -> (first, second) where the two pieces differ from a split of C_D
EXCEPTIONS_TERNARY = {
    "T**": ("T*R", "*TB"),
    "TT*": ("TTR", "*TB"),
    "B*B": (None, "*BB"),
    "BBB": (None, "*BB"),
    "BRB": (None, None),
    "BR*": ("BRR", None),
    "RB*": ("RBR", None),
    "R*B": (None, "*RB"),
    "RRB": (None, "*RB"),
    "RBB": (None, None),
}
EXCEPTIONS_GAMMA_ALPHA = {
    "RR": ("BR", "RR"),
    "R*": ("BR", "R*"),
    "B*": ("BB", None),
    "BR": (None, None),
}
EXCEPTIONS_GAMMA_BETA = {
    "RB": (None, None),
    "BB": ("*B", None),
    "R*": (None, "RR"),
    "B*": ("*B", "BR"),
}


@dataclass(frozen=True)
class MatchRow:
    """One row of a matching table.

    ``flips`` is set when each branch takes its second piece from the other
    role; ``permuted`` marks the branches whose second piece is relabeled;
    ``r_changed`` marks the branches whose R-count differs from C.
    """

    local: str
    down: tuple[str | None, str | None]
    up: tuple[str | None, str | None]
    hat_down: str
    hat_up: str
    flips: bool = False
    permuted: tuple[bool, bool] = (False, False)
    r_changed: tuple[bool, bool] = (False, False)


MATCH_TERNARY = (
    MatchRow("***", ("**R", "**B"), ("*R*", "*B*"), "***", "***"),
    MatchRow("*R*", ("*RR", "*RB"), ("*R*", None), "*R*", "*R*"),
    MatchRow("**R", ("**R", None), ("*RR", "*BR"), "**R", "**R"),
    MatchRow("RRR", ("RRR", None), ("RRR", None), "RRR", "RRR"),
    MatchRow("R**", ("R*R", "*RB"), ("RR*", "*BR"), "R**", "R**", permuted=(True, True)),
    MatchRow("RR*", ("RRR", "*RB"), ("RR*", None), "RRR", "*R*",
             flips=True, permuted=(True, True), r_changed=(True, True)),
    MatchRow("R*R", ("R*R", None), ("RRR", "*BR"), "**R", "RRR",
             flips=True, permuted=(True, False), r_changed=(True, True)),
)
MATCH_BINARY = (
    MatchRow("**", ("*B", "*R"), ("B*", "R*"), "**", "**"),
    MatchRow("*R", (None, "*R"), ("BR", "RR"), "*R", "*R"),
    MatchRow("R*", (None, "RR"), ("BR", "R*"), "R*", "*R", flips=True),
    MatchRow("RR", (None, "RR"), ("BR", "RR"), "RR", "*R", r_changed=(False, True)),
)


def _expand(pattern: str) -> list[tuple[str, dict]]:
    if "T" not in pattern:
        return [(pattern, {})]
    return [(pattern.replace("T", t), {"T": t}) for t in "RB"]


def _sub(p: str | None, env: dict) -> str | None:
    if p is None:
        return None
    for k, v in env.items():
        p = p.replace(k, v)
    return p


def _pattern(C: Cylinder, lines) -> str | None:
    return None if C.empty else C.pattern(lines)


def check_exception_table() -> list[dict]:
    """Every local pattern against the exception table.

    Listed patterns must give the listed pieces; the others must split
    C_D on the incoming/checking lines (union of the two pieces equals C_D).
    """
    rows = []
    cases = [("ternary", (1, 2, 3), (1, 2, 3), EXCEPTIONS_TERNARY),
             ("gamma=alpha", (1, 2), (1, 2, 1), EXCEPTIONS_GAMMA_ALPHA),
             ("gamma=beta", (1, 2), (1, 2, 2), EXCEPTIONS_GAMMA_BETA)]
    for name, lines, event, table in cases:
        listed = {}
        for key, (a, b) in table.items():
            for p, env in _expand(key):
                listed[p] = (_sub(a, env), _sub(b, env))
        for cells in product("RB*", repeat=len(lines)):
            local = "".join(cells)
            C = Cylinder.from_pattern(lines, local)
            first, second = op_interactive(C, *event)
            got = (_pattern(first, lines), _pattern(second, lines))
            if local in listed:
                ok = got == listed[local]
                expected = listed[local]
            else:
                union = [X for X in (first, second) if not X.empty]
                ok = _union_equals(union, C, lines)
                expected = "split of C_D"
            rows.append({"case": name, "C_D": local, "listed": local in listed,
                         "expected": expected, "got": got, "ok": ok})
    return rows


def _union_equals(cyls, C, lines) -> bool:
    return union_configs(cyls, lines) == union_configs([C], lines)


def _blank(flags: tuple, k: int) -> tuple:
    return tuple(None if j == k else f for j, f in enumerate(flags))


def check_match_tables() -> list[dict]:
    """Frankenstein matching on every listed row, including its bookkeeping."""
    rows = []
    for table, (beta, gamma) in ((MATCH_TERNARY, (2, 3)), (MATCH_BINARY, (2, 2))):
        lines = (1, 2) if beta == gamma else (1, 2, 3)
        for row in table:
            C = Cylinder.from_pattern(lines, row.local)
            m = frankenstein_match(C, 1, beta, gamma)
            got = {
                "down": tuple(_pattern(X, lines) for X in m.pieces[DOWN]),
                "up": tuple(_pattern(X, lines) for X in m.pieces[UP]),
                "hat_down": m.down.pattern(lines),
                "hat_up": m.up.pattern(lines),
                "flips": m.flips,
                "permuted": (not m.sigma[DOWN].is_identity(), not m.sigma[UP].is_identity()),
                "r_changed": tuple(d != 0 for d in m.r_deltas(C)),
            }
            want = {"down": row.down, "up": row.up, "hat_down": row.hat_down, "hat_up": row.hat_up,
                    "flips": row.flips, "permuted": row.permuted, "r_changed": row.r_changed}
            # relabeling the empty set is invisible, so such marks carry no information
            for k, v in enumerate((DOWN, UP)):
                if m.pieces[m.source[v]][1].empty:
                    got["permuted"] = _blank(got["permuted"], k)
                    want["permuted"] = _blank(want["permuted"], k)
            rows.append({"C_D": row.local, "beta": beta, "gamma": gamma,
                         "expected": want, "got": got, "ok": got == want})
    return rows


def check_matching_properties(N_values=(3, 4, 5, 6)) -> list[dict]:
    """Exhaustive check over all local R-cylinders with up to three lines.

    Both Frankenstein cylinders are R-cylinders, the R-count changes follow
    the two exceptional cases, and the matching preserves the average
    sampling probability of the two role choices for every population
    composition.
    """
    rows = []
    for beta, gamma in ((2, 3), (2, 2)):
        lines = (1, 2) if beta == gamma else (1, 2, 3)
        for cells in product("R*", repeat=len(lines)):
            local = "".join(cells)
            C = Cylinder.from_pattern(lines, local)
            m = frankenstein_match(C, 1, beta, gamma)
            r_ok = m.down.is_r_cylinder() and m.up.is_r_cylinder()
            deltas = sorted(m.r_deltas(C))
            if beta < gamma and local in ("RR*", "R*R"):
                want = [-1, 1]
            elif beta == gamma and local == "RR":
                want = [-1, 0]
            else:
                want = [0, 0]
            prob_ok = True
            for N in N_values:
                for i in range(N + 1):
                    before = sum((cylinder_probability(X, i, N) for v in (DOWN, UP)
                                  for X in m.pieces[v]), Fraction(0))
                    after = cylinder_probability(m.down, i, N) + cylinder_probability(m.up, i, N)
                    prob_ok &= before == after
            rows.append({"C_D": local, "beta": beta, "gamma": gamma, "r_cylinders": r_ok,
                         "r_deltas": deltas, "expected_deltas": want,
                         "probability_preserved": prob_ok,
                         "ok": r_ok and deltas == want and prob_ok})
    return rows


__all__ = [
    "EXCEPTIONS_TERNARY",
    "EXCEPTIONS_GAMMA_ALPHA",
    "EXCEPTIONS_GAMMA_BETA",
    "MATCH_TERNARY",
    "MATCH_BINARY",
    "MatchRow",
    "check_exception_table",
    "check_match_tables",
    "check_matching_properties",
]
