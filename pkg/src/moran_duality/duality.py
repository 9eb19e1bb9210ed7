"""Numerical checks of the duality between the unfit count and the R-counting chain.

Exact checks use dense generators and uniformization; Monte Carlo checks
report standard errors. The diffusion-scale part simulates the limiting SDE
and the limiting dual chain.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import poisson

from .ancestry import (
    DOWN,
    UP,
    all_paths,
    apply_backward,
    build_aig,
    grow,
    lift,
    quasi_project,
    run_configuration_on_path,
    sample_root,
)
from .combinatorics import SelectionRates, as_fraction, falling_factorial, p_mj
from .cylinders import Cylinder, cylinder_probability, n_counts, set_equal
from .frankenstein import (
    DELTA,
    assemble,
    frankenstein_step,
    r_counting_generator,
    run_frankenstein,
    run_frankenstein_on_path,
    run_messy,
    z_rates,
)
from .model import (
    Event,
    GeneratorMatrix,
    InteractiveQuasi,
    build_generator,
    ModelParams,
    count_at,
    generator_X,
    sample_event_stream,
    simulate_counts,
    x_rates,
)
from .permutation import all_permutations

__all__ = [
    "DualityReport",
    "SDEParams",
    "expm_apply",
    "factorial_h",
    "lhs_factorial",
    "rhs_factorial",
    "check_factorial_duality",
    "mc_factorial_duality",
    "PathAverageReport",
    "check_path_average_identity",
    "simulate_sde",
    "z_limit_rates",
    "simulate_Z_limit",
    "sde_path",
    "z_limit_path",
    "check_moment_duality_mc",
    "generator_convergence_report",
    "generator_X",
    "dual_generator_from_parts",
    "r_counting_generator",
]

REPORT_COLUMNS = ("t", "i", "n", "lhs", "rhs", "residual", "se_lhs", "se_rhs", "method")


# ---------------------------------------------------------------------------
# uniformization


def expm_apply(Q: GeneratorMatrix | np.ndarray, t: float, f: Sequence[float], tol: float = 1e-13) -> np.ndarray:
    """e^{tQ} f by uniformization, accurate to ``tol`` times the sup norm of f."""
    M = np.asarray(Q.matrix if isinstance(Q, GeneratorMatrix) else Q, dtype=float)
    f = np.asarray(f, dtype=float)
    if t < 0 or tol <= 0:
        raise ValueError("need t >= 0 and tol > 0")
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != f.shape[0]:
        raise ValueError("shape mismatch")
    off = M - np.diag(np.diag(M))
    scale = max(1.0, np.abs(M).max(initial=0.0))
    if (off < -1e-12 * scale).any() or np.abs(M.sum(axis=1)).max(initial=0.0) > 1e-9 * scale:
        raise ValueError("not a generator")
    lam = float(np.abs(np.diag(M)).max(initial=0.0))
    if t == 0 or lam == 0:
        return f.copy()
    P = np.eye(len(f)) + M / lam
    mu = lam * t
    # smallest K whose Poisson tail beyond K is below tol
    K = int(poisson.isf(tol, mu)) + 1
    while poisson.sf(K, mu) >= tol:
        K += 1
    weights = poisson.pmf(np.arange(K + 1), mu)
    out = np.zeros_like(f)
    term = f.copy()
    for k in range(K + 1):
        out += weights[k] * term
        term = P @ term
    return out


# ---------------------------------------------------------------------------
# exact factorial duality


def factorial_h(i: int, n: int | str, N: int) -> float:
    """i^{(n)}/N^{(n)} with falling factorials; zero at the cemetery state."""
    if n == DELTA:
        return 0.0
    return falling_factorial(i, n) / falling_factorial(N, n)


@dataclass
class DualityReport:
    """Grid of duality comparisons."""

    method: str
    params: dict
    rows: list[dict] = field(default_factory=list)
    tol: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max((r["residual"] for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        if self.method == "exact":
            return self.tol is not None and self.max_residual < self.tol
        return all(r["residual"] < 4 * math.hypot(r["se_lhs"], r["se_rhs"]) or r["residual"] == 0
                   for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "params": self.params,
            "tol": self.tol,
            "max_residual": self.max_residual,
            "passed": self.passed,
            "rows": self.rows,
            **({"extra": self.extra} if self.extra else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self, schema_version: int = 1) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(("schema_version",) + REPORT_COLUMNS)
        for r in self.rows:
            writer.writerow([schema_version] + [_fmt(r[c]) for c in REPORT_COLUMNS])
        return buf.getvalue()


def _fmt(x):
    return repr(x) if isinstance(x, float) else x


def _row(t, i, n, lhs, rhs, method, se_lhs=0.0, se_rhs=0.0) -> dict:
    return {"t": float(t), "i": i, "n": n, "lhs": float(lhs), "rhs": float(rhs),
            "residual": abs(float(lhs) - float(rhs)), "se_lhs": float(se_lhs),
            "se_rhs": float(se_rhs), "method": method}


def lhs_factorial(params: ModelParams, t: float, i: int, n: int | str, tol: float = 1e-13) -> float:
    """E[X_t^{(n)}/N^{(n)} | X_0 = i] from the forward generator."""
    N = params.N
    h = [factorial_h(x, n, N) for x in range(N + 1)]
    return float(expm_apply(generator_X(params), t, h, tol)[i])


def rhs_factorial(params: ModelParams, t: float, i: int, n: int | str, tol: float = 1e-13) -> float:
    """E[i^{(Z_t)}/N^{(Z_t)} | Z_0 = n] from the dual generator."""
    Q = r_counting_generator(params)
    g = [factorial_h(i, z, params.N) for z in Q.labels]
    return float(expm_apply(Q, t, g, tol)[Q.index(n)])


def check_factorial_duality(
    params: ModelParams, ts: Iterable[float], tol: float = 1e-10, expm_tol: float = 1e-13
) -> DualityReport:
    """Both sides of the factorial duality for every (t, i, n) on the grid."""
    N = params.N
    QX, QZ = generator_X(params), r_counting_generator(params)
    report = DualityReport("exact", params.to_dict(), tol=tol)
    for t in ts:
        lhs = {n: expm_apply(QX, t, [factorial_h(x, n, N) for x in range(N + 1)], expm_tol)
               for n in QZ.labels}
        rhs = {i: expm_apply(QZ, t, [factorial_h(i, z, N) for z in QZ.labels], expm_tol)
               for i in range(N + 1)}
        for i in range(N + 1):
            for k, n in enumerate(QZ.labels):
                report.rows.append(_row(t, i, n, lhs[n][i], rhs[i][k], "exact"))
    return report


def dual_generator_from_parts(params: ModelParams) -> GeneratorMatrix:
    """The dual generator assembled as neutral + mutation + one part per selection order.

    An independent route to ``r_counting_generator``, applied to the indicator
    functions of the states.
    """
    N, r, k, u = params.N, params.r, params.kappa, params.u
    labels = list(range(N + 1)) + [DELTA]
    rows: dict = {x: {} for x in labels}

    def add(n, target, rate):
        if rate and target != n:
            rows[n][target] = rows[n].get(target, Fraction(0)) + rate

    for n in range(N + 1):
        add(n, n + 1, k / N * comb(n, 2) * Fraction(N - n, N))
        add(n, n - 1, Fraction(1, N) * comb(n, 2) * (r + k * Fraction(N - (n - 1), N)))
        add(n, DELTA, u * params.nu0 * n)
        add(n, n - 1, u * params.nu1 * n)
        for m, sm in params.s.items():
            for j in range(1, m + 1):
                if n + j <= N:
                    add(n, n + j, sm * n * p_mj(N, n, m, j))
    return build_generator(labels, rows, exact=True)


# ---------------------------------------------------------------------------
# Monte Carlo factorial duality

CHUNK = 2000


def _mc_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    params, t, i, n, count, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    N = params.N
    lhs = np.empty(count)
    rhs = np.empty(count)
    for k in range(count):
        path = simulate_counts(params, i, t, rng)
        lhs[k] = factorial_h(count_at(path, t), n, N)
        stream = quasi_project(sample_event_stream(params, t, rng))
        root = sample_root(N, n, rng)
        aig = build_aig(stream, t, root, t)
        C = run_frankenstein(Cylinder.all_r(root), aig, rng)
        rhs[k] = 0.0 if C.empty else factorial_h(i, n_counts(C)[0], N)
    return lhs, rhs


def mc_factorial_duality(
    params: ModelParams, t: float, i: int, n: int, replicates: int, seed: int, jobs: int = 1
) -> DualityReport:
    """Forward simulation against the randomized Frankenstein process.

    Replicates are split into fixed chunks with their own spawned seeds, so
    results do not depend on ``jobs``.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    sizes = [CHUNK] * (replicates // CHUNK) + ([replicates % CHUNK] if replicates % CHUNK else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    tasks = [(params, t, i, n, c, s) for c, s in zip(sizes, seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_mc_chunk, tasks))
    else:
        parts = [_mc_chunk(x) for x in tasks]
    lhs = np.concatenate([p[0] for p in parts])
    rhs = np.concatenate([p[1] for p in parts])
    se = lambda a: float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
    report = DualityReport("mc", params.to_dict(), extra={"replicates": replicates, "seed": seed})
    report.rows.append(_row(t, i, n, lhs.mean(), rhs.mean(), "mc", se(lhs), se(rhs)))
    return report


# ---------------------------------------------------------------------------
# path averages


@dataclass
class PathAverageReport:
    """Exact path averages for one fixture and one unfit count i.

    ``theta``, ``messy`` and ``frankenstein`` are the averages over all role
    or branch paths for the fixture as given. The ``orbit_*`` values average
    in addition over independent uniform relabelings of the population after
    every captured interactive event, the exchangeability the averages rely
    on; these are the quantities that must coincide.
    """

    i: int
    n_interactive: int
    theta: Fraction
    messy: Fraction
    frankenstein: Fraction
    orbit_theta: Fraction
    orbit_frankenstein: Fraction
    assembly_ok: bool

    @property
    def pathwise_equal(self) -> bool:
        return self.theta == self.frankenstein

    @property
    def passed(self) -> bool:
        return (self.assembly_ok and self.messy == self.frankenstein
                and self.orbit_theta == self.orbit_frankenstein)

    def to_dict(self) -> dict:
        return {
            "i": self.i,
            "n_interactive": self.n_interactive,
            "theta": str(self.theta),
            "messy": str(self.messy),
            "frankenstein": str(self.frankenstein),
            "orbit_theta": str(self.orbit_theta),
            "orbit_frankenstein": str(self.orbit_frankenstein),
            "pathwise_equal": self.pathwise_equal,
            "assembly_ok": self.assembly_ok,
            "passed": self.passed,
        }


def _orbit_average(root: Cylinder, events: Sequence[Event], N: int, i: int, which: str) -> Fraction:
    perms = list(all_permutations(range(1, N + 1)))

    @lru_cache(maxsize=None)
    def value(pos: int, C: Cylinder) -> Fraction:
        if C.empty:
            return Fraction(0)
        for j in range(pos, len(events)):
            e = events[j]
            if e.alpha not in C.index:
                continue
            if not isinstance(e, InteractiveQuasi):
                return sum((value(j + 1, D) for D in apply_backward(C, e)), Fraction(0))
            if which == "theta":
                outs = [D for v in (DOWN, UP) for D in apply_backward(C, lift(e, v))]
            else:
                outs = [frankenstein_step(C, e, w) for w in (DOWN, UP)]
            total = Fraction(0)
            for D in outs:
                total += sum((value(j + 1, D.permute(p)) for p in perms), Fraction(0))
            return total / (2 * len(perms))
        return cylinder_probability(C, i, N)

    return value(0, root)


def check_path_average_identity(
    root: Iterable[int], events: Iterable[tuple[float, Event]], N: int, i: int, orbit: bool = True
) -> PathAverageReport:
    """Exact path averages of the configuration, messy and Frankenstein processes.

    ``events`` are (backward time, event) pairs in backward order; interactive
    events are read as quasi events.
    """
    S = Cylinder.all_r(root)
    source = quasi_project(list(events))
    evs = [e for _, e in source]
    M = _captured_quasi_count(S.index, evs)
    paths = all_paths(M)
    theta = messy = frank = Fraction(0)
    ok = True
    for p in paths:
        theta += sum((cylinder_probability(C, i, N) for C in run_configuration_on_path(S, p, source)), Fraction(0))
        state = run_messy(S, p, source)
        messy += sum((cylinder_probability(C, i, N) for C, _ in state.pairs), Fraction(0))
        F = run_frankenstein_on_path(S, p, source)
        frank += cylinder_probability(F, i, N)
        try:
            ok &= set_equal(assemble(state), F)
        except AssertionError:
            ok = False
    scale = Fraction(1, len(paths))
    if orbit:
        o_theta = _orbit_average(S, evs, N, i, "theta")
        o_frank = _orbit_average(S, evs, N, i, "frankenstein")
    else:
        o_theta = o_frank = Fraction(0)
    return PathAverageReport(i, M, theta * scale, messy * scale, frank * scale, o_theta, o_frank, ok)


def _captured_quasi_count(lines: frozenset[int], events: Sequence[Event]) -> int:
    count = 0
    for e in events:
        if e.alpha in lines:
            count += isinstance(e, InteractiveQuasi)
            lines = grow(lines, e)
    return count


# ---------------------------------------------------------------------------
# diffusion scale


@dataclass(frozen=True)
class SDEParams:
    """Rates of the diffusion limit: sigma_m = N s_m and theta = N u in the limit."""

    r: float = 0.0
    kappa: float = 0.0
    sigma: tuple[float, ...] = ()
    theta: float = 0.0
    nu0: float = 0.5
    nu1: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", tuple(float(x) for x in self.sigma))
        nu1 = 1.0 - self.nu0 if self.nu1 is None else float(self.nu1)
        object.__setattr__(self, "nu1", nu1)
        if min((self.r, self.kappa, self.theta) + self.sigma, default=0.0) < 0:
            raise ValueError("rates must be nonnegative")
        if not (0 <= self.nu0 <= 1 and 0 <= nu1 <= 1 and abs(self.nu0 + nu1 - 1) < 1e-12):
            raise ValueError("nu0 and nu1 must be probabilities summing to 1")

    def drift(self, x: np.ndarray) -> np.ndarray:
        out = -self.theta * self.nu0 * x + self.theta * self.nu1 * (1 - x)
        for m, s in enumerate(self.sigma, start=1):
            out = out - s * x * (1 - x**m)
        return out

    def diffusion_sq(self, x: np.ndarray) -> np.ndarray:
        return x * (1 - x) * (self.r + self.kappa * (1 - x))

    def model_at(self, N: int) -> ModelParams:
        """Finite-population parameters with N u = theta and N s_m = sigma_m."""
        return ModelParams(N, r=self.r, kappa=self.kappa,
                           s=SelectionRates(tuple(as_fraction(x) / N for x in self.sigma)),
                           u=as_fraction(self.theta) / N, nu0=self.nu0, nu1=self.nu1)

    def to_dict(self) -> dict:
        return {"r": self.r, "kappa": self.kappa, "sigma": list(self.sigma),
                "theta": self.theta, "nu0": self.nu0, "nu1": self.nu1}


def simulate_sde(sp: SDEParams, x0: float, T: float, dt: float, seed: int, replicates: int) -> np.ndarray:
    """Euler-Maruyama endpoints at time T, clipped to [0, 1] after every step."""
    if not 0 <= x0 <= 1 or dt <= 0:
        raise ValueError("need x0 in [0, 1] and dt > 0")
    rng = np.random.default_rng(seed)
    x = np.full(replicates, float(x0))
    steps = int(round(T / dt))
    h = T / steps if steps else 0.0
    sq = math.sqrt(h)
    for _ in range(steps):
        noise = rng.standard_normal(replicates)
        x = x + sp.drift(x) * h + np.sqrt(np.maximum(sp.diffusion_sq(x), 0.0)) * sq * noise
        np.clip(x, 0.0, 1.0, out=x)
    return x


def z_limit_rates(sp: SDEParams, n: int) -> dict[int | str, float]:
    """Jump rates of the limiting dual chain from state n."""
    pairs = n * (n - 1) / 2
    out: dict[int | str, float] = {}
    for m, s in enumerate(sp.sigma, start=1):
        out[n + m] = out.get(n + m, 0.0) + s * n
    out[n + 1] = out.get(n + 1, 0.0) + sp.kappa * pairs
    out[n - 1] = (sp.r + sp.kappa) * pairs + sp.theta * sp.nu1 * n
    out[DELTA] = sp.theta * sp.nu0 * n
    return {k: v for k, v in out.items() if v > 0}


ZDELTA = -1


def simulate_Z_limit(sp: SDEParams, n0: int, T: float, seed: int, replicates: int = 1) -> np.ndarray:
    """Endpoints at time T of the limiting dual chain; the cemetery is encoded as -1."""
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    rng = np.random.default_rng(seed)
    n = np.full(replicates, n0, dtype=np.int64)
    t = np.zeros(replicates)
    # columns: jumps +1..+M, then -1, then Delta
    M = max(len(sp.sigma), 1)
    sigma = np.zeros(M)
    sigma[: len(sp.sigma)] = sp.sigma
    jumps = np.concatenate([np.arange(1, M + 1), [-1, 0]])
    active = n > 0
    while active.any():
        idx = np.flatnonzero(active)
        k = n[idx].astype(float)
        pairs = k * (k - 1) / 2
        rates = np.zeros((len(idx), M + 2))
        rates[:, :M] = np.outer(k, sigma)
        rates[:, 0] += sp.kappa * pairs
        rates[:, M] = (sp.r + sp.kappa) * pairs + sp.theta * sp.nu1 * k
        rates[:, M + 1] = sp.theta * sp.nu0 * k
        cum = np.cumsum(rates, axis=1)
        total = cum[:, -1]
        stuck = total <= 0
        safe = np.where(stuck, 1.0, total)
        t_new = t[idx] + np.where(stuck, np.inf, rng.exponential(1.0, len(idx)) / safe)
        u = rng.random(len(idx)) * safe
        choice = np.minimum((u[:, None] >= cum).sum(axis=1), M + 1)
        move = t_new <= T
        sel = idx[move]
        c = choice[move]
        n[sel] = np.where(c == M + 1, ZDELTA, n[sel] + jumps[c])
        t[sel] = t_new[move]
        active[idx[~move]] = False
        active[sel] = n[sel] > 0
    return n


def sde_path(sp: SDEParams, x0: float, T: float, dt: float, seed: int) -> list[tuple[float, float]]:
    """One Euler-Maruyama path on the uniform grid of step dt (same scheme as simulate_sde)."""
    rng = np.random.default_rng(seed)
    steps = int(round(T / dt))
    h = T / steps if steps else 0.0
    x = np.array([float(x0)])
    out = [(0.0, float(x0))]
    for k in range(1, steps + 1):
        noise = rng.standard_normal(1)
        x = x + sp.drift(x) * h + np.sqrt(np.maximum(sp.diffusion_sq(x), 0.0)) * math.sqrt(h) * noise
        np.clip(x, 0.0, 1.0, out=x)
        out.append((k * h, float(x[0])))
    return out


def z_limit_path(sp: SDEParams, n0: int, T: float, seed: int) -> list[tuple[float, int | str]]:
    """One path of the limiting dual chain as (jump time, state)."""
    rng = np.random.default_rng(seed)
    t, n = 0.0, n0
    path: list[tuple[float, int | str]] = [(t, n)]
    while n != DELTA and n > 0:
        rates = z_limit_rates(sp, n)
        if not rates:
            break
        targets = list(rates)
        cum = np.cumsum(list(rates.values()))
        t += float(rng.exponential(1.0 / cum[-1]))
        if t > T:
            break
        k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        n = targets[min(k, len(targets) - 1)]
        path.append((t, n))
    return path


def check_moment_duality_mc(
    sp: SDEParams,
    x0: float,
    n0: int,
    t: float,
    replicates: int,
    seed: int,
    dt: float = 1e-3,
    sde_samples: np.ndarray | None = None,
    z_samples: np.ndarray | None = None,
) -> DualityReport:
    """E[X_t^{n0}] from the SDE against E[x0^{Z_t}] from the limiting dual chain."""
    ss = np.random.SeedSequence(seed).spawn(2)
    x = sde_samples if sde_samples is not None else simulate_sde(
        sp, x0, t, dt, int(ss[0].generate_state(1)[0]), replicates)
    z = z_samples if z_samples is not None else simulate_Z_limit(
        sp, n0, t, int(ss[1].generate_state(1)[0]), replicates)
    lhs = x**n0
    rhs = np.where(z == ZDELTA, 0.0, float(x0) ** np.maximum(z, 0).astype(float))
    se = lambda a: float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
    report = DualityReport("mc", sp.to_dict(), extra={"replicates": replicates, "seed": seed,
                                                      "dt": dt, "x0": x0})
    report.rows.append(_row(t, x0, n0, lhs.mean(), rhs.mean(), "mc", se(lhs), se(rhs)))
    return report


# ---------------------------------------------------------------------------
# generator convergence


def _poly_eval(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    out = Fraction(0)
    for c in reversed(coeffs):
        out = out * x + c
    return out


def _poly_deriv(coeffs: Sequence[Fraction]) -> list[Fraction]:
    return [k * c for k, c in enumerate(coeffs)][1:]


def forward_generator_error(sp: SDEParams, N: int, coeffs: Sequence[int | Fraction]) -> Fraction:
    """sup over n of |N L_X f(n/N) - L f(n/N)| for a polynomial f."""
    coeffs = [as_fraction(c) for c in coeffs]
    d1, d2 = _poly_deriv(coeffs), _poly_deriv(_poly_deriv(coeffs))
    params = sp.model_at(N)
    r, k, theta = as_fraction(sp.r), as_fraction(sp.kappa), as_fraction(sp.theta)
    nu0, nu1 = as_fraction(sp.nu0), as_fraction(sp.nu1)
    sigma = [as_fraction(s) for s in sp.sigma]
    worst = Fraction(0)
    for n in range(N + 1):
        x = Fraction(n, N)
        up, down = x_rates(params, n)
        fx = _poly_eval(coeffs, x)
        disc = N * (up * (_poly_eval(coeffs, x + Fraction(1, N)) - fx)
                    + down * (_poly_eval(coeffs, x - Fraction(1, N)) - fx))
        drift = -theta * nu0 * x + theta * nu1 * (1 - x) - sum(
            (s * x * (1 - x**m) for m, s in enumerate(sigma, start=1)), Fraction(0))
        limit = x * (1 - x) * (r + k * (1 - x)) / 2 * _poly_eval(d2, x) + drift * _poly_eval(d1, x)
        worst = max(worst, abs(disc - limit))
    return worst


def _exact_z_limit_rates(sp: SDEParams, n: int) -> dict[int | str, Fraction]:
    sigma = [as_fraction(s) for s in sp.sigma]
    r, k, theta = as_fraction(sp.r), as_fraction(sp.kappa), as_fraction(sp.theta)
    out: dict[int | str, Fraction] = {}
    for m, s in enumerate(sigma, start=1):
        out[n + m] = out.get(n + m, Fraction(0)) + s * n
    out[n + 1] = out.get(n + 1, Fraction(0)) + k * comb(n, 2)
    out[n - 1] = (r + k) * comb(n, 2) + theta * as_fraction(sp.nu1) * n
    out[DELTA] = theta * as_fraction(sp.nu0) * n
    return out


def dual_generator_error(sp: SDEParams, N: int, f: Callable[[int | str], Fraction], k: int = 10) -> Fraction:
    """sup over n <= k of |N L_{Z^(N)} f(n) - L_Z f(n)|."""
    params = sp.model_at(N)
    worst = Fraction(0)
    for n in range(0, min(k, N) + 1):
        disc = N * sum((q * (f(m) - f(n)) for m, q in z_rates(params, n).items()), Fraction(0))
        limit = sum((q * (f(m) - f(n)) for m, q in _exact_z_limit_rates(sp, n).items() if q), Fraction(0))
        worst = max(worst, abs(disc - limit))
    return worst


def _slope(Ns: Sequence[int], errs: Sequence[float]) -> float:
    if max(errs) == 0:
        return -math.inf
    if min(errs) <= 0:
        return math.nan
    return float(np.polyfit(np.log(Ns), np.log(errs), 1)[0])


DUAL_TEST_FUNCTIONS: dict[str, Callable[[int | str], Fraction]] = {
    "indicator_delta": lambda n: Fraction(1) if n == DELTA else Fraction(0),
    "inverse": lambda n: Fraction(0) if n == DELTA else Fraction(1, n + 1),
    "geometric": lambda n: Fraction(1) if n == DELTA else Fraction(1, 2**n),
    "alternating": lambda n: Fraction(-1, 2) if n == DELTA else Fraction((-1) ** n, n + 1),
}

FORWARD_TEST_FUNCTIONS: dict[str, list[int]] = {"x": [0, 1], "x^2": [0, 0, 1], "x^3": [0, 0, 0, 1]}


def generator_convergence_report(
    sp: SDEParams,
    Ns: Sequence[int] = (50, 100, 200, 400),
    forward: dict[str, Sequence[int]] | None = None,
    dual: dict[str, Callable] | None = None,
    k: int = 10,
    max_slope: float = -0.8,
) -> dict:
    """Sup-norm generator errors across N and their log-log slopes.

    An error sequence that is identically zero counts as converged (the
    generators agree exactly on that function).
    """
    forward = FORWARD_TEST_FUNCTIONS if forward is None else forward
    dual = DUAL_TEST_FUNCTIONS if dual is None else dual
    rows = []
    for name, coeffs in forward.items():
        errs = [float(forward_generator_error(sp, N, coeffs)) for N in Ns]
        rows.append(("forward", name, errs))
    for name, fn in dual.items():
        errs = [float(dual_generator_error(sp, N, fn, k)) for N in Ns]
        rows.append(("dual", name, errs))
    out = []
    for side, name, errs in rows:
        slope = _slope(Ns, errs)
        out.append({"side": side, "function": name, "N": list(Ns), "errors": errs,
                    "slope": slope, "passed": slope == -math.inf or slope <= max_slope})
    return {"params": sp.to_dict(), "rows": out, "passed": all(r["passed"] for r in out)}
