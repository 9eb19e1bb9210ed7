"""One test per acceptance criterion; each prints a PASS/FAIL line."""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from moran_duality.ancestry import compatible_set_bruteforce, run_configuration_process
from moran_duality.cli import SUITES, main
from moran_duality.combinatorics import SelectionRates, verify_replacement_identity
from moran_duality.cylinders import Cylinder, union_configs
from moran_duality.duality import (
    SDEParams,
    check_factorial_duality,
    check_moment_duality_mc,
    check_path_average_identity,
    dual_generator_from_parts,
    generator_convergence_report,
    simulate_sde,
    simulate_Z_limit,
)
from moran_duality.fixtures import load_bundled, random_fixture
from moran_duality.frankenstein import induced_rate_check, r_counting_generator
from moran_duality.model import ModelParams
from moran_duality.reference_tables import (
    check_exception_table,
    check_match_tables,
    check_matching_properties,
)

C1_PARAMS = dict(r=1, kappa=0.5, u=0.2, nu0=0.5, nu1=0.5, s=SelectionRates((0.3, 0.1)))
MIXED = dict(r=Fraction(1), kappa=Fraction(3, 2), u=Fraction(1, 4), nu0=Fraction(2, 5),
             s=SelectionRates((Fraction(2, 5), Fraction(1, 5), Fraction(1, 10))))
PATH_KINDS = ("neutral", "interactive", "interactive", "selective", "mut_del", "mut_ben")


def _path_fixtures():
    fixtures = [load_bundled("pairwise"), load_bundled("two-events")]
    for seed in range(120):
        fixtures.append(random_fixture(seed, max_N=5, max_events=6, max_interactive=3, kinds=PATH_KINDS))
    return fixtures


def test_c1_exact_factorial_duality(acceptance_line):
    start = time.perf_counter()
    worst = 0.0
    for N in (3, 5, 8):
        rep = check_factorial_duality(ModelParams(N, **C1_PARAMS), [0.1, 0.5, 1, 2], tol=1e-10, expm_tol=1e-13)
        worst = max(worst, rep.max_residual)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 10
    acceptance_line("C1 exact factorial duality", ok, f"max residual {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_c2_frankenstein_tables(acceptance_line):
    rows = check_match_tables()
    props = check_matching_properties()
    bad = [r for r in rows + props if not r["ok"]]
    acceptance_line("C2 frankenstein tables", not bad,
                    f"{len(rows)} table rows, {len(props)} exhaustive R-cylinder cases, {len(bad)} failures")
    assert not bad


def test_c3_compatibility_oracle(acceptance_line):
    mismatches, max_leaves = 0, 0
    for seed in range(200):
        fx = random_fixture(seed, max_N=6, max_events=8)
        aig = fx.aig()
        leaves = sorted(aig.leaves)
        max_leaves = max(max_leaves, len(leaves))
        S = Cylinder.all_r(fx.root)
        if union_configs(run_configuration_process(S, aig), leaves) != compatible_set_bruteforce(aig, S):
            mismatches += 1
    ok = mismatches == 0 and max_leaves <= 10
    acceptance_line("C3 compatibility oracle", ok, f"200 fixtures, up to {max_leaves} leaves, {mismatches} mismatches")
    assert ok


def test_c4_exception_table(acceptance_line):
    rows = check_exception_table()
    listed = sum(r["listed"] for r in rows)
    bad = [r for r in rows if not r["ok"]]
    acceptance_line("C4 interactive exception table", not bad,
                    f"{len(rows)} local cylinders ({listed} listed), {len(bad)} failures")
    assert not bad


def test_c5_rate_law(acceptance_line):
    checked, bad = 0, 0
    for N in range(1, 6):
        params = ModelParams(N, **MIXED)
        for n in range(1, N + 1):
            for stars in range(N - n + 1):
                for row in induced_rate_check(params, n, stars):
                    checked += 1
                    bad += not row["equal"]
        if not (dual_generator_from_parts(params).matrix == r_counting_generator(params, exact=True).matrix).all():
            bad += 1
    acceptance_line("C5 induced rate law", bad == 0, f"{checked} exact rate comparisons, 5 generators, {bad} failures")
    assert bad == 0


def test_c6_replacement_identity(acceptance_line):
    rng = np.random.default_rng(6)
    cases, nonzero = 0, 0
    for M in range(1, 5):
        for trial in range(3):
            s = SelectionRates(tuple(Fraction(int(x), 97) for x in rng.integers(0, 60, size=M)))
            for N in range(1, 9):
                for n in range(N + 1):
                    for k in range(1, N - n + 1):
                        ok, diff = verify_replacement_identity(N, n, k, s)
                        cases += 1
                        nonzero += diff != 0
    acceptance_line("C6 replacement identity", nonzero == 0, f"{cases} cases, {nonzero} nonzero residuals")
    assert nonzero == 0


def test_c7_path_average_chain(acceptance_line):
    """Averages over the exchangeable relabeling of each interactive event.

    The configuration-process and Frankenstein averages agree once each
    interactive event is followed by a uniform relabeling of the lines; the
    messy average equals the Frankenstein average on the fixed stream, and
    the messy pieces assemble to the Frankenstein cylinder on every path.
    """
    cases, bad, bundled = 0, 0, []
    for fx in _path_fixtures():
        backward = fx.backward()
        for i in range(fx.N + 1):
            rep = check_path_average_identity(fx.root, backward, fx.N, i)
            assert rep.n_interactive <= 3
            cases += 1
            bad += not rep.passed
            if fx.name.startswith("two-events"):
                bundled.append(f"i={i}: {rep.orbit_theta}")
    acceptance_line("C7 path-average chain (relabeling average)", bad == 0,
                    f"{cases} cases, {bad} failures; two-events {', '.join(bundled)}")
    assert bad == 0


@pytest.mark.xfail(strict=True, reason="without the relabeling average the two path averages differ "
                                       "on fixed streams, including the bundled two-event fixture")
def test_c7_literal_fixed_stream_averages(acceptance_line):
    unequal = []
    for fx in _path_fixtures():
        for i in range(fx.N + 1):
            rep = check_path_average_identity(fx.root, fx.backward(), fx.N, i, orbit=False)
            if rep.theta != rep.frankenstein:
                unequal.append((fx.name, i, rep.theta, rep.frankenstein))
    bundled = [f"i={i}: {a} vs {b}" for name, i, a, b in unequal if name.startswith("two-events")]
    acceptance_line("C7 path-average chain (fixed stream, no relabeling)", not unequal,
                    f"{len(unequal)} unequal cases; two-events {'; '.join(bundled) or 'equal'}")
    assert not unequal


def test_c8_moment_duality(acceptance_line):
    sp = SDEParams(r=0.5, kappa=0.5, sigma=(), theta=0.0)
    reps, dt, t = 100_000, 1e-3, 1.0
    start = time.perf_counter()
    seeds = np.random.SeedSequence(8).spawn(5)
    seed = lambda k: int(seeds[k].generate_state(1)[0])
    xs = {x0: simulate_sde(sp, x0, t, dt, seed(k), reps) for k, x0 in enumerate((0.3, 0.7))}
    zs = {n0: simulate_Z_limit(sp, n0, t, seed(2 + k), reps) for k, n0 in enumerate((1, 2, 5))}
    details, ok = [], True
    for x0 in xs:
        for n0 in zs:
            (row,) = check_moment_duality_mc(sp, x0, n0, t, reps, 8, dt, xs[x0], zs[n0]).rows
            se = math.hypot(row["se_lhs"], row["se_rhs"])
            good = row["residual"] < 4 * se
            ok &= good
            details.append(f"({x0},{n0}) {row['residual'] / se:.2f}se")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    acceptance_line("C8 diffusion moment duality", ok, f"{', '.join(details)}; {elapsed:.1f} s")
    assert ok


def test_c9_generator_convergence(acceptance_line):
    sp = SDEParams(r=1, kappa=1, sigma=(0.5, 0.3), theta=0.4, nu0=0.5)
    rep = generator_convergence_report(sp, Ns=(50, 100, 200, 400), k=10, max_slope=-0.8)
    slopes = ", ".join(f"{r['side']}:{r['function']} {r['slope']:.2f}" for r in rep["rows"])
    acceptance_line("C9 generator convergence", rep["passed"], slopes)
    assert rep["passed"]


def _commands():
    cmds = [["simulate"], ["simulate", "--set", "model.N=12", "--set", "simulate.horizon=5"],
            ["fixture", "record"], ["fixture", "replay", "--bundled", "two-events"],
            ["verify", "duality-exact", "--format", "csv"], ["verify", "sde-duality", "--format", "csv"],
            ["verify", "duality-mc", "--format", "csv", "--jobs", "2"]]
    cmds += [["verify", s] for s in SUITES]
    return cmds


def _snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_c10_cli_determinism(acceptance_line, tmp_path):
    mismatched, codes = [], []
    for k, cmd in enumerate(_commands()):
        outs = []
        for run in ("a", "b"):
            d = tmp_path / f"{k}{run}"
            codes.append(main([*cmd, "--seed", "17", "--out", str(d)]))
            outs.append(_snapshot(d))
        if outs[0] != outs[1] or not outs[0]:
            mismatched.append(" ".join(cmd))
    ok = not mismatched and set(codes) == {0}
    acceptance_line("C10 CLI determinism", ok,
                    f"{len(_commands())} commands run twice, {len(mismatched)} differ, exit codes {sorted(set(codes))}")
    assert ok
