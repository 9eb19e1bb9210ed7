from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moran_duality.ancestry import DOWN, UP, all_paths, quasi_project
from moran_duality.combinatorics import SelectionRates
from moran_duality.cylinders import Cylinder, pairwise_disjoint, set_equal
from moran_duality.duality import dual_generator_from_parts
from moran_duality.fixtures import load_bundled, random_fixture
from moran_duality.frankenstein import (
    DELTA,
    assemble,
    frankenstein_match,
    frankenstein_step,
    induced_rate_check,
    r_counting_generator,
    run_frankenstein,
    run_frankenstein_on_path,
    run_messy,
    simulate_dual_counts,
    z_rates,
)
from moran_duality.model import InteractiveQuasi, ModelParams
from moran_duality.reference_tables import (
    check_exception_table,
    check_match_tables,
    check_matching_properties,
)

PARAMS = dict(r=1, kappa=Fraction(3, 2), s=SelectionRates((Fraction(2, 5), Fraction(1, 5), Fraction(1, 10))),
              u=Fraction(1, 4), nu0=Fraction(2, 5))
QUASI_KINDS = ("neutral", "interactive_quasi", "interactive_quasi", "selective", "mut_del", "mut_ben")


@pytest.mark.parametrize("row", check_exception_table(), ids=lambda r: f"{r['case']}-{r['C_D']}")
def test_interactive_exception_table(row):
    assert row["ok"], row


@pytest.mark.parametrize("row", check_match_tables(), ids=lambda r: f"{r['C_D']}-{r['beta']}{r['gamma']}")
def test_matching_tables(row):
    assert row["ok"], row


@pytest.mark.parametrize("row", check_matching_properties(), ids=lambda r: f"{r['C_D']}-{r['beta']}{r['gamma']}")
def test_matching_properties(row):
    assert row["ok"], row


def test_table_sizes():
    assert len(check_exception_table()) == 27 + 9 + 9
    assert len(check_match_tables()) == 11


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(((1, 2, 3), (1, 2, 2), (2, 1, 3), (3, 1, 2))),
       st.lists(st.sampled_from("R*"), min_size=5, max_size=5))
def test_match_produces_r_cylinders_in_larger_index_sets(event, cells):
    a, b, g = event
    C = Cylinder.from_pattern([1, 2, 3, 4, 5], "".join(cells))
    m = frankenstein_match(C, a, b, g)
    for v in (DOWN, UP):
        assert m[v].is_r_cylinder()
        # lines away from the event are untouched
        assert m[v][4] == C[4] and m[v][5] == C[5]
        assert frankenstein_step(C, InteractiveQuasi(a, b, g), v) == m[v]


@pytest.mark.parametrize("N", range(1, 6))
def test_induced_rates_match_the_dual_chain(N):
    params = ModelParams(N, **PARAMS)
    for n in range(1, N + 1):
        for stars in range(N - n + 1):
            rows = induced_rate_check(params, n, stars)
            assert rows and all(r["equal"] for r in rows), rows


@pytest.mark.parametrize("N", range(1, 7))
def test_generator_from_parts(N):
    params = ModelParams(N, **PARAMS)
    G = r_counting_generator(params, exact=True)
    assert (G.matrix == dual_generator_from_parts(params).matrix).all()
    for row in G.matrix:
        assert sum(row) == 0
    d = G.index(DELTA)
    assert all(x == 0 for x in G.matrix[d])
    assert G.matrix[G.index(0)].tolist() == [0] * len(G.labels)


def test_dual_rates_without_mutation_never_hit_delta():
    params = ModelParams(4, r=1, kappa=1, s=SelectionRates((1,)))
    for n in range(5):
        assert DELTA not in z_rates(params, n)
    # the top state can only go down; Kingman coalescence plus interaction
    assert z_rates(params, 4) == {3: Fraction(6, 4) * (1 + Fraction(1, 4))}


def test_dual_counts_path():
    params = ModelParams(6, **PARAMS)
    path = simulate_dual_counts(params, 3, 50.0, 2)
    assert path[0] == (0.0, 3)
    assert path == simulate_dual_counts(params, 3, 50.0, 2)
    states = [n for _, n in path]
    assert all(n == DELTA or 0 <= n <= 6 for n in states)
    assert DELTA not in states[:-1]
    assert simulate_dual_counts(ModelParams(6), 3, 5.0, 0) == [(0.0, 3)]


def test_dual_chain_hits_delta_at_the_mutation_rate():
    # in state 1 with no selection and no coalescence the only exit is mutation
    params = ModelParams(3, r=0, u=1, nu0=Fraction(1, 2))
    rng = np.random.default_rng(11)
    hits = [simulate_dual_counts(params, 1, 1.0, rng)[-1][1] for _ in range(4000)]
    p = 1 - np.exp(-1.0)
    frac_delta = np.mean([h == DELTA for h in hits])
    assert abs(frac_delta - p / 2) < 4 * np.sqrt(0.25 / 4000)


@pytest.mark.parametrize("seed", range(80))
def test_messy_pieces_assemble_to_the_frankenstein_cylinder(seed):
    fx = random_fixture(seed, max_N=5, max_events=6, kinds=QUASI_KINDS, max_interactive=3)
    S = Cylinder.all_r(fx.root)
    source = quasi_project(fx.backward())
    M = sum(isinstance(e, InteractiveQuasi) for _, e in source)
    for w in all_paths(M):
        state = run_messy(S, w, source)
        F = run_frankenstein_on_path(S, w, source)
        assert set_equal(state.frankenstein, F)
        assert set_equal(assemble(state), F)
        pieces = [C.permute(p) for C, p in state.pairs]
        assert pairwise_disjoint(pieces)


def test_bundled_three_line_example():
    fx = load_bundled("pairwise")
    S = Cylinder.all_r(fx.root)
    source = quasi_project(fx.backward())
    lines = (1, 2, 3)
    assert run_frankenstein_on_path(S, (DOWN,), source).pattern(lines) == "RRR"
    assert run_frankenstein_on_path(S, (UP,), source).pattern(lines) == "*R*"


def test_bundled_two_event_example():
    fx = load_bundled("two-events")
    S = Cylinder.all_r(fx.root)
    source = quasi_project(fx.backward())
    lines = (1, 2, 3, 4)
    got = {w: run_frankenstein_on_path(S, w, source).pattern(lines) for w in all_paths(2)}
    assert got == {(DOWN, DOWN): "RRRR", (DOWN, UP): "*R*R", (UP, DOWN): "*R**", (UP, UP): "*R**"}
    state = run_messy(S, (UP, DOWN), source)
    assert [(C.pattern(lines), str(p)) for C, p in state.pairs] == [
        ("RRR*", "id"), ("*RB*", "id"), ("*RRB", "(1 4)"), ("∅", "(1 4)")]


def test_random_branch_choice_is_seeded():
    fx = load_bundled("two-events")
    S = Cylinder.all_r(fx.root)
    source = quasi_project(fx.backward())
    seen = {str(run_frankenstein(S, source, k)) for k in range(40)}
    assert seen <= {str(run_frankenstein_on_path(S, w, source)) for w in all_paths(2)}
    assert len(seen) > 1
    assert run_frankenstein(S, source, 3) == run_frankenstein(S, source, 3)


def test_messy_rejects_bad_input():
    with pytest.raises(ValueError):
        run_messy(Cylinder.from_pattern([1], "B"), (), [])
    with pytest.raises(ValueError):
        run_messy(Cylinder.all_r([1]), (), [(0.1, InteractiveQuasi(1, 2, 3))])
