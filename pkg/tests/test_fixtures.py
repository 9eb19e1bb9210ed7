import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moran_duality.combinatorics import SelectionRates
from moran_duality.fixtures import (
    BUNDLED,
    AIGFixture,
    FixtureError,
    derive,
    load_bundled,
    random_fixture,
    record_fixture,
    replay,
)
from moran_duality.model import ModelParams


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_json_round_trip(seed):
    fx = random_fixture(seed)
    back = AIGFixture.from_json(fx.to_json())
    assert back == fx
    assert back.to_json() == fx.to_json()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_fixtures_capture_every_event(seed):
    fx = random_fixture(seed, max_N=6, max_events=8)
    assert len(fx.backward()) == len(fx.events)
    assert 2 <= fx.N <= 6 and fx.root <= set(range(1, fx.N + 1))


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_replay(name):
    fx = load_bundled(name)
    ok, diffs = replay(fx)
    assert ok, diffs
    assert fx.expected["paths"]


def test_unknown_bundled_name():
    with pytest.raises(KeyError):
        load_bundled("missing")


def test_record_then_replay():
    params = ModelParams(5, r=1, kappa=0.5, s=SelectionRates((0.3, 0.1)), u=0.2)
    fx = record_fixture(params, 1.0, [1, 2], seed=11)
    again = AIGFixture.from_json(fx.to_json())
    assert replay(again) == (True, [])
    assert record_fixture(params, 1.0, [1, 2], seed=11).to_json() == fx.to_json()


def test_tampered_expectation_is_reported():
    fx = load_bundled("two-events")
    doc = fx.to_dict()
    doc["expected"]["paths"]["up,up"]["frankenstein"] = "I=[1,2,3,4]; RRRR"
    ok, diffs = replay(AIGFixture.from_dict(doc))
    assert not ok and len(diffs) == 1 and diffs[0].startswith("paths")


def test_replay_needs_expectations():
    with pytest.raises(FixtureError):
        replay(random_fixture(0))


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(schema_version=99),
        lambda d: d.pop("N"),
        lambda d: d.update(root=[]),
        lambda d: d.update(root=[9]),
        lambda d: d.update(t=5.0),
        lambda d: d["events"].append({"t": 0.5, "kind": "mut_del", "alpha": 42}),
        lambda d: d["events"].append({"t": 7.0, "kind": "mut_del", "alpha": 1}),
        lambda d: d["events"].append({"t": 0.5, "kind": "bogus", "alpha": 1}),
    ],
)
def test_corrupted_fixtures_are_rejected(mutate):
    doc = load_bundled("pairwise").to_dict()
    mutate(doc)
    with pytest.raises(FixtureError):
        AIGFixture.from_json(json.dumps(doc))


@pytest.mark.parametrize("text", ["{", "[]", "null"])
def test_invalid_json(text):
    with pytest.raises(FixtureError):
        AIGFixture.from_json(text)


def test_derive_skips_enumeration_with_quasi_events():
    got = derive(load_bundled("two-events"))
    assert "compatible" not in got and set(got["paths"]) == {"down,down", "down,up", "up,down", "up,up"}
    plain = derive(random_fixture(3, kinds=("neutral", "interactive", "selective")))
    assert "compatible" in plain
