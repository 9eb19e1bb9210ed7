from hypothesis import given
from hypothesis import strategies as st

from moran_duality.permutation import IDENTITY, Permutation, all_permutations

perms = st.permutations(list(range(1, 6))).map(lambda p: Permutation.from_mapping(dict(zip(range(1, 6), p))))


def test_transposition_and_printing():
    t = Permutation.transposition(1, 4)
    assert (t(1), t(4), t(2)) == (4, 1, 2)
    assert str(t) == "(1 4)"
    assert str(IDENTITY) == "id"
    assert IDENTITY.is_identity() and not t.is_identity()


@given(perms, perms, st.integers(1, 5))
def test_composition_applies_right_factor_first(p, q, x):
    assert (p @ q)(x) == p(q(x))


@given(perms)
def test_inverse(p):
    assert (p @ p.inverse()).is_identity()
    assert p.inverse().inverse() == p


def test_all_permutations_count():
    assert len(list(all_permutations(range(1, 5)))) == 24
