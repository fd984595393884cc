from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from origami.dist import DomainError, TripartiteDistribution, origami
from origami.info import (
    binary_entropy,
    conditional_mutual_information,
    entropy_report,
    exact_slice_entropy_profile,
)


def test_binary_entropy():
    assert binary_entropy(F(1, 2)) == 1.0
    assert binary_entropy(0) == 0
    assert abs(binary_entropy(F(1, 3)) - 0.9182958340544896) < 1e-12
    with pytest.raises(DomainError):
        binary_entropy(F(3, 2))


def test_entropy_report_keeps_atoms():
    rep = entropy_report([F(1, 4), F(3, 4)])
    assert rep.exact_atom_multiset == (F(1, 4), F(3, 4))
    assert abs(rep.value_bits - binary_entropy(F(1, 4))) < 1e-12


@pytest.mark.parametrize("r", range(1, 7))
def test_cmi_of_origami_is_binary_entropy(r):
    lam = F(1, 3)
    assert abs(conditional_mutual_information(origami(r, lam)) - binary_entropy(lam)) < 1e-12


def test_slice_profiles():
    for cell in exact_slice_entropy_profile(origami(3, F(1, 3))).values():
        assert sorted(cell.elements()) == [F(1, 3), F(2, 3)]
    prof = exact_slice_entropy_profile(origami(2, F(1, 4)))
    assert sorted(prof[5].elements()) == [F(1, 4), F(3, 4)]
    d = TripartiteDistribution(2, 2, 1, {(0, 0, 0): F(1, 2), (1, 1, 0): F(1, 2)})
    assert sorted(exact_slice_entropy_profile(d)[0].elements()) == [F(1, 2), F(1, 2)]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=2, max_size=2), st.lists(st.integers(1, 5), min_size=2, max_size=2))
def test_cmi_zero_on_independent(px, py):
    sx, sy = sum(px), sum(py)
    ev = {(x, y, 0): F(px[x], sx) * F(py[y], sy) for x in range(2) for y in range(2)}
    cmi = conditional_mutual_information(TripartiteDistribution(2, 2, 1, ev))
    assert -1e-12 <= cmi <= 1e-12
