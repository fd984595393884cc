import math
from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from origami.common_info import (
    common_entropy,
    common_function,
    common_function_from_joint,
    component_bit,
    conditional_common_function,
)
from origami.dist import TripartiteDistribution, build_base, origami


def partitions(items):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for p in partitions(rest):
        yield [[head]] + p
        for i in range(len(p)):
            yield p[:i] + [[head] + p[i]] + p[i + 1:]


def brute_common_partition(support):
    """Finest partition of first values that some function of the second value reproduces."""
    firsts = sorted({a for a, _ in support})
    best = None
    for p in partitions(firsts):
        block = {a: i for i, blk in enumerate(p) for a in blk}
        g = {}
        if all(g.setdefault(b, block[a]) == block[a] for a, b in support):
            if best is None or len(p) > len(best):
                best = p
    return sorted(sorted(b) for b in best)


def as_partition(cf):
    return sorted(sorted(a for a, c in cf.first.items() if c == comp) for comp in cf.components)


supports = st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=9)


@settings(max_examples=150, deadline=None)
@given(supports)
def test_matches_brute_force_maximal_partition(support):
    support = sorted(support)
    joint = {e: F(1, len(support)) for e in support}
    cf = common_function_from_joint(joint, ("X", "Y"))
    assert as_partition(cf) == brute_common_partition(support)
    assert sum(cf.component_probs.values()) == 1
    for comp in cf.components:
        assert comp == min(a for a, c in cf.first.items() if c == comp)


@settings(max_examples=60, deadline=None)
@given(supports)
def test_idempotent(support):
    joint = {e: F(1, len(support)) for e in sorted(support)}
    cf = common_function_from_joint(joint, ("X", "Y"))
    relabeled = {}
    for (a, b), p in joint.items():
        key = (cf.first[a], b)
        relabeled[key] = relabeled.get(key, 0) + p
    again = common_function_from_joint(relabeled, ("J", "Y"))
    assert again.n_components == cf.n_components


def test_base_block_examples():
    d = build_base(F(1, 3))
    yz = common_function(d, "YZ")
    assert yz.n_components == 2
    assert {component_bit(yz, y) for y in (0, 1)} == {0}
    assert {component_bit(yz, y) for y in (2, 3)} == {1}
    assert common_function(d, "XZ").is_trivial
    assert common_function(d, "XY").is_trivial


def test_product_distribution_is_trivial():
    d = TripartiteDistribution(2, 2, 2, {(x, y, z): F(1, 8) for x in range(2) for y in range(2) for z in range(2)})
    for pair in ("XY", "XZ", "YZ"):
        assert common_function(d, pair).is_trivial


def test_conditional_common_function():
    cond = conditional_common_function(build_base(F(1, 3)))
    z0 = cond.per_condition[0]
    assert z0.n_components == 2
    assert z0.first == {0: 0, 1: 1} and z0.second == {0: 0, 1: 1}
    for r in range(1, 7):
        for cf in conditional_common_function(origami(r, F(1, 3))).per_condition.values():
            assert sorted(cf.component_probs.values()) == [F(1, 3), F(2, 3)]


def test_single_event_slice():
    d = TripartiteDistribution(1, 1, 1, {(0, 0, 0): F(1)})
    assert conditional_common_function(d).per_condition[0].is_trivial


def test_common_entropy_values():
    d = build_base(F(1, 3))
    assert common_entropy(common_function(d, "XY")) == 0
    assert math.isclose(common_entropy(common_function(d, "YZ")), 1.0, abs_tol=1e-12)
    slice0 = conditional_common_function(d).per_condition[0]
    assert math.isclose(common_entropy(slice0), 0.9182958340544896, abs_tol=1e-12)


def test_members_and_json():
    cf = common_function(build_base(F(1, 2)), "YZ")
    members = cf.members()
    assert sorted(members) == cf.components
    assert cf.to_json() == [[[0, 1], [0, 1]], [[2, 3], [2, 3]]]
