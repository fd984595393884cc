from fractions import Fraction as F

import pytest

from origami.common_info import common_function_from_joint
from origami.dist import DomainError, OrigamiParams, build_origami, origami
from origami.lopc import (
    OutputMap,
    ProtocolTree,
    Round,
    announce_value_protocol,
    audit_block_survival,
    block_tree,
    exhaustive_one_round_search,
    make_achievability_protocol,
    make_bias_adjust,
    mandated_starter,
    run_protocol,
    trace_protocol,
    verify_blockwise_key,
    verify_strict_key,
)

HALF, THIRD, QUARTER = F(1, 2), F(1, 3), F(1, 4)


def leaves(r, lam, target, **kw):
    p = OrigamiParams(r, lam)
    d = build_origami(p)
    return d, trace_protocol(d, make_achievability_protocol(p, target, **kw))


def test_mandated_starter():
    assert [mandated_starter(r) for r in range(1, 5)] == ["B", "A", "B", "A"]


def test_bias_adjust():
    assert make_bias_adjust(HALF, HALF).keep == (1, 1)
    adj = make_bias_adjust(HALF, QUARTER)
    assert adj.p0 == HALF and adj.keep == (QUARTER, F(3, 4))
    with pytest.raises(DomainError):
        make_bias_adjust(QUARTER, HALF)


@pytest.mark.parametrize("r", range(1, 5))
@pytest.mark.parametrize("target", [HALF, QUARTER])
def test_strict_key_at_half(r, target):
    d, levels = leaves(r, HALF, target)
    assert verify_strict_key(levels[-1], target).passed
    assert sum(b.mass for b in levels[-1]) == 1
    assert not audit_block_survival(d, levels).flagged


@pytest.mark.parametrize("r", range(1, 5))
def test_alignment_gap_below_half(r):
    _, levels = leaves(r, THIRD, THIRD)
    strict = verify_strict_key(levels[-1], THIRD)
    assert not strict.passed
    assert any("key–Z dependence" in m for m in strict.diagnostics)
    assert verify_blockwise_key(levels[-1], THIRD).passed
    _, aligned = leaves(r, THIRD, THIRD, align=True)
    assert verify_strict_key(aligned[-1], THIRD).passed
    _, aligned = leaves(r, THIRD, F(1, 5), align=True)
    assert verify_strict_key(aligned[-1], F(1, 5)).passed


def test_two_round_branch_masses():
    d = origami(2, THIRD)
    p = make_achievability_protocol(OrigamiParams(2, THIRD), THIRD)
    assert [r.party for r in p.rounds] == ["A", "B"]
    assert [b.mass for b in run_protocol(d, p)] == [QUARTER] * 4


@pytest.mark.parametrize("r", range(1, 5))
def test_wrong_starter_leaves_no_key(r):
    wrong = "A" if mandated_starter(r) == "B" else "B"
    _, levels = leaves(r, HALF, HALF, starter=wrong)
    for b in levels[-1]:
        joint = {}
        for (x, y, _), p in b.posterior.events.items():
            joint[(x, y)] = joint.get((x, y), 0) + p
        assert common_function_from_joint(joint, ("X", "Y")).is_trivial


def test_announce_x_flags_every_branch():
    for r in (1, 2, 3):
        d = origami(r, HALF)
        levels = trace_protocol(d, announce_value_protocol(d, "A"))
        audit = audit_block_survival(d, levels)
        assert audit.flagged
        assert all(b.rank_drops for b in audit.at_depth(1))


def test_block_tree_shape():
    tree = block_tree(3)
    assert [len(level) for level in tree] == [1, 2, 4, 8]
    assert all(len(b) == 2 ** (4 - k) for k, level in enumerate(tree) for b in level)


def test_protocol_validation():
    d = origami(1, HALF)
    ident = OutputMap(tuple(range(4)))
    with pytest.raises(DomainError):
        ProtocolTree((Round("A", ((1,),) * 4), Round("A", ((1,),) * 4)), ident, ident)
    bad = ProtocolTree((Round("A", ((F(1, 2), F(1, 4)),) * 4),), ident, ident)
    with pytest.raises(DomainError, match="row-stochastic"):
        run_protocol(d, bad)


def test_one_round_search():
    for lam in (HALF, THIRD):
        d = origami(1, lam)
        rep = exhaustive_one_round_search(d, "A", 4, lam)
        assert rep.complete and rep.passing == []
    rep = exhaustive_one_round_search(origami(1, HALF), "B", 4, HALF)
    assert rep.passing == [((0, 1), (2, 3))]
    assert exhaustive_one_round_search(origami(1, HALF), "B", 0, HALF).passing == []
    with pytest.raises(DomainError):
        exhaustive_one_round_search(origami(1, HALF), "B", 5, HALF)
