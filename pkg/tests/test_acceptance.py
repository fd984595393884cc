"""Acceptance criteria, one test each. Run: pytest tests/test_acceptance.py"""

import time
from fractions import Fraction as F

import pytest

from origami.common_info import common_function_from_joint
from origami.dist import OrigamiParams, TripartiteDistribution, build_base, build_origami, origami_sizes, overline_transform
from origami.io import grid_cells
from origami.lopc import (
    announce_value_protocol,
    audit_block_survival,
    exhaustive_one_round_search,
    make_achievability_protocol,
    mandated_starter,
    trace_protocol,
    verify_blockwise_key,
    verify_strict_key,
)
from origami.quantum import (
    LocalOperator,
    apply_local_operator,
    embed_distribution,
    leaf_fidelities,
    make_locc_achievability,
    prop4_random_search,
    run_locc,
    schmidt_rank,
)
from origami.srank import SliceMatrix, SuiteConfig, linear_rank, monotone_suite, nonnegative_rank, secrecy_rank
from origami.structure import verify_structure

from reference_grids import B1, B1_OVERLINE, B2, B3

import numpy as np

HALF, THIRD, QUARTER = F(1, 2), F(1, 3), F(1, 4)
CMI_TOL = 1e-12
FIDELITY_TOL = 1e-10
PROP4_MARGIN = 1e-6


def rows(d):
    return [" ".join(r) for r in grid_cells(d)]


def test_c01_construction_fidelity():
    t0 = time.perf_counter()
    for r in range(1, 11):
        d = build_origami(OrigamiParams(r, THIRD))
        assert d.shape == origami_sizes(r) == (2 ** (r // 2 + 2), 2 ** ((r + 1) // 2 + 1), 2 ** (r + 1))
        assert all(len(s) == 2 for s in d.slices().values())
        assert set(d.z_marginal().values()) == {F(1, 2 ** (r + 1))}
    for r, table in [(1, B1), (2, B2), (3, B3)]:
        assert rows(build_origami(OrigamiParams(r, THIRD))) == table
    assert time.perf_counter() - t0 < 5


def test_c02_structure_suite():
    t0 = time.perf_counter()
    for lam in (THIRD, HALF):
        for r in range(1, 11):
            rep = verify_structure(r, lam)
            assert rep.passed, rep.to_json()
    assert time.perf_counter() - t0 < 30


def test_c03_recursion_consistency():
    assert rows(overline_transform(build_base(THIRD), 1)) == B1_OVERLINE


WITNESS = [[F(v, 8) for v in row] for row in [[1, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1], [0, 0, 1, 1]]]


def test_c04_secrecy_rank():
    for r in range(1, 7):
        assert secrecy_rank(build_origami(OrigamiParams(r, THIRD))) == 2
    phi = TripartiteDistribution(2, 2, 2, {(k, k, z): (THIRD if k == 0 else 1 - THIRD) / 2 for k in range(2) for z in range(2)})
    assert secrecy_rank(phi) == 2
    assert linear_rank(WITNESS) == 3
    assert nonnegative_rank(SliceMatrix.from_rows(WITNESS)) == 4


def test_c05_slopc_monotonicity():
    out = monotone_suite(SuiteConfig(trials=1000, seed=0, x_size=3, y_size=3, z_size=3, msg_size=(2, 4)))
    assert out["counts"]["FAIL"] == 0 and out["counts"]["INCONCLUSIVE"] == 0
    assert out["counts"]["PASS"] == 1000


def test_c06_strict_achievability_at_half():
    t0 = time.perf_counter()
    for r in range(1, 7):
        p = OrigamiParams(r, HALF)
        d = build_origami(p)
        for target in (HALF, QUARTER):
            proto = make_achievability_protocol(p, target)
            assert proto.starter == mandated_starter(r)
            assert verify_strict_key(trace_protocol(d, proto)[-1], target).passed
            run = run_locc(embed_distribution(d), make_locc_achievability(p, target))
            assert min(leaf_fidelities(run, target)) >= 1 - FIDELITY_TOL
    assert time.perf_counter() - t0 < 60


def test_c07_blockwise_below_half():
    for r in range(1, 7):
        p = OrigamiParams(r, THIRD)
        d = build_origami(p)
        leaves = trace_protocol(d, make_achievability_protocol(p, THIRD))[-1]
        assert verify_blockwise_key(leaves, THIRD).passed
        strict = verify_strict_key(leaves, THIRD)
        assert not strict.passed
        assert any("key–Z dependence" in m for m in strict.diagnostics)
        aligned = trace_protocol(d, make_achievability_protocol(p, THIRD, align=True))[-1]
        assert verify_strict_key(aligned, THIRD).passed


def test_c08_wrong_starter_necessity():
    t0 = time.perf_counter()
    for r in range(1, 5):
        p = OrigamiParams(r, HALF)
        wrong = "A" if mandated_starter(r) == "B" else "B"
        leaves = trace_protocol(build_origami(p), make_achievability_protocol(p, HALF, starter=wrong))[-1]
        trivial = []
        for b in leaves:
            joint = {}
            for (x, y, _), q in b.posterior.events.items():
                joint[(x, y)] = joint.get((x, y), 0) + q
            trivial.append(common_function_from_joint(joint, ("X", "Y")).is_trivial)
        assert any(trivial)
    for lam in (THIRD, HALF):
        rep = exhaustive_one_round_search(build_origami(OrigamiParams(1, lam)), "A", 4, lam)
        assert rep.complete and rep.passing == []
    rep = exhaustive_one_round_search(build_origami(OrigamiParams(1, HALF)), "B", 4, HALF)
    assert ((0, 1), (2, 3)) in rep.passing
    assert time.perf_counter() - t0 < 120


def test_c09_rank_dichotomy_audits():
    for r in range(1, 7):
        for lam, target in ((HALF, HALF), (HALF, QUARTER), (THIRD, THIRD)):
            p = OrigamiParams(r, lam)
            d = build_origami(p)
            levels = trace_protocol(d, make_achievability_protocol(p, target))
            assert not audit_block_survival(d, levels).flagged
            run = run_locc(embed_distribution(d), make_locc_achievability(p, target))
            assert run.rank_drops == 0
    for r in range(1, 4):
        d = build_origami(OrigamiParams(r, HALF))
        audit = audit_block_survival(d, trace_protocol(d, announce_value_protocol(d, "A")))
        assert all(b.rank_drops for b in audit.at_depth(1))
        e = embed_distribution(d)
        for x in range(d.x_size):
            proj = np.zeros((d.x_size, d.x_size))
            proj[x, x] = 1
            _, rep = apply_local_operator(e, LocalOperator("A", proj))
            assert rep.rank_drops


def test_c10_no_communication_search():
    t0 = time.perf_counter()
    rep = prop4_random_search(HALF, HALF, 10 ** 4, 0)
    assert rep.trials == 10 ** 4
    assert rep.max_min_fidelity < 1 - PROP4_MARGIN
    assert time.perf_counter() - t0 < 60


def test_c11_schmidt_rank_equals_nonnegative_rank():
    for r in range(1, 7):
        for lam in (THIRD, HALF):
            d = build_origami(OrigamiParams(r, lam))
            for m in embed_distribution(d).members:
                assert schmidt_rank(m.state) == nonnegative_rank(SliceMatrix.from_slice(d, m.z))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
