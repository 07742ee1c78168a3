import numpy as np
import pytest

from conftest import generated
from milp_core import Cut
from oracle import (OracleGuardError, audit_cuts, brute_force_optimum, enumeration_size, icc_lhs_minimum,
                    planted_invalid_cut, simple_cycles, violated_cycle_constraints)

PAIR_CYCLE = Cut(terms={("z", 0, 1): 1, ("z", 1, 0): 1, ("x", 0): -1}, sense="<=", rhs=0, kind="cycle")


def test_single_node_optimum(single_node):
    cost, sol = brute_force_optimum(single_node)
    assert cost == 4
    assert sol.incentives == (5,)


def test_mutual_pair_optimum(mutual_pair):
    cost, sol = brute_force_optimum(mutual_pair)
    assert cost == 3
    assert sol.incentives == (0, 5)


def test_chunking_does_not_change_the_optimum(small_generated):
    assert brute_force_optimum(small_generated, chunk=7)[0] == brute_force_optimum(small_generated)[0]


def test_guard():
    inst = generated(12, seed=0)
    assert enumeration_size(inst) == int(np.prod([len(ps) for ps in inst.incentives]))
    with pytest.raises(OracleGuardError):
        brute_force_optimum(inst, limit=1000)
    with pytest.raises(OracleGuardError):
        audit_cuts(inst, [PAIR_CYCLE], limit=1000)


def test_valid_cycle_cut_passes_audit(mutual_pair):
    assert audit_cuts(mutual_pair, [PAIR_CYCLE]) == []


def test_planted_cut_is_caught(mutual_pair):
    planted = planted_invalid_cut(PAIR_CYCLE)
    assert planted.rhs == -1 and planted.provenance["planted"]
    found = audit_cuts(mutual_pair, [planted])
    assert found
    assert all(v.cut is planted for v in found)
    assert {v.solution.incentives for v in found} >= {(0, 5)}


def test_max_per_cut(mutual_pair):
    assert len(audit_cuts(mutual_pair, [planted_invalid_cut(PAIR_CYCLE)], max_per_cut=1)) == 1


def test_cf_cut_is_audited_on_compact_point(mutual_pair):
    cut = Cut(terms={("y", 0, 5): 1, ("y", 1, 5): 1}, sense=">=", rhs=1, kind="cf")
    assert audit_cuts(mutual_pair, [cut]) == []
    assert audit_cuts(mutual_pair, [planted_invalid_cut(cut)])


def test_simple_cycles(triangle, chain, mutual_pair):
    assert [sorted(c) for c in simple_cycles(triangle)] == [[0, 1, 2]]
    assert simple_cycles(chain) == []
    assert len(simple_cycles(mutual_pair)) == 1
    assert simple_cycles(triangle, max_len=2) == []


def test_violated_cycle_constraints(triangle):
    zbar = {(0, 1): 1.0, (1, 2): 1.0, (2, 0): 1.0}
    found = violated_cycle_constraints(triangle, [1.0, 1.0, 1.0], zbar)
    assert sorted(k for _, k in found) == [0, 1, 2]
    assert violated_cycle_constraints(triangle, [1.0, 1.0, 1.0], {(0, 1): 1.0, (1, 2): 1.0}) == []


def test_icc_lhs_minimum_on_mutual_pair(mutual_pair):
    ybar = {(0, 0): 1.0, (0, 5): 0.0, (1, 0): 1.0, (1, 5): 0.0}
    zbar = {(0, 1): 1.0, (1, 0): 1.0}
    assert icc_lhs_minimum(mutual_pair, ybar, zbar, 0) == pytest.approx(0.0)
    ybar = {(0, 0): 0.0, (0, 5): 1.0, (1, 0): 1.0, (1, 5): 0.0}
    assert icc_lhs_minimum(mutual_pair, ybar, zbar, 0) == pytest.approx(1.0)
