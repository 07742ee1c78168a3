import itertools

import numpy as np
import pytest

from conftest import generated, make_instance
from propagation import (IncentiveSolution, PropagationDomainError, activation_value,
                         batch_activation_rounds, is_feasible, meets_threshold, simulate_cascade,
                         solution_cost)


def test_activation_value_examples():
    lone = make_instance(1, [], [9], [(0, 5)], gamma="1.1")
    assert activation_value(lone, 0, [], 5) == 5

    inst = make_instance(3, [(1, 0, 3), (2, 0, 4)], [9, 1, 1], [(0, 2), (0,), (0,)])
    assert activation_value(inst, 0, [1, 2], 2) == 9

    peer = make_instance(2, [(1, 0, 9)], [20, 1], [(0,), (0,)], gamma="1.1")
    assert activation_value(peer, 0, [1], 0) == 11


def test_activation_value_domain_errors():
    inst = make_instance(2, [(1, 0, 3)], [5, 1], [(0, 5), (0,)])
    with pytest.raises(PropagationDomainError):
        activation_value(inst, 0, [0], 0)
    with pytest.raises(PropagationDomainError):
        activation_value(inst, 0, [1], 4)


def test_meets_threshold_uses_lifted_requirement():
    inst = make_instance(2, [(1, 0, 6)], [9, 1], [(0, 3), (0,)])
    assert meets_threshold(inst, 0, [1], 3)
    assert not meets_threshold(inst, 0, [1], 0)
    assert not meets_threshold(inst, 0, [], 3)


def test_meets_threshold_rejects_non_neighbors():
    inst = make_instance(3, [(1, 0, 6)], [9, 1, 1], [(0, 3), (0,), (0,)])
    with pytest.raises(PropagationDomainError):
        meets_threshold(inst, 0, [1, 2], 3)
    with pytest.raises(PropagationDomainError):
        meets_threshold(inst, 0, [1], 4)


def test_full_incentives_activate_everything():
    inst = generated(8, seed=2)
    result = simulate_cascade(inst, IncentiveSolution.all_max(inst))
    assert result.non_activated == frozenset()
    assert all(r == 0 for r, _ in result.activation_order)


def test_nothing_fires_without_incentives():
    inst = make_instance(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)], [2, 2, 2], [(0, 2)] * 3)
    result = simulate_cascade(inst, IncentiveSolution.zero(inst))
    assert result.activated == frozenset()
    assert result.non_activated == frozenset({0, 1, 2})


def test_chain_cascade(chain):
    result = simulate_cascade(chain, IncentiveSolution((1, 0, 0)))
    assert result.activation_order == ((0, 0), (1, 1), (2, 2))
    assert result.non_activated == frozenset()
    assert result.rounds == {0: 0, 1: 1, 2: 2}
    assert is_feasible(chain, IncentiveSolution((1, 0, 0)))
    assert solution_cost(chain, IncentiveSolution((1, 0, 0))) == 1


def test_cascade_ignores_evaluation_order(chain):
    sol = IncentiveSolution((1, 0, 0))
    assert simulate_cascade(chain, sol, order=[2, 1, 0]) == simulate_cascade(chain, sol)


def test_partial_coverage_is_feasible():
    inst = make_instance(4, [(0, 1, 2)], [1, 2, 5, 5], [(0, 1), (0, 2), (0, 5), (0, 5)], alpha="0.5")
    sol = IncentiveSolution((1, 0, 0, 0))
    assert len(simulate_cascade(inst, sol).activated) == 2
    assert is_feasible(inst, sol)


def test_full_incentive_cost():
    inst = generated(8, seed=5)
    sol = IncentiveSolution.all_max(inst)
    assert is_feasible(inst, sol)
    assert solution_cost(inst, sol) == sum(ws[-1] for ws in inst.costs)


def test_solution_outside_menu_is_rejected(chain):
    with pytest.raises(PropagationDomainError):
        simulate_cascade(chain, IncentiveSolution((2, 0, 0)))
    with pytest.raises(PropagationDomainError):
        simulate_cascade(chain, IncentiveSolution((1, 0)))


@pytest.mark.parametrize("gamma", ["0.9", "1", "1.1"])
def test_batch_rounds_match_simulator(gamma):
    inst = generated(6, k=2, beta=0.3, seed=13, gamma=gamma)
    sizes = [len(ps) for ps in inst.incentives]
    rng = np.random.default_rng(0)
    positions = np.array([[rng.integers(0, s) for s in sizes] for _ in range(200)])
    rounds = batch_activation_rounds(inst, positions)
    for row, pos in zip(rounds, positions):
        result = simulate_cascade(inst, IncentiveSolution.from_positions(inst, pos))
        expected = [result.rounds.get(i, -1) for i in range(inst.node_count)]
        assert list(row) == expected


def test_cascade_monotone_in_incentives():
    inst = generated(6, k=2, beta=0.1, seed=21)
    sizes = [len(ps) for ps in inst.incentives]
    for low in itertools.islice(itertools.product(*[range(s) for s in sizes]), 0, 400, 7):
        high = tuple(min(k + 1, s - 1) for k, s in zip(low, sizes))
        a = simulate_cascade(inst, IncentiveSolution.from_positions(inst, low)).activated
        b = simulate_cascade(inst, IncentiveSolution.from_positions(inst, high)).activated
        assert a <= b
