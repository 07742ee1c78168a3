import numpy as np
import pytest

from conftest import generated
from arc_model import build_arc_model, floyd_warshall, induced_values, separate_cycles, start_vector
from milp_core import solve_mip
from oracle import brute_force_optimum, violated_cycle_constraints
from propagation import IncentiveSolution, is_feasible
from solver import solve_instance


def _point(handle, x, z):
    inst = handle.instance
    xbar = np.array(x, dtype=float)
    zbar = {(s, t): 0.0 for s, t, _ in inst.arcs}
    zbar.update(z)
    return xbar, zbar


def test_model_shape(mutual_pair):
    handle = build_arc_model(mutual_pair)
    model = handle.model
    assert model.num_vars == 2 + 4 + 2
    tags = [row[4] for row in model.rows]
    assert tags.count("propagation") == 2
    assert tags.count("one-incentive") == 2
    assert tags.count("linking") == 0          # beide bogen hebben een tegenboog
    assert tags.count("coverage") == 1


def test_induced_point_satisfies_rows(chain):
    handle = build_arc_model(chain)
    vec = start_vector(handle, IncentiveSolution((1, 0, 0)))
    assert handle.model.violated_rows(vec) == []
    values = induced_values(chain, IncentiveSolution((1, 0, 0)))
    assert values[("z", 0, 1)] == values[("z", 1, 2)] == 1.0
    assert values[("y", 0, 1)] == 1.0 and values[("y", 1, 0)] == 1.0


def test_induced_points_of_generated_solutions_are_feasible():
    inst = generated(8, seed=3, alpha="0.5")
    handle = build_arc_model(inst)
    rng = np.random.default_rng(1)
    for _ in range(30):
        pos = [int(rng.integers(0, len(ps))) for ps in inst.incentives]
        sol = IncentiveSolution.from_positions(inst, pos)
        if not is_feasible(inst, sol):
            continue
        vec = start_vector(handle, sol)
        assert handle.model.violated_rows(vec) == []
        xbar, _, zbar = handle.point(vec)
        assert separate_cycles(handle, xbar, zbar) == []


def test_acyclic_integral_point_has_no_cycle_cut(chain):
    handle = build_arc_model(chain)
    xbar, zbar = _point(handle, [1, 1, 1], {(0, 1): 1.0, (1, 2): 1.0})
    assert separate_cycles(handle, xbar, zbar) == []


def test_fully_used_triangle_is_cut(triangle):
    handle = build_arc_model(triangle)
    xbar, zbar = _point(handle, [1, 1, 1], {(0, 1): 1.0, (1, 2): 1.0, (2, 0): 1.0})
    cuts = separate_cycles(handle, xbar, zbar)
    assert cuts
    for cut in cuts:
        assert set(cut.nodes) == {0, 1, 2}
        assert cut.to_cut().violation({("z", 0, 1): 1, ("z", 1, 2): 1, ("z", 2, 0): 1,
                                       ("x", 0): 1, ("x", 1): 1, ("x", 2): 1}) >= 1 - 1e-9


def test_fractional_two_cycle(mutual_pair):
    handle = build_arc_model(mutual_pair)
    xbar, zbar = _point(handle, [0.5, 0.5], {(0, 1): 0.5, (1, 0): 0.5})
    cuts = separate_cycles(handle, xbar, zbar)
    anchored = {c.excluded: c.to_cut() for c in cuts}
    assert 1 in anchored
    assert anchored[1].terms == {("z", 0, 1): 1, ("z", 1, 0): 1, ("x", 0): -1}
    assert anchored[1].sense == "<=" and anchored[1].rhs == 0


def test_one_cut_per_anchor():
    inst = generated(8, k=4, seed=9)
    handle = build_arc_model(inst)
    xbar = np.ones(inst.node_count)
    zbar = {(s, t): 1.0 for s, t, _ in inst.arcs}
    cuts = separate_cycles(handle, xbar, zbar)
    anchors = [c.excluded for c in cuts]
    assert cuts
    assert len(anchors) == len(set(anchors))


def test_floyd_warshall_paths():
    inf = np.inf
    w = np.array([[inf, 1.0, 4.0, inf],
                  [inf, inf, 1.0, 5.0],
                  [inf, inf, inf, 1.0],
                  [inf, inf, inf, inf]])
    dist, pred = floyd_warshall(w)
    assert dist[0, 3] == pytest.approx(3.0)
    assert not np.isfinite(dist[3, 0])
    path = [3]
    while path[-1] != 0:
        path.append(int(pred[0, path[-1]]))
    assert path[::-1] == [0, 1, 2, 3]


@pytest.mark.parametrize("seed", range(100))
def test_cycle_separation_finds_enumerated_violations(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 11))
    k = 2 if n < 6 else int(rng.choice([2, 4]))
    inst = generated(n, k=k, beta=0.3, seed=seed)
    handle = build_arc_model(inst)
    xbar = rng.uniform(0, 1, size=n)
    zbar = {(s, t): float(rng.uniform(0, 1) * min(1.0, xbar[s] + 0.3)) for s, t, _ in inst.arcs}
    expected = violated_cycle_constraints(inst, xbar, zbar, max_len=5)
    found = separate_cycles(handle, xbar, zbar)
    if expected:
        assert found
    for cut in found:
        values = {("x", v): xbar[v] for v in range(n)}
        values.update({("z", s, t): z for (s, t), z in zbar.items()})
        assert cut.to_cut().violation(values) > 1e-4


def test_single_node_optimum(single_node):
    rep = solve_instance(single_node, "arc")
    assert rep.status == "optimal"
    assert rep.z_ub == 4
    assert rep.solution.incentives == (5,)


def test_mutual_pair_needs_one_full_incentive(mutual_pair):
    rep = solve_instance(mutual_pair, "arc")
    assert rep.z_ub == 3
    assert rep.solution.incentives == (0, 5)


def test_cycle_rows_are_required(mutual_pair):
    handle = build_arc_model(mutual_pair)
    rep = solve_mip(handle.model)
    assert rep.z_ub == 0          # zonder cyclusrijen activeren de twee elkaar gratis


@pytest.mark.parametrize("seed, alpha, gamma", [(1, "1", "1"), (2, "0.5", "1.1"), (3, "0.1", "0.9")])
def test_arc_matches_oracle(seed, alpha, gamma):
    inst = generated(6, k=2, beta=0.3, seed=seed, alpha=alpha, gamma=gamma)
    cost, _ = brute_force_optimum(inst)
    rep = solve_instance(inst, "arc")
    assert rep.status == "optimal"
    assert rep.z_ub == cost
