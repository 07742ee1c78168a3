import os, sys
from fractions import Fraction

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from instance import GeneratorParams, Instance, generate_instance, incentive_cost  # noqa: E402


def make_instance(n, arcs, thresholds, menus, alpha=1, gamma=1, costs=None):
    """Kleine handgemaakte instantie; kosten standaard floor(p^0.9)."""
    if costs is None:
        costs = [tuple(incentive_cost(p) for p in ps) for ps in menus]
    return Instance(node_count=n, arcs=tuple(arcs), thresholds=tuple(thresholds),
                    incentives=tuple(tuple(ps) for ps in menus), costs=tuple(tuple(ws) for ws in costs),
                    alpha=Fraction(alpha), gamma=Fraction(gamma))


def generated(n, k=4, beta=0.1, seed=0, alpha="1", gamma="1"):
    return generate_instance(GeneratorParams(n=n, k=k, beta=beta, seed=seed,
                                             alpha=Fraction(alpha), gamma=Fraction(gamma)))


@pytest.fixture
def single_node():
    """h = 5, P = {0, 5}, geen buren."""
    return make_instance(1, [], [5], [(0, 5)])


@pytest.fixture
def mutual_pair():
    """d_01 = d_10 = h_0 = h_1 = 5; volledige incentive kost 4 bij knoop 0 en 3 bij knoop 1."""
    return make_instance(2, [(0, 1, 5), (1, 0, 5)], [5, 5], [(0, 5), (0, 5)],
                         costs=[(0, 4), (0, 3)])


@pytest.fixture
def chain():
    """0 -> 1 -> 2, alle d = 1 en h = 1, P = {0, 1}."""
    return make_instance(3, [(0, 1, 1), (1, 2, 1)], [1, 1, 1], [(0, 1)] * 3)


@pytest.fixture
def triangle():
    """Gerichte driehoek 0 -> 1 -> 2 -> 0 met d = 2, h = 2."""
    return make_instance(3, [(0, 1, 2), (1, 2, 2), (2, 0, 2)], [2, 2, 2], [(0, 1, 2)] * 3)


@pytest.fixture
def small_generated():
    return generated(6, k=2, beta=0.3, seed=7)
