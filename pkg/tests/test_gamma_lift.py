import itertools
from fractions import Fraction

import numpy as np
import pytest

from conftest import make_instance
from gamma_lift import (as_fraction, ceil_root, floor_power, influence_requirement, lift, power_at_least,
                        round_power, rounding_disagreements, satisfies_power_form)
from instance import incentive_menu

G09, G10, G11 = Fraction(9, 10), Fraction(1), Fraction(11, 10)


def _single(h, menu, gamma):
    return make_instance(1, [], [h], [menu], gamma=gamma)


@pytest.mark.parametrize("value, expected", [
    (1.1, Fraction(11, 10)),
    (0.9, Fraction(9, 10)),
    ("1.1", Fraction(11, 10)),
    (1, Fraction(1)),
    (Fraction(2, 3), Fraction(2, 3)),
])
def test_as_fraction(value, expected):
    assert as_fraction(value) == expected


@pytest.mark.parametrize("t, gamma, expected", [
    (9, G11, 8),
    (6, G11, 6),
    (9, G09, 12),
    (9, G10, 9),
    (0, G11, 0),
    (-3, G09, 0),
    (1, G11, 1),
])
def test_ceil_root(t, gamma, expected):
    assert ceil_root(t, gamma) == expected


def test_ceil_root_is_smallest_certified_value():
    for gamma in (G09, G10, G11, Fraction(3, 7)):
        for t in range(1, 200):
            c = ceil_root(t, gamma)
            assert power_at_least(c, gamma, t)
            assert c == 0 or not power_at_least(c - 1, gamma, t)


@pytest.mark.parametrize("s, gamma, expected", [(9, G09, 7), (34, G09, 23), (0, G09, 0), (1, G09, 1)])
def test_floor_power(s, gamma, expected):
    assert floor_power(s, gamma) == expected


def test_round_power():
    assert round_power(9, G11) == 11
    assert round_power(0, G11) == 0
    assert round_power(7, G10) == 7


def test_lift_coefficients_linear_case():
    inst = _single(9, (0, 3, 9, 17), G10)
    lifted = lift(inst)
    assert lifted.rhs == (9,)
    assert lifted.coefficient(inst, 0, 3) == 3
    assert lifted.coefficient(inst, 0, 9) == 9
    assert lifted.coefficient(inst, 0, 17) == 9


def test_lift_coefficients_peer_pressure():
    inst = _single(9, (0, 3), G11)
    lifted = lift(inst)
    assert lifted.coefficient(inst, 0, 3) == 2
    assert lifted.rhs == (8,)


def test_lift_full_incentive_gets_rhs():
    inst = _single(9, (0, 9), G09)
    lifted = lift(inst)
    assert lifted.coefficient(inst, 0, 9) == lifted.rhs[0] == 12


@pytest.mark.parametrize("gamma, p, expected", [(G10, 3, 6), (G11, 0, 8), (G11, 9, 0), (G09, 12, 0)])
def test_influence_requirement(gamma, p, expected):
    inst = _single(9, tuple(sorted({0, p})), gamma)
    assert influence_requirement(inst, 0, p) == expected


def test_lifted_tables_are_consistent():
    inst = _single(34, incentive_menu(34), G11)
    lifted = lift(inst)
    coef, req = lifted.coef[0], lifted.requirement[0]
    assert coef[0] == 0
    assert all(b >= a for a, b in zip(coef, coef[1:]))
    assert all(c + q == lifted.rhs[0] for c, q in zip(coef, req))
    assert req[-1] == 0


def _star(rng, degree, gamma):
    weights = [int(w) for w in rng.integers(1, 11, size=degree)]
    h = int(rng.integers(1, 61))
    arcs = [(j + 1, 0, w) for j, w in enumerate(weights)]
    menus = [incentive_menu(h)] + [(0,)] * degree
    return make_instance(degree + 1, arcs, [h] + [1] * degree, menus, gamma=gamma), weights


@pytest.mark.parametrize("gamma", [G09, G10, G11])
def test_lifted_form_matches_power_form_exhaustively(gamma):
    rng = np.random.default_rng(2024)
    disagreements = 0
    for _ in range(50):
        inst, weights = _star(rng, int(rng.integers(1, 7)), gamma)
        lifted = lift(inst)
        for mask in itertools.product((0, 1), repeat=len(weights)):
            influence = sum(w for w, on in zip(weights, mask) if on)
            for p in inst.incentives[0]:
                if lifted.activates(inst, 0, p, influence) != satisfies_power_form(inst, 0, p, influence):
                    disagreements += 1
    assert disagreements == 0


@pytest.mark.slow
@pytest.mark.parametrize("gamma", [G09, G10, G11])
def test_lifted_form_matches_power_form_sampled(gamma):
    rng = np.random.default_rng(99)
    checked = disagreements = 0
    while checked < 100_000:
        inst, weights = _star(rng, 6, gamma)
        lifted = lift(inst)
        for _ in range(40):
            mask = rng.integers(0, 2, size=len(weights))
            influence = int(np.dot(mask, weights))
            for p in inst.incentives[0]:
                checked += 1
                if lifted.activates(inst, 0, p, influence) != satisfies_power_form(inst, 0, p, influence):
                    disagreements += 1
    assert disagreements == 0


def test_rounding_disagreements_empty_for_linear_case():
    inst = make_instance(2, [(0, 1, 4), (1, 0, 3)], [5, 3], [(0, 3, 5), (0, 3)])
    assert rounding_disagreements(inst) == []


def test_rounding_disagreements_are_real():
    rng = np.random.default_rng(5)
    for gamma in (G09, G11):
        inst, _ = _star(rng, 6, gamma)
        lifted = lift(inst)
        for i, s, p in rounding_disagreements(inst):
            nearest = round_power(s, gamma) + p >= inst.thresholds[i]
            assert nearest != lifted.activates(inst, i, p, s)
