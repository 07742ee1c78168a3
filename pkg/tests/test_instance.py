from fractions import Fraction

import pytest

from conftest import generated, make_instance
from instance import (GeneratorParams, GeneratorParamsError, InstanceParseError, InstanceValidationError,
                      coverage_target, dumps_text, format_fraction, generate_instance, incentive_cost,
                      incentive_menu, load_instance, loads_text, save_instance)


def _isolated(n, alpha):
    return make_instance(n, [], [1] * n, [(0, 1)] * n, alpha=alpha)


def test_incentive_menu_example():
    assert incentive_menu(34) == (0, 9, 17, 26, 34)


def test_incentive_menu_small_threshold_is_deduplicated():
    assert incentive_menu(1) == (0, 1)
    assert incentive_menu(2) == (0, 1, 2)


@pytest.mark.parametrize("p, w", [(0, 0), (9, 7), (34, 23), (1, 1)])
def test_incentive_cost(p, w):
    assert incentive_cost(p) == w


@pytest.mark.parametrize("n, alpha, expected", [
    (50, Fraction(1), 50),
    (75, Fraction(1, 2), 38),
    (100, Fraction(1, 10), 10),
])
def test_coverage_target(n, alpha, expected):
    assert coverage_target(_isolated(n, alpha)) == expected


def test_zero_threshold_is_rejected():
    with pytest.raises(InstanceValidationError):
        make_instance(2, [(0, 1, 1)], [0, 1], [(0, 1), (0, 1)])


def test_duplicate_arc_is_rejected():
    text = ("glcip 6 2 1 1\n"
            + "".join(f"node {i} 1 2 0 0 1 1\n" for i in range(6))
            + "arc 3 5 2\narc 3 5 4\n")
    with pytest.raises(InstanceValidationError):
        loads_text(text)


@pytest.mark.parametrize("arcs", [[(0, 0, 1)], [(0, 4, 1)], [(0, 1, 0)]])
def test_bad_arcs_are_rejected(arcs):
    with pytest.raises(InstanceValidationError):
        make_instance(2, arcs, [1, 1], [(0, 1), (0, 1)])


def test_menu_must_start_at_zero():
    with pytest.raises(InstanceValidationError):
        make_instance(1, [], [3], [(1, 3)])


def test_parse_error_carries_line_and_field():
    with pytest.raises(InstanceParseError) as info:
        loads_text("glcip 1 0 1 1\n# commentaar\nnode 0 x 2 0 0 5 4\n")
    assert info.value.line == 3
    assert info.value.field == "h"


def test_parse_rejects_missing_node():
    with pytest.raises(InstanceParseError):
        loads_text("glcip 2 0 1 1\nnode 0 1 1 0 0\n")


def test_text_round_trip(tmp_path):
    inst = generated(20, k=4, beta=0.3, seed=11, alpha="0.5", gamma="1.1")
    path = tmp_path / "inst.txt"
    save_instance(inst, str(path))
    assert load_instance(str(path)) == inst
    assert loads_text(dumps_text(inst)) == inst


def test_json_round_trip(tmp_path):
    inst = generated(20, k=4, beta=0.1, seed=3, alpha="0.1", gamma="0.9")
    path = tmp_path / "inst.json"
    save_instance(inst, str(path))
    assert load_instance(str(path)) == inst


def test_generator_is_deterministic():
    assert generated(12, seed=4) == generated(12, seed=4)


def test_generator_structure():
    inst = generated(12, k=4, beta=0.3, seed=1)
    assert inst.node_count == 12
    assert inst.arc_count == 12 * 4
    assert all((t, s) in inst.arc_weight for s, t, _ in inst.arcs)
    assert all(1 <= d <= 10 for _, _, d in inst.arcs)
    h_max = max(inst.thresholds)
    for i in range(12):
        assert 1 <= inst.thresholds[i] <= max(1, inst.in_weight[i] // 2)
        assert inst.incentives[i] == incentive_menu(h_max)
        assert inst.costs[i] == tuple(incentive_cost(p) for p in inst.incentives[i])


@pytest.mark.parametrize("kwargs", [
    dict(n=8, k=3, beta=0.1, seed=0),
    dict(n=4, k=4, beta=0.1, seed=0),
    dict(n=8, k=4, beta=1.5, seed=0),
    dict(n=8, k=4, beta=0.1, seed=-1),
    dict(n=8, k=4, beta=0.1, seed=0, alpha=Fraction(0)),
])
def test_generator_params_are_checked(kwargs):
    with pytest.raises(GeneratorParamsError):
        generate_instance(GeneratorParams(**kwargs))


@pytest.mark.parametrize("value, text", [
    (Fraction(1), "1"),
    (Fraction(1, 2), "0.5"),
    (Fraction(11, 10), "1.1"),
    (Fraction(1, 3), "1/3"),
])
def test_format_fraction(value, text):
    assert format_fraction(value) == text
