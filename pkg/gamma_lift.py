"""
Gamma-lift: de niet-lineaire activatievoorwaarde

    p_i + (som van d_ji over actieve buren)^Gamma >= h_i

omgezet naar een lineaire, gelifte vorm met gehele coefficienten:

    c_ip * y_ip + som d_ji z_ji >= R_i * x_i,
    R_i  = ceil(h_i^(1/Gamma)),
    c_ip = R_i - ceil(max(0, h_i - p)^(1/Gamma)).

Alle machten worden exact beslist: Gamma = a/b is rationaal, dus
s^Gamma >= t  <=>  s^a >= t^b  (gehele getallen, geen afrondingsfouten).
Een float levert alleen de kandidaat; de gehele vergelijking certificeert hem.
"""
from __future__ import annotations

import math, logging
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from instance import Instance

log = logging.getLogger(__name__)


# ---------- Exacte machten ----------
def as_fraction(value) -> Fraction:
    """'1.1' -> 11/10; floats via hun decimale representatie, niet via de binaire."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def power_at_least(base: int, gamma: Fraction, target: int) -> bool:
    """base^gamma >= target, exact. base >= 0."""
    if target <= 0:
        return True
    if base <= 0:
        return False
    return base ** gamma.numerator >= target ** gamma.denominator


def ceil_root(t: int, gamma: Fraction) -> int:
    """ceil(t^(1/gamma)): kleinste gehele c >= 0 met c^gamma >= t."""
    if t <= 0:
        return 0
    a, b = gamma.numerator, gamma.denominator
    goal = t ** b
    try:
        c = max(1, math.ceil(t ** (b / a)))
    except OverflowError:
        c = 1
    while c > 1 and (c - 1) ** a >= goal:
        c -= 1
    while c ** a < goal:
        c += 1
    return c


def floor_power(s: int, gamma: Fraction) -> int:
    """floor(s^gamma): grootste gehele f met f <= s^gamma (afkappen)."""
    if s <= 0:
        return 0
    a, b = gamma.numerator, gamma.denominator
    value = s ** a
    try:
        f = max(0, math.floor(s ** (a / b)))
    except OverflowError:
        f = 0
    while f > 0 and f ** b > value:
        f -= 1
    while (f + 1) ** b <= value:
        f += 1
    return f


def round_power(s: int, gamma: Fraction) -> int:
    """
    s^gamma afgerond naar het dichtstbijzijnde gehele getal, .5 van nul af.
    n is de grootste gehele waarde met n - 1/2 <= s^gamma,
    d.w.z. (2n - 1)^b <= 2^b * s^a.
    """
    if s <= 0:
        return 0
    a, b = gamma.numerator, gamma.denominator
    rhs = (2 ** b) * (s ** a)
    try:
        n = max(0, math.floor(s ** (a / b) + 0.5))
    except OverflowError:
        n = 0
    while n > 0 and (2 * n - 1) ** b > rhs:
        n -= 1
    while (2 * n + 1) ** b <= rhs:
        n += 1
    return n


# ---------- Gelifte propagatie ----------
@dataclass(frozen=True)
class LiftedPropagation:
    gamma: Fraction
    rhs: tuple            # R_i per knoop
    coef: tuple           # c_ip per knoop, in de volgorde van P_i
    requirement: tuple    # R_i - c_ip = ceil(max(0, h_i - p)^(1/Gamma))

    def coefficient(self, inst: "Instance", i: int, p: int) -> int:
        return self.coef[i][inst.incentive_position(i, p)]

    def needed(self, inst: "Instance", i: int, p: int) -> int:
        return self.requirement[i][inst.incentive_position(i, p)]

    def activates(self, inst: "Instance", i: int, p: int, influence: int) -> bool:
        """Geheel binnenkomend gewicht `influence` plus incentive p activeert i."""
        return influence >= self.needed(inst, i, p)

    def insufficient(self, inst: "Instance", i: int, p: int, influence: int) -> bool:
        """Dekvoorwaarde: (influence)^Gamma + p < h_i."""
        return influence < self.needed(inst, i, p)


def lift(inst: "Instance") -> LiftedPropagation:
    gamma = inst.gamma
    rhs, coef, req = [], [], []
    for i in range(inst.node_count):
        h = inst.thresholds[i]
        r = ceil_root(h, gamma)
        q = tuple(ceil_root(max(0, h - p), gamma) for p in inst.incentives[i])
        rhs.append(r)
        req.append(q)
        coef.append(tuple(r - qp for qp in q))
    lifted = LiftedPropagation(gamma=gamma, rhs=tuple(rhs), coef=tuple(coef), requirement=tuple(req))
    log.debug("lift: Gamma=%s, R=%s", gamma, lifted.rhs)
    return lifted


def influence_requirement(inst: "Instance", i: int, p: int) -> int:
    """Minimale gehele binnenkomende invloed die i activeert bij incentive p (0 als p >= h_i)."""
    return ceil_root(max(0, inst.thresholds[i] - p), inst.gamma)


def satisfies_power_form(inst: "Instance", i: int, p: int, influence: int) -> bool:
    """De oorspronkelijke voorwaarde p + influence^Gamma >= h_i, exact beslist."""
    return power_at_least(influence, inst.gamma, inst.thresholds[i] - p)


def rounding_disagreements(inst: "Instance") -> list[tuple[int, int, int]]:
    """
    (knoop, invloed, incentive) waarvoor round(invloed^Gamma) + p >= h_i
    anders beslist dan de gelifte plafondvorm. De gelifte vorm is leidend;
    deze lijst is alleen ter registratie.
    """
    out = []
    gamma = inst.gamma
    if gamma == 1:
        return out
    for i in range(inst.node_count):
        h = inst.thresholds[i]
        total = sum(d for _, d in inst.in_neighbors[i])
        for p in inst.incentives[i]:
            need = ceil_root(max(0, h - p), gamma)
            for s in range(total + 1):
                if (round_power(s, gamma) + p >= h) != (s >= need):
                    out.append((i, s, p))
    if out:
        log.debug("%d afrondingsverschillen tussen nearest-rounding en gelifte vorm", len(out))
    return out
