"""
Activatiefunctie en cascadesimulatie.

De simulator volgt het rondegewijze schema: R_i start op de gelifte
invloedseis van knoop i bij zijn incentive, ronde 0 activeert alle knopen
met R_i <= 0, en elke volgende ronde trekt d_ji af voor elke buur j die in
de vorige ronde actief werd. Voor Gamma = 1 is de eis precies h_i - p_i.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from instance import Instance, coverage_target
from gamma_lift import LiftedPropagation, lift, round_power

log = logging.getLogger(__name__)


class PropagationDomainError(ValueError):
    pass


# ---------- Types ----------
@dataclass(frozen=True)
class IncentiveSolution:
    incentives: tuple

    def __post_init__(self):
        object.__setattr__(self, "incentives", tuple(int(p) for p in self.incentives))

    def check(self, inst: Instance):
        if len(self.incentives) != inst.node_count:
            raise PropagationDomainError(
                f"oplossing heeft {len(self.incentives)} incentives, instantie {inst.node_count} knopen")
        for i, p in enumerate(self.incentives):
            if p not in inst.incentives[i]:
                raise PropagationDomainError(f"incentive {p} zit niet in het menu van knoop {i}")

    def positions(self, inst: Instance) -> tuple:
        return tuple(inst.incentive_position(i, p) for i, p in enumerate(self.incentives))

    @classmethod
    def from_positions(cls, inst: Instance, positions: Iterable[int]) -> "IncentiveSolution":
        return cls(tuple(inst.incentives[i][int(k)] for i, k in enumerate(positions)))

    @classmethod
    def all_max(cls, inst: Instance) -> "IncentiveSolution":
        return cls(tuple(ps[-1] for ps in inst.incentives))

    @classmethod
    def zero(cls, inst: Instance) -> "IncentiveSolution":
        return cls((0,) * inst.node_count)


@dataclass(frozen=True)
class CascadeResult:
    activated: frozenset
    non_activated: frozenset
    activation_order: tuple      # (ronde, knoop), binnen een ronde oplopend in knoop
    residuals: tuple             # eind-R_i

    @property
    def rounds(self) -> dict:
        return {node: r for r, node in self.activation_order}


# ---------- Activatiefunctie ----------
def activation_value(inst: Instance, i: int, active_neighbors: Iterable[int], p: int) -> int:
    """round((som d_ji over U)^Gamma) + p, halverwege van nul af."""
    weights = dict(inst.in_neighbors[i])
    total = 0
    for j in set(active_neighbors):
        if j not in weights:
            raise PropagationDomainError(f"knoop {j} is geen in-buur van {i}")
        total += weights[j]
    if p not in inst.incentives[i]:
        raise PropagationDomainError(f"incentive {p} zit niet in het menu van knoop {i}")
    return round_power(total, inst.gamma) + p


def meets_threshold(inst: Instance, i: int, active_neighbors: Iterable[int], p: int,
                    lifted: Optional[LiftedPropagation] = None) -> bool:
    """Activatiebeslissing zoals de simulator en alle modellen haar nemen (gelifte eis)."""
    lifted = lifted or lift(inst)
    weights = dict(inst.in_neighbors[i])
    total = 0
    for j in set(active_neighbors):
        if j not in weights:
            raise PropagationDomainError(f"knoop {j} is geen in-buur van {i}")
        total += weights[j]
    try:
        return lifted.activates(inst, i, p, total)
    except KeyError as e:
        raise PropagationDomainError(str(e)) from None


# ---------- Cascade ----------
def simulate_cascade(inst: Instance, sol: IncentiveSolution,
                     lifted: Optional[LiftedPropagation] = None,
                     order: Optional[Sequence[int]] = None) -> CascadeResult:
    sol.check(inst)
    lifted = lifted or lift(inst)
    n = inst.node_count
    residual = [lifted.needed(inst, i, sol.incentives[i]) for i in range(n)]
    order = list(order) if order is not None else list(range(n))

    active = [False] * n
    newly = []
    for i in order:
        if residual[i] <= 0:
            newly.append(i)
    for i in newly:
        active[i] = True
    activation = [(0, i) for i in sorted(newly)]

    rnd = 0
    while newly:
        rnd += 1
        fired = set(newly)
        newly = []
        for i in order:
            if active[i]:
                continue
            for j, d in inst.in_neighbors[i]:
                if j in fired:
                    residual[i] -= d
            if residual[i] <= 0:
                newly.append(i)
        for i in newly:
            active[i] = True
        activation.extend((rnd, i) for i in sorted(newly))

    act = frozenset(i for i in range(n) if active[i])
    return CascadeResult(
        activated=act,
        non_activated=frozenset(range(n)) - act,
        activation_order=tuple(activation),
        residuals=tuple(residual),
    )


def is_feasible(inst: Instance, sol: IncentiveSolution, lifted: Optional[LiftedPropagation] = None) -> bool:
    return len(simulate_cascade(inst, sol, lifted).activated) >= coverage_target(inst)


def solution_cost(inst: Instance, sol: IncentiveSolution) -> int:
    sol.check(inst)
    return sum(inst.cost_of(i, p) for i, p in enumerate(sol.incentives))


# ---------- Batch (numpy) ----------
def requirement_table(inst: Instance, lifted: Optional[LiftedPropagation] = None) -> np.ndarray:
    """n x max|P_i| tabel met de invloedseis; opvulling met een onbereikbaar grote waarde."""
    lifted = lifted or lift(inst)
    width = max(len(ps) for ps in inst.incentives)
    big = sum(inst.in_weight) + 1
    table = np.full((inst.node_count, width), big, dtype=np.int64)
    for i, req in enumerate(lifted.requirement):
        table[i, :len(req)] = req
    return table


def influence_matrix(inst: Instance) -> np.ndarray:
    """W[j, i] = d_ji."""
    w = np.zeros((inst.node_count, inst.node_count), dtype=np.int64)
    for s, t, d in inst.arcs:
        w[s, t] = d
    return w


def batch_activation_rounds(inst: Instance, positions: np.ndarray,
                            table: Optional[np.ndarray] = None,
                            weights: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Cascade voor een blok incentivevectoren tegelijk (positions: B x n, index in P_i).
    Geeft per knoop de activatieronde, of -1 als de knoop nooit actief wordt.
    Zelfde rondesemantiek als simulate_cascade.
    """
    table = requirement_table(inst) if table is None else table
    weights = influence_matrix(inst) if weights is None else weights
    n = inst.node_count
    positions = np.asarray(positions, dtype=np.int64)
    residual = table[np.arange(n)[None, :], positions]
    rounds = np.full(positions.shape, -1, dtype=np.int64)
    active = residual <= 0
    rounds[active] = 0
    frontier = active.copy()
    rnd = 0
    while frontier.any():
        rnd += 1
        residual = residual - frontier.astype(np.int64) @ weights
        new = (residual <= 0) & ~active
        rounds[new] = rnd
        active |= new
        frontier = new
    return rounds
