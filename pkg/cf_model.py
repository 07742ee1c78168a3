"""
Compacte formulering: alleen incentivevariabelen y_ip.

    min som w_ip y_ip,   som_p y_ip = 1 per knoop,   y binair
    plus dekrijen  som_{i in X} som_{p >= p̃_i(X)} y_ip >= 1
voor elke X met |X| > floor((1 - alpha) n). p̃_i(X) is de kleinste incentive
die i activeert met alle invloed van buiten X; bestaat die niet, dan telt i
niet mee in de rij.
"""
from __future__ import annotations

import math, time, logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from instance import Instance, coverage_target
from gamma_lift import LiftedPropagation, lift
from milp_core import Cut, MilpModel, MipLimits, solve_mip
from propagation import IncentiveSolution, simulate_cascade
from cover_cuts import SUPPORT_TOL, SeparationStats

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-4


@dataclass
class CfModelHandle:
    instance: Instance
    lifted: LiftedPropagation
    model: MilpModel
    accepted: int = 0
    rejected: int = 0

    def point(self, vec: np.ndarray) -> dict:
        inst, model = self.instance, self.model
        return {(i, p): float(vec[model.index(("y", i, p))])
                for i in range(inst.node_count) for p in inst.incentives[i]}

    def solution_from_point(self, ybar: Mapping) -> IncentiveSolution:
        inst = self.instance
        return IncentiveSolution(tuple(
            max(inst.incentives[i], key=lambda p: (ybar.get((i, p), 0.0), -p))
            for i in range(inst.node_count)
        ))

    def solution_from_vector(self, vec: np.ndarray) -> IncentiveSolution:
        return self.solution_from_point(self.point(vec))

    def start_vector(self, sol: IncentiveSolution) -> np.ndarray:
        vec = np.zeros(self.model.num_vars)
        for i, p in enumerate(sol.incentives):
            vec[self.model.index(("y", i, p))] = 1.0
        return vec


def build_cf_model(inst: Instance, lifted: Optional[LiftedPropagation] = None) -> CfModelHandle:
    lifted = lifted or lift(inst)
    model = MilpModel("cf")
    for i in range(inst.node_count):
        for p, w in zip(inst.incentives[i], inst.costs[i]):
            model.add_var(("y", i, p), obj=w)
    for i in range(inst.node_count):
        model.add_row({("y", i, p): 1 for p in inst.incentives[i]}, "==", 1, tag="one-incentive")
    log.info("CF-model: %d variabelen, %d rijen", model.num_vars, model.num_rows)
    return CfModelHandle(instance=inst, lifted=lifted, model=model)


# ---------- Snede ----------
@dataclass
class CfCut:
    nodes: tuple
    p_tilde: dict = field(default_factory=dict)   # i -> kleinste activerende p, of None

    def to_cut(self, inst: Instance) -> Cut:
        terms = {}
        for i in self.nodes:
            pt = self.p_tilde.get(i)
            if pt is None:
                continue
            for p in inst.incentives[i]:
                if p >= pt:
                    terms[("y", i, p)] = 1
        return Cut(terms=terms, sense=">=", rhs=1, kind="cf",
                   provenance={"X": self.nodes, "p_tilde": dict(self.p_tilde)})

    def lhs(self, inst: Instance, ybar: Mapping) -> float:
        return sum(ybar.get((key[1], key[2]), 0.0) for key in self.to_cut(inst).terms)


def threshold_incentive(inst: Instance, lifted: LiftedPropagation, nodes: Iterable[int], i: int) -> Optional[int]:
    """min{p in P_i : q_ip <= som_{j in N_i \\ X} d_ji}, of None."""
    members = set(nodes)
    outside = sum(d for j, d in inst.in_neighbors[i] if j not in members)
    for p, need in zip(inst.incentives[i], lifted.requirement[i]):
        if need <= outside:
            return p
    return None


def cf_cut_for(inst: Instance, lifted: LiftedPropagation, nodes: Iterable[int]) -> CfCut:
    X = tuple(sorted(set(nodes)))
    return CfCut(nodes=X, p_tilde={i: threshold_incentive(inst, lifted, X, i) for i in X})


def cf_cardinality(inst: Instance) -> int:
    return math.floor((1 - inst.alpha) * inst.node_count) + 1


# ---------- Integrale separatie ----------
def separate_cf_integral(handle: CfModelHandle, ybar: Mapping) -> Optional[CfCut]:
    inst, lifted = handle.instance, handle.lifted
    sol = handle.solution_from_point(ybar)
    cascade = simulate_cascade(inst, sol, lifted)
    if len(cascade.activated) >= coverage_target(inst):
        handle.accepted += 1
        return None
    handle.rejected += 1
    cut = cf_cut_for(inst, lifted, cascade.non_activated)
    log.debug("CF lazy: X = %s niet geactiveerd", cut.nodes)
    return cut


# ---------- Fractionele separatie ----------
def build_cf_sep(handle: CfModelHandle, ybar: Mapping) -> MilpModel:
    inst, lifted = handle.instance, handle.lifted
    n = inst.node_count
    model = MilpModel("sep-cf")
    for i in range(n):
        model.add_var(("s0", i))
    for i in range(n):
        model.add_var(("s1", i))
    for i in range(n):
        for p in inst.incentives[i]:
            model.add_var(("y0", i, p))
    y_support = [(i, p) for i in range(n) for p in inst.incentives[i] if ybar.get((i, p), 0.0) > SUPPORT_TOL]
    for i, p in y_support:
        model.add_var(("y1", i, p), obj=ybar[(i, p)])

    for i in range(n):
        total = inst.in_weight[i]
        terms = {("y0", i, p): c for p, c in zip(inst.incentives[i], lifted.coef[i]) if c}
        for j, d in inst.in_neighbors[i]:
            terms[("s0", j)] = d
        if total:
            terms[("s1", i)] = total
        if terms:
            model.add_row(terms, "<=", lifted.rhs[i] - 1 + total, tag="cover")
    for i, p in y_support:
        terms = {("y1", i, p): 1, ("s1", i): -1}
        for q in inst.incentives[i]:
            if q >= p:
                terms[("y0", i, q)] = 1
        model.add_row(terms, ">=", 0, tag="y-link")
    for j in range(n):
        model.add_row({("s0", j): 1, ("s1", j): 1}, ">=", 1, tag="outside")
    model.add_row({("s1", i): 1 for i in range(n)}, ">=", cf_cardinality(inst), tag="cardinality")
    return model


def separate_cf_fractional(handle: CfModelHandle, ybar: Mapping, budget: float = 5.0,
                           stats: Optional[SeparationStats] = None, eps: float = DEFAULT_EPS,
                           tol: Optional[dict] = None) -> Optional[CfCut]:
    inst, lifted = handle.instance, handle.lifted
    model = build_cf_sep(handle, ybar)
    t0 = time.perf_counter()
    report = solve_mip(model, limits=MipLimits(time_limit=budget, tolerances=tol))
    if stats is not None:
        stats.calls += 1
        stats.seconds += time.perf_counter() - t0
        if report.status == "time_limit":
            stats.budget_hits += 1
    if report.status != "optimal" or report.incumbent is None:
        return None
    if report.z_ub >= 1 - eps:
        return None
    values = model.values(report.incumbent)
    X = [i for i in range(inst.node_count) if values[("s1", i)] > 0.5]
    cut = cf_cut_for(inst, lifted, X)
    if cut.lhs(inst, ybar) < 1 - eps:
        return cut
    return None
