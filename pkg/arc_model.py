"""
ARC-formulering: knoop- (x), incentive- (y) en boogvariabelen (z).

    min  som w_ip y_ip
    z.d.a.  som_p c_ip y_ip + som_j d_ji z_ji - R_i x_i >= 0     (geliftte propagatie)
            som_p y_ip = x_i
            z_ij <= x_i                       (alleen als (j,i) geen boog is)
            som_i x_i >= ceil(alpha n)
            cyclusrijen via separatie

Variabelesleutels: ("x", i), ("y", i, p), ("z", i, j) voor boog i -> j.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from instance import Instance, coverage_target
from gamma_lift import LiftedPropagation, lift
from milp_core import Cut, MilpModel
from propagation import IncentiveSolution, simulate_cascade

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-4


@dataclass
class ArcModelHandle:
    instance: Instance
    lifted: LiftedPropagation
    model: MilpModel

    def point(self, vec: np.ndarray):
        """(x̄ per knoop, ȳ per (i,p), z̄ per (i,j)) uit een modelvector."""
        inst, model = self.instance, self.model
        xbar = np.array([vec[model.index(("x", i))] for i in range(inst.node_count)])
        ybar = {(i, p): float(vec[model.index(("y", i, p))])
                for i in range(inst.node_count) for p in inst.incentives[i]}
        zbar = {(s, t): float(vec[model.index(("z", s, t))]) for s, t, _ in inst.arcs}
        return xbar, ybar, zbar

    def solution_from_vector(self, vec: np.ndarray) -> IncentiveSolution:
        inst = self.instance
        chosen = []
        for i in range(inst.node_count):
            p_i = 0
            for p in inst.incentives[i]:
                if vec[self.model.index(("y", i, p))] > 0.5:
                    p_i = p
            chosen.append(p_i)
        return IncentiveSolution(tuple(chosen))

    def vector_from_values(self, values: Mapping) -> np.ndarray:
        vec = np.zeros(self.model.num_vars)
        for key, val in values.items():
            vec[self.model.index(key)] = val
        return vec


def induced_values(inst: Instance, sol: IncentiveSolution,
                   lifted: Optional[LiftedPropagation] = None) -> dict:
    """
    Geheeltallig ARC-punt van een incentivevector: x uit de cascade, y alleen voor
    actieve knopen, z via eerder geactiveerde in-buren (oplopend id) tot de eis gehaald is.
    """
    lifted = lifted or lift(inst)
    cascade = simulate_cascade(inst, sol, lifted)
    rounds = cascade.rounds
    values: dict = {}
    for i in range(inst.node_count):
        active = i in rounds
        values[("x", i)] = 1.0 if active else 0.0
        for p in inst.incentives[i]:
            values[("y", i, p)] = 1.0 if active and p == sol.incentives[i] else 0.0
    for s, t, _ in inst.arcs:
        values[("z", s, t)] = 0.0
    for i, r in rounds.items():
        need = lifted.needed(inst, i, sol.incentives[i])
        got = 0
        for j, d in inst.in_neighbors[i]:
            if got >= need:
                break
            if j in rounds and rounds[j] < r:
                values[("z", j, i)] = 1.0
                got += d
    return values


def build_arc_model(inst: Instance, lifted: Optional[LiftedPropagation] = None) -> ArcModelHandle:
    lifted = lifted or lift(inst)
    model = MilpModel("arc")
    n = inst.node_count
    for i in range(n):
        model.add_var(("x", i))
    for i in range(n):
        for p, w in zip(inst.incentives[i], inst.costs[i]):
            model.add_var(("y", i, p), obj=w)
    for s, t, _ in inst.arcs:
        model.add_var(("z", s, t))

    for i in range(n):
        terms = {("y", i, p): c for p, c in zip(inst.incentives[i], lifted.coef[i]) if c}
        for j, d in inst.in_neighbors[i]:
            terms[("z", j, i)] = d
        terms[("x", i)] = -lifted.rhs[i]
        model.add_row(terms, ">=", 0, tag="propagation")
    for i in range(n):
        terms = {("y", i, p): 1 for p in inst.incentives[i]}
        terms[("x", i)] = -1
        model.add_row(terms, "==", 0, tag="one-incentive")
    arcs = inst.arc_weight
    for s, t, _ in inst.arcs:
        if (t, s) not in arcs:
            model.add_row({("z", s, t): 1, ("x", s): -1}, "<=", 0, tag="linking")
    model.add_row({("x", i): 1 for i in range(n)}, ">=", coverage_target(inst), tag="coverage")
    log.info("ARC-model: %d variabelen, %d rijen", model.num_vars, model.num_rows)
    return ArcModelHandle(instance=inst, lifted=lifted, model=model)


def start_vector(handle: ArcModelHandle, sol: IncentiveSolution) -> np.ndarray:
    return handle.vector_from_values(induced_values(handle.instance, sol, handle.lifted))


# ---------- Cyclusrijen ----------
@dataclass(frozen=True)
class CycleCut:
    arcs: tuple          # ((i, j), ...) gesloten, begint bij k
    excluded: int        # k

    @property
    def nodes(self) -> tuple:
        return tuple(i for i, _ in self.arcs)

    def to_cut(self) -> Cut:
        terms = {("z", i, j): 1 for i, j in self.arcs}
        for v in self.nodes:
            if v != self.excluded:
                terms[("x", v)] = terms.get(("x", v), 0) - 1
        return Cut(terms=terms, sense="<=", rhs=0, kind="cycle",
                   provenance={"cycle": self.arcs, "k": self.excluded})


def floyd_warshall(weights: np.ndarray):
    """Kortste paden met voorgangersmatrix; alleen strikte verbetering, tussenknopen oplopend."""
    n = len(weights)
    dist = weights.astype(float).copy()
    pred = np.where(np.isfinite(dist), np.arange(n)[:, None], -1)
    np.fill_diagonal(dist, 0.0)
    np.fill_diagonal(pred, np.arange(n))
    for m in range(n):
        via = dist[:, m:m + 1] + dist[m:m + 1, :]
        better = via < dist - 1e-12
        dist = np.where(better, via, dist)
        pred = np.where(better, pred[m:m + 1, :], pred)
    return dist, pred


def _path(pred: np.ndarray, src: int, dst: int) -> list:
    path = [dst]
    while path[-1] != src:
        prev = int(pred[src, path[-1]])
        if prev < 0 or len(path) > len(pred):
            return []
        path.append(prev)
    path.reverse()
    return path


def separate_cycles(handle: ArcModelHandle, xbar: Sequence[float], zbar: Mapping,
                    eps: float = DEFAULT_EPS) -> list:
    inst = handle.instance
    n = inst.node_count
    arcs = inst.arc_weight
    weights = np.full((n, n), np.inf)
    cuts = []
    seen = set()
    for s, t, _ in inst.arcs:
        w = float(xbar[s]) - float(zbar.get((s, t), 0.0))
        if w < -eps and (t, s) in arcs:
            # negatief gewicht: de 2-cyclus met k = t is direct geschonden
            pair = CycleCut(arcs=((t, s), (s, t)), excluded=t)
            if pair not in seen:
                viol = zbar.get((s, t), 0.0) + zbar.get((t, s), 0.0) - float(xbar[s])
                if viol > eps:
                    seen.add(pair)
                    cuts.append(pair)
        weights[s, t] = max(w, 0.0)

    dist, pred = floyd_warshall(weights)
    for k in range(n):
        if xbar[k] <= eps:
            continue
        best = None
        for j, _ in inst.in_neighbors[k]:
            if not np.isfinite(dist[k, j]):
                continue
            total = dist[k, j] + weights[j, k]
            if total >= xbar[k] - eps:
                continue
            path = _path(pred, k, j)
            if not path:
                continue
            cand = (total, tuple(path))
            if best is None or cand[0] < best[0] - 1e-12 or (abs(cand[0] - best[0]) <= 1e-12 and cand[1] < best[1]):
                best = cand
        if best is None:
            continue
        nodes = best[1]
        cyc = tuple(zip(nodes, nodes[1:] + (k,)))
        cut = CycleCut(arcs=cyc, excluded=k)
        if cut not in seen:
            seen.add(cut)
            cuts.append(cut)
    if cuts:
        log.debug("cyclusseparatie: %d snedes", len(cuts))
    return cuts
