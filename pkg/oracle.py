"""
Grondwaarheid voor kleine instanties: optimum door volledige enumeratie,
controle van snedes tegen alle toegelaten oplossingen, cyclusenumeratie.

Enumeratie gaat in blokken incentivevectoren (numpy), in lexicografische
volgorde; de cascade is dezelfde als in propagation.
"""
from __future__ import annotations

import itertools, logging
from dataclasses import dataclass
from math import prod
from typing import Mapping, Optional, Sequence

import numpy as np
import networkx as nx

from instance import Instance, coverage_target
from gamma_lift import LiftedPropagation, lift
from milp_core import Cut
from propagation import (IncentiveSolution, batch_activation_rounds, influence_matrix, requirement_table)

log = logging.getLogger(__name__)

GUARD = 10 ** 7
CHUNK = 50_000


class OracleGuardError(RuntimeError):
    pass


@dataclass
class CutViolation:
    solution: IncentiveSolution
    cut: Cut
    lhs: float


def enumeration_size(inst: Instance) -> int:
    return prod(len(ps) for ps in inst.incentives)


def _guard(inst: Instance, limit: int):
    size = enumeration_size(inst)
    if size > limit:
        raise OracleGuardError(f"{size} incentivevectoren, grens is {limit}")


def _blocks(inst: Instance, chunk: int):
    sizes = tuple(len(ps) for ps in inst.incentives)
    total = prod(sizes)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk), dtype=np.int64)
        yield start, np.stack(np.unravel_index(flat, sizes), axis=1)


def _cost_table(inst: Instance) -> np.ndarray:
    width = max(len(ps) for ps in inst.incentives)
    table = np.zeros((inst.node_count, width), dtype=np.int64)
    for i, ws in enumerate(inst.costs):
        table[i, :len(ws)] = ws
    return table


# ---------- Optimum ----------
def brute_force_optimum(inst: Instance, lifted: Optional[LiftedPropagation] = None,
                        limit: int = GUARD, chunk: int = CHUNK):
    """(kosten, oplossing) van de goedkoopste toegelaten vector; (None, None) als er geen is."""
    _guard(inst, limit)
    lifted = lifted or lift(inst)
    req, weights, costs = requirement_table(inst, lifted), influence_matrix(inst), _cost_table(inst)
    target = coverage_target(inst)
    rows = np.arange(inst.node_count)[None, :]
    best = None
    for _, pos in _blocks(inst, chunk):
        rounds = batch_activation_rounds(inst, pos, req, weights)
        feasible = (rounds >= 0).sum(axis=1) >= target
        if not feasible.any():
            continue
        value = costs[rows, pos].sum(axis=1)
        value = np.where(feasible, value, np.iinfo(np.int64).max)
        j = int(np.argmin(value))
        if best is None or value[j] < best[0]:
            best = (int(value[j]), pos[j].copy())
    if best is None:
        return None, None
    return best[0], IncentiveSolution.from_positions(inst, best[1])


# ---------- Snedecontrole ----------
def _induced_columns(inst: Instance, pos: np.ndarray, rounds: np.ndarray, req: np.ndarray,
                     keys: set, cf_keys: set) -> dict:
    n = inst.node_count
    active = rounds >= 0
    cols = {}
    for key in keys | cf_keys:
        if key[0] == "x":
            cols[key] = active[:, key[1]].astype(float)
    need = req[np.arange(n)[None, :], pos]
    want_z = {key for key in keys if key[0] == "z"}
    if want_z:
        for i in range(n):
            r_i = rounds[:, i]
            got = np.zeros(len(pos), dtype=np.int64)
            for j, d in inst.in_neighbors[i]:
                r_j = rounds[:, j]
                take = (r_i > 0) & (r_j >= 0) & (r_j < r_i) & (got < need[:, i])
                got += d * take
                if ("z", j, i) in want_z:
                    cols[("z", j, i)] = take.astype(float)
    for key in keys:
        if key[0] == "y":
            i, p = key[1], key[2]
            cols[key] = ((pos[:, i] == inst.incentive_position(i, p)) & active[:, i]).astype(float)
    for key in cf_keys:
        if key[0] == "y":
            i, p = key[1], key[2]
            cols[("cf",) + key] = (pos[:, i] == inst.incentive_position(i, p)).astype(float)
    return cols


def audit_cuts(inst: Instance, cuts: Sequence[Cut], lifted: Optional[LiftedPropagation] = None,
               limit: int = GUARD, chunk: int = CHUNK, max_per_cut: Optional[int] = None) -> list:
    """
    Alle (oplossing, snede)-paren waarbij het geïnduceerde geheeltallige punt van een
    toegelaten oplossing de snede schendt. CF-snedes worden op de y van de compacte
    formulering geëvalueerd (elke knoop heeft een incentive), de rest op het ARC-punt.
    """
    _guard(inst, limit)
    if not cuts:
        return []
    lifted = lifted or lift(inst)
    req, weights = requirement_table(inst, lifted), influence_matrix(inst)
    target = coverage_target(inst)
    keys, cf_keys = set(), set()
    for cut in cuts:
        (cf_keys if cut.kind == "cf" else keys).update(cut.terms)
    found = []
    per_cut = [0] * len(cuts)
    for _, pos in _blocks(inst, chunk):
        rounds = batch_activation_rounds(inst, pos, req, weights)
        feasible = (rounds >= 0).sum(axis=1) >= target
        if not feasible.any():
            continue
        pos_f, rounds_f = pos[feasible], rounds[feasible]
        cols = _induced_columns(inst, pos_f, rounds_f, req, keys, cf_keys)
        for c, cut in enumerate(cuts):
            lhs = np.zeros(len(pos_f))
            for key, coef in cut.terms.items():
                col = cols[("cf",) + key] if cut.kind == "cf" and key[0] == "y" else cols[key]
                lhs += coef * col
            if cut.sense == ">=":
                bad = lhs < cut.rhs - 1e-9
            elif cut.sense == "<=":
                bad = lhs > cut.rhs + 1e-9
            else:
                bad = np.abs(lhs - cut.rhs) > 1e-9
            for r in np.flatnonzero(bad):
                if max_per_cut is not None and per_cut[c] >= max_per_cut:
                    break
                per_cut[c] += 1
                found.append(CutViolation(IncentiveSolution.from_positions(inst, pos_f[r]), cut, float(lhs[r])))
    if found:
        log.info("audit: %d schendingen", len(found))
    return found


def planted_invalid_cut(cut: Cut) -> Cut:
    """Negatieve controle: rechterlid een eenheid aanscherpen."""
    shift = 1 if cut.sense == ">=" else -1
    return Cut(terms=dict(cut.terms), sense=cut.sense, rhs=cut.rhs + shift, kind=cut.kind,
               provenance={"planted": True, **cut.provenance})


# ---------- Cycli ----------
def instance_graph(inst: Instance) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(inst.node_count))
    g.add_weighted_edges_from(inst.arcs, weight="d")
    return g


def simple_cycles(inst: Instance, max_len: int = 5) -> list:
    return [tuple(c) for c in nx.simple_cycles(instance_graph(inst), length_bound=max_len)]


def violated_cycle_constraints(inst: Instance, xbar: Sequence[float], zbar: Mapping,
                               max_len: int = 5, eps: float = 1e-4) -> list:
    """(cyclus, k) met som z - som_{V(C)\\k} x > eps, over alle enkelvoudige cycli tot max_len."""
    out = []
    for cyc in simple_cycles(inst, max_len):
        flow = sum(zbar.get((cyc[t], cyc[(t + 1) % len(cyc)]), 0.0) for t in range(len(cyc)))
        mass = sum(float(xbar[v]) for v in cyc)
        for k in cyc:
            if flow - (mass - float(xbar[k])) > eps:
                out.append((cyc, k))
    return out


# ---------- Brute-force SEP ----------
def icc_lhs_minimum(inst: Instance, ybar: Mapping, zbar: Mapping, k: int,
                    lifted: Optional[LiftedPropagation] = None) -> float:
    """Minimum van het ICC-linkerlid (zonder x_k) over alle X met k, p̃ en Ñ die een dekking vormen."""
    lifted = lifted or lift(inst)
    others = [v for v in range(inst.node_count) if v != k]
    best = float("inf")
    for size in range(len(others) + 1):
        for extra in itertools.combinations(others, size):
            X = set(extra) | {k}
            total = 0.0
            for i in X:
                outside = [(j, d) for j, d in inst.in_neighbors[i] if j not in X]
                local = float("inf")
                for p, need in zip(inst.incentives[i], lifted.requirement[i]):
                    y_part = sum(ybar.get((i, q), 0.0) for q in inst.incentives[i] if q > p)
                    for r in range(len(outside) + 1):
                        for chosen in itertools.combinations(outside, r):
                            if sum(d for _, d in chosen) >= need:
                                continue
                            picked = {j for j, _ in chosen}
                            z_part = sum(zbar.get((j, i), 0.0) for j, _ in outside if j not in picked)
                            local = min(local, y_part + z_part)
                total += local
            best = min(best, total)
    return best
