"""
Influence cover cuts op het ARC-model.

Een verzameling X met per knoop een incentivegrens p̃_i en een externe
burenset Ñ_i is een dekking als Ñ_i samen met p̃_i knoop i niet activeert:
    som_{j in Ñ_i} d_ji < q_i(p̃_i)      (gelifte invloedseis)
Dan moet de eerste actieve knoop van X geactiveerd zijn door een grotere
incentive of door een buur buiten X en Ñ_i:
    ICC   som_{i in X} [ som_{p > p̃_i} y_ip + som_{j in N_i \\ (X u Ñ_i)} z_ji ] >= x_k
    ICC+  idem >= 1,  als |X| > floor((1 - alpha) n)
De geliftte variant (LICC/LICC+) deelt één externe set Ñ_X en gebruikt x_j
in plaats van z_ji, zodat een externe buur maar één keer telt.

Separatie gaat via kleine MIP's (SEP, SEP2) die met de eigen branch-and-cut
worden opgelost; variabelen met relaxatiewaarde 0 hoeven daarin niet mee.
"""
from __future__ import annotations

import math, time, logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from instance import Instance
from gamma_lift import LiftedPropagation, lift
from milp_core import Cut, MilpModel, MipLimits, solve_mip
from arc_model import ArcModelHandle

log = logging.getLogger(__name__)

SUPPORT_TOL = 1e-9
DEFAULT_EPS = 1e-4


@dataclass
class SeparationStats:
    calls: int = 0
    budget_hits: int = 0
    seconds: float = 0.0


# ---------- Snedetypes ----------
@dataclass
class IccCut:
    nodes: tuple                         # X, oplopend
    anchor: Optional[int]                # k; None voor de rhs-1 variant
    p_tilde: dict                        # i -> p̃_i
    n_tilde: dict = field(default_factory=dict)   # i -> tuple Ñ_i

    def cover_holds(self, inst: Instance, lifted: LiftedPropagation) -> bool:
        for i in self.nodes:
            weights = dict(inst.in_neighbors[i])
            influence = sum(weights[j] for j in self.n_tilde.get(i, ()))
            if not lifted.insufficient(inst, i, self.p_tilde[i], influence):
                return False
        return True

    def to_cut(self, inst: Instance) -> Cut:
        members = set(self.nodes)
        terms: dict = {}
        for i in self.nodes:
            for p in inst.incentives[i]:
                if p > self.p_tilde[i]:
                    terms[("y", i, p)] = 1
            skip = members | set(self.n_tilde.get(i, ()))
            for j, _ in inst.in_neighbors[i]:
                if j not in skip:
                    terms[("z", j, i)] = 1
        provenance = {"X": self.nodes, "k": self.anchor, "p_tilde": dict(self.p_tilde),
                      "n_tilde": {i: tuple(v) for i, v in self.n_tilde.items()}}
        if self.anchor is None:
            return Cut(terms=terms, sense=">=", rhs=1, kind="icc_plus", provenance=provenance)
        terms[("x", self.anchor)] = -1
        return Cut(terms=terms, sense=">=", rhs=0, kind="icc", provenance=provenance)

    def lhs(self, inst: Instance, ybar: Mapping, zbar: Mapping) -> float:
        """Linkerlid zonder de x_k-term."""
        total = 0.0
        for key, coef in self.to_cut(inst).terms.items():
            if key[0] == "y":
                total += coef * ybar.get((key[1], key[2]), 0.0)
            elif key[0] == "z":
                total += coef * zbar.get((key[1], key[2]), 0.0)
        return total


@dataclass
class LiccCut:
    nodes: tuple
    anchor: Optional[int]
    p_tilde: dict
    outside: tuple = ()                  # Ñ_X

    def cover_holds(self, inst: Instance, lifted: LiftedPropagation) -> bool:
        shared = set(self.outside)
        for i in self.nodes:
            influence = sum(d for j, d in inst.in_neighbors[i] if j in shared)
            if not lifted.insufficient(inst, i, self.p_tilde[i], influence):
                return False
        return True

    def to_cut(self, inst: Instance) -> Cut:
        members = set(self.nodes)
        terms: dict = {}
        for i in self.nodes:
            for p in inst.incentives[i]:
                if p > self.p_tilde[i]:
                    terms[("y", i, p)] = 1
        skip = members | set(self.outside)
        for j in range(inst.node_count):
            if j not in skip:
                terms[("x", j)] = 1
        provenance = {"X": self.nodes, "k": self.anchor, "p_tilde": dict(self.p_tilde),
                      "outside": tuple(self.outside)}
        if self.anchor is None:
            return Cut(terms=terms, sense=">=", rhs=1, kind="licc_plus", provenance=provenance)
        terms[("x", self.anchor)] = terms.get(("x", self.anchor), 0) - 1
        return Cut(terms=terms, sense=">=", rhs=0, kind="licc", provenance=provenance)

    def lhs(self, inst: Instance, xbar: Sequence[float], ybar: Mapping) -> float:
        members = set(self.nodes) | set(self.outside)
        total = sum(ybar.get((i, p), 0.0) for i in self.nodes for p in inst.incentives[i] if p > self.p_tilde[i])
        total += sum(float(xbar[j]) for j in range(inst.node_count) if j not in members)
        return total


# ---------- Post-processing ----------
def _raise_incentive(inst: Instance, lifted: LiftedPropagation, i: int, influence: int, current: int) -> int:
    best = current
    for p in inst.incentives[i]:
        if p > best and lifted.insufficient(inst, i, p, influence):
            best = p
    return best


def postprocess_icc(cut: IccCut, inst: Instance, lifted: Optional[LiftedPropagation] = None) -> IccCut:
    """p̃_i zo hoog mogelijk, daarna Ñ_i gretig aanvullen (grootste d_ji eerst, dan id)."""
    lifted = lifted or lift(inst)
    members = set(cut.nodes)
    p_tilde, n_tilde = {}, {}
    for i in cut.nodes:
        weights = dict(inst.in_neighbors[i])
        chosen = list(cut.n_tilde.get(i, ()))
        influence = sum(weights[j] for j in chosen)
        p = _raise_incentive(inst, lifted, i, influence, cut.p_tilde[i])
        need = lifted.needed(inst, i, p)
        candidates = sorted(((d, j) for j, d in inst.in_neighbors[i] if j not in members and j not in chosen),
                            key=lambda t: (-t[0], t[1]))
        for d, j in candidates:
            if influence + d < need:
                chosen.append(j)
                influence += d
        p_tilde[i] = p
        n_tilde[i] = tuple(sorted(chosen))
    return IccCut(nodes=cut.nodes, anchor=cut.anchor, p_tilde=p_tilde, n_tilde=n_tilde)


def postprocess_licc(cut: LiccCut, inst: Instance, lifted: Optional[LiftedPropagation] = None) -> LiccCut:
    """
    Zelfde idee voor de gedeelde set: eerst p̃_i verhogen, dan Ñ_X aanvullen met
    knopen die X niet raken, daarna op aflopende totale invloed op X (dan id).
    """
    lifted = lifted or lift(inst)
    members = set(cut.nodes)
    outside = set(cut.outside)
    influence = {i: sum(d for j, d in inst.in_neighbors[i] if j in outside) for i in cut.nodes}
    p_tilde = {i: _raise_incentive(inst, lifted, i, influence[i], cut.p_tilde[i]) for i in cut.nodes}
    need = {i: lifted.needed(inst, i, p_tilde[i]) for i in cut.nodes}

    reach: dict = {}
    for i in cut.nodes:
        for j, d in inst.in_neighbors[i]:
            if j not in members:
                reach.setdefault(j, []).append((i, d))
    rest = [j for j in range(inst.node_count) if j not in members and j not in outside]
    order = sorted(rest, key=lambda j: (j in reach, -sum(d for _, d in reach.get(j, ())), j))
    for j in order:
        hits = reach.get(j, ())
        if all(influence[i] + d < need[i] for i, d in hits):
            outside.add(j)
            for i, d in hits:
                influence[i] += d
    return LiccCut(nodes=cut.nodes, anchor=cut.anchor, p_tilde=p_tilde, outside=tuple(sorted(outside)))


# ---------- SEP (ICC) ----------
def _cardinality(inst: Instance) -> int:
    return math.floor((1 - inst.alpha) * inst.node_count) + 1


def build_icc_sep(handle: ArcModelHandle, ybar: Mapping, zbar: Mapping, anchor: Optional[int]) -> MilpModel:
    inst, lifted = handle.instance, handle.lifted
    n = inst.node_count
    model = MilpModel("sep-icc" if anchor is not None else "sep-icc+")
    for i in range(n):
        model.add_var(("s", i))
    for i in range(n):
        for p in inst.incentives[i]:
            model.add_var(("y0", i, p))
    y_support = [(i, p) for i in range(n) for p in inst.incentives[i] if ybar.get((i, p), 0.0) > SUPPORT_TOL]
    for i, p in y_support:
        model.add_var(("y1", i, p), obj=ybar[(i, p)])
    z_support = [(s, t) for s, t, _ in inst.arcs if zbar.get((s, t), 0.0) > SUPPORT_TOL]
    for s, t in z_support:
        model.add_var(("z0", s, t))
        model.add_var(("z1", s, t), obj=zbar[(s, t)])

    z_in = {}
    for s, t in z_support:
        z_in.setdefault(t, []).append(s)
    for i in range(n):
        terms = {("y0", i, p): c for p, c in zip(inst.incentives[i], lifted.coef[i]) if c}
        for j in z_in.get(i, ()):
            terms[("z0", j, i)] = inst.arc_weight[(j, i)]
        if terms:
            model.add_row(terms, "<=", lifted.rhs[i] - 1, tag="cover")
    for i, p in y_support:
        terms = {("y1", i, p): 1, ("s", i): -1}
        for q in inst.incentives[i]:
            if q >= p:
                terms[("y0", i, q)] = 1
        model.add_row(terms, ">=", 0, tag="y-link")
    for j, i in z_support:
        model.add_row({("z1", j, i): 1, ("s", i): -1, ("s", j): 1, ("z0", j, i): 1}, ">=", 0, tag="z-link")
    if anchor is not None:
        model.set_bounds(("s", anchor), lower=1)
    else:
        model.add_row({("s", i): 1 for i in range(n)}, ">=", _cardinality(inst), tag="cardinality")
    return model


def _solve_sep(model: MilpModel, budget: float, stats: Optional[SeparationStats], tol: Optional[dict]):
    t0 = time.perf_counter()
    report = solve_mip(model, limits=MipLimits(time_limit=budget, tolerances=tol))
    if stats is not None:
        stats.calls += 1
        stats.seconds += time.perf_counter() - t0
    if report.status != "optimal" or report.incumbent is None:
        if report.status == "time_limit" and stats is not None:
            stats.budget_hits += 1
        log.debug("%s: geen resultaat (%s)", model.name, report.status)
        return None, None
    return report.z_ub, model.values(report.incumbent)


def _decode_icc(handle: ArcModelHandle, values: dict, anchor: Optional[int]) -> IccCut:
    inst = handle.instance
    X = tuple(i for i in range(inst.node_count) if values[("s", i)] > 0.5)
    p_tilde, n_tilde = {}, {}
    members = set(X)
    for i in X:
        chosen = [p for p in inst.incentives[i] if values[("y0", i, p)] > 0.5]
        p_tilde[i] = max(chosen) if chosen else 0
        n_tilde[i] = tuple(j for j, _ in inst.in_neighbors[i]
                           if j not in members and values.get(("z0", j, i), 0.0) > 0.5)
    return IccCut(nodes=X, anchor=anchor, p_tilde=p_tilde, n_tilde=n_tilde)


def icc_separation_value(handle: ArcModelHandle, ybar: Mapping, zbar: Mapping, k: Optional[int],
                         budget: float = math.inf, tol: Optional[dict] = None) -> Optional[float]:
    """Optimum van SEP (anker k) of van de kardinaliteitsvariant (k = None)."""
    value, _ = _solve_sep(build_icc_sep(handle, ybar, zbar, k), budget, None, tol)
    return value


def _finish_icc(handle, values, anchor, threshold, ybar, zbar, eps) -> Optional[IccCut]:
    inst, lifted = handle.instance, handle.lifted
    cut = _decode_icc(handle, values, anchor)
    if not cut.nodes or not cut.cover_holds(inst, lifted):
        log.warning("SEP-oplossing zonder geldige dekking genegeerd")
        return None
    cut = postprocess_icc(cut, inst, lifted)
    if cut.lhs(inst, ybar, zbar) < threshold - eps:
        return cut
    return None


def separate_icc(handle: ArcModelHandle, xbar: Sequence[float], ybar: Mapping, zbar: Mapping, k: int,
                 budget: float = 5.0, stats: Optional[SeparationStats] = None,
                 eps: float = DEFAULT_EPS, tol: Optional[dict] = None) -> Optional[IccCut]:
    if xbar[k] <= eps:
        return None
    value, values = _solve_sep(build_icc_sep(handle, ybar, zbar, k), budget, stats, tol)
    if value is None or value >= xbar[k] - eps:
        return None
    return _finish_icc(handle, values, k, float(xbar[k]), ybar, zbar, eps)


def separate_icc_plus(handle: ArcModelHandle, xbar: Sequence[float], ybar: Mapping, zbar: Mapping,
                      budget: float = 5.0, stats: Optional[SeparationStats] = None,
                      eps: float = DEFAULT_EPS, tol: Optional[dict] = None) -> Optional[IccCut]:
    value, values = _solve_sep(build_icc_sep(handle, ybar, zbar, None), budget, stats, tol)
    if value is None or value >= 1 - eps:
        return None
    return _finish_icc(handle, values, None, 1.0, ybar, zbar, eps)


# ---------- SEP2 (LICC) ----------
def build_licc_sep(handle: ArcModelHandle, xbar: Sequence[float], ybar: Mapping, anchor: Optional[int]) -> MilpModel:
    inst, lifted = handle.instance, handle.lifted
    n = inst.node_count
    model = MilpModel("sep-licc" if anchor is not None else "sep-licc+")
    for i in range(n):
        model.add_var(("s", i))
    for i in range(n):
        for p in inst.incentives[i]:
            model.add_var(("y0", i, p))
    y_support = [(i, p) for i in range(n) for p in inst.incentives[i] if ybar.get((i, p), 0.0) > SUPPORT_TOL]
    for i, p in y_support:
        model.add_var(("y1", i, p), obj=ybar[(i, p)])
    x_support = [j for j in range(n) if float(xbar[j]) > SUPPORT_TOL]
    for j in x_support:
        model.add_var(("x0", j))
        model.add_var(("x1", j), obj=float(xbar[j]))

    in_support = set(x_support)
    for i in range(n):
        total = inst.in_weight[i]
        terms = {("y0", i, p): c for p, c in zip(inst.incentives[i], lifted.coef[i]) if c}
        for j, d in inst.in_neighbors[i]:
            if j in in_support:
                terms[("x0", j)] = d
        if not terms:
            continue
        if total:
            terms[("s", i)] = total
        model.add_row(terms, "<=", total + lifted.rhs[i] - 1, tag="cover")
    for j in x_support:
        model.add_row({("x1", j): 1, ("s", j): 1, ("x0", j): 1}, ">=", 1, tag="x-link")
    for i, p in y_support:
        terms = {("y1", i, p): 1, ("s", i): -1}
        for q in inst.incentives[i]:
            if q >= p:
                terms[("y0", i, q)] = 1
        model.add_row(terms, ">=", 0, tag="y-link")
    if anchor is not None:
        model.set_bounds(("s", anchor), lower=1)
    else:
        model.add_row({("s", i): 1 for i in range(n)}, ">=", _cardinality(inst), tag="cardinality")
    return model


def _decode_licc(handle: ArcModelHandle, values: dict, anchor: Optional[int]) -> LiccCut:
    inst = handle.instance
    X = tuple(i for i in range(inst.node_count) if values[("s", i)] > 0.5)
    members = set(X)
    p_tilde = {}
    for i in X:
        chosen = [p for p in inst.incentives[i] if values[("y0", i, p)] > 0.5]
        p_tilde[i] = max(chosen) if chosen else 0
    outside = tuple(j for j in range(inst.node_count)
                    if j not in members and values.get(("x0", j), 0.0) > 0.5)
    return LiccCut(nodes=X, anchor=anchor, p_tilde=p_tilde, outside=outside)


def separate_licc(handle: ArcModelHandle, xbar: Sequence[float], ybar: Mapping, k: Optional[int] = None,
                  budget: float = 5.0, stats: Optional[SeparationStats] = None,
                  eps: float = DEFAULT_EPS, tol: Optional[dict] = None) -> Optional[LiccCut]:
    """Anker k geeft de x_k-variant, k = None de rhs-1 variant met kardinaliteitsrij."""
    inst, lifted = handle.instance, handle.lifted
    threshold = 1.0 if k is None else float(xbar[k])
    if k is not None and threshold <= eps:
        return None
    value, values = _solve_sep(build_licc_sep(handle, xbar, ybar, k), budget, stats, tol)
    if value is None or value >= threshold - eps:
        return None
    cut = _decode_licc(handle, values, k)
    if not cut.nodes or not cut.cover_holds(inst, lifted):
        log.warning("SEP2-oplossing zonder geldige dekking genegeerd")
        return None
    cut = postprocess_licc(cut, inst, lifted)
    if cut.lhs(inst, xbar, ybar) < threshold - eps:
        return cut
    return None
