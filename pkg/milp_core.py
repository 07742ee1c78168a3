"""
MILP-kern: modelrepresentatie, LP-aanroep en branch-and-cut.

Variabelen worden aangesproken met semantische sleutels (bv. ("x", 3) of
("y", 3, 17)); rijen en snedes verwijzen naar die sleutels. De formuleringen
bouwen hun modellen hierop, de separatie-MIP's ook.
"""
from __future__ import annotations

import math, time, heapq, logging, threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Union

import numpy as np
import scipy.sparse as sp

from settings import solver_tolerances
from simplex import Basis, LpResult, LpStatus, SENSES, solve_standard

log = logging.getLogger(__name__)

CUT_KINDS = ("cycle", "icc", "icc_plus", "licc", "licc_plus", "cf")

_RECURSION = threading.local()
MAX_DEPTH = 2   # hoofd-MIP plus een laag separatie-MIP's


class ModelError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


# ---------- Snedes ----------
@dataclass
class Cut:
    terms: dict                 # sleutel -> coefficient
    sense: str
    rhs: float
    kind: str
    provenance: dict = field(default_factory=dict)

    def lhs(self, values: Mapping) -> float:
        return float(sum(coef * values.get(key, 0.0) for key, coef in self.terms.items()))

    def violation(self, values: Mapping) -> float:
        """Positief = geschonden met dat bedrag."""
        return _violation(self.lhs(values), self.sense, self.rhs)

    def signature(self) -> tuple:
        return (tuple(sorted(self.terms.items(), key=lambda kv: repr(kv[0]))), self.sense, float(self.rhs))


def _violation(lhs: float, sense: str, rhs: float) -> float:
    if sense == ">=":
        return rhs - lhs
    if sense == "<=":
        return lhs - rhs
    return abs(lhs - rhs)


# ---------- Model ----------
class MilpModel:
    """Minimalisatiemodel in rijvorm; rijen worden alleen toegevoegd, nooit verwijderd."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.keys: list = []
        self._index: dict = {}
        self._lower: list = []
        self._upper: list = []
        self._integer: list = []
        self._obj: list = []
        self.rows: list = []        # (kolommen, coefficienten, sense, rhs, tag)
        self._dense = np.zeros((0, 0))
        self._dense_senses: list = []
        self._dense_rhs = np.zeros(0)

    # ---------- Variabelen ----------
    def add_var(self, key, lower: float = 0.0, upper: float = 1.0, integer: bool = True, obj: float = 0.0) -> int:
        if key in self._index:
            raise ModelError(f"variabele {key!r} bestaat al")
        if self.rows:
            raise ModelError("variabelen moeten vóór de eerste rij worden aangemaakt")
        idx = len(self.keys)
        self.keys.append(key)
        self._index[key] = idx
        self._lower.append(float(lower))
        self._upper.append(float(upper))
        self._integer.append(bool(integer))
        self._obj.append(float(obj))
        return idx

    def has(self, key) -> bool:
        return key in self._index

    def index(self, key) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise ModelError(f"onbekende variabele {key!r} in model {self.name}") from None

    @property
    def num_vars(self) -> int:
        return len(self.keys)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def lower(self) -> np.ndarray:
        return np.array(self._lower, dtype=float)

    def upper(self) -> np.ndarray:
        return np.array(self._upper, dtype=float)

    def objective(self) -> np.ndarray:
        return np.array(self._obj, dtype=float)

    def integer_mask(self) -> np.ndarray:
        return np.array(self._integer, dtype=bool)

    def set_bounds(self, key, lower: Optional[float] = None, upper: Optional[float] = None):
        idx = self.index(key)
        if lower is not None:
            self._lower[idx] = float(lower)
        if upper is not None:
            self._upper[idx] = float(upper)

    # ---------- Rijen ----------
    def add_row(self, terms: Union[Mapping, Iterable], sense: str, rhs: float, tag: str = "") -> int:
        if sense not in SENSES:
            raise ModelError(f"onbekende sense {sense!r}")
        merged: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for key, coef in items:
            idx = self.index(key)
            merged[idx] = merged.get(idx, 0.0) + float(coef)
        merged = {k: v for k, v in merged.items() if v != 0.0}
        if not merged:
            raise ModelError(f"lege rij ({tag or 'zonder tag'}) in model {self.name}")
        cols = np.array(sorted(merged), dtype=int)
        coefs = np.array([merged[c] for c in cols], dtype=float)
        self.rows.append((cols, coefs, sense, float(rhs), tag))
        return len(self.rows) - 1

    def add_cut(self, cut: Cut) -> int:
        return self.add_row(cut.terms, cut.sense, cut.rhs, tag=cut.kind)

    def matrix(self) -> sp.csr_matrix:
        data, ri, ci = [], [], []
        for r, (cols, coefs, _, _, _) in enumerate(self.rows):
            ri.extend([r] * len(cols))
            ci.extend(cols.tolist())
            data.extend(coefs.tolist())
        return sp.csr_matrix((data, (ri, ci)), shape=(self.num_rows, self.num_vars))

    def dense_rows(self):
        """Dichte kopie van de rijen; alleen nieuwe rijen worden bijgewerkt."""
        if self._dense.shape[1] != self.num_vars:
            self._dense = np.zeros((0, self.num_vars))
            self._dense_senses, self._dense_rhs = [], np.zeros(0)
        have = self._dense.shape[0]
        if have < self.num_rows:
            block = np.zeros((self.num_rows - have, self.num_vars))
            for k, (cols, coefs, _, _, _) in enumerate(self.rows[have:]):
                block[k, cols] = coefs
            self._dense = np.vstack([self._dense, block])
            self._dense_senses = self._dense_senses + [r[2] for r in self.rows[have:]]
            self._dense_rhs = np.concatenate([self._dense_rhs, [r[3] for r in self.rows[have:]]])
        return self._dense, self._dense_senses, self._dense_rhs

    # ---------- Controles ----------
    def validate(self):
        lo, up, ints = self.lower(), self.upper(), self.integer_mask()
        if np.any(~np.isfinite(lo)):
            raise ModelError("alle ondergrenzen moeten eindig zijn")
        if np.any(ints & ~np.isfinite(up)):
            raise ModelError("geheeltallige variabelen moeten eindige grenzen hebben")

    def objective_is_integral(self) -> bool:
        obj, ints = self.objective(), self.integer_mask()
        if np.any((obj != 0) & ~ints):
            return False
        return bool(np.all(obj == np.round(obj)))

    def violated_rows(self, x: np.ndarray, tol: float = 1e-6) -> list:
        A, senses, rhs = self.dense_rows()
        act = A @ x if len(rhs) else np.zeros(0)
        return [r for r in range(len(rhs)) if _violation(act[r], senses[r], rhs[r]) > tol * (1 + abs(rhs[r]))]

    def values(self, x: np.ndarray) -> dict:
        return {key: float(x[i]) for i, key in enumerate(self.keys)}


# ---------- LP ----------
def solve_lp(model: MilpModel, lower: Optional[np.ndarray] = None, upper: Optional[np.ndarray] = None,
             warm_start: Optional[Basis] = None, tol: Optional[dict] = None) -> LpResult:
    A, senses, rhs = model.dense_rows()
    lo = model.lower() if lower is None else lower
    up = model.upper() if upper is None else upper
    return solve_standard(A, senses, rhs, model.objective(), lo, up, warm=warm_start, tol=tol)


# ---------- MIP: types ----------
@dataclass
class MipLimits:
    time_limit: float = math.inf
    node_limit: int = 10 ** 9
    cutoff: Optional[float] = None
    start: Optional[np.ndarray] = None
    root_cut_rounds: int = 500
    tree_cut_rounds: int = 20
    tolerances: Optional[dict] = None


@dataclass
class CallbackContext:
    model: MilpModel
    x: np.ndarray
    node_id: int
    depth: int
    round: int
    z_ub: float
    z_lb: float
    deadline: float

    @property
    def is_root(self) -> bool:
        return self.node_id == 0

    @property
    def gap(self) -> float:
        g = gap_percent(self.z_ub, self.z_lb)
        return math.inf if g is None else g

    def time_left(self) -> float:
        return self.deadline - time.perf_counter()

    def value(self, key) -> float:
        return float(self.x[self.model.index(key)])

    def values(self) -> dict:
        return self.model.values(self.x)


@dataclass
class MipCallbacks:
    lazy: Optional[Callable[[CallbackContext], list]] = None
    usercut: Optional[Callable[[CallbackContext], list]] = None


@dataclass
class SolveReport:
    status: str
    z_ub: Optional[float] = None
    z_lb: Optional[float] = None
    gap: Optional[float] = None
    incumbent: Optional[np.ndarray] = None
    solution: Optional[object] = None
    nodes: int = 0
    cuts_by_kind: dict = field(default_factory=lambda: {k: 0 for k in CUT_KINDS})
    cuts: list = field(default_factory=list)
    root_bound: Optional[float] = None
    lp_iterations: int = 0
    wall_time: float = 0.0
    callback_time: float = 0.0
    separation_calls: int = 0
    separation_budget_hits: int = 0


def gap_percent(z_ub, z_lb) -> Optional[float]:
    if z_ub is None or z_lb is None or not math.isfinite(z_ub) or not math.isfinite(z_lb):
        return None
    if z_ub == 0:
        return 0.0
    return 100.0 * (z_ub - z_lb) / z_ub


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    bound: float
    depth: int
    basis: Optional[Basis]
    id: int


# ---------- Branch-and-cut ----------
class _BranchAndCut:
    def __init__(self, model: MilpModel, callbacks: MipCallbacks, limits: MipLimits):
        model.validate()
        self.model = model
        self.cb = callbacks
        self.limits = limits
        self.tol = limits.tolerances or solver_tolerances()
        self.ints = model.integer_mask()
        self.integral_obj = model.objective_is_integral()
        self.started = time.perf_counter()
        self.deadline = self.started + limits.time_limit
        self.z_ub = math.inf
        self.incumbent = None
        self.heap: list = []
        self.created = 0
        self.report = SolveReport(status="optimal")
        self.signatures: set = set()
        self.global_infeasible = False
        self.dropped_bounds: list = []    # grenzen van knopen die numeriek vervielen
        self.lazy_stalled = False

    # ---------- Grenzen ----------
    def _cutoff(self) -> float:
        return self.limits.cutoff if self.limits.cutoff is not None else math.inf

    def _prunable(self, bound: float) -> bool:
        # gelijk aan de incumbent: snoeien; gelijk aan de cutoff: nog toegestaan
        if not math.isfinite(bound):
            return False
        if self.integral_obj:
            bound = math.ceil(bound - self.tol["integrality"])
        eps = 1e-9 * max(1.0, abs(bound))
        return bound >= self.z_ub - eps or bound > self._cutoff() + eps

    def _open_drops(self) -> list:
        return [b for b in self.dropped_bounds if not self._prunable(b)]

    def _global_lb(self, current: Optional[float] = None) -> float:
        bounds = [b for b, *_ in self.heap] + self._open_drops()
        if current is not None:
            bounds.append(current)
        lb = min(bounds) if bounds else self.z_ub
        return min(lb, self.z_ub)

    def _push(self, node: _Node):
        heapq.heappush(self.heap, (node.bound, -node.depth, node.id, node))

    def _new_node(self, lower, upper, bound, depth, basis) -> _Node:
        node = _Node(lower, upper, bound, depth, basis, self.created)
        self.created += 1
        return node

    # ---------- Snedes ----------
    def _accept(self, cuts: Optional[list], x: np.ndarray, lazy: bool) -> list:
        self.lazy_stalled = False
        if not cuts:
            return []
        eps = self.tol["cut_eps"]
        accepted, repeated = [], 0
        for cut in cuts:
            lhs = sum(coef * x[self.model.index(key)] for key, coef in cut.terms.items())
            viol = _violation(float(lhs), cut.sense, float(cut.rhs))
            if viol < eps:
                continue
            if not cut.terms:
                log.info("geschonden snede zonder termen (%s): probleem onoplosbaar", cut.kind)
                self.global_infeasible = True
                return []
            sig = cut.signature()
            if sig in self.signatures:
                repeated += 1
                continue
            self.signatures.add(sig)
            accepted.append(cut)
        # geschonden maar al in het model: de LP respecteert zijn eigen rijen niet
        self.lazy_stalled = lazy and not accepted and repeated > 0
        if self.lazy_stalled:
            log.warning("lazy callback herhaalde %d geschonden rij(en) uit de pool; punt wordt niet geaccepteerd",
                        repeated)
        elif lazy and not accepted:
            log.debug("lazy callback gaf alleen niet-geschonden rijen; punt wordt geaccepteerd")
        return accepted

    def _add(self, cuts: list):
        for cut in cuts:
            self.model.add_cut(cut)
            self.report.cuts.append(cut)
            self.report.cuts_by_kind[cut.kind] = self.report.cuts_by_kind.get(cut.kind, 0) + 1
            log.debug("snede %s toegevoegd: %d termen, rhs %s", cut.kind, len(cut.terms), cut.rhs)

    def _call(self, fn, ctx: CallbackContext):
        t0 = time.perf_counter()
        try:
            return fn(ctx)
        finally:
            self.report.callback_time += time.perf_counter() - t0

    # ---------- Incumbent ----------
    def _round(self, x: np.ndarray) -> np.ndarray:
        out = x.copy()
        out[self.ints] = np.round(out[self.ints])
        return out

    def _offer(self, x: np.ndarray):
        candidate = self._round(x)
        if self.model.violated_rows(candidate):
            candidate = x
        value = float(self.model.objective() @ candidate)
        if value > self._cutoff() + 1e-9:
            log.debug("%s: oplossing %.6g boven cutoff genegeerd", self.model.name, value)
            return
        if value < self.z_ub - 1e-9:
            self.z_ub = value
            self.incumbent = candidate
            log.info("%s: nieuwe incumbent %.6g", self.model.name, value)

    def _try_start(self, x0: np.ndarray):
        x0 = np.asarray(x0, dtype=float)
        lo, up = self.model.lower(), self.model.upper()
        if len(x0) != self.model.num_vars or np.any(x0 < lo - 1e-9) or np.any(x0 > up + 1e-9):
            log.debug("startoplossing buiten de grenzen genegeerd")
            return
        if np.any(np.abs(x0[self.ints] - np.round(x0[self.ints])) > self.tol["integrality"]):
            return
        if self.model.violated_rows(x0):
            log.debug("startoplossing schendt modelrijen, genegeerd")
            return
        if self.cb.lazy:
            ctx = CallbackContext(self.model, x0, -1, 0, 0, self.z_ub, -math.inf, self.deadline)
            cuts = self._accept(self._call(self.cb.lazy, ctx), x0, lazy=False)
            if self.global_infeasible:
                return
            if cuts:
                self._add(cuts)
                log.debug("startoplossing door lazy callback verworpen")
                return
        self._offer(x0)

    # ---------- Knoop ----------
    def _drop(self, node: _Node):
        """Knoop valt weg zonder bewijs; zijn grens blijft meetellen voor Z_LB."""
        self.dropped_bounds.append(node.bound)

    def _branch_var(self, x: np.ndarray) -> Optional[int]:
        frac = x - np.floor(x)
        score = np.where(self.ints, np.minimum(frac, 1.0 - frac), 0.0)
        j = int(np.argmax(score)) if len(score) else 0
        if not len(score) or score[j] <= self.tol["integrality"]:
            return None
        return j

    def _process(self, node: _Node):
        rounds = 0
        basis = node.basis
        limit = self.limits.root_cut_rounds if node.id == 0 else self.limits.tree_cut_rounds
        while True:
            lp = solve_lp(self.model, node.lower, node.upper, basis, self.tol)
            self.report.lp_iterations += lp.iterations
            if lp.status == LpStatus.INFEASIBLE:
                return
            if lp.status != LpStatus.OPTIMAL:
                if basis is not None:
                    basis = None
                    continue
                if lp.status == LpStatus.UNBOUNDED:
                    raise SolverError(f"LP-relaxatie van {self.model.name} is onbegrensd")
                log.warning("%s: LP van knoop %d niet opgelost (%s), knoop vervalt",
                            self.model.name, node.id, lp.status.value)
                self._drop(node)
                return
            basis = lp.basis
            node.basis = basis
            node.bound = max(node.bound, lp.objective)
            if node.id == 0:
                self.report.root_bound = node.bound
            if self._prunable(node.bound):
                return
            x = lp.x
            j = self._branch_var(x)
            ctx = CallbackContext(self.model, x, node.id, node.depth, rounds, self.z_ub,
                                  self._global_lb(node.bound), self.deadline)
            if j is None:
                if self.cb.lazy:
                    cuts = self._accept(self._call(self.cb.lazy, ctx), x, lazy=True)
                    if self.global_infeasible:
                        return
                    if self.lazy_stalled:
                        self._drop(node)
                        return
                    if cuts:
                        self._add(cuts)
                        continue
                self._offer(x)
                return
            if self.cb.usercut and rounds < limit and time.perf_counter() < self.deadline:
                cuts = self._accept(self._call(self.cb.usercut, ctx), x, lazy=False)
                if self.global_infeasible:
                    return
                if cuts:
                    self._add(cuts)
                    rounds += 1
                    continue
            down_up = node.upper.copy()
            down_up[j] = math.floor(x[j])
            up_lo = node.lower.copy()
            up_lo[j] = math.ceil(x[j])
            self._push(self._new_node(node.lower, down_up, node.bound, node.depth + 1, basis))
            self._push(self._new_node(up_lo, node.upper, node.bound, node.depth + 1, basis))
            return

    # ---------- Hoofdlus ----------
    def run(self) -> SolveReport:
        rep = self.report
        if self.limits.start is not None:
            self._try_start(self.limits.start)
        self._push(self._new_node(self.model.lower(), self.model.upper(), -math.inf, 0, None))
        reason = None
        while self.heap and not self.global_infeasible:
            if time.perf_counter() >= self.deadline:
                reason = "time_limit"
                break
            if rep.nodes >= self.limits.node_limit:
                reason = "node_limit"
                break
            bound, _, _, node = heapq.heappop(self.heap)
            if self._prunable(bound):
                continue
            rep.nodes += 1
            self._process(node)

        if self.global_infeasible:
            self.heap.clear()
        open_drops = self._open_drops()
        if reason is None and open_drops and not self.global_infeasible:
            log.warning("%s: %d knopen vervallen door numerieke problemen, geen optimaliteitsbewijs",
                        self.model.name, len(open_drops))
            reason = "numerical"

        if self.incumbent is not None:
            rep.z_ub = self.z_ub
            rep.incumbent = self.incumbent
        lb = self._global_lb() if reason else (self.z_ub if self.incumbent is not None else None)
        if lb is not None and math.isfinite(lb):
            if self.integral_obj:
                lb = float(math.ceil(lb - self.tol["integrality"]))
            if rep.z_ub is not None:
                lb = min(lb, rep.z_ub)
            rep.z_lb = lb
        rep.gap = gap_percent(rep.z_ub, rep.z_lb)
        if reason is not None:
            rep.status = reason
        else:
            rep.status = "optimal" if self.incumbent is not None else "infeasible"
        rep.wall_time = time.perf_counter() - self.started
        log.info("%s: %s, Z_UB=%s Z_LB=%s, %d knopen", self.model.name, rep.status, rep.z_ub, rep.z_lb, rep.nodes)
        return rep


def solve_mip(model: MilpModel, callbacks: Optional[MipCallbacks] = None,
              limits: Optional[MipLimits] = None) -> SolveReport:
    depth = getattr(_RECURSION, "depth", 0)
    if depth >= MAX_DEPTH:
        raise SolverError("een separatie-MIP mag zelf geen MIP-separatie aanroepen")
    _RECURSION.depth = depth + 1
    try:
        return _BranchAndCut(model, callbacks or MipCallbacks(), limits or MipLimits()).run()
    finally:
        _RECURSION.depth = depth
