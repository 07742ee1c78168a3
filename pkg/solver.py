"""
Formuleringen en hun separatiebeleid, plus het JSON-rapport.

    arc    ARC + cyclusrijen (lazy en user cuts, hele boom)
    icc    arc + ICC in de wortel (rondes- en tijdslimiet)
    icc+   icc + ICC+ in de hele boom
    licc   arc + LICC met anker in de hele boom
    licc+  licc + LICC+ zolang de gap boven de drempel zit
    cf     compacte formulering, lazy via cascadesimulatie, SEP_CF zolang de gap boven de drempel zit
"""
from __future__ import annotations

import json, math, hashlib, logging
from typing import Optional

from instance import Instance, format_fraction
from gamma_lift import lift, rounding_disagreements
from milp_core import MipCallbacks, MipLimits, SolveReport, SolverError, gap_percent, solve_mip
from propagation import IncentiveSolution, is_feasible, solution_cost
from arc_model import ArcModelHandle, build_arc_model, separate_cycles, start_vector
from cover_cuts import SeparationStats, separate_icc, separate_icc_plus, separate_licc
from cf_model import CfModelHandle, build_cf_model, separate_cf_fractional, separate_cf_integral
from settings import load_settings, separation_policy, solver_tolerances, bench_defaults

log = logging.getLogger(__name__)

FORMULATIONS = ("arc", "icc", "icc+", "licc", "licc+", "cf")
REPORT_VERSION = "1.0"


# ---------- Beleid ----------
class _ArcPolicy:
    def __init__(self, handle: ArcModelHandle, formulation: str, policy: dict, tol: dict, stats: SeparationStats):
        self.handle = handle
        self.policy = policy
        self.tol = tol
        self.eps = tol["cut_eps"]
        self.stats = stats
        combine = policy["combine_licc_icc"]
        self.icc_root = formulation in ("icc", "icc+") or (combine and formulation in ("licc", "licc+"))
        self.icc_plus = formulation == "icc+"
        self.licc = formulation in ("licc", "licc+")
        self.licc_plus = formulation == "licc+"
        self.icc_rounds = 0
        self.icc_seconds = 0.0

    def _budget(self, ctx) -> float:
        return max(0.0, min(self.policy["separation_time"], ctx.time_left()))

    def _anchors(self, xbar):
        order = sorted(range(len(xbar)), key=lambda k: (-xbar[k], k))
        return [k for k in order if xbar[k] > self.eps]

    def lazy(self, ctx):
        xbar, _, zbar = self.handle.point(ctx.x)
        return [c.to_cut() for c in separate_cycles(self.handle, xbar, zbar, self.eps)]

    def usercut(self, ctx):
        h = self.handle
        inst = h.instance
        xbar, ybar, zbar = h.point(ctx.x)
        cuts = [c.to_cut() for c in separate_cycles(h, xbar, zbar, self.eps)]
        if cuts:
            return cuts
        before = self.stats.seconds
        if (self.icc_root and ctx.is_root and self.icc_rounds < self.policy["icc_root_rounds"]
                and self.icc_seconds < self.policy["icc_root_time"]):
            self.icc_rounds += 1
            for k in self._anchors(xbar):
                if ctx.time_left() <= 0:
                    break
                cut = separate_icc(h, xbar, ybar, zbar, k, self._budget(ctx), self.stats, self.eps, self.tol)
                if cut is not None:
                    cuts.append(cut.to_cut(inst))
            self.icc_seconds += self.stats.seconds - before
            log.info("ICC-ronde %d: %d snedes", self.icc_rounds, len(cuts))
        if self.icc_plus and ctx.time_left() > 0:
            cut = separate_icc_plus(h, xbar, ybar, zbar, self._budget(ctx), self.stats, self.eps, self.tol)
            if cut is not None:
                cuts.append(cut.to_cut(inst))
        if self.licc:
            for k in self._anchors(xbar):
                if ctx.time_left() <= 0:
                    break
                cut = separate_licc(h, xbar, ybar, k, self._budget(ctx), self.stats, self.eps, self.tol)
                if cut is not None:
                    cuts.append(cut.to_cut(inst))
        if self.licc_plus and ctx.gap >= self.policy["licc_plus_gap"] and ctx.time_left() > 0:
            cut = separate_licc(h, xbar, ybar, None, self._budget(ctx), self.stats, self.eps, self.tol)
            if cut is not None:
                cuts.append(cut.to_cut(inst))
        return cuts


class _CfPolicy:
    def __init__(self, handle: CfModelHandle, policy: dict, tol: dict, stats: SeparationStats):
        self.handle = handle
        self.policy = policy
        self.tol = tol
        self.stats = stats

    def lazy(self, ctx):
        ybar = self.handle.point(ctx.x)
        cut = separate_cf_integral(self.handle, ybar)
        if cut is None:
            sol = self.handle.solution_from_point(ybar)
            if not is_feasible(self.handle.instance, sol, self.handle.lifted):
                raise SolverError("CF accepteerde een oplossing die de cascade niet haalt")
            return []
        return [cut.to_cut(self.handle.instance)]

    def usercut(self, ctx):
        if ctx.gap < self.policy["cf_fractional_gap"] or ctx.time_left() <= 0:
            return []
        budget = max(0.0, min(self.policy["separation_time"], ctx.time_left()))
        cut = separate_cf_fractional(self.handle, self.handle.point(ctx.x), budget, self.stats,
                                     self.tol["cut_eps"], self.tol)
        return [cut.to_cut(self.handle.instance)] if cut is not None else []


# ---------- Oplossen ----------
def solve_instance(inst: Instance, formulation: str = "arc", time_limit: Optional[float] = None,
                   cutoff: Optional[float] = None, node_limit: Optional[int] = None,
                   settings: Optional[dict] = None) -> SolveReport:
    if formulation not in FORMULATIONS:
        raise ValueError(f"onbekende formulering {formulation!r}; kies uit {', '.join(FORMULATIONS)}")
    settings = settings or load_settings()
    tol = solver_tolerances(settings)
    policy = separation_policy(settings)
    defaults = bench_defaults(settings)
    lifted = lift(inst)
    if inst.gamma != 1 and log.isEnabledFor(logging.DEBUG):
        log.debug("%d afrondingsverschillen (gelifte vorm leidend)", len(rounding_disagreements(inst)))

    stats = SeparationStats()
    full = IncentiveSolution.all_max(inst)
    seed_ok = is_feasible(inst, full, lifted)
    if formulation == "cf":
        handle = build_cf_model(inst, lifted)
        rule = _CfPolicy(handle, policy, tol, stats)
        start = handle.start_vector(full) if seed_ok else None
    else:
        handle = build_arc_model(inst, lifted)
        rule = _ArcPolicy(handle, formulation, policy, tol, stats)
        start = start_vector(handle, full) if seed_ok else None

    limits = MipLimits(
        time_limit=defaults["time_limit"] if time_limit is None else float(time_limit),
        node_limit=defaults["node_limit"] if node_limit is None else int(node_limit),
        cutoff=cutoff,
        start=start,
        root_cut_rounds=policy["root_cut_rounds"],
        tree_cut_rounds=policy["tree_cut_rounds"],
        tolerances=tol,
    )
    report = solve_mip(handle.model, MipCallbacks(lazy=rule.lazy, usercut=rule.usercut), limits)
    report.separation_calls = stats.calls
    report.separation_budget_hits = stats.budget_hits
    if report.incumbent is not None:
        sol = handle.solution_from_vector(report.incumbent)
        if not is_feasible(inst, sol, lifted):
            raise SolverError(f"{formulation}: incumbent haalt de dekkingseis niet")
        cost = solution_cost(inst, sol)
        if abs(cost - report.z_ub) > 1e-6:
            raise SolverError(f"{formulation}: kosten {cost} wijken af van Z_UB {report.z_ub}")
        report.solution = sol
    return report


# ---------- Rapport ----------
def _num(value):
    if value is None or not math.isfinite(value):
        return None
    return int(round(value)) if abs(value - round(value)) < 1e-9 else float(value)


def report_to_dict(report: SolveReport, inst: Instance, formulation: str,
                   instance_path: Optional[str] = None, seed: Optional[int] = None,
                   timings: bool = True) -> dict:
    z_ub, z_lb = _num(report.z_ub), _num(report.z_lb)
    gap = gap_percent(z_ub, z_lb)
    doc = {
        "schema_version": REPORT_VERSION,
        "instance": {
            "path": instance_path,
            "n": inst.node_count,
            "m": inst.arc_count,
            "alpha": format_fraction(inst.alpha),
            "gamma": format_fraction(inst.gamma),
        },
        "formulation": formulation,
        "status": report.status,
        "z_ub": z_ub,
        "z_lb": z_lb,
        "gap": None if gap is None else round(gap, 6),
        "root_bound": None if report.root_bound is None else round(float(report.root_bound), 9),
        "nodes": report.nodes,
        "lp_iterations": report.lp_iterations,
        "cuts": dict(sorted(report.cuts_by_kind.items())),
        "separation": {"calls": report.separation_calls, "budget_hits": report.separation_budget_hits},
        "incentives": list(report.solution.incentives) if report.solution is not None else None,
        "seed": seed,
    }
    if timings:
        doc["timings"] = {
            "wall_time": round(report.wall_time, 6),
            "callback_time": round(report.callback_time, 6),
        }
    return doc


def report_fingerprint(doc: dict) -> str:
    """Hash van het rapport zonder tijden."""
    core = {k: v for k, v in doc.items() if k != "timings"}
    return hashlib.sha256(json.dumps(core, sort_keys=True).encode("utf-8")).hexdigest()


def exit_code(status: str) -> int:
    return 0 if status in ("optimal", "infeasible") else 2
