"""
Begrensde-variabelen simplex (primaal en duaal) op dichte numpy-matrices.

Standaardvorm: elke rij krijgt een slack, A x + s*slack = b, met
  '<=' : slack +1 in [0, inf)
  '>=' : slack -1 in [0, inf)
  '==' : slack +1 in [0, 0]
Kolomindices van een basis lopen over [structureel 0..n-1 | slacks n..n+m-1];
de slack van rij r is kolom n + r. Daardoor blijft een basis geldig als er
later rijen bij komen: de nieuwe slacks gaan gewoon de basis in.

Koude start: twee fasen met kunstmatige variabelen alleen voor rijen waar de
slack het residu niet kan dragen. Warme start: duale simplex vanaf de
meegegeven basis, daarna primaal narekenen; lukt dat niet, dan koud.
"""
from __future__ import annotations

import enum, logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from settings import solver_tolerances

log = logging.getLogger(__name__)

SENSES = ("<=", ">=", "==")
PIVOT_TOL = 1e-9
RATIO_TIE = 1e-12


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


@dataclass
class Basis:
    basic: np.ndarray       # kolomindex per rij
    at_upper: np.ndarray    # per kolom (structureel + slack): niet-basis op bovengrens

    def extended(self, n: int, m: int) -> "Basis":
        """Basis voor hetzelfde model met extra rijen achteraan (nieuwe slacks basis)."""
        m_old = len(self.basic)
        if m_old == m:
            return self
        basic = np.concatenate([self.basic, n + np.arange(m_old, m)])
        at_upper = np.concatenate([self.at_upper, np.zeros(m - m_old, dtype=bool)])
        return Basis(basic=basic, at_upper=at_upper)


@dataclass
class LpResult:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    basis: Optional[Basis] = None
    iterations: int = 0
    reduced_costs: Optional[np.ndarray] = None
    warm: bool = False


class _State:
    """Werktoestand: kolommen, grenzen, basis, expliciete inverse."""

    def __init__(self, A, b, lo, up, tol):
        self.A = A
        self.b = b
        self.lo = lo
        self.up = up
        self.tol = tol
        self.m = A.shape[0]
        self.basis = None
        self.at_upper = np.zeros(A.shape[1], dtype=bool)
        self.x = np.zeros(A.shape[1])
        self.Binv = None
        self.since_refactor = 0
        self.iterations = 0

    # ---------- Basisonderhoud ----------
    def nonbasic_values(self):
        self.x = np.where(self.at_upper & np.isfinite(self.up), self.up, self.lo)

    def refactor(self) -> bool:
        try:
            self.Binv = np.linalg.inv(self.A[:, self.basis])
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(self.Binv)):
            return False
        self.since_refactor = 0
        self.recompute_basics()
        return True

    def recompute_basics(self):
        mask = np.ones(self.A.shape[1], dtype=bool)
        mask[self.basis] = False
        rest = self.b - self.A[:, mask] @ self.x[mask]
        self.x[self.basis] = self.Binv @ rest

    def reduced_costs(self, cost):
        y = cost[self.basis] @ self.Binv
        d = cost - y @ self.A
        d[self.basis] = 0.0
        return d

    def pivot(self, r, j, alpha):
        row = self.Binv[r] / alpha[r]
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.basis[r] = j
        self.at_upper[j] = False
        self.since_refactor += 1
        self.iterations += 1

    def _maybe_refactor(self):
        if self.since_refactor >= self.tol["refactor"]:
            if not self.refactor():
                raise np.linalg.LinAlgError("singuliere basis bij herfactorisatie")

    # ---------- Primaal ----------
    def primal(self, cost, max_iter) -> LpStatus:
        tol_o = self.tol["optimality"]
        movable = (self.up - self.lo) > self.tol["feasibility"]
        stall = 0
        bland = False
        for _ in range(max_iter):
            self._maybe_refactor()
            d = self.reduced_costs(cost)
            nonbasic = np.ones(len(d), dtype=bool)
            nonbasic[self.basis] = False
            can_inc = nonbasic & movable & ~self.at_upper & (d < -tol_o)
            can_dec = nonbasic & movable & self.at_upper & (d > tol_o)
            eligible = can_inc | can_dec
            if not eligible.any():
                return LpStatus.OPTIMAL
            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if can_inc[j] else -1.0
            alpha = self.Binv @ self.A[:, j]
            da = direction * alpha

            xb = self.x[self.basis]
            lb = self.lo[self.basis]
            ub = self.up[self.basis]
            ratios = np.full(self.m, np.inf)
            dec = da > PIVOT_TOL
            inc = da < -PIVOT_TOL
            ratios[dec] = np.maximum(xb[dec] - lb[dec], 0.0) / da[dec]
            fin_up = inc & np.isfinite(ub)
            ratios[fin_up] = np.maximum(ub[fin_up] - xb[fin_up], 0.0) / -da[fin_up]
            t_row = ratios.min() if self.m else np.inf
            t_flip = self.up[j] - self.lo[j]

            if not np.isfinite(t_row) and not np.isfinite(t_flip):
                return LpStatus.UNBOUNDED

            if t_flip <= t_row:
                self.x[j] += direction * t_flip
                self.x[self.basis] -= da * t_flip
                self.at_upper[j] = direction > 0
                self.iterations += 1
                step = t_flip
            else:
                ties = np.flatnonzero(ratios <= t_row + RATIO_TIE)
                if bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(da[ties]))])
                leaving = self.basis[r]
                self.x[j] += direction * t_row
                self.x[self.basis] -= da * t_row
                to_upper = bool(inc[r])
                self.x[leaving] = self.up[leaving] if to_upper else self.lo[leaving]
                self.pivot(r, j, alpha)
                self.at_upper[leaving] = to_upper
                step = t_row

            if step <= RATIO_TIE:
                stall += 1
                if stall >= self.tol["bland_stall"] and not bland:
                    log.debug("primale simplex: Bland na %d degenererende stappen", stall)
                    bland = True
            else:
                stall = 0
        return LpStatus.ITERATION_LIMIT

    # ---------- Duaal ----------
    def dual(self, cost, max_iter) -> LpStatus:
        tol_f = self.tol["feasibility"]
        movable = (self.up - self.lo) > tol_f
        for _ in range(max_iter):
            self._maybe_refactor()
            xb = self.x[self.basis]
            below = self.lo[self.basis] - xb
            above = xb - self.up[self.basis]
            viol = np.maximum(below, above)
            r = int(np.argmax(viol))
            if viol[r] <= tol_f:
                return LpStatus.OPTIMAL
            go_up = below[r] > above[r]
            target = self.lo[self.basis[r]] if go_up else self.up[self.basis[r]]

            d = self.reduced_costs(cost)
            alpha_row = self.Binv[r] @ self.A
            nonbasic = np.ones(len(d), dtype=bool)
            nonbasic[self.basis] = False
            cand = nonbasic & movable
            if go_up:
                eligible = cand & ((~self.at_upper & (alpha_row < -PIVOT_TOL)) | (self.at_upper & (alpha_row > PIVOT_TOL)))
            else:
                eligible = cand & ((~self.at_upper & (alpha_row > PIVOT_TOL)) | (self.at_upper & (alpha_row < -PIVOT_TOL)))
            if not eligible.any():
                return LpStatus.INFEASIBLE
            idx = np.flatnonzero(eligible)
            ratios = np.abs(d[idx]) / np.abs(alpha_row[idx])
            best = ratios.min()
            ties = idx[ratios <= best + RATIO_TIE]
            q = int(ties[np.argmax(np.abs(alpha_row[ties]))])

            alpha = self.Binv @ self.A[:, q]
            delta = (self.x[self.basis[r]] - target) / alpha[r]
            leaving = self.basis[r]
            self.x[q] += delta
            self.x[self.basis] -= alpha * delta
            self.x[leaving] = target
            self.pivot(r, q, alpha)
            self.at_upper[leaving] = not go_up
        return LpStatus.ITERATION_LIMIT


# ---------- Hulpfuncties ----------
def _slack_signs(senses) -> np.ndarray:
    return np.array([-1.0 if s == ">=" else 1.0 for s in senses])


def _finish(state: _State, cost, n, N, warm, tol) -> LpResult:
    x = state.x[:n].copy()
    lo, up = state.lo[:n], state.up[:n]
    x = np.where(np.abs(x - lo) <= 1e-9, lo, x)
    x = np.where(np.abs(x - up) <= 1e-9, up, x)
    d = state.reduced_costs(cost)
    basis = None
    if np.all(state.basis < N):
        at_upper = state.at_upper[:N].copy()
        at_upper[state.basis] = False
        basis = Basis(basic=state.basis.copy(), at_upper=at_upper)
    if tol["debug_checks"]:
        _assert_certificate(state, d, tol)
    return LpResult(
        status=LpStatus.OPTIMAL, x=x, objective=float(cost[:n] @ x), basis=basis,
        iterations=state.iterations, reduced_costs=d[:N].copy(), warm=warm,
    )


def _assert_certificate(state: _State, d, tol):
    slack = 10 * tol["optimality"]
    nonbasic = np.ones(len(d), dtype=bool)
    nonbasic[state.basis] = False
    movable = (state.up - state.lo) > tol["feasibility"]
    at_lo = nonbasic & movable & ~state.at_upper
    at_up = nonbasic & movable & state.at_upper
    assert np.all(d[at_lo] >= -slack), "gereduceerde kosten negatief op ondergrens"
    assert np.all(d[at_up] <= slack), "gereduceerde kosten positief op bovengrens"
    resid = state.A @ state.x - state.b
    assert np.max(np.abs(resid), initial=0.0) <= 1e-6 * (1 + np.max(np.abs(state.b), initial=0.0))


def _trivial(c, lower, upper) -> LpResult:
    """Geen rijen: elke variabele op de goedkoopste grens."""
    x = np.where(c < 0, upper, lower)
    if np.any(~np.isfinite(x)):
        return LpResult(status=LpStatus.UNBOUNDED)
    return LpResult(status=LpStatus.OPTIMAL, x=x, objective=float(c @ x),
                    basis=Basis(np.zeros(0, dtype=int), c < 0), reduced_costs=c.copy())


def _warm(A_full, b, c_full, lo, up, n, warm: Basis, tol) -> Optional[LpResult]:
    m, N = A_full.shape
    basis = warm.extended(n, m)
    if len(basis.basic) != m or len(basis.at_upper) != N:
        return None
    if len(np.unique(basis.basic)) != m or np.any(basis.basic >= N):
        return None
    state = _State(A_full, b, lo, up, tol)
    state.basis = basis.basic.astype(int).copy()
    state.at_upper = basis.at_upper.copy() & np.isfinite(up)
    state.nonbasic_values()
    if not state.refactor():
        return None
    d = state.reduced_costs(c_full)
    nonbasic = np.ones(N, dtype=bool)
    nonbasic[state.basis] = False
    boxed = nonbasic & np.isfinite(up)
    state.at_upper = np.where(boxed, d < 0, state.at_upper & np.isfinite(up))
    state.at_upper[state.basis] = False
    if np.any(nonbasic & ~np.isfinite(up) & (d < -tol["optimality"])):
        return None
    state.nonbasic_values()
    state.recompute_basics()
    try:
        status = state.dual(c_full, tol["max_iter"])
        if status == LpStatus.INFEASIBLE:
            return LpResult(status=LpStatus.INFEASIBLE, iterations=state.iterations, warm=True)
        if status != LpStatus.OPTIMAL:
            return None
        status = state.primal(c_full, tol["max_iter"])
    except np.linalg.LinAlgError:
        return None
    if status != LpStatus.OPTIMAL:
        return None
    return _finish(state, c_full, n, N, True, tol)


def _cold(A_full, b, c_full, lo, up, n, signs, tol) -> LpResult:
    m, N = A_full.shape
    x0 = lo.copy()
    resid = b - A_full[:, :n] @ x0[:n]
    slack_val = resid * signs
    slack_ok = (slack_val >= lo[n:] - tol["feasibility"]) & (slack_val <= up[n:] + tol["feasibility"])
    art_rows = np.flatnonzero(~slack_ok)
    k = len(art_rows)

    art = np.zeros((m, k))
    art_sign = np.where(resid[art_rows] >= 0, 1.0, -1.0)
    art[art_rows, np.arange(k)] = art_sign
    A_ext = np.hstack([A_full, art])
    lo_ext = np.concatenate([lo, np.zeros(k)])
    up_ext = np.concatenate([up, np.full(k, np.inf)])

    state = _State(A_ext, b, lo_ext, up_ext, tol)
    basis = n + np.arange(m)
    basis[art_rows] = N + np.arange(k)
    state.basis = basis
    state.x = np.concatenate([x0, np.zeros(k)])
    state.x[n:N] = 0.0
    state.refactor()

    if k:
        c1 = np.concatenate([np.zeros(N), np.ones(k)])
        status = state.primal(c1, tol["max_iter"])
        if status == LpStatus.ITERATION_LIMIT:
            return LpResult(status=status, iterations=state.iterations)
        infeas = float(state.x[N:].sum())
        if infeas > 1e-6 * (1.0 + float(np.max(np.abs(b), initial=0.0))):
            return LpResult(status=LpStatus.INFEASIBLE, iterations=state.iterations)
        _drive_out_artificials(state, N)
        state.lo[N:] = 0.0
        state.up[N:] = 0.0
        if np.all(state.basis < N):
            state.A = state.A[:, :N]
            state.lo = state.lo[:N]
            state.up = state.up[:N]
            state.x = state.x[:N]
            state.at_upper = state.at_upper[:N]
        else:
            state.x[N:] = np.where(np.isin(np.arange(N, N + k), state.basis), state.x[N:], 0.0)

    cost = np.concatenate([c_full, np.zeros(state.A.shape[1] - N)])
    status = state.primal(cost, tol["max_iter"])
    if status != LpStatus.OPTIMAL:
        return LpResult(status=status, iterations=state.iterations)
    return _finish(state, cost, n, N, False, tol)


def _drive_out_artificials(state: _State, N: int):
    """Degenererende pivots die kunstmatige variabelen uit de basis halen."""
    for r in range(state.m):
        if state.basis[r] < N:
            continue
        row = state.Binv[r] @ state.A[:, :N]
        nonbasic = np.ones(N, dtype=bool)
        nonbasic[state.basis[state.basis < N]] = False
        cand = np.flatnonzero(nonbasic & (np.abs(row) > 1e-7))
        if not len(cand):
            continue  # redundante rij; kunstmatige blijft op 0
        j = int(cand[np.argmax(np.abs(row[cand]))])
        alpha = state.Binv @ state.A[:, j]
        art = state.basis[r]
        delta = state.x[art] / alpha[r]
        state.x[j] += delta
        state.x[state.basis] -= alpha * delta
        state.x[art] = 0.0
        state.pivot(r, j, alpha)
        state.at_upper[art] = False


# ---------- Publiek ----------
def solve_standard(A, senses, rhs, c, lower, upper,
                   warm: Optional[Basis] = None, tol: Optional[dict] = None) -> LpResult:
    """min c x  z.d.a.  A x (senses) rhs,  lower <= x <= upper."""
    tol = tol or solver_tolerances()
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    b = np.asarray(rhs, dtype=float)
    n = len(c)
    if A.ndim != 2 or A.shape[1] != n:
        A = A.reshape(len(b), n)
    if np.any(~np.isfinite(lower)):
        raise ValueError("alle ondergrenzen moeten eindig zijn")
    if np.any(lower > upper + tol["feasibility"]):
        return LpResult(status=LpStatus.INFEASIBLE)
    m = len(b)
    if m == 0:
        return _trivial(c, lower, upper)

    signs = _slack_signs(senses)
    is_eq = np.array([s == "==" for s in senses])
    A_full = np.hstack([A, np.diag(signs)])
    c_full = np.concatenate([c, np.zeros(m)])
    lo = np.concatenate([lower, np.zeros(m)])
    up = np.concatenate([upper, np.where(is_eq, 0.0, np.inf)])

    if warm is not None:
        result = _warm(A_full, b, c_full, lo, up, n, warm, tol)
        if result is not None:
            return result
        log.debug("warme start mislukt, koude start")
    try:
        return _cold(A_full, b, c_full, lo, up, n, signs, tol)
    except np.linalg.LinAlgError as e:
        log.warning("simplex: numeriek probleem (%s)", e)
        return LpResult(status=LpStatus.ITERATION_LIMIT)
