"""Dense bounded-variable primal simplex.

Two-phase method with an explicit basis inverse, geometric-mean equilibration
scaling, Dantzig pricing with a Bland's-rule fallback, and a two-pass
(Harris-style) ratio test. Sized for desk-scale models (a few thousand
variables); larger solves belong on an external solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AT_LB = 0
AT_UB = 1
BASIC = 2
FREE = 3  # nonbasic free variable parked at zero

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
COST_TOL = 1e-9
REFACTOR_EVERY = 100
STALL_LIMIT = 200  # degenerate iterations before switching to Bland's rule


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | iteration-limit
    x: np.ndarray | None
    objective: float


def _scale_factors(A):
    """Row/column scaling by iterated geometric means of nonzero magnitudes."""
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    absA = np.abs(A)
    mask = absA > 0
    if not mask.any():
        return r, s
    logA = np.zeros_like(A)
    logA[mask] = np.log2(absA[mask])
    for _ in range(4):
        rowcount = mask.sum(axis=1)
        rowmean = np.where(rowcount > 0, logA.sum(axis=1) / np.maximum(rowcount, 1), 0.0)
        logA -= rowmean[:, None] * mask
        r *= np.exp2(-rowmean)
        colcount = mask.sum(axis=0)
        colmean = np.where(colcount > 0, logA.sum(axis=0) / np.maximum(colcount, 1), 0.0)
        logA -= colmean[None, :] * mask
        s *= np.exp2(-colmean)
    # snap to powers of two to keep the scaling exactly invertible
    r = np.exp2(np.round(np.log2(r)))
    s = np.exp2(np.round(np.log2(s)))
    return r, s


class _Tableau:
    def __init__(self, A, b, lb, ub, basis, status):
        self.A = A
        self.b = b
        self.lb = lb
        self.ub = ub
        self.m, self.n = A.shape
        self.basis = np.asarray(basis, dtype=int)
        self.status = status
        self.binv = None
        self.xb = None
        self._since_refactor = 0
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            self.binv = np.linalg.pinv(B)
        self._update_xb()
        self._since_refactor = 0

    def nonbasic_values(self):
        xn = np.where(self.status == AT_UB, self.ub, self.lb)
        xn[self.status == FREE] = 0.0
        xn[~np.isfinite(xn)] = 0.0
        xn[self.basis] = 0.0
        return xn

    def _update_xb(self):
        rhs = self.b - self.A @ self.nonbasic_values()
        self.xb = self.binv @ rhs

    def values(self):
        x = self.nonbasic_values()
        x[self.basis] = self.xb
        return x

    def pivot(self, enter, leave_pos, col, t, direction):
        """Replace basis[leave_pos] by `enter`; col = binv @ A[:, enter]."""
        leave = self.basis[leave_pos]
        self.xb = self.xb - direction * t * col
        if self.status[enter] == AT_UB:
            xe = self.ub[enter]
        elif self.status[enter] == AT_LB:
            xe = self.lb[enter]
        else:
            xe = 0.0
        xe += direction * t
        # leaving variable lands on the bound it hit
        leave_val = self.xb[leave_pos]
        if abs(leave_val - self.lb[leave]) <= abs(leave_val - self.ub[leave]):
            self.status[leave] = AT_LB
        else:
            self.status[leave] = AT_UB
        self.basis[leave_pos] = enter
        self.status[enter] = BASIC
        self.xb[leave_pos] = xe
        # eta update of the inverse
        piv = col[leave_pos]
        e = -col / piv
        e[leave_pos] = 1.0 / piv
        row = self.binv[leave_pos, :].copy()
        self.binv += np.outer(e, row)
        self.binv[leave_pos, :] = row / piv
        self._since_refactor += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self.refactor()


def _price(tab, c):
    y = c[tab.basis] @ tab.binv
    return c - y @ tab.A


def _choose_entering(tab, d, bland):
    fixed = (tab.ub - tab.lb < 1e-12) & (tab.status != FREE)
    at_lb = (tab.status == AT_LB) & ~fixed & (d < -COST_TOL)
    at_ub = (tab.status == AT_UB) & ~fixed & (d > COST_TOL)
    free = (tab.status == FREE) & (np.abs(d) > COST_TOL)
    eligible = at_lb | at_ub | free
    if not eligible.any():
        return -1
    if bland:
        return int(np.argmax(eligible))
    score = np.where(eligible, np.abs(d), 0.0)
    return int(np.argmax(score))


def _ratio_test(tab, col, direction, bound_gap, bland):
    """Two-pass ratio test; returns (t, leave_pos) with leave_pos<0 for a
    bound flip."""
    delta = direction * col
    blb = tab.lb[tab.basis]
    bub = tab.ub[tab.basis]
    pos = delta > PIVOT_TOL
    neg = delta < -PIVOT_TOL
    ti = np.full(tab.m, np.inf)
    # pass 1: max step with bounds relaxed by the feasibility tolerance
    ti[pos] = (tab.xb[pos] - blb[pos] + FEAS_TOL) / delta[pos]
    ti[neg] = (bub[neg] - tab.xb[neg] + FEAS_TOL) / (-delta[neg])
    t_relaxed = min(ti.min(initial=np.inf), bound_gap)
    if not np.isfinite(t_relaxed):
        return np.inf, -1
    # pass 2: among rows blocking within the relaxed step, pick the most
    # stable pivot (largest |delta|); Bland mode picks the lowest index
    texact = np.full(tab.m, np.inf)
    texact[pos] = (tab.xb[pos] - blb[pos]) / delta[pos]
    texact[neg] = (bub[neg] - tab.xb[neg]) / (-delta[neg])
    blocking = texact <= t_relaxed
    if not blocking.any():
        return bound_gap, -1
    idx = np.nonzero(blocking)[0]
    if bland:
        leave_pos = idx[np.argmin(tab.basis[idx])]
    else:
        leave_pos = idx[np.argmax(np.abs(delta[idx]))]
    t = max(texact[leave_pos], 0.0)
    if t >= bound_gap - 1e-12 and bound_gap <= t_relaxed:
        return bound_gap, -1
    return t, int(leave_pos)


def _simplex_loop(tab, c, maxiter):
    it = 0
    stall = 0
    bland = False
    last_obj = np.inf
    while it < maxiter:
        it += 1
        d = _price(tab, c)
        j = _choose_entering(tab, d, bland)
        if j < 0:
            return "optimal", it
        if tab.status[j] == AT_UB:
            direction = -1.0
        elif tab.status[j] == FREE:
            direction = 1.0 if d[j] < 0 else -1.0
        else:
            direction = 1.0
        col = tab.binv @ tab.A[:, j]
        gap = tab.ub[j] - tab.lb[j] if tab.status[j] != FREE else np.inf
        t, leave_pos = _ratio_test(tab, col, direction, gap, bland)
        if not np.isfinite(t):
            return "unbounded", it
        if leave_pos < 0:
            tab.xb = tab.xb - direction * t * col
            tab.status[j] = AT_UB if tab.status[j] == AT_LB else AT_LB
        else:
            tab.pivot(j, leave_pos, col, t, direction)
        obj = float(c @ tab.values())
        if obj > last_obj + 1e-7 * (1.0 + abs(last_obj)):
            # numerical drift: the objective can never increase exactly
            tab.refactor()
            obj = float(c @ tab.values())
        if obj < last_obj - 1e-10:
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= STALL_LIMIT:
                bland = True
        last_obj = obj
    return "iteration-limit", it


class PreparedLp:
    """Constraint matrix assembled and scaled once; solve repeatedly with
    varying bounds.

    Branch-and-bound tightens only variable bounds between node solves, so the
    slack/artificial structure and the scaling can be shared across the tree.
    """

    def __init__(self, c, rows, senses, rhs):
        self.nstruct = len(c)
        self.m = len(rows)
        self.senses = list(senses)
        self.nslack = sum(1 for s in senses if s != "=")
        n = self.nstruct + self.nslack + self.m
        A = np.zeros((self.m, n))
        for i, row in enumerate(rows):
            for j, coef in row:
                A[i, j] += coef
        k = self.nstruct
        for i, s in enumerate(senses):
            if s == "<=":
                A[i, k] = 1.0
                k += 1
            elif s == ">=":
                A[i, k] = -1.0
                k += 1
        self.art0 = self.nstruct + self.nslack
        self.n = n
        b = np.asarray(rhs, dtype=float)
        # equilibrate on the structural+slack block, then scale b and c
        r, s = _scale_factors(A[:, :self.art0])
        s = np.concatenate([s, np.ones(self.m)])
        self.row_scale = r
        self.col_scale = s
        self.A = A * r[:, None] * s[None, :]
        self.b = b * r
        self.c = np.asarray(c, dtype=float) * s[:self.nstruct]

    def solve(self, lb, ub, maxiter=50000):
        return _solve_prepared(self, lb, ub, maxiter)


def solve_lp(c, rows, senses, rhs, lb, ub, maxiter=50000):
    """Minimize c @ x subject to linear rows and box bounds.

    rows: list of [(var_idx, coef)] sparse rows; senses: '<=', '=', '>='.
    Returns an LpResult; x has one entry per structural variable.
    """
    m = len(rows)
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float).copy()
    ub = np.asarray(ub, dtype=float).copy()
    if m == 0:
        if (lb > ub).any():
            return LpResult("infeasible", None, np.inf)
        x = np.where(np.isfinite(lb), lb, 0.0)
        neg = (c < 0) & np.isfinite(ub)
        x[neg] = ub[neg]
        pos_inf = (c < 0) & ~np.isfinite(ub)
        neg_inf = (c > 0) & ~np.isfinite(lb)
        if pos_inf.any() or neg_inf.any():
            return LpResult("unbounded", None, -np.inf)
        return LpResult("optimal", x, float(c @ x))
    return PreparedLp(c, rows, senses, rhs).solve(lb, ub, maxiter)


def _solve_prepared(prep, lb, ub, maxiter):
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if (lb > ub + 1e-12).any():
        return LpResult("infeasible", None, np.inf)
    nstruct, m, n = prep.nstruct, prep.m, prep.n
    nslack, art0 = prep.nslack, prep.art0
    s = prep.col_scale
    A = prep.A.copy()  # artificial column signs depend on the residual
    b = prep.b
    c = prep.c
    # x = s * x' maps scaled variables back; bounds scale the other way
    with np.errstate(invalid="ignore"):
        slb = lb / s[:nstruct]
        sub = ub / s[:nstruct]
    slb[np.isnan(slb)] = -np.inf
    sub[np.isnan(sub)] = np.inf
    full_lb = np.concatenate([slb, np.zeros(nslack + m)])
    full_ub = np.concatenate([sub, np.full(nslack + m, np.inf)])

    status = np.empty(n, dtype=int)
    lb_fin = np.isfinite(full_lb)
    ub_fin = np.isfinite(full_ub)
    closer_lb = np.abs(full_lb) <= np.abs(np.where(ub_fin, full_ub, np.inf))
    status[:] = FREE
    status[lb_fin & (closer_lb | ~ub_fin)] = AT_LB
    status[~(lb_fin & (closer_lb | ~ub_fin)) & ub_fin] = AT_UB
    xn = np.where(status == AT_UB, full_ub, full_lb)
    xn[status == FREE] = 0.0
    xn[~np.isfinite(xn)] = 0.0
    xn[art0:] = 0.0
    resid = b - A[:, :art0] @ xn[:art0]
    signs = np.where(resid >= 0, 1.0, -1.0)
    A[:, art0:] = np.diag(signs)
    status[art0:] = BASIC

    basis = list(range(art0, art0 + m))
    tab = _Tableau(A, b, full_lb, full_ub, basis, status)

    # phase 1: minimize artificial mass
    c1 = np.zeros(n)
    c1[art0:] = 1.0
    st, used = _simplex_loop(tab, c1, maxiter)
    if st == "iteration-limit":
        return LpResult("iteration-limit", None, np.inf)
    art_mass = float(c1 @ tab.values())
    if art_mass > 1e-6:
        return LpResult("infeasible", None, np.inf)
    # pin artificials to zero for phase 2
    tab.lb[art0:] = 0.0
    tab.ub[art0:] = 0.0
    nonbasic_art = (tab.status == BASIC).copy()
    for j in range(art0, n):
        if tab.status[j] != BASIC:
            tab.status[j] = AT_LB
    tab._update_xb()

    c2 = np.concatenate([c, np.zeros(nslack + m)])
    st, _ = _simplex_loop(tab, c2, maxiter - used)
    if st == "unbounded":
        return LpResult("unbounded", None, -np.inf)
    if st == "iteration-limit":
        return LpResult("iteration-limit", None, np.inf)
    x = tab.values()[:nstruct] * s[:nstruct]
    # clip round-off noise at the bounds
    x = np.clip(x, lb, ub)
    cx = np.asarray(prep.c / s[:nstruct])
    return LpResult("optimal", x, float(cx @ x))
