"""Bounded-variable two-phase revised simplex.

The basis inverse is kept as a dense LU factorization plus a short chain of
product-form eta updates, refreshed every ``refactor_interval`` pivots.
Pricing is Dantzig by default and falls back to Bland's rule after a run of
non-improving pivots, which breaks the cycling that plagues degenerate
dispatch bases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve

from .problem import LpProblem, LpSolution, evaluate_residuals, objective_value

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FREE = 3
FIXED = 4


@dataclass(frozen=True)
class SolveOptions:
    """Solver knobs; the defaults suit the dispatch problems built here."""

    feasibility_tol: float = 1e-7
    optimality_tol: float = 1e-9
    pivot_tol: float = 1e-10
    max_iterations: int | None = None  # default 50 * (rows + cols)
    bland_trigger: int = 200
    refactor_interval: int = 50


class _BasisFactor:
    """LU of the current basis matrix with eta-file updates."""

    def __init__(self, A: sp.csc_matrix):
        self.A = A
        self.m = A.shape[0]
        self.lu = None
        self.etas: list[tuple[int, np.ndarray]] = []

    def refactor(self, basis: np.ndarray) -> None:
        self.etas = []
        if self.m == 0:
            return
        B = self.A[:, basis].toarray()
        self.lu = lu_factor(B, check_finite=False)
        diag = np.abs(np.diag(self.lu[0]))
        if diag.min() < 1e-13 * max(1.0, diag.max()):
            raise RuntimeError("basis matrix is numerically singular")

    def push_eta(self, r: int, w: np.ndarray) -> None:
        self.etas.append((r, w))

    def column(self, q: int) -> np.ndarray:
        a = np.zeros(self.m)
        start, end = self.A.indptr[q], self.A.indptr[q + 1]
        a[self.A.indices[start:end]] = self.A.data[start:end]
        return a

    def ftran(self, v: np.ndarray) -> np.ndarray:
        # B^-1 v
        if self.m == 0:
            return np.zeros(0)
        y = lu_solve(self.lu, v, check_finite=False)
        for r, w in self.etas:
            yr = y[r] / w[r]
            y -= w * yr
            y[r] = yr
        return y

    def btran(self, v: np.ndarray) -> np.ndarray:
        # B^-T v
        if self.m == 0:
            return np.zeros(0)
        y = v.copy()
        for r, w in reversed(self.etas):
            y[r] = (y[r] - (np.dot(w, y) - w[r] * y[r])) / w[r]
        return lu_solve(self.lu, y, trans=1, check_finite=False)


class _State:
    def __init__(self, problem: LpProblem, opts: SolveOptions):
        self.opts = opts
        n = problem.n_vars
        m = problem.n_rows
        self.n = n
        self.m = m

        c = problem.objective.astype(float, copy=True)
        if problem.sense == "maximize":
            c = -c

        # Column layout: structural, then one slack per inequality row, then
        # artificials for rows whose slack cannot absorb the initial residual.
        slack_col = np.full(m, -1, dtype=np.int64)
        next_col = n
        for i, row in enumerate(problem.rows):
            if row.relation != "=":
                slack_col[i] = next_col
                next_col += 1
        n_slack = next_col - n

        slack_lo = np.zeros(n_slack)
        slack_hi = np.zeros(n_slack)
        k = 0
        for row in problem.rows:
            if row.relation == "<=":
                slack_lo[k], slack_hi[k] = 0.0, np.inf
                k += 1
            elif row.relation == ">=":
                slack_lo[k], slack_hi[k] = -np.inf, 0.0
                k += 1

        x_struct = np.where(
            np.isfinite(problem.lower),
            problem.lower,
            np.where(np.isfinite(problem.upper), problem.upper, 0.0),
        )
        vstat_struct = np.where(
            problem.lower == problem.upper,
            FIXED,
            np.where(
                np.isfinite(problem.lower),
                AT_LOWER,
                np.where(np.isfinite(problem.upper), AT_UPPER, FREE),
            ),
        )

        b = np.array([row.rhs for row in problem.rows])
        activity = np.array(
            [np.dot(row.vals, x_struct[row.cols]) if len(row.cols) else 0.0 for row in problem.rows]
        )
        resid = b - activity

        data: list[float] = []
        ri: list[int] = []
        ci: list[int] = []
        for i, row in enumerate(problem.rows):
            ri.extend([i] * len(row.cols))
            ci.extend(row.cols.tolist())
            data.extend(row.vals.tolist())
            if slack_col[i] >= 0:
                ri.append(i)
                ci.append(int(slack_col[i]))
                data.append(1.0)

        basis = np.full(m, -1, dtype=np.int64)
        x_slack = np.zeros(n_slack)
        vstat_slack = np.full(n_slack, AT_LOWER, dtype=np.int64)
        art_rows: list[int] = []
        for i, row in enumerate(problem.rows):
            s = slack_col[i]
            if row.relation == "<=" and resid[i] >= 0.0:
                basis[i] = s
                x_slack[s - n] = resid[i]
                vstat_slack[s - n] = BASIC
            elif row.relation == ">=" and resid[i] <= 0.0:
                basis[i] = s
                x_slack[s - n] = resid[i]
                vstat_slack[s - n] = BASIC
            else:
                if s >= 0:
                    # slack rests at its bound nearest feasibility, which is 0
                    vstat_slack[s - n] = AT_LOWER if row.relation == "<=" else AT_UPPER
                art_rows.append(i)

        na = len(art_rows)
        n_total = n + n_slack + na
        for j, i in enumerate(art_rows):
            col = n + n_slack + j
            ri.append(i)
            ci.append(col)
            data.append(1.0 if resid[i] >= 0.0 else -1.0)
            basis[i] = col

        self.A = sp.csc_matrix(
            (np.array(data), (np.array(ri, dtype=np.int64), np.array(ci, dtype=np.int64))),
            shape=(m, n_total),
        )
        self.At = self.A.T.tocsr()
        self.b = b
        self.n_total = n_total
        self.basis = basis

        self.lo = np.concatenate([problem.lower, slack_lo, np.zeros(na)])
        self.hi = np.concatenate([problem.upper, slack_hi, np.full(na, np.inf)])
        self.x = np.concatenate([x_struct, x_slack, np.abs(resid[art_rows])])
        self.vstat = np.concatenate(
            [vstat_struct, vstat_slack, np.full(na, BASIC, dtype=np.int64)]
        ).astype(np.int64)

        self.is_artificial = np.zeros(n_total, dtype=bool)
        self.is_artificial[n + n_slack :] = True

        self.c_phase2 = np.concatenate([c, np.zeros(n_slack + na)])
        self.c_phase1 = np.concatenate([np.zeros(n + n_slack), np.ones(na)])

        self.factor = _BasisFactor(self.A)
        self.iterations = 0
        max_it = opts.max_iterations
        self.max_iterations = max_it if max_it is not None else 50 * (m + n)
        self.b_scale = 1.0 + (np.max(np.abs(b)) if m else 0.0)

    # -- basis maintenance -------------------------------------------------

    def _recompute_basics(self) -> None:
        if self.m == 0:
            return
        xc = self.x.copy()
        xc[self.basis] = 0.0
        v = self.b - self.A @ xc
        self.x[self.basis] = self.factor.ftran(v)

    def _refactor(self) -> None:
        self.factor.refactor(self.basis)
        self._recompute_basics()

    # -- pricing -----------------------------------------------------------

    def _reduced_costs(self, c_work: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return c_work.copy()
        y = self.factor.btran(c_work[self.basis])
        return c_work - self.At @ y

    def _choose_entering(self, d: np.ndarray, banned: np.ndarray, bland: bool, otol: float) -> int:
        viol = np.zeros(self.n_total)
        at_lo = self.vstat == AT_LOWER
        at_up = self.vstat == AT_UPPER
        free = self.vstat == FREE
        viol[at_lo] = -d[at_lo]
        viol[at_up] = d[at_up]
        viol[free] = np.abs(d[free])
        viol[banned] = 0.0
        eligible = viol > otol
        if not np.any(eligible):
            return -1
        if bland:
            return int(np.flatnonzero(eligible)[0])
        return int(np.argmax(viol))

    # -- main loop ---------------------------------------------------------

    def optimize(self, phase: int) -> str:
        opts = self.opts
        c_work = self.c_phase1 if phase == 1 else self.c_phase2
        otol = opts.optimality_tol * (1.0 + float(np.max(np.abs(c_work))))
        ptol = opts.pivot_tol
        bland = False
        stall = 0
        z = float(np.dot(c_work, self.x))

        while True:
            if self.iterations >= self.max_iterations:
                return "iteration-limit"
            if phase == 1 and z <= 1e-11 * self.b_scale:
                return "optimal"

            d = self._reduced_costs(c_work)
            banned = np.zeros(self.n_total, dtype=bool)

            while True:
                q = self._choose_entering(d, banned, bland, otol)
                if q == -1:
                    return "optimal"
                direction = 1.0
                if self.vstat[q] == AT_UPPER or (self.vstat[q] == FREE and d[q] > 0):
                    direction = -1.0

                w = self.factor.ftran(self.factor.column(q)) if self.m else np.zeros(0)

                # ratio test over the basics plus the entering bound flip
                delta = -direction * w
                t_cand = np.full(self.m, np.inf)
                dec = delta < -ptol
                inc = delta > ptol
                if np.any(dec):
                    room = np.maximum(self.x[self.basis[dec]] - self.lo[self.basis[dec]], 0.0)
                    t_cand[dec] = room / -delta[dec]
                if np.any(inc):
                    room = np.maximum(self.hi[self.basis[inc]] - self.x[self.basis[inc]], 0.0)
                    t_cand[inc] = room / delta[inc]

                t_min = float(np.min(t_cand)) if self.m else np.inf
                lo_q, hi_q = self.lo[q], self.hi[q]
                t_flip = hi_q - lo_q if np.isfinite(lo_q) and np.isfinite(hi_q) else np.inf

                if t_flip <= t_min:
                    if not np.isfinite(t_flip):
                        return "unbounded" if phase == 2 else self._phase1_unbounded()
                    self.x[self.basis] += t_flip * delta
                    if self.vstat[q] == AT_LOWER:
                        self.x[q] = hi_q
                        self.vstat[q] = AT_UPPER
                    else:
                        self.x[q] = lo_q
                        self.vstat[q] = AT_LOWER
                    self.iterations += 1
                    break

                if not np.isfinite(t_min):
                    return "unbounded" if phase == 2 else self._phase1_unbounded()

                near = t_cand <= t_min + 1e-9 * (1.0 + t_min)
                cand = np.flatnonzero(near)
                if bland:
                    r = int(cand[np.argmin(self.basis[cand])])
                else:
                    r = int(cand[np.argmax(np.abs(w[cand]))])

                if abs(w[r]) < ptol:
                    if self.factor.etas:
                        self._refactor()
                        banned = None
                        break  # stale factor; redo the iteration fresh
                    banned[q] = True
                    continue

                self._pivot(q, r, w, t_min, direction)
                self.iterations += 1
                break

            if banned is None:
                continue
            z_new = float(np.dot(c_work, self.x))
            if z - z_new > 1e-12 * (1.0 + abs(z)):
                stall = 0
                bland = False
            else:
                stall += 1
                if stall >= opts.bland_trigger:
                    bland = True
            z = z_new

    def _phase1_unbounded(self) -> str:
        raise RuntimeError("phase 1 subproblem reported unbounded; problem data is corrupt")

    def _pivot(self, q: int, r: int, w: np.ndarray, t: float, direction: float) -> None:
        x_q0 = self.x[q]
        leave = self.basis[r]
        delta = -direction * w
        self.x[self.basis] += t * delta
        if self.lo[leave] == self.hi[leave]:
            self.x[leave] = self.lo[leave]
            self.vstat[leave] = FIXED
        elif delta[r] < 0:
            self.x[leave] = self.lo[leave]
            self.vstat[leave] = AT_LOWER
        else:
            self.x[leave] = self.hi[leave]
            self.vstat[leave] = AT_UPPER
        self.x[q] = x_q0 + t * direction
        self.vstat[q] = BASIC
        self.basis[r] = q
        self.factor.push_eta(r, w.copy())
        if len(self.factor.etas) >= self.opts.refactor_interval:
            self._refactor()

    # -- phase transition --------------------------------------------------

    def phase1_infeasibility(self) -> float:
        return float(np.sum(np.abs(self.x[self.is_artificial])))

    def drive_out_artificials(self) -> None:
        ptol = self.opts.pivot_tol
        for r in range(self.m):
            if not self.is_artificial[self.basis[r]]:
                continue
            e_r = np.zeros(self.m)
            e_r[r] = 1.0
            brow = self.factor.btran(e_r)
            row_vals = self.At @ brow
            row_vals[self.is_artificial] = 0.0
            row_vals[self.vstat == BASIC] = 0.0
            row_vals[self.vstat == FIXED] = 0.0
            j = int(np.argmax(np.abs(row_vals)))
            if abs(row_vals[j]) <= 1e-7:
                continue  # redundant row; artificial stays basic at zero
            w = self.factor.ftran(self.factor.column(j))
            if abs(w[r]) < ptol:
                continue
            art = self.basis[r]
            self.vstat[art] = FIXED
            self.x[art] = 0.0
            self.vstat[j] = BASIC
            self.basis[r] = j
            self.factor.push_eta(r, w.copy())
        # artificials can never re-enter
        art = self.is_artificial
        self.lo[art] = 0.0
        self.hi[art] = 0.0
        nonbasic_art = art & (self.vstat != BASIC)
        self.vstat[nonbasic_art] = FIXED
        self.x[nonbasic_art] = 0.0
        self._refactor()


def solve(problem: LpProblem, options: SolveOptions | None = None) -> LpSolution:
    """Solve ``problem`` to proven optimality or a definite failure status.

    Returns an :class:`LpSolution` whose residual fields come from an
    independent evaluation of the original rows at the reported point.
    """
    opts = options or SolveOptions()
    st = _State(problem, opts)

    status = "optimal"
    if st.m > 0:
        st.factor.refactor(st.basis)
        status = st.optimize(phase=1)
        if status == "optimal":
            if st.phase1_infeasibility() > opts.feasibility_tol * st.b_scale:
                status = "infeasible"
            else:
                st.drive_out_artificials()
    if status == "optimal":
        status = st.optimize(phase=2)
    if status == "optimal" and st.m > 0:
        st._refactor()

    xs = st.x[: st.n].copy()
    max_res, max_bv = evaluate_residuals(problem, xs)
    return LpSolution(
        status=status,
        x=xs,
        objective_value=objective_value(problem, xs),
        iterations=st.iterations,
        max_primal_residual=max_res,
        max_bound_violation=max_bv,
    )
