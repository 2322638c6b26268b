"""Dense convex QP solver.

Solves
    minimize    0.5 z'Hz + g'z
    subject to  A z <= b,   lb <= z <= ub

with an over-relaxed operator-splitting (ADMM) iteration on the stacked
constraint set l <= Cz <= u, C = [A; I], preceded by Ruiz equilibration and
finished by an active-set polish that turns a near-feasible iterate into an
exact KKT point. The iteration is dense and deterministic: a fixed problem
yields an identical iterate sequence on every call.

Statuses
--------
OPTIMAL     KKT residual at or below settings.tol after polish.
MAX_ITER    iteration budget exhausted; best iterate is still returned.
INFEASIBLE  the dual iterates produced a primal infeasibility certificate
            (a separating direction v with C'v = 0 and negative support).

An unbounded problem has no certificate test here and runs to MAX_ITER;
the controller's QPs are bounded by construction (hard input boxes).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"


@dataclass
class QpSettings:
    """Solver knobs.

    Attributes:
        tol: absolute KKT tolerance used for termination and the OPTIMAL test.
        max_iter: ADMM iteration budget.
        sigma: diagonal regularization added to H in the linear system.
        rho: ADMM step size on constraint rows (after equilibration).
        alpha: over-relaxation factor in (0, 2).
        check_every: residual check interval, iterations.
        eps_inf: relative tolerance of the primal infeasibility certificate.
        polish: run the active-set finish after the iteration.
        scaling_iters: Ruiz equilibration sweeps.
    """

    tol: float = 1e-6
    max_iter: int = 4000
    sigma: float = 1e-8
    rho: float = 0.1
    alpha: float = 1.6
    check_every: int = 25
    eps_inf: float = 1e-4
    polish: bool = True
    scaling_iters: int = 10
    eps_rel: float = 1e-5
    adaptive_rho: bool = True


@dataclass
class DenseQp:
    H: np.ndarray
    g: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.H = np.asarray(self.H, dtype=float)
        self.g = np.asarray(self.g, dtype=float).ravel()
        n = self.g.size
        if self.A is None:
            self.A = np.zeros((0, n))
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        if self.b is None:
            self.b = np.zeros(self.A.shape[0])
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()

    @property
    def n(self) -> int:
        return self.g.size

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def validate(self) -> None:
        n = self.n
        if self.H.shape != (n, n):
            raise ValueError("H must be n x n")
        if not np.allclose(self.H, self.H.T, atol=1e-10, rtol=0.0):
            raise ValueError("H must be symmetric (1e-10)")
        if self.A.shape != (self.m, n) or self.b.shape != (self.m,):
            raise ValueError("A, b shapes inconsistent")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bound shapes inconsistent")
        if np.any(self.lb > self.ub):
            raise ValueError("lb must not exceed ub")

    def objective(self, z: np.ndarray) -> float:
        return float(0.5 * z @ self.H @ z + self.g @ z)


@dataclass
class QpSolution:
    z: np.ndarray
    lam: np.ndarray           # multipliers of A z <= b, nonnegative
    status: QpStatus
    iterations: int
    kkt_residual: float
    bound_duals: np.ndarray = field(default=None)  # signed duals of lb <= z <= ub


def kkt_residual(qp: DenseQp, z: np.ndarray, lam: np.ndarray) -> float:
    """Max-norm KKT residual of (z, lam) for the inequality-form QP.

    Bound multipliers are not part of the signature; the stationarity defect is
    measured against the best admissible choice implied by which bound each
    component of z sits on. Zero (<= 1e-12) exactly at a KKT point.
    """
    z = np.asarray(z, dtype=float).ravel()
    lam = np.asarray(lam, dtype=float).ravel()
    grad = qp.H @ z + qp.g + qp.A.T @ lam

    at_lb = z <= qp.lb + 1e-9
    at_ub = z >= qp.ub - 1e-9
    stat = np.abs(grad)
    # at a bound the implied multiplier absorbs the correctly-signed part
    stat = np.where(at_ub, np.maximum(grad, 0.0), stat)
    stat = np.where(at_lb, np.maximum(-grad, 0.0), stat)
    stat = np.where(at_lb & at_ub, 0.0, stat)

    slack = qp.A @ z - qp.b if qp.m else np.zeros(0)
    prim = np.concatenate([
        np.maximum(slack, 0.0) if qp.m else np.zeros(0),
        np.maximum(qp.lb - z, 0.0),
        np.maximum(z - qp.ub, 0.0),
    ])
    dual = np.maximum(-lam, 0.0) if qp.m else np.zeros(0)
    comp = np.abs(lam * slack) if qp.m else np.zeros(0)

    pieces = [stat, prim]
    if qp.m:
        pieces += [dual, comp]
    return float(max(np.max(p, initial=0.0) for p in pieces))


def _ruiz_equilibrate(H, g, C, iters):
    """Symmetric Ruiz scaling of [[H, C'], [C, 0]] plus cost normalization."""
    n = H.shape[0]
    mc = C.shape[0]
    d = np.ones(n)
    e = np.ones(mc)
    Hs, gs, Cs = H.copy(), g.copy(), C.copy()
    for _ in range(iters):
        col = np.maximum(
            np.max(np.abs(Hs), axis=0, initial=0.0),
            np.max(np.abs(Cs), axis=0, initial=0.0),
        )
        row = np.max(np.abs(Cs), axis=1, initial=0.0)
        dd = 1.0 / np.sqrt(np.clip(col, 1e-10, 1e10))
        ee = 1.0 / np.sqrt(np.clip(row, 1e-10, 1e10))
        dd[col == 0.0] = 1.0
        ee[row == 0.0] = 1.0
        Hs = dd[:, None] * Hs * dd[None, :]
        Cs = ee[:, None] * Cs * dd[None, :]
        gs = dd * gs
        d *= dd
        e *= ee
    col_means = np.mean(np.max(np.abs(Hs), axis=0, initial=0.0)) if n else 1.0
    cost = 1.0 / np.clip(max(col_means, np.max(np.abs(gs), initial=0.0)), 1e-8, 1e8)
    Hs *= cost
    gs *= cost
    return Hs, gs, Cs, d, e, cost


def _solve_active_kkt(qp, rows, rhs_act, sigma):
    """Regularized equality KKT on the given rows, refined toward the true system.

    Returns (z, nu) or None. The -sigma block keeps the factorization
    nonsingular when the active rows are linearly dependent (duals are then one
    particular solution, which is all the residual check needs).
    """
    n = qp.n
    C = np.vstack([qp.A, np.eye(n)])
    c_act = C[rows]
    k = rows.size
    kkt = np.zeros((n + k, n + k))
    kkt[:n, :n] = qp.H + sigma * np.eye(n)
    kkt[:n, n:] = c_act.T
    kkt[n:, :n] = c_act
    kkt[n:, n:] = -sigma * np.eye(k)
    rhs = np.concatenate([-qp.g, rhs_act])
    try:
        lu, piv = scipy.linalg.lu_factor(kkt)
        sol = scipy.linalg.lu_solve((lu, piv), rhs)
    except (np.linalg.LinAlgError, ValueError):
        sol = None
    if sol is None or not np.all(np.isfinite(sol)):
        kkt_true = kkt.copy()
        kkt_true[:n, :n] -= sigma * np.eye(n)
        kkt_true[n:, n:] += sigma * np.eye(k)
        sol = np.linalg.lstsq(kkt_true, rhs, rcond=None)[0]
        return sol[:n], sol[n:]
    # refine against the unregularized system, keeping the best iterate
    kkt_true = kkt.copy()
    kkt_true[:n, :n] -= sigma * np.eye(n)
    kkt_true[n:, n:] += sigma * np.eye(k)
    best = sol
    best_res = float(np.max(np.abs(rhs - kkt_true @ sol), initial=0.0))
    for _ in range(3):
        resid = rhs - kkt_true @ sol
        sol = sol + scipy.linalg.lu_solve((lu, piv), resid)
        res = float(np.max(np.abs(rhs - kkt_true @ sol), initial=0.0))
        if res < best_res:
            best, best_res = sol, res
    return best[:n], best[n:]


def _polish(qp: DenseQp, z, y_rows, sigma, r_prim=0.0, tol=1e-6):
    """Active-set finish from the ADMM iterate, by feasible descent.

    A primal active-set method seeded from the iterate: each round solves the
    equality QP on the working set and moves toward that point only as far as
    the first blocking row, which is then added. The point is kept exactly on
    the working-set constraints (projected after the seed and after any add
    that lands off a bound), so the step direction is orthogonal to every
    working row and a row with a meaningful component along it is provably
    independent of the set. The set then stays full rank, the equality
    systems stay consistent, and the duals at a stationary point are unique;
    sign tests on them are meaningful, which no least-squares repair of an
    inconsistent set can offer. At a stationary point, wrong-signed rows
    leave the set one at a time. Near-degenerate ties can in principle
    cycle, so selection switches to lowest-index (Bland) after a zero step
    and the rounds are capped; a failed polish just hands control back to
    the splitting iteration.
    """
    n, m = qp.n, qp.m
    C = np.vstack([qp.A, np.eye(n)])
    lo = np.concatenate([np.full(m, -np.inf), qp.lb])
    hi = np.concatenate([qp.b, qp.ub])
    fin_hi = np.isfinite(hi)
    fin_lo = np.isfinite(lo)
    ref_hi = 1.0 + np.abs(np.where(fin_hi, hi, 0.0))
    ref_lo = 1.0 + np.abs(np.where(fin_lo, lo, 0.0))
    row_norms = np.maximum(np.linalg.norm(C, axis=1), 1e-300)

    z = np.minimum(np.maximum(z, qp.lb), qp.ub)
    cz = C @ z
    dual_scale = max(1.0, float(np.max(np.abs(y_rows), initial=0.0)))
    prox = max(10.0 * r_prim, 1e-8)
    near_hi = fin_hi & ((cz >= hi - prox * ref_hi) | (y_rows > 1e-7 * dual_scale))
    near_lo = fin_lo & ((cz <= lo + prox * ref_lo) | (y_rows < -1e-7 * dual_scale))
    both = near_hi & near_lo
    near_hi[both] = y_rows[both] >= 0.0
    near_lo[both] = y_rows[both] < 0.0

    # greedy independent seed: bound rows are coordinate axes and always
    # mutually independent, so they go first; candidate A-rows enter only if
    # independent of everything chosen so far
    basis = np.zeros((n, 0))
    act_hi = np.zeros(m + n, dtype=bool)
    act_lo = np.zeros(m + n, dtype=bool)

    def try_add(row, hi_side):
        nonlocal basis
        c = C[row]
        resid = c - basis @ (basis.T @ c)
        resid -= basis @ (basis.T @ resid)
        nrm = float(np.linalg.norm(resid))
        if nrm <= 1e-10 * max(1.0, float(np.linalg.norm(c))):
            return False
        basis = np.column_stack([basis, resid / nrm])
        if hi_side:
            act_hi[row] = True
        else:
            act_lo[row] = True
        return True

    for i in range(m, m + n):
        if near_hi[i]:
            try_add(i, True)
        elif near_lo[i]:
            try_add(i, False)
    a_rows = [i for i in range(m) if near_hi[i]]
    a_rows.sort(key=lambda i: -(cz[i] - hi[i]) / ref_hi[i])
    for i in a_rows:
        try_add(i, True)

    def reproject():
        # restore C_W z = b_W exactly (min-norm correction); everything
        # downstream relies on the step being orthogonal to working rows
        nonlocal z, cz
        rows = np.flatnonzero(act_hi | act_lo)
        if rows.size == 0:
            return
        bw = np.where(act_hi[rows], hi[rows], lo[rows])
        resid = bw - C[rows] @ z
        if float(np.max(np.abs(resid), initial=0.0)) <= 1e-12 * (
                1.0 + float(np.max(np.abs(bw), initial=0.0))):
            return
        z = z + np.linalg.lstsq(C[rows], resid, rcond=None)[0]
        cz = C @ z

    reproject()

    best = None
    best_res = np.inf
    bland = False
    for _ in range(max(100, 3 * n)):
        rows = np.flatnonzero(act_hi | act_lo)
        if rows.size == 0:
            try:
                z_t = np.linalg.solve(qp.H + sigma * np.eye(n), -qp.g)
            except np.linalg.LinAlgError:
                return best
            nu = np.zeros(0)
        else:
            out = _solve_active_kkt(qp, rows, np.where(act_hi[rows], hi[rows], lo[rows]), sigma)
            if out is None:
                return best
            z_t, nu = out
        if not np.all(np.isfinite(z_t)):
            return best

        p = z_t - z
        if float(np.max(np.abs(p), initial=0.0)) <= 1e-11 * (1.0 + float(np.max(np.abs(z)))):
            # stationary on the working set; duals are unique here, so the
            # sign test is decisive
            y_full = np.zeros(m + n)
            y_full[rows] = nu
            lam = np.maximum(y_full[:m], 0.0)
            mu = y_full[m:]
            res = _full_residual(qp, z_t, lam, mu)
            if res < best_res:
                best, best_res = (z_t, lam, mu), res

            sign_tol = 1e-9 * max(1.0, float(np.max(np.abs(nu), initial=0.0)))
            bad = np.where(act_hi, -y_full, -np.inf)
            bad = np.maximum(bad, np.where(act_lo, y_full, -np.inf))
            if bland:
                wrong = np.flatnonzero(bad > sign_tol)
                j = int(wrong[0]) if wrong.size else -1
            else:
                j = int(np.argmax(bad))
                if bad[j] <= sign_tol:
                    j = -1
            if j < 0:
                # clean duals; the vertex is optimal for its working set, but
                # a row outside the set can still be violated when bounds of
                # linearly dependent rows collide (degenerate vertex)
                czt = C @ z_t
                outside = ~(act_hi | act_lo)
                over = np.where(outside & fin_hi, czt - hi, -np.inf)
                under = np.where(outside & fin_lo, lo - czt, -np.inf)
                r_hi = int(np.argmax(over)) if over.size else 0
                enter_hi = over[r_hi] >= np.max(under, initial=-np.inf)
                r = r_hi if enter_hi else int(np.argmax(under))
                depth = over[r] if enter_hi else under[r]
                if not np.isfinite(depth) or depth <= 0.5 * tol:
                    return best
                z = z_t
                cz = czt
                if try_add(r, enter_hi):
                    reproject()
                    continue
                # dependent violated row: a dual ratio test picks the working
                # row it replaces, keeping the remaining duals sign-clean
                w = np.linalg.lstsq(C[rows].T, C[r], rcond=None)[0]
                wt = w if enter_hi else -w
                w_tol = 1e-9 * max(1.0, float(np.max(np.abs(wt), initial=0.0)))
                cand = ((act_hi[rows] & (wt > w_tol))
                        | (act_lo[rows] & (wt < -w_tol)))
                if not np.any(cand):
                    return best
                ratios = np.where(cand, nu / np.where(cand, wt, 1.0), np.inf)
                i_leave = int(rows[int(np.argmin(ratios))])
                act_hi[i_leave] = False
                act_lo[i_leave] = False
                rem = np.flatnonzero(act_hi | act_lo)
                basis = np.linalg.qr(C[rem].T)[0] if rem.size else np.zeros((n, 0))
                if not try_add(r, enter_hi):
                    return best
                reproject()
                continue
            act_hi[j] = False
            act_lo[j] = False
            basis = np.linalg.qr(C[np.flatnonzero(act_hi | act_lo)].T)[0] if np.any(act_hi | act_lo) else np.zeros((n, 0))
            z = z_t
            cz = C @ z
            continue

        # ray step toward the equality solution, stopping at the first
        # blocking row outside the working set; rows with no meaningful
        # component along p (relative to their norm) are dependent on the
        # working set and cannot block
        cp = C @ p
        thresh = 1e-9 * row_norms * float(np.linalg.norm(p))
        in_set = act_hi | act_lo
        pos = ~in_set & fin_hi & (cp > thresh)
        neg = ~in_set & fin_lo & (cp < -thresh)
        alpha = 1.0
        block = -1
        block_hi = True
        if np.any(pos):
            gaps = np.maximum(hi[pos] - cz[pos], 0.0) / cp[pos]
            idx = np.flatnonzero(pos)
            k = int(np.argmin(gaps)) if not bland else int(np.argmin(np.where(gaps <= np.min(gaps) + 1e-14, idx, np.iinfo(np.int64).max)))
            if gaps[k] < alpha:
                alpha = float(gaps[k])
                block = int(idx[k])
                block_hi = True
        if np.any(neg):
            gaps = np.maximum(cz[neg] - lo[neg], 0.0) / (-cp[neg])
            idx = np.flatnonzero(neg)
            k = int(np.argmin(gaps)) if not bland else int(np.argmin(np.where(gaps <= np.min(gaps) + 1e-14, idx, np.iinfo(np.int64).max)))
            if gaps[k] < alpha:
                alpha = float(gaps[k])
                block = int(idx[k])
                block_hi = False
        if block < 0:
            z = z_t
            cz = C @ z
            bland = False
            continue
        z = z + alpha * p
        cz = cz + alpha * cp
        bland = alpha <= 1e-12
        if not try_add(block, block_hi):
            # blocking row turned out dependent despite the component test;
            # nothing sound to add, give the iteration back to the splitting
            # method
            return best
        reproject()
    return best


def _full_residual(qp, z, lam, mu):
    """Internal residual that also charges the explicit bound duals."""
    grad = qp.H @ z + qp.g + qp.A.T @ lam + mu
    stat = np.max(np.abs(grad), initial=0.0)
    slack = qp.A @ z - qp.b if qp.m else np.zeros(0)
    prim = max(
        np.max(np.maximum(slack, 0.0), initial=0.0),
        np.max(np.maximum(qp.lb - z, 0.0), initial=0.0),
        np.max(np.maximum(z - qp.ub, 0.0), initial=0.0),
    )
    dual = np.max(np.maximum(-lam, 0.0), initial=0.0) if qp.m else 0.0
    comp = np.max(np.abs(lam * slack), initial=0.0) if qp.m else 0.0
    gap_hi = np.where(np.isfinite(qp.ub), z - qp.ub, 1.0)
    gap_lo = np.where(np.isfinite(qp.lb), z - qp.lb, -1.0)
    mu_hi = np.abs(np.maximum(mu, 0.0) * gap_hi)
    mu_lo = np.abs(np.minimum(mu, 0.0) * gap_lo)
    comp_b = max(np.max(mu_hi, initial=0.0), np.max(mu_lo, initial=0.0))
    return float(max(stat, prim, dual, comp, comp_b))


def solve(qp: DenseQp, settings: QpSettings | None = None,
          warm_start: tuple[np.ndarray, np.ndarray] | None = None) -> QpSolution:
    """Solve the QP. warm_start, when given, is (z0, y0) with y0 of length m + n."""
    cfg = settings or QpSettings()
    qp.validate()
    n, m = qp.n, qp.m

    C = np.vstack([qp.A, np.eye(n)])
    lo = np.concatenate([np.full(m, -np.inf), qp.lb])
    hi = np.concatenate([qp.b, qp.ub])
    mc = m + n

    finite_any = np.isfinite(lo) | np.isfinite(hi)
    if not np.any(finite_any):
        try:
            z = np.linalg.solve(qp.H + cfg.sigma * np.eye(n), -qp.g)
        except np.linalg.LinAlgError:
            z = np.linalg.lstsq(qp.H, -qp.g, rcond=None)[0]
        res = kkt_residual(qp, z, np.zeros(0))
        status = QpStatus.OPTIMAL if res <= cfg.tol else QpStatus.MAX_ITER
        return QpSolution(z, np.zeros(0), status, 0, res, np.zeros(n))

    Hs, gs, Cs, d, e, cost = _ruiz_equilibrate(qp.H, qp.g, C, cfg.scaling_iters)
    lo_s = e * lo
    hi_s = e * hi

    rho = cfg.rho

    cs_t = np.ascontiguousarray(Cs.T)

    def factor(rho_now):
        rho_vec = np.where(finite_any, rho_now, 1e-6 * rho_now)
        kkt_mat = Hs + cfg.sigma * np.eye(n) + (cs_t * rho_vec) @ Cs
        chol = scipy.linalg.cho_factor(kkt_mat, lower=True, check_finite=False)
        return rho_vec, 1.0 / rho_vec, chol

    rho_vec, inv_rho, chol = factor(rho)

    if warm_start is not None:
        z0, y0 = warm_start
        x = np.asarray(z0, dtype=float).ravel() / d
        y = cost * np.asarray(y0, dtype=float).ravel() / np.where(e == 0.0, 1.0, e)
        zc = np.clip(Cs @ x, lo_s, hi_s)
    else:
        x = np.zeros(n)
        y = np.zeros(mc)
        zc = np.clip(np.zeros(mc), lo_s, hi_s)

    status = QpStatus.MAX_ITER
    iterations = cfg.max_iter
    eps_rel = cfg.eps_rel
    last_r_prim = np.inf
    done = None
    polish_fails = 0
    next_polish_check = 1
    check_index = 0
    y_prev_check = e * y / cost

    alpha = cfg.alpha
    beta = 1.0 - alpha
    sigma = cfg.sigma
    for it in range(1, cfg.max_iter + 1):
        rhs = sigma * x - gs + cs_t @ (rho_vec * zc - y)
        x_tilde = scipy.linalg.cho_solve(chol, rhs, check_finite=False)
        z_tilde = Cs @ x_tilde
        x = alpha * x_tilde + beta * x
        z_rel = alpha * z_tilde + beta * zc
        zc_new = np.minimum(np.maximum(z_rel + y * inv_rho, lo_s), hi_s)
        y = y + rho_vec * (z_rel - zc_new)
        zc = zc_new

        if it % cfg.check_every == 0 or it == cfg.max_iter:
            z_u = d * x
            y_u = e * y / cost
            cx = C @ z_u
            zc_u = zc / e
            r_prim = float(np.max(np.abs(cx - zc_u), initial=0.0))
            last_r_prim = r_prim
            hz = qp.H @ z_u
            cty = C.T @ y_u
            r_dual = float(np.max(np.abs(hz + qp.g + cty), initial=0.0))
            scale_p = max(1.0, np.max(np.abs(cx), initial=0.0), np.max(np.abs(zc_u), initial=0.0))
            scale_d = max(1.0, np.max(np.abs(hz), initial=0.0),
                          np.max(np.abs(qp.g), initial=0.0), np.max(np.abs(cty), initial=0.0))
            check_index += 1
            if (cfg.polish and check_index >= next_polish_check
                    and r_prim <= max(cfg.tol, 1e-3 * scale_p)):
                # the iterate is near-feasible, so the active set is usually
                # identifiable well before the dual residual settles; exiting
                # through the polish keeps OPTIMAL an absolute claim. Failed
                # attempts back off geometrically so a stubborn active set
                # does not turn every residual check into a factorization.
                polished = _polish(qp, z_u, y_u, max(cfg.sigma, 1e-12), r_prim, cfg.tol)
                if polished is not None:
                    z_p, lam_p, mu_p = polished
                    res_p = kkt_residual(qp, z_p, lam_p)
                    if res_p <= cfg.tol:
                        done = (z_p, lam_p, mu_p, res_p)
                        iterations = it
                        break
                polish_fails += 1
                next_polish_check = check_index + 2 ** min(polish_fails, 6)
            if (r_prim <= cfg.tol + eps_rel * scale_p
                    and r_dual <= cfg.tol + eps_rel * scale_d):
                if not cfg.polish:
                    iterations = it
                    break
                eps_rel = max(eps_rel * 0.1, 1e-12)
            # primal infeasibility certificate: a dual direction v with
            # C'v = 0, positive weight only on finitely bounded rows, and
            # negative support function value proves no feasible point exists
            v = y_u - y_prev_check
            y_prev_check = y_u
            v_norm = float(np.max(np.abs(v), initial=0.0))
            if v_norm > 1e-12:
                eps_v = cfg.eps_inf * v_norm
                v_pos = np.maximum(v, 0.0)
                v_neg = np.minimum(v, 0.0)
                supported = (np.all(v_pos[~np.isfinite(hi)] <= eps_v)
                             and np.all(-v_neg[~np.isfinite(lo)] <= eps_v))
                if supported and float(np.max(np.abs(C.T @ v), initial=0.0)) <= eps_v:
                    support = (float(np.where(np.isfinite(hi), hi, 0.0) @ v_pos)
                               + float(np.where(np.isfinite(lo), lo, 0.0) @ v_neg))
                    if support <= -eps_v:
                        status = QpStatus.INFEASIBLE
                        iterations = it
                        break
            if cfg.adaptive_rho and it % (4 * cfg.check_every) == 0:
                ratio = np.sqrt((r_prim / scale_p) / max(r_dual / scale_d, 1e-16))
                if ratio > 5.0 or ratio < 0.2:
                    step = float(np.clip(ratio, 0.2, 5.0))
                    rho = float(np.clip(rho * step, 1e-6, 1e6))
                    rho_vec, inv_rho, chol = factor(rho)

    if done is not None:
        z_u, lam, mu, res = done
        return QpSolution(z_u, np.maximum(lam, 0.0), QpStatus.OPTIMAL, iterations, res, mu)

    z_u = d * x
    y_u = e * y / cost
    lam = np.maximum(y_u[:m], 0.0)
    mu = y_u[m:]

    if cfg.polish and status is not QpStatus.INFEASIBLE:
        r_prim = last_r_prim if np.isfinite(last_r_prim) else 0.0
        polished = _polish(qp, z_u, y_u, max(cfg.sigma, 1e-12), r_prim, cfg.tol)
        if polished is not None:
            z_p, lam_p, mu_p = polished
            lam_p = np.maximum(lam_p, 0.0)
            if _full_residual(qp, z_p, lam_p, mu_p) < _full_residual(qp, z_u, lam, mu):
                z_u, lam, mu = z_p, lam_p, mu_p

    res = kkt_residual(qp, z_u, lam)
    if status is not QpStatus.INFEASIBLE:
        status = QpStatus.OPTIMAL if res <= cfg.tol else QpStatus.MAX_ITER
    return QpSolution(z_u, lam, status, iterations, res, mu)
