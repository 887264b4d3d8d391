"""Small dense SQP for collocation NLPs with equality constraints and box bounds.

    min f(z)  s.t.  c(z) = 0,  lb <= z <= ub

Each iteration solves a convex QP (Hessian supplied by the problem, usually
Gauss-Newton) with a primal-dual interior-point method and globalizes with a
backtracking line search on the l1 merit function. Iterates never leave the
box.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, lu_factor, lu_solve

CONVERGED = "converged"
MAX_ITER = "max-iter"
INFEASIBLE = "infeasible"


class NlpProblem(Protocol):
    lb: np.ndarray
    ub: np.ndarray

    def objective(self, z: np.ndarray) -> float: ...

    def constraints(self, z: np.ndarray) -> np.ndarray: ...

    def linearize(self, z: np.ndarray):
        """Return ``(f, grad, hess, c, jac)`` at ``z``."""
        ...


@dataclass
class QpResult:
    x: np.ndarray
    y: np.ndarray
    z_lower: np.ndarray
    z_upper: np.ndarray
    ok: bool
    iterations: int


def solve_box_qp(H, g, A, b, lb, ub, tol: float = 1e-9, max_iter: int = 60,
                 loose_tol: float = 1e-7) -> QpResult:
    """Mehrotra predictor-corrector for ``min 1/2 x'Hx + g'x, Ax = b, lb <= x <= ub``.

    ``H`` must be positive definite on the free variables; infinite bounds are
    allowed. Returns ``ok=False`` when the iteration fails to converge, which
    for a consistent box almost always means the linearized constraints are
    incompatible with it. A run that stalls on round-off after reaching
    ``loose_tol`` is still reported as converged.
    """
    # unit-sized duals are only a good interior start when the objective is
    # O(1); scale it there and map the multipliers back
    g = np.asarray(g, dtype=float)
    obj_scale = 1.0 + np.max(np.abs(g), initial=0.0)
    res = _box_qp_ipm(np.asarray(H, dtype=float) / obj_scale, g / obj_scale, A, b, lb, ub,
                      tol, max_iter, loose_tol)
    res.y *= obj_scale
    res.z_lower *= obj_scale
    res.z_upper *= obj_scale
    return res


def _box_qp_ipm(H, g, A, b, lb, ub, tol, max_iter, loose_tol) -> QpResult:
    n = g.size
    m = b.size
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub):
        return QpResult(np.zeros(n), np.zeros(m), np.zeros(n), np.zeros(n), False, 0)

    fixed = (ub - lb) <= 1e-14
    free = ~fixed
    x_fixed = lb[fixed]
    Hf = H[np.ix_(free, free)]
    gf = g[free] + H[np.ix_(free, fixed)] @ x_fixed
    Af = A[:, free]
    bf = b - A[:, fixed] @ x_fixed
    lo, hi = lb[free], ub[free]
    has_lo = np.isfinite(lo)
    has_hi = np.isfinite(hi)
    nf = gf.size

    # interior starting point
    x = np.zeros(nf)
    width = np.where(has_lo & has_hi, hi - lo, np.inf)
    margin = np.minimum(1.0, 0.01 * width)
    x = np.where(has_lo, np.maximum(x, lo + margin), x)
    x = np.where(has_hi, np.minimum(x, hi - margin), x)
    both = has_lo & has_hi
    x[both] = np.clip(x[both], lo[both] + 0.5 * margin[both], hi[both] - 0.5 * margin[both])

    lo_s = np.where(has_lo, lo, 0.0)
    hi_s = np.where(has_hi, hi, 0.0)
    zl = np.where(has_lo, 1.0, 0.0)
    zu = np.where(has_hi, 1.0, 0.0)
    y = np.zeros(m)
    n_comp = int(has_lo.sum() + has_hi.sum())

    scale_d = 1.0 + np.max(np.abs(gf), initial=0.0)
    scale_p = 1.0 + np.max(np.abs(bf), initial=0.0)
    reg = 1e-12 * (1.0 + np.max(np.abs(np.diag(Hf)), initial=0.0))
    ok = False
    it = 0
    best = (np.inf, None)
    stall = 0

    for it in range(1, max_iter + 1):
        sl = np.where(has_lo, np.maximum(x - lo_s, 1e-300), 1.0)
        su = np.where(has_hi, np.maximum(hi_s - x, 1e-300), 1.0)
        r_d = Hf @ x + gf + Af.T @ y - zl + zu
        r_p = Af @ x - bf
        mu = (np.dot(sl[has_lo], zl[has_lo]) + np.dot(su[has_hi], zu[has_hi])) / max(n_comp, 1)
        comp = max(np.max(sl * zl, where=has_lo, initial=0.0), np.max(su * zu, where=has_hi, initial=0.0))
        err = max(np.max(np.abs(r_d), initial=0.0) / scale_d,
                  np.max(np.abs(r_p), initial=0.0) / scale_p, comp)
        if err <= tol:
            ok = True
            break
        if err < 0.5 * best[0]:
            stall = 0
        else:
            stall += 1
            if stall >= 5:
                break
        if err < best[0]:
            best = (err, (x.copy(), y.copy(), zl.copy(), zu.copy()))

        with np.errstate(over="ignore"):
            sig = np.where(has_lo, zl / sl, 0.0) + np.where(has_hi, zu / su, 0.0)
        K = Hf + np.diag(sig + reg)
        # augmented system [K A'; A 0]; forming A K^-1 A' would square the
        # conditioning, which collocation Jacobians cannot afford
        kkt = np.zeros((nf + m, nf + m))
        kkt[:nf, :nf] = K
        kkt[:nf, nf:] = Af.T
        kkt[nf:, :nf] = Af
        kkt[nf:, nf:] = -1e-14 * np.eye(m)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", LinAlgWarning)
                lu = lu_factor(kkt, check_finite=False)
        except (LinAlgError, ValueError):
            break

        def newton(rcl, rcu):
            rhs = np.concatenate([
                -r_d + np.where(has_lo, rcl / sl, 0.0) - np.where(has_hi, rcu / su, 0.0),
                -r_p,
            ])
            sol = lu_solve(lu, rhs, check_finite=False)
            for _ in range(2):
                res = rhs - kkt @ sol
                if np.max(np.abs(res), initial=0.0) <= 1e-15 * scale_d:
                    break
                sol = sol + lu_solve(lu, res, check_finite=False)
            dx, dy = sol[:nf], sol[nf:]
            dzl = np.where(has_lo, (rcl - zl * dx) / sl, 0.0)
            dzu = np.where(has_hi, (rcu + zu * dx) / su, 0.0)
            return dx, dy, dzl, dzu

        def max_step(dx, dzl, dzu):
            alpha = 1.0
            for s, ds, mask in ((sl, dx, has_lo), (su, -dx, has_hi), (zl, dzl, has_lo), (zu, dzu, has_hi)):
                neg = mask & (ds < 0)
                if np.any(neg):
                    alpha = min(alpha, np.min(-s[neg] / ds[neg]))
            return alpha

        # predictor
        dx, dy, dzl, dzu = newton(-sl * zl, -su * zu)
        a_aff = max_step(dx, dzl, dzu)
        sl_a = sl + a_aff * dx
        su_a = su - a_aff * dx
        mu_aff = (np.dot(sl_a[has_lo], (zl + a_aff * dzl)[has_lo])
                  + np.dot(su_a[has_hi], (zu + a_aff * dzu)[has_hi])) / max(n_comp, 1)
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        # corrector
        rcl = np.where(has_lo, -sl * zl + sigma * mu - dx * dzl, 0.0)
        rcu = np.where(has_hi, -su * zu + sigma * mu + dx * dzu, 0.0)
        dx, dy, dzl, dzu = newton(rcl, rcu)
        alpha = min(1.0, 0.995 * max_step(dx, dzl, dzu))
        x = x + alpha * dx
        y = y + alpha * dy
        zl = zl + alpha * dzl
        zu = zu + alpha * dzu
        if not np.all(np.isfinite(x)) or np.max(np.abs(x), initial=0.0) > 1e12:
            break

    polish_from = None
    if ok:
        polish_from = (x, zl, zu)
    elif best[1] is not None and best[0] <= 1e-3:
        bx, by, bzl, bzu = best[1]
        polish_from = (bx, bzl, bzu)
    if polish_from is not None:
        px, pzl, pzu = polish_from
        # strongly active bounds: multiplier dominates slack
        act_lo = np.zeros(n, dtype=bool)
        act_hi = np.zeros(n, dtype=bool)
        act_lo[free] = has_lo & (pzl > 1e3 * (px - lo_s))
        act_hi[free] = has_hi & (pzu > 1e3 * (hi_s - px))
        act_lo |= fixed
        act_hi |= fixed
        polished = _polish(H, g, A, b, lb, ub, act_lo, act_hi)
        if polished is not None:
            return QpResult(*polished, True, it)
    if not ok and best[0] <= loose_tol:
        x, y, zl, zu = best[1]
        ok = True
    if ok:
        # without a polished solution, still put strongly active bounds exactly on the bound
        x = np.where(has_lo & (zl > 1e3 * (x - lo_s)), lo_s, x)
        x = np.where(has_hi & (zu > 1e3 * (hi_s - x)), hi_s, x)
    x_full = np.empty(n)
    x_full[fixed] = x_fixed
    x_full[free] = x
    zl_full = np.zeros(n)
    zu_full = np.zeros(n)
    zl_full[free] = zl
    zu_full[free] = zu
    if np.any(fixed):
        # multipliers of fixed variables absorb their stationarity residual
        r_fixed = H[fixed] @ x_full + g[fixed] + A[:, fixed].T @ y
        zl_full[fixed] = np.maximum(r_fixed, 0.0)
        zu_full[fixed] = np.maximum(-r_fixed, 0.0)
    return QpResult(x_full, y, zl_full, zu_full, ok, it)


def _polish(H, g, A, b, lb, ub, act_lo, act_hi, tol: float = 1e-9):
    """Re-solve with the identified active set held on its bounds.

    Interior-point iterates carry round-off of the order of the condition
    number; solving the equality-constrained KKT system directly recovers an
    accurate primal/dual pair. Returns None when the guessed active set is
    not optimal (wrong multiplier sign or a free variable leaves its box).
    """
    n, m = g.size, b.size
    act = act_lo | act_hi
    F = ~act
    xa = np.where(act_lo, lb, ub)[act]
    nF = int(F.sum())
    K = np.zeros((nF + m, nF + m))
    K[:nF, :nF] = H[np.ix_(F, F)]
    K[:nF, nF:] = A[:, F].T
    K[nF:, :nF] = A[:, F]
    rhs = np.concatenate([-g[F] - H[np.ix_(F, act)] @ xa, b - A[:, act] @ xa])
    # regularized factorization, refined against the exact system
    delta = 1e-10 * (1.0 + np.max(np.abs(K), initial=0.0))
    Kreg = K.copy()
    Kreg[:nF, :nF] += delta * np.eye(nF)
    Kreg[nF:, nF:] -= delta * np.eye(m)
    try:
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            lu = lu_factor(Kreg, check_finite=False)
            sol = lu_solve(lu, rhs, check_finite=False)
            for _ in range(10):
                res = rhs - K @ sol
                if np.max(np.abs(res), initial=0.0) <= 1e-14 * (1.0 + np.max(np.abs(rhs), initial=0.0)):
                    break
                sol = sol + lu_solve(lu, res, check_finite=False)
    except (LinAlgError, ValueError):
        return None
    if not np.all(np.isfinite(sol)):
        return None
    x = np.empty(n)
    x[act] = xa
    x[F] = sol[:nF]
    y = sol[nF:]
    scale = 1.0 + np.max(np.abs(g), initial=0.0)
    r = H @ x + g + A.T @ y
    if np.max(np.abs(r[F]), initial=0.0) > tol * scale:
        return None
    if np.max(np.abs(A @ x - b), initial=0.0) > tol * (1.0 + np.max(np.abs(b), initial=0.0)):
        return None
    only_lo = act_lo & ~act_hi
    only_hi = act_hi & ~act_lo
    if np.any(r[only_lo] < -tol * scale) or np.any(r[only_hi] > tol * scale):
        return None
    width = tol * (1.0 + np.abs(x))
    if np.any(x[F] < lb[F] - width[F]) or np.any(x[F] > ub[F] + width[F]):
        return None
    x[F] = np.clip(x[F], lb[F], ub[F])
    zl = np.where(act_lo, np.maximum(r, 0.0), 0.0)
    zu = np.where(act_hi, np.maximum(-r, 0.0), 0.0)
    return x, y, zl, zu


@dataclass
class SqpOptions:
    tol: float = 1e-6
    max_iter: int = 50
    armijo: float = 1e-4
    min_step: float = 1e-8
    hessian_reg: float = 1e-8


@dataclass
class SqpResult:
    z: np.ndarray
    multipliers: np.ndarray
    status: str
    iterations: int
    kkt: float
    constraint_violation: float
    objective: float
    history: list = field(default_factory=list)


def kkt_residual(grad, jac, lam, z, lb, ub, atol: float = 1e-9) -> float:
    """Relative projected stationarity of the Lagrangian."""
    r = grad + jac.T @ lam
    at_lo = np.isfinite(lb) & (z - lb <= atol * (1.0 + np.abs(lb)))
    at_hi = np.isfinite(ub) & (ub - z <= atol * (1.0 + np.abs(ub)))
    viol = np.abs(r)
    viol = np.where(at_lo, np.maximum(-r, 0.0), viol)
    viol = np.where(at_hi, np.maximum(r, 0.0), viol)
    viol = np.where(at_lo & at_hi, 0.0, viol)
    return float(np.max(viol, initial=0.0) / max(1.0, np.max(np.abs(grad), initial=0.0)))


def solve_nlp(problem: NlpProblem, z0, lam0=None, options: SqpOptions | None = None) -> SqpResult:
    """Run SQP from ``z0``; ``lam0`` are equality multipliers from a warm start."""
    opts = options or SqpOptions()
    lb = np.asarray(problem.lb, dtype=float)
    ub = np.asarray(problem.ub, dtype=float)
    if np.any(lb > ub):
        z = np.asarray(z0, dtype=float).copy()
        return SqpResult(z, np.zeros(0), INFEASIBLE, 0, np.inf, np.inf, np.nan)

    z = np.clip(np.asarray(z0, dtype=float), lb, ub)
    lam = None if lam0 is None else np.asarray(lam0, dtype=float)
    penalty = 1.0
    status = MAX_ITER
    history = []
    kkt = np.inf
    cviol = np.inf
    f = np.nan
    it = 0
    for it in range(1, opts.max_iter + 1):
        f, g, H, c, A = problem.linearize(z)
        cviol = float(np.max(np.abs(c), initial=0.0))
        if lam is not None and lam.size == c.size:
            kkt = kkt_residual(g, A, lam, z, lb, ub)
            history.append((f, cviol, kkt))
            if cviol <= opts.tol and kkt <= opts.tol:
                status = CONVERGED
                break
        Hr = H + opts.hessian_reg * (1.0 + np.max(np.abs(np.diag(H)), initial=0.0)) * np.eye(z.size)
        qp = solve_box_qp(Hr, g, A, -c, lb - z, ub - z)
        if not qp.ok:
            status = INFEASIBLE
            break
        d = qp.x
        lam = qp.y
        penalty = max(penalty, 1.1 * np.max(np.abs(lam), initial=0.0))
        merit0 = f + penalty * np.sum(np.abs(c))
        slope = float(g @ d) - penalty * np.sum(np.abs(c))
        slope = min(slope, -1e-14 * (1.0 + abs(merit0)))
        alpha = 1.0
        while True:
            z_try = np.clip(z + alpha * d, lb, ub)
            merit = problem.objective(z_try) + penalty * np.sum(np.abs(problem.constraints(z_try)))
            if np.isfinite(merit) and merit <= merit0 + opts.armijo * alpha * slope:
                break
            alpha *= 0.5
            if alpha < opts.min_step:
                break
        if alpha < opts.min_step:
            # merit cannot be decreased along d; take a short step to keep moving
            alpha = opts.min_step
        z = np.clip(z + alpha * d, lb, ub)
    else:
        f, g, H, c, A = problem.linearize(z)
        cviol = float(np.max(np.abs(c), initial=0.0))
        if lam is not None:
            kkt = kkt_residual(g, A, lam, z, lb, ub)
    return SqpResult(z=z, multipliers=lam if lam is not None else np.zeros(0), status=status,
                     iterations=it, kkt=float(kkt), constraint_violation=cviol,
                     objective=float(f), history=history)
