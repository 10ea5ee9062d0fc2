"""Sparse primal-dual interior-point solver for smooth nonlinear programs.

Implements a filter line-search barrier method: inequality rows get slack
variables, bounds are handled with logarithmic barriers, the barrier KKT
system is solved with a sparse LDL^T factorization, and the inertia of the
factor is corrected by adding a primal regularization until the search
direction is a descent direction. Step acceptance uses a filter on the
pair (constraint violation, barrier objective). When the line search
stalls, an elastic L1 feasibility restoration is solved with the same
algorithm; if even that cannot reach feasibility the problem is reported
as locally infeasible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from opfbench.nlp import NlpProblem

__all__ = [
    "SolverOptions",
    "SolveReport",
    "SolverStatus",
    "solve",
    "feasibility_phase",
    "make_elastic",
]

_INERTIA_EPS = 0.0


class SolverStatus:
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible_certified"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 500
    mu_init: float = 0.1
    tau: float = 0.995  # fraction-to-boundary factor
    bound_push: float = 0.01  # relative interior push of the start point
    dual_cap: float = 1e10  # safeguard band for the bound multipliers
    max_restorations: int = 5
    allow_restoration: bool = True
    scaling: bool = True  # gradient-based objective and constraint scaling
    scaling_max_grad: float = 100.0
    verbose: bool = False


@dataclass
class SolveReport:
    status: str
    x: np.ndarray
    objective: float
    violation: float
    lam: np.ndarray
    iterations: int
    wall_time: float
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status == SolverStatus.OPTIMAL


class _Transformed:
    """Problem in slack form: variables z = (x_free, s), C(z) = 0, L<=z<=U."""

    def __init__(self, prob: NlpProblem):
        self.prob = prob
        lb, ub = prob.lb, prob.ub
        self.fixed = lb == ub
        self.free = ~self.fixed
        self.x_fixed = np.where(self.fixed, lb, 0.0)
        self.nx = int(self.free.sum())
        eq = prob.eq_mask
        self.ineq_rows = np.nonzero(~eq)[0]
        self.ns = len(self.ineq_rows)
        self.nz = self.nx + self.ns
        self.m = prob.m
        self.eq_target = np.where(eq, prob.cl, 0.0)

        self.L = np.concatenate([lb[self.free], prob.cl[self.ineq_rows]])
        self.U = np.concatenate([ub[self.free], prob.cu[self.ineq_rows]])
        # Jacobian of C with respect to the slacks (constant)
        self.S = sp.csr_matrix(
            (-np.ones(self.ns), (self.ineq_rows, np.arange(self.ns))),
            shape=(self.m, self.ns),
        )

    def full_x(self, zx: np.ndarray) -> np.ndarray:
        x = self.x_fixed.copy()
        x[self.free] = zx
        return x

    def objective(self, z):
        return self.prob.objective(self.full_x(z[: self.nx]))

    def gradient(self, z):
        g = self.prob.gradient(self.full_x(z[: self.nx]))
        return np.concatenate([g[self.free], np.zeros(self.ns)])

    def residual(self, z):
        c = self.prob.constraints(self.full_x(z[: self.nx]))
        r = c - self.eq_target
        r[self.ineq_rows] -= z[self.nx:]
        return r

    def jacobian(self, z):
        J = self.prob.jacobian(self.full_x(z[: self.nx]))[:, self.free]
        return sp.hstack([J, self.S], format="csr")

    def hessian(self, z, obj_factor, lam):
        H = self.prob.hessian(self.full_x(z[: self.nx]), obj_factor, lam)
        H = H.tocsr()[self.free][:, self.free]
        return sp.block_diag(
            [H, sp.csr_matrix((self.ns, self.ns))], format="csr"
        )

    def start_point(self, x0, push):
        z = np.empty(self.nz)
        z[: self.nx] = x0[self.free]
        c = self.prob.constraints(x0)
        z[self.nx:] = c[self.ineq_rows]
        return self.push_interior(z, push)

    def push_interior(self, z, kappa):
        L, U = self.L, self.U
        z = z.copy()
        lo_fin = np.isfinite(L)
        hi_fin = np.isfinite(U)
        both = lo_fin & hi_fin
        Lf = np.where(lo_fin, L, 0.0)
        Uf = np.where(hi_fin, U, 0.0)
        width = np.where(both, Uf - Lf, np.inf)
        pl = np.minimum(kappa * np.maximum(1.0, np.abs(Lf)), kappa * width)
        pu = np.minimum(kappa * np.maximum(1.0, np.abs(Uf)), kappa * width)
        z[lo_fin] = np.maximum(z[lo_fin], (Lf + pl)[lo_fin])
        z[hi_fin] = np.minimum(z[hi_fin], (Uf - pu)[hi_fin])
        return z


class _KktSolver:
    """Factor the barrier KKT matrix with inertia correction."""

    def __init__(self, nz: int, m: int):
        self.nz = nz
        self.m = m
        self.delta_last = 0.0
        self.delta_c = 1e-8

    def factor(self, W, sigma, J):
        import qdldl

        nz, m = self.nz, self.m
        JT = J.T.tocsr()
        eye_c = sp.identity(m, format="csr") * (-self.delta_c)

        def assemble(dw):
            top = W + sp.diags(sigma + dw)
            K = sp.bmat([[top, JT], [J, eye_c]], format="csc")
            return K

        def try_factor(dw):
            try:
                solver = qdldl.Solver(assemble(dw))
            except Exception:
                return None
            _, D, _ = solver.factors()
            n_pos = int(np.sum(D > _INERTIA_EPS))
            n_neg = int(np.sum(D < -_INERTIA_EPS))
            if n_pos == nz and n_neg == m:
                return solver
            return None

        solver = try_factor(0.0)
        if solver is not None:
            return solver, 0.0
        dw = 1e-4 if self.delta_last == 0.0 else max(1e-20, self.delta_last / 3)
        while dw <= 1e40:
            solver = try_factor(dw)
            if solver is not None:
                self.delta_last = dw
                return solver, dw
            dw *= 8.0
        raise FloatingPointError("inertia correction exceeded its cap")


def _scaled_errors(g, J, lam, zl, zu, r, z, L, U, mu):
    """IPOPT-style scaled optimality error for barrier parameter mu."""
    s_max = 100.0
    lo = np.isfinite(L)
    hi = np.isfinite(U)
    n_mult = lam.size + int(lo.sum()) + int(hi.sum())
    mult_sum = np.abs(lam).sum() + np.abs(zl[lo]).sum() + np.abs(zu[hi]).sum()
    s_d = max(s_max, mult_sum / max(1, n_mult)) / s_max
    n_b = int(lo.sum()) + int(hi.sum())
    s_c = max(s_max, (np.abs(zl[lo]).sum() + np.abs(zu[hi]).sum()) / max(1, n_b)) / s_max

    r_d = g + J.T @ lam - zl + zu
    e_d = np.abs(r_d).max() / s_d if r_d.size else 0.0
    e_p = np.abs(r).max() if r.size else 0.0
    comp = 0.0
    if lo.any():
        comp = max(comp, np.abs((z[lo] - L[lo]) * zl[lo] - mu).max())
    if hi.any():
        comp = max(comp, np.abs((U[hi] - z[hi]) * zu[hi] - mu).max())
    return max(e_d, e_p, comp / s_c)


def _fraction_to_boundary(z, dz, L, U, tau):
    alpha = 1.0
    lo = np.isfinite(L) & (dz < 0)
    if lo.any():
        alpha = min(alpha, float((-tau * (z[lo] - L[lo]) / dz[lo]).min()))
    hi = np.isfinite(U) & (dz > 0)
    if hi.any():
        alpha = min(alpha, float((tau * (U[hi] - z[hi]) / dz[hi]).min()))
    return alpha


def _dual_step_length(v, dv, tau):
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, float((-tau * v[neg] / dv[neg]).min()))


def _scale_problem(prob: NlpProblem, x0: np.ndarray, g_max: float):
    """Scale the objective and constraint rows so that no gradient entry
    exceeds g_max at the start point (factors never exceed one)."""
    g0 = prob.gradient(x0)
    sf = min(1.0, g_max / max(1.0, float(np.abs(g0).max()))) if g0.size else 1.0
    J0 = prob.jacobian(x0).tocsr()
    row_max = np.zeros(prob.m)
    for i in range(prob.m):
        seg = J0.data[J0.indptr[i]:J0.indptr[i + 1]]
        row_max[i] = np.abs(seg).max() if seg.size else 1.0
    sc = np.minimum(1.0, g_max / np.maximum(1.0, row_max))
    Dc = sp.diags(sc)

    scaled = NlpProblem(
        n=prob.n,
        lb=prob.lb,
        ub=prob.ub,
        cl=np.where(np.isfinite(prob.cl), sc * prob.cl, prob.cl),
        cu=np.where(np.isfinite(prob.cu), sc * prob.cu, prob.cu),
        objective=lambda x: sf * prob.objective(x),
        gradient=lambda x: sf * prob.gradient(x),
        constraints=lambda x: sc * prob.constraints(x),
        jacobian=lambda x: Dc @ prob.jacobian(x),
        hessian=lambda x, of, lam: prob.hessian(x, sf * of, sc * lam),
        x0=prob.x0,
        var_names=prob.var_names,
        con_names=prob.con_names,
    )
    return scaled, sf, sc


def solve(
    prob: NlpProblem,
    options: SolverOptions | None = None,
    x0: np.ndarray | None = None,
) -> SolveReport:
    """Solve a nonlinear program from an interior starting point."""
    opts = options or SolverOptions()
    t_start = time.perf_counter()
    if x0 is None:
        x0 = prob.x0
    x0 = np.clip(np.asarray(x0, dtype=float), prob.lb, prob.ub)

    orig = prob
    sf, sc = 1.0, np.ones(prob.m)
    if opts.scaling:
        prob, sf, sc = _scale_problem(prob, x0, opts.scaling_max_grad)
    tr = _Transformed(prob)

    z = tr.start_point(x0, opts.bound_push)
    L, U = tr.L, tr.U
    lo = np.isfinite(L)
    hi = np.isfinite(U)
    mu = opts.mu_init
    lam = np.zeros(tr.m)
    zl = np.where(lo, mu / np.maximum(z - L, 1e-12), 0.0)
    zu = np.where(hi, mu / np.maximum(U - z, 1e-12), 0.0)

    kkt = _KktSolver(tr.nz, tr.m)
    filt: list[tuple[float, float]] = []
    restorations = 0
    tau = opts.tau
    tol = opts.tol

    # filter line-search constants
    g_theta, g_phi = 1e-5, 1e-5
    s_theta, s_phi = 1.1, 2.3
    eta = 1e-4
    gamma_alpha = 0.05

    def barrier(zv):
        val = tr.objective(zv)
        d_lo = zv[lo] - L[lo]
        d_hi = U[hi] - zv[hi]
        if (d_lo <= 0).any() or (d_hi <= 0).any():
            return np.inf
        return val - mu * np.log(d_lo).sum() - mu * np.log(d_hi).sum()

    def theta(zv):
        r = tr.residual(zv)
        return float(np.abs(r).sum()) if r.size else 0.0

    theta0 = theta(z)
    theta_min = 1e-4 * max(1.0, theta0)
    theta_max = 1e4 * max(1.0, theta0)

    status = SolverStatus.ITERATION_LIMIT
    message = "iteration limit reached"
    it = 0
    for it in range(1, opts.max_iter + 1):
        g = tr.gradient(z)
        J = tr.jacobian(z)
        r = tr.residual(z)

        err0 = _scaled_errors(g, J, lam, zl, zu, r, z, L, U, 0.0)
        if err0 <= tol:
            status = SolverStatus.OPTIMAL
            message = "converged to the requested tolerance"
            break

        while mu > tol / 10 and _scaled_errors(
            g, J, lam, zl, zu, r, z, L, U, mu
        ) <= 10 * mu:
            mu = max(tol / 10, min(0.2 * mu, mu**1.5))
            filt.clear()

        W = tr.hessian(z, 1.0, lam)
        dl = np.where(lo, z - L, 1.0)
        du = np.where(hi, U - z, 1.0)
        sigma = np.where(lo, zl / dl, 0.0) + np.where(hi, zu / du, 0.0)

        try:
            solver, _ = kkt.factor(W, sigma, J)
        except FloatingPointError as exc:
            status = SolverStatus.NUMERICAL_FAILURE
            message = str(exc)
            break

        rhs_d = -(g + J.T @ lam) + np.where(lo, mu / dl, 0.0) - np.where(
            hi, mu / du, 0.0
        )
        rhs = np.concatenate([rhs_d, -r])
        step = solver.solve(rhs)
        dz = step[: tr.nz]
        dlam = step[tr.nz:]
        dzl = np.where(lo, (mu - zl * dz) / dl - zl, 0.0)
        dzu = np.where(hi, (mu + zu * dz) / du - zu, 0.0)

        alpha_max = _fraction_to_boundary(z, dz, L, U, tau)
        alpha_z = min(
            _dual_step_length(zl[lo], dzl[lo], tau),
            _dual_step_length(zu[hi], dzu[hi], tau),
        )

        phi = barrier(z)
        th = theta(z)
        grad_phi = g - np.where(lo, mu / dl, 0.0) + np.where(hi, mu / du, 0.0)
        dphi = float(grad_phi @ dz)

        # smallest trial step before giving up on this direction
        if dphi < 0:
            if th <= theta_min:
                alpha_min = gamma_alpha * min(
                    g_theta,
                    g_phi * th / (-dphi),
                    (th**s_theta) / ((-dphi) ** s_phi),
                )
            else:
                alpha_min = gamma_alpha * min(g_theta, g_phi * th / (-dphi))
        else:
            alpha_min = gamma_alpha * g_theta

        alpha = alpha_max
        accepted = False
        f_type = False
        while alpha >= alpha_min and alpha > 1e-16:
            z_t = z + alpha * dz
            th_t = theta(z_t)
            phi_t = barrier(z_t)
            in_filter = any(
                th_t >= (1 - g_theta) * tf and phi_t >= pf - g_phi * tf
                for tf, pf in filt
            )
            if not (np.isfinite(phi_t)) or in_filter or th_t > theta_max:
                alpha *= 0.5
                continue
            switching = (
                dphi < 0
                and alpha * (-dphi) ** s_phi > (th**s_theta)
                and th <= theta_min
            )
            if switching:
                if phi_t <= phi + eta * alpha * dphi:
                    accepted, f_type = True, True
                    break
            else:
                if th_t <= (1 - g_theta) * th or phi_t <= phi - g_phi * th:
                    accepted = True
                    break
            alpha *= 0.5

        if not accepted:
            if not opts.allow_restoration or restorations >= opts.max_restorations:
                status = SolverStatus.NUMERICAL_FAILURE
                message = "line search failed and restoration is unavailable"
                break
            restorations += 1
            x_cur = tr.full_x(z[: tr.nx])
            rep = feasibility_phase(orig, opts, x_cur)
            if rep.status == SolverStatus.INFEASIBLE:
                status = SolverStatus.INFEASIBLE
                message = "feasibility restoration certified local infeasibility"
                lam = rep.lam[: tr.m] if rep.lam.size >= tr.m else lam
                z[: tr.nx] = rep.x[tr.free]
                break
            if rep.status == SolverStatus.NUMERICAL_FAILURE:
                status = SolverStatus.NUMERICAL_FAILURE
                message = "feasibility restoration failed"
                break
            z = tr.start_point(np.clip(rep.x, prob.lb, prob.ub), opts.bound_push)
            lam = np.zeros(tr.m)
            zl = np.where(lo, mu / np.maximum(z - L, 1e-12), 0.0)
            zu = np.where(hi, mu / np.maximum(U - z, 1e-12), 0.0)
            filt.clear()
            kkt.delta_last = 0.0
            continue

        if not f_type:
            filt.append(((1 - g_theta) * th, phi - g_phi * th))

        z = z + alpha * dz
        lam = lam + alpha * dlam
        zl = zl + alpha_z * dzl
        zu = zu + alpha_z * dzu
        # keep the bound multipliers within a band of the primal estimate
        cap = opts.dual_cap
        dl = np.where(lo, np.maximum(z - L, 1e-300), 1.0)
        du = np.where(hi, np.maximum(U - z, 1e-300), 1.0)
        zl = np.where(lo, np.clip(zl, mu / (cap * dl), cap * mu / dl), 0.0)
        zu = np.where(hi, np.clip(zu, mu / (cap * du), cap * mu / du), 0.0)

        if opts.verbose:
            print(
                f"iter {it:4d}  mu {mu:8.1e}  err {err0:9.2e}  "
                f"theta {th:9.2e}  alpha {alpha:8.1e}"
            )

    x = tr.full_x(z[: tr.nx])
    with np.errstate(invalid="ignore"):
        lam_orig = sc * lam / sf
    return SolveReport(
        status=status,
        x=x,
        objective=orig.objective(x),
        violation=orig.violation(x),
        lam=lam_orig,
        iterations=it,
        wall_time=time.perf_counter() - t_start,
        message=message,
    )


def make_elastic(prob: NlpProblem) -> NlpProblem:
    """L1 elastic relaxation: rows gain slacks p, q >= 0 with cost p + q.

    Any point with x inside its bounds can be made feasible, so minimizing
    the elastic objective measures how far the original constraints are
    from attainable.
    """
    n, m = prob.n, prob.m
    lb = np.concatenate([prob.lb, np.zeros(2 * m)])
    ub = np.concatenate([prob.ub, np.full(2 * m, np.inf)])
    eye = sp.identity(m, format="csr")

    def objective(v):
        return float(v[n:].sum())

    def gradient(v):
        g = np.zeros(n + 2 * m)
        g[n:] = 1.0
        return g

    def constraints(v):
        return prob.constraints(v[:n]) + v[n:n + m] - v[n + m:]

    def jacobian(v):
        return sp.hstack([prob.jacobian(v[:n]), eye, -eye], format="csr")

    def hessian(v, obj_factor, lam):
        H = prob.hessian(v[:n], 0.0, lam).tocoo()
        return sp.csr_matrix(
            (H.data, (H.row, H.col)), shape=(n + 2 * m, n + 2 * m)
        )

    x0 = np.clip(prob.x0, prob.lb, prob.ub)
    r = prob.constraints(x0)
    under = np.maximum(prob.cl, np.where(np.isfinite(prob.cl), prob.cl, r)) - r
    p0 = np.maximum(under, 0.0)
    over = r - np.minimum(prob.cu, np.where(np.isfinite(prob.cu), prob.cu, r))
    q0 = np.maximum(over, 0.0)
    return NlpProblem(
        n=n + 2 * m,
        lb=lb,
        ub=ub,
        cl=prob.cl.copy(),
        cu=prob.cu.copy(),
        objective=objective,
        gradient=gradient,
        constraints=constraints,
        jacobian=jacobian,
        hessian=hessian,
        x0=np.concatenate([x0, p0, q0]),
        var_names=list(prob.var_names)
        + [f"elastic_p[{i}]" for i in range(m)]
        + [f"elastic_q[{i}]" for i in range(m)],
        con_names=list(prob.con_names),
    )


def feasibility_phase(
    prob: NlpProblem,
    options: SolverOptions | None = None,
    x0: np.ndarray | None = None,
) -> SolveReport:
    """Find a feasible point for the constraints, or certify there is none.

    Solves the elastic relaxation. If the residual at its optimum exceeds
    sqrt(tol) the constraints are reported locally infeasible from this
    start; the returned point is then the closest the phase could get.
    """
    opts = options or SolverOptions()
    elastic = make_elastic(prob)
    inner = replace(opts, allow_restoration=False, tol=max(opts.tol, 1e-9))
    ex0 = None
    if x0 is not None:
        ex0 = elastic.x0.copy()
        ex0[: prob.n] = np.clip(x0, prob.lb, prob.ub)
        r = prob.constraints(ex0[: prob.n])
        ex0[prob.n:prob.n + prob.m] = np.maximum(
            np.where(np.isfinite(prob.cl), prob.cl - r, 0.0), 0.0
        )
        ex0[prob.n + prob.m:] = np.maximum(
            np.where(np.isfinite(prob.cu), r - prob.cu, 0.0), 0.0
        )
    rep = solve(elastic, inner, ex0)
    x = rep.x[: prob.n]
    viol = prob.violation(x)
    if rep.status in (SolverStatus.OPTIMAL, SolverStatus.ITERATION_LIMIT):
        if viol <= math.sqrt(opts.tol):
            status = SolverStatus.OPTIMAL
            message = "feasible point found"
        elif rep.status == SolverStatus.OPTIMAL:
            status = SolverStatus.INFEASIBLE
            message = "constraints locally infeasible"
        else:
            status = SolverStatus.ITERATION_LIMIT
            message = "feasibility phase hit its iteration limit"
    else:
        status = rep.status
        message = rep.message
    return SolveReport(
        status=status,
        x=x,
        objective=prob.objective(x),
        violation=viol,
        lam=rep.lam,
        iterations=rep.iterations,
        wall_time=rep.wall_time,
        message=message,
    )
