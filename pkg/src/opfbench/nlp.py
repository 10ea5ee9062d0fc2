"""Smooth nonlinear program interface shared by the formulations and solver.

A problem is ``min f(x)`` subject to ``cl <= c(x) <= cu`` and box bounds
``lb <= x <= ub``. Rows with ``cl == cu`` are equalities; other rows are
one-sided or two-sided ranges. Evaluators must be smooth on the open box
interior and return sparse matrices with a fixed sparsity pattern that is
a superset of the true nonzeros at every point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

__all__ = ["NlpProblem", "check_derivatives"]


@dataclass
class NlpProblem:
    n: int
    lb: np.ndarray
    ub: np.ndarray
    cl: np.ndarray
    cu: np.ndarray
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    constraints: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], sp.csr_matrix]
    # hessian(x, obj_factor, lam) -> full symmetric n x n Hessian of
    # obj_factor * f + lam . c
    hessian: Callable[[np.ndarray, float, np.ndarray], sp.csr_matrix]
    x0: np.ndarray
    var_names: list[str] = field(default_factory=list)
    con_names: list[str] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.cl)

    @property
    def eq_mask(self) -> np.ndarray:
        return self.cl == self.cu

    def equality_values(self, x: np.ndarray) -> np.ndarray:
        """Residuals c_i(x) - cl_i of the equality rows."""
        mask = self.eq_mask
        return self.constraints(x)[mask] - self.cl[mask]

    def inequality_values(self, x: np.ndarray) -> np.ndarray:
        """Values of the non-equality rows (to be kept within [cl, cu])."""
        return self.constraints(x)[~self.eq_mask]

    def violation(self, x: np.ndarray) -> float:
        """Max violation over constraint rows and variable bounds."""
        c = self.constraints(x)
        vc = np.maximum(self.cl - c, c - self.cu)
        vb = np.maximum(self.lb - x, x - self.ub)
        parts = [0.0]
        if len(vc):
            parts.append(float(vc.max()))
        if len(vb):
            parts.append(float(vb.max()))
        return max(parts)


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    diff = np.abs(a - b) / denom
    return float(diff.max()) if diff.size else 0.0


def check_derivatives(
    prob: NlpProblem,
    x: np.ndarray,
    step: float = 1e-6,
    rng: np.random.Generator | None = None,
) -> float:
    """Worst relative error of the analytic derivatives vs central differences.

    Checks the objective gradient, the full constraint Jacobian, and the
    Hessian of the Lagrangian at a random multiplier vector. The point
    should be strictly interior to the bounds so that x +/- step stays in
    the evaluators' domain.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = prob.n
    x = np.asarray(x, dtype=float)

    grad = prob.gradient(x)
    fd_grad = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        fd_grad[i] = (prob.objective(x + e) - prob.objective(x - e)) / (2 * step)
    worst = _rel_err(grad, fd_grad)

    jac = prob.jacobian(x).toarray()
    fd_jac = np.empty((prob.m, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        fd_jac[:, i] = (prob.constraints(x + e) - prob.constraints(x - e)) / (2 * step)
    worst = max(worst, _rel_err(jac, fd_jac))

    lam = rng.uniform(-1.0, 1.0, prob.m)
    hess = prob.hessian(x, 1.0, lam).toarray()
    hess = 0.5 * (hess + hess.T)

    def lag_grad(pt):
        g = prob.gradient(pt)
        if prob.m:
            g = g + prob.jacobian(pt).T @ lam
        return g

    fd_hess = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        fd_hess[:, i] = (lag_grad(x + e) - lag_grad(x - e)) / (2 * step)
    fd_hess = 0.5 * (fd_hess + fd_hess.T)
    worst = max(worst, _rel_err(hess, fd_hess))
    return worst
