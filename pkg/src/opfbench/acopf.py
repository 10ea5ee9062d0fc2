"""Nonconvex AC optimal power flow in polar voltage coordinates.

Variables are bus voltage angles and magnitudes plus per-generator active
and reactive injections. Branch flows are inlined expressions, not
variables. All first and second derivatives are analytic, assembled from
closed-form per-branch templates and verified against finite differences
in the test suite.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from opfbench.network import NetworkCase
from opfbench.nlp import NlpProblem

__all__ = [
    "FlowLimitMode",
    "OperatingPoint",
    "build_acopf",
    "build_max_loadability",
    "branch_flow",
    "objective_value",
    "check_feasibility",
    "FeasibilityReport",
    "point_to_vector",
    "vector_to_point",
]


class FlowLimitMode(enum.Enum):
    APPARENT_POWER = "apparent"
    CURRENT_MAGNITUDE = "current"
    BOTH = "both"
    NONE = "none"

    @property
    def apparent(self) -> bool:
        return self in (FlowLimitMode.APPARENT_POWER, FlowLimitMode.BOTH)

    @property
    def current(self) -> bool:
        return self in (FlowLimitMode.CURRENT_MAGNITUDE, FlowLimitMode.BOTH)


@dataclass(frozen=True)
class OperatingPoint:
    vm: dict[int, float]  # bus id -> p.u.
    va: dict[int, float]  # bus id -> radians
    pg: dict[int, float]  # gen id -> p.u.
    qg: dict[int, float]  # gen id -> p.u.


class _Index:
    """Variable layout [va | vm | pg | qg] and id <-> position maps."""

    def __init__(self, net: NetworkCase):
        self.bus_ids = list(net.buses)
        self.gen_ids = list(net.gens)
        self.nb = len(self.bus_ids)
        self.ng = len(self.gen_ids)
        self.bus_pos = {b: i for i, b in enumerate(self.bus_ids)}
        self.gen_pos = {g: i for i, g in enumerate(self.gen_ids)}
        self.n = 2 * self.nb + 2 * self.ng

    def va(self, i):  # bus position -> variable index
        return i

    def vm(self, i):
        return self.nb + i

    def pg(self, k):
        return 2 * self.nb + k

    def qg(self, k):
        return 2 * self.nb + self.ng + k


class _BranchData:
    """Per-branch constants, vectorized."""

    def __init__(self, net: NetworkCase, idx: _Index):
        brs = net.branches
        self.nbr = len(brs)
        self.f = np.array([idx.bus_pos[b.from_bus] for b in brs], dtype=int)
        self.t = np.array([idx.bus_pos[b.to_bus] for b in brs], dtype=int)
        y = np.array([b.series_admittance for b in brs], dtype=complex)
        self.g = y.real
        self.b = y.imag
        self.bc = np.array([b.charge for b in brs])
        tr = np.array([b.transformer for b in brs], dtype=complex)
        self.tap = np.abs(tr)
        self.shift = np.angle(tr)
        self.s_max = np.array(
            [b.s_max if b.s_max is not None else np.inf for b in brs]
        )
        self.i_max = np.array(
            [b.i_max if b.i_max is not None else np.inf for b in brs]
        )
        self.ang_lo = np.array([b.angle_min for b in brs])
        self.ang_hi = np.array([b.angle_max for b in brs])

        # coefficients of the flow template
        #   F = K * vm_side^2 + (vm_i vm_j / tap) * (C cos(phi) + S sin(phi))
        # with phi = va_i - va_j - shift
        g, b, bc, tap = self.g, self.b, self.bc, self.tap
        self.K = np.stack(
            [g / tap**2, -(b + bc / 2) / tap**2, g, -(b + bc / 2)]
        )  # rows: Pf, Qf, Pt, Qt
        self.C = np.stack([-g, b, -g, b])
        self.S = np.stack([-b, -g, b, g])

        # current-magnitude template (appendix equations):
        #   |I_from|^2 with I_from = a V_i + d V_j,
        #   a = (Y + i bc/2) / tap^2, d = -Y / T*
        yc = y + 1j * self.bc / 2
        T = tr
        a_f = yc / self.tap**2
        d_f = -y / np.conj(T)
        a_t = yc
        d_t = -y / T
        #   |I|^2 = alpha vm_i^2 + beta vm_j^2
        #         + vm_i vm_j (Cc cos(va_i - va_j) + Sc sin(va_i - va_j))
        cross_f = a_f * np.conj(d_f)
        cross_t = d_t * np.conj(a_t)
        self.cur_alpha = np.stack([np.abs(a_f) ** 2, np.abs(d_t) ** 2])
        self.cur_beta = np.stack([np.abs(d_f) ** 2, np.abs(a_t) ** 2])
        self.cur_C = 2 * np.stack([cross_f.real, cross_t.real])
        self.cur_S = -2 * np.stack([cross_f.imag, cross_t.imag])

    def flows(self, va: np.ndarray, vm: np.ndarray) -> np.ndarray:
        """Branch power flows, shape (4, nbr): P_from, Q_from, P_to, Q_to."""
        phi = va[self.f] - va[self.t] - self.shift
        u = vm[self.f] * vm[self.t] / self.tap
        trig = self.C * np.cos(phi) + self.S * np.sin(phi)
        side = np.stack(
            [vm[self.f] ** 2, vm[self.f] ** 2, vm[self.t] ** 2, vm[self.t] ** 2]
        )
        return self.K * side + u * trig

    def flow_gradients(self, va, vm):
        """Gradients of the four flow quantities.

        Returns array of shape (4, 4, nbr): axis 0 is the quantity
        (Pf, Qf, Pt, Qt), axis 1 the derivative variable
        (va_f, va_t, vm_f, vm_t).
        """
        phi = va[self.f] - va[self.t] - self.shift
        c, s = np.cos(phi), np.sin(phi)
        u = vm[self.f] * vm[self.t] / self.tap
        E = self.C * c + self.S * s  # (4, nbr)
        D = -self.C * s + self.S * c
        d_va_f = u * D
        d_va_t = -u * D
        d_vm_f = (vm[self.t] / self.tap) * E
        d_vm_t = (vm[self.f] / self.tap) * E
        # the K vm_side^2 terms
        two_k = 2 * self.K
        d_vm_f = d_vm_f + np.stack(
            [two_k[0] * vm[self.f], two_k[1] * vm[self.f],
             np.zeros(self.nbr), np.zeros(self.nbr)]
        )
        d_vm_t = d_vm_t + np.stack(
            [np.zeros(self.nbr), np.zeros(self.nbr),
             two_k[2] * vm[self.t], two_k[3] * vm[self.t]]
        )
        return np.stack([d_va_f, d_va_t, d_vm_f, d_vm_t], axis=1)

    def flow_hessians(self, va, vm):
        """Second derivatives of the flow quantities.

        Returns array of shape (4, 4, 4, nbr): quantity, then the 4x4
        block over (va_f, va_t, vm_f, vm_t).
        """
        phi = va[self.f] - va[self.t] - self.shift
        c, s = np.cos(phi), np.sin(phi)
        u = vm[self.f] * vm[self.t] / self.tap
        E = self.C * c + self.S * s
        D = -self.C * s + self.S * c
        nbr = self.nbr
        H = np.zeros((4, 4, 4, nbr))
        uE = u * E
        # angle-angle
        H[:, 0, 0] = -uE
        H[:, 0, 1] = uE
        H[:, 1, 0] = uE
        H[:, 1, 1] = -uE
        # angle-magnitude
        dvf = (vm[self.t] / self.tap) * D
        dvt = (vm[self.f] / self.tap) * D
        H[:, 0, 2] = dvf
        H[:, 2, 0] = dvf
        H[:, 0, 3] = dvt
        H[:, 3, 0] = dvt
        H[:, 1, 2] = -dvf
        H[:, 2, 1] = -dvf
        H[:, 1, 3] = -dvt
        H[:, 3, 1] = -dvt
        # magnitude-magnitude
        Et = E / self.tap
        H[:, 2, 3] = Et
        H[:, 3, 2] = Et
        H[0, 2, 2] = 2 * self.K[0]
        H[1, 2, 2] = 2 * self.K[1]
        H[2, 3, 3] = 2 * self.K[2]
        H[3, 3, 3] = 2 * self.K[3]
        return H

    def current_sq(self, va, vm):
        """Squared current magnitudes, shape (2, nbr): from side, to side."""
        th = va[self.f] - va[self.t]
        cross = self.cur_C * np.cos(th) + self.cur_S * np.sin(th)
        return (
            self.cur_alpha * vm[self.f] ** 2
            + self.cur_beta * vm[self.t] ** 2
            + vm[self.f] * vm[self.t] * cross
        )

    def current_sq_gradients(self, va, vm):
        """Gradients of the squared currents, shape (2, 4, nbr)."""
        th = va[self.f] - va[self.t]
        c, s = np.cos(th), np.sin(th)
        E = self.cur_C * c + self.cur_S * s
        D = -self.cur_C * s + self.cur_S * c
        u = vm[self.f] * vm[self.t]
        d_va_f = u * D
        d_vm_f = 2 * self.cur_alpha * vm[self.f] + vm[self.t] * E
        d_vm_t = 2 * self.cur_beta * vm[self.t] + vm[self.f] * E
        return np.stack([d_va_f, -d_va_f, d_vm_f, d_vm_t], axis=1)

    def current_sq_hessians(self, va, vm):
        """Second derivatives of the squared currents, shape (2, 4, 4, nbr)."""
        th = va[self.f] - va[self.t]
        c, s = np.cos(th), np.sin(th)
        E = self.cur_C * c + self.cur_S * s
        D = -self.cur_C * s + self.cur_S * c
        u = vm[self.f] * vm[self.t]
        H = np.zeros((2, 4, 4, self.nbr))
        uE = u * E
        H[:, 0, 0] = -uE
        H[:, 0, 1] = uE
        H[:, 1, 0] = uE
        H[:, 1, 1] = -uE
        dvf = vm[self.t] * D
        dvt = vm[self.f] * D
        H[:, 0, 2] = dvf
        H[:, 2, 0] = dvf
        H[:, 0, 3] = dvt
        H[:, 3, 0] = dvt
        H[:, 1, 2] = -dvf
        H[:, 2, 1] = -dvf
        H[:, 1, 3] = -dvt
        H[:, 3, 1] = -dvt
        H[:, 2, 2] = 2 * self.cur_alpha
        H[:, 3, 3] = 2 * self.cur_beta
        H[:, 2, 3] = E
        H[:, 3, 2] = E
        return H


class AcopfStructure:
    """Shared assembly machinery for the AC-OPF program.

    ``demand_scale`` adds one extra trailing variable multiplying the
    active demands; it is used by the maximum-loadability program.
    """

    def __init__(self, net: NetworkCase, mode: FlowLimitMode,
                 demand_scale: bool = False):
        self.net = net
        self.mode = mode
        self.demand_scale = demand_scale
        self.idx = idx = _Index(net)
        self.br = br = _BranchData(net, idx)
        nb, ng, nbr = idx.nb, idx.ng, br.nbr

        self.gen_bus = np.array(
            [idx.bus_pos[net.gens[g].bus] for g in idx.gen_ids], dtype=int
        )
        self.pd = np.array([net.buses[b].demand.real for b in idx.bus_ids])
        self.qd = np.array([net.buses[b].demand.imag for b in idx.bus_ids])
        self.gs = np.array([net.buses[b].shunt.real for b in idx.bus_ids])
        self.bs = np.array([net.buses[b].shunt.imag for b in idx.bus_ids])
        self.c2 = np.array([net.gens[g].cost_c2 for g in idx.gen_ids])
        self.c1 = np.array([net.gens[g].cost_c1 for g in idx.gen_ids])
        self.c0 = np.array([net.gens[g].cost_c0 for g in idx.gen_ids])

        self.n = idx.n + (1 if demand_scale else 0)
        self.i_alpha = idx.n  # index of the demand-scale variable

        # bounds
        lb = np.full(self.n, -np.inf)
        ub = np.full(self.n, np.inf)
        for i, bus in enumerate(idx.bus_ids):
            lb[idx.vm(i)] = net.buses[bus].v_min
            ub[idx.vm(i)] = net.buses[bus].v_max
        ref = idx.bus_pos[net.ref_bus]
        lb[idx.va(ref)] = 0.0
        ub[idx.va(ref)] = 0.0
        for k, gid in enumerate(idx.gen_ids):
            gen = net.gens[gid]
            lb[idx.pg(k)] = gen.p_min
            ub[idx.pg(k)] = gen.p_max
            lb[idx.qg(k)] = gen.q_min
            ub[idx.qg(k)] = gen.q_max
        if demand_scale:
            lb[self.i_alpha] = 0.0
        self.lb, self.ub = lb, ub

        # constraint layout: P balance, Q balance, thermal, current, angle
        self.thermal_branches = (
            np.nonzero(np.isfinite(br.s_max))[0] if mode.apparent
            else np.array([], dtype=int)
        )
        self.current_branches = (
            np.nonzero(np.isfinite(br.i_max))[0] if mode.current
            else np.array([], dtype=int)
        )
        nth = len(self.thermal_branches)
        ncu = len(self.current_branches)
        self.row_p = np.arange(nb)
        self.row_q = nb + np.arange(nb)
        base = 2 * nb
        self.row_th_f = base + np.arange(nth)
        self.row_th_t = base + nth + np.arange(nth)
        base += 2 * nth
        self.row_cu_f = base + np.arange(ncu)
        self.row_cu_t = base + ncu + np.arange(ncu)
        base += 2 * ncu
        self.row_ang = base + np.arange(nbr)
        self.m = base + nbr

        cl = np.full(self.m, -np.inf)
        cu = np.full(self.m, np.inf)
        cl[self.row_p] = cu[self.row_p] = 0.0
        cl[self.row_q] = cu[self.row_q] = 0.0
        cu[self.row_th_f] = br.s_max[self.thermal_branches] ** 2
        cu[self.row_th_t] = br.s_max[self.thermal_branches] ** 2
        cu[self.row_cu_f] = br.i_max[self.current_branches] ** 2
        cu[self.row_cu_t] = br.i_max[self.current_branches] ** 2
        cl[self.row_ang] = br.ang_lo
        cu[self.row_ang] = br.ang_hi
        self.cl, self.cu = cl, cu

        self._build_patterns()

    # -- sparsity patterns (fixed across evaluations) ----------------------

    def _build_patterns(self):
        idx, br = self.idx, self.br
        nb, ng, nbr = idx.nb, idx.ng, br.nbr
        f, t = br.f, br.t
        va_f, va_t = idx.va(f), idx.va(t)
        vm_f, vm_t = idx.vm(f), idx.vm(t)
        cols4 = np.stack([va_f, va_t, vm_f, vm_t])  # (4, nbr)
        self._cols4 = cols4

        rows, cols = [], []

        def add(r, c):
            rows.append(np.broadcast_to(r, np.broadcast_shapes(np.shape(r), np.shape(c))).ravel())
            cols.append(np.broadcast_to(c, np.broadcast_shapes(np.shape(r), np.shape(c))).ravel())

        # generator injections in the balance rows
        add(self.row_p[self.gen_bus], idx.pg(np.arange(ng)))
        add(self.row_q[self.gen_bus], idx.qg(np.arange(ng)))
        # shunt terms
        add(self.row_p, idx.vm(np.arange(nb)))
        add(self.row_q, idx.vm(np.arange(nb)))
        # flow terms: Pf -> P row of from bus, etc. (4 columns each)
        add(self.row_p[f][None, :], cols4)
        add(self.row_q[f][None, :], cols4)
        add(self.row_p[t][None, :], cols4)
        add(self.row_q[t][None, :], cols4)
        # thermal rows
        tb = self.thermal_branches
        add(self.row_th_f[None, :], cols4[:, tb])
        add(self.row_th_t[None, :], cols4[:, tb])
        # current rows
        cb = self.current_branches
        add(self.row_cu_f[None, :], cols4[:, cb])
        add(self.row_cu_t[None, :], cols4[:, cb])
        # angle rows
        add(self.row_ang, va_f)
        add(self.row_ang, va_t)
        if self.demand_scale:
            add(self.row_p, np.full(nb, self.i_alpha))
        self._jac_rows = np.concatenate(rows)
        self._jac_cols = np.concatenate(cols)

        # Hessian pattern: per-branch 4x4 blocks + vm and pg diagonals
        hr = np.repeat(cols4, 4, axis=0)  # (16, nbr) row indices
        hc = np.tile(cols4, (4, 1))  # (16, nbr) col indices
        self._hess_rows = np.concatenate(
            [hr.ravel(), idx.vm(np.arange(nb)), idx.pg(np.arange(ng))]
        )
        self._hess_cols = np.concatenate(
            [hc.ravel(), idx.vm(np.arange(nb)), idx.pg(np.arange(ng))]
        )

    # -- evaluators ---------------------------------------------------------

    def split(self, x):
        idx = self.idx
        nb, ng = idx.nb, idx.ng
        va = x[:nb]
        vm = x[nb:2 * nb]
        pg = x[2 * nb:2 * nb + ng]
        qg = x[2 * nb + ng:2 * nb + 2 * ng]
        return va, vm, pg, qg

    def objective(self, x):
        _, _, pg, _ = self.split(x)
        if self.demand_scale:
            return -x[self.i_alpha]
        return float(np.sum(self.c2 * pg**2 + self.c1 * pg + self.c0))

    def gradient(self, x):
        g = np.zeros(self.n)
        if self.demand_scale:
            g[self.i_alpha] = -1.0
            return g
        _, _, pg, _ = self.split(x)
        ng = self.idx.ng
        g[2 * self.idx.nb:2 * self.idx.nb + ng] = 2 * self.c2 * pg + self.c1
        return g

    def constraints(self, x):
        idx, br = self.idx, self.br
        va, vm, pg, qg = self.split(x)
        flows = br.flows(va, vm)  # (4, nbr)
        c = np.zeros(self.m)
        pd = self.pd * (x[self.i_alpha] if self.demand_scale else 1.0)
        p_bal = -pd - self.gs * vm**2
        q_bal = -self.qd + self.bs * vm**2
        np.add.at(p_bal, self.gen_bus, pg)
        np.add.at(q_bal, self.gen_bus, qg)
        np.subtract.at(p_bal, br.f, flows[0])
        np.subtract.at(q_bal, br.f, flows[1])
        np.subtract.at(p_bal, br.t, flows[2])
        np.subtract.at(q_bal, br.t, flows[3])
        c[self.row_p] = p_bal
        c[self.row_q] = q_bal
        tb = self.thermal_branches
        if len(tb):
            c[self.row_th_f] = flows[0, tb] ** 2 + flows[1, tb] ** 2
            c[self.row_th_t] = flows[2, tb] ** 2 + flows[3, tb] ** 2
        cb = self.current_branches
        if len(cb):
            isq = br.current_sq(va, vm)
            c[self.row_cu_f] = isq[0, cb]
            c[self.row_cu_t] = isq[1, cb]
        c[self.row_ang] = va[br.f] - va[br.t]
        return c

    def jacobian(self, x):
        idx, br = self.idx, self.br
        nb, ng, nbr = idx.nb, idx.ng, br.nbr
        va, vm, pg, qg = self.split(x)
        flows = br.flows(va, vm)
        grads = br.flow_gradients(va, vm)  # (4, 4, nbr)

        vals = [
            np.ones(ng),  # pg in P rows
            np.ones(ng),  # qg in Q rows
            -2 * self.gs * vm,
            2 * self.bs * vm,
            -grads[0].ravel(),
            -grads[1].ravel(),
            -grads[2].ravel(),
            -grads[3].ravel(),
        ]
        tb = self.thermal_branches
        th_f = 2 * flows[0, tb] * grads[0][:, tb] + 2 * flows[1, tb] * grads[1][:, tb]
        th_t = 2 * flows[2, tb] * grads[2][:, tb] + 2 * flows[3, tb] * grads[3][:, tb]
        vals.append(th_f.ravel())
        vals.append(th_t.ravel())
        cb = self.current_branches
        if len(cb):
            cgr = br.current_sq_gradients(va, vm)
            vals.append(cgr[0][:, cb].ravel())
            vals.append(cgr[1][:, cb].ravel())
        else:
            vals.append(np.zeros(0))
            vals.append(np.zeros(0))
        vals.append(np.ones(nbr))
        vals.append(-np.ones(nbr))
        if self.demand_scale:
            vals.append(-self.pd)
        data = np.concatenate(vals)
        return sp.csr_matrix(
            (data, (self._jac_rows, self._jac_cols)), shape=(self.m, self.n)
        )

    def hessian(self, x, obj_factor, lam):
        idx, br = self.idx, self.br
        nb, ng, nbr = idx.nb, idx.ng, br.nbr
        va, vm, pg, qg = self.split(x)
        flows = br.flows(va, vm)
        grads = br.flow_gradients(va, vm)
        hess = br.flow_hessians(va, vm)  # (4, 4, 4, nbr)

        lam_p = lam[self.row_p]
        lam_q = lam[self.row_q]
        # weight per flow quantity from balance rows (flows enter with -1)
        w = np.stack([-lam_p[br.f], -lam_q[br.f], -lam_p[br.t], -lam_q[br.t]])

        lam_th_f = np.zeros(nbr)
        lam_th_t = np.zeros(nbr)
        tb = self.thermal_branches
        lam_th_f[tb] = lam[self.row_th_f]
        lam_th_t[tb] = lam[self.row_th_t]
        w = w + np.stack(
            [2 * lam_th_f * flows[0], 2 * lam_th_f * flows[1],
             2 * lam_th_t * flows[2], 2 * lam_th_t * flows[3]]
        )

        # (4, 4, nbr) weighted sum of the four flow Hessians
        block = np.einsum("q...b,qb->...b", hess, w)
        # rank-one terms of the squared-magnitude thermal constraints
        for q, lam_side in ((0, lam_th_f), (1, lam_th_f),
                            (2, lam_th_t), (3, lam_th_t)):
            gq = grads[q]  # (4, nbr)
            block += (2 * lam_side) * np.einsum("ib,jb->ijb", gq, gq)

        cb = self.current_branches
        if len(cb):
            lam_cu_f = np.zeros(nbr)
            lam_cu_t = np.zeros(nbr)
            lam_cu_f[cb] = lam[self.row_cu_f]
            lam_cu_t[cb] = lam[self.row_cu_t]
            chess = br.current_sq_hessians(va, vm)
            block += chess[0] * lam_cu_f + chess[1] * lam_cu_t

        vm_diag = -2 * self.gs * lam_p + 2 * self.bs * lam_q
        pg_diag = (
            np.zeros(ng) if self.demand_scale else obj_factor * 2 * self.c2
        )
        data = np.concatenate([block.reshape(16 * nbr), vm_diag, pg_diag])
        return sp.csr_matrix(
            (data, (self._hess_rows, self._hess_cols)), shape=(self.n, self.n)
        )

    def flat_start(self):
        x0 = np.zeros(self.n)
        lo = np.where(np.isfinite(self.lb), self.lb, 0.0)
        hi = np.where(np.isfinite(self.ub), self.ub, 0.0)
        both = np.isfinite(self.lb) & np.isfinite(self.ub)
        x0[both] = 0.5 * (lo[both] + hi[both])
        if self.demand_scale:
            x0[self.i_alpha] = 1.0
        return x0

    def var_names(self):
        idx = self.idx
        names = [f"va[{b}]" for b in idx.bus_ids]
        names += [f"vm[{b}]" for b in idx.bus_ids]
        names += [f"pg[{g}]" for g in idx.gen_ids]
        names += [f"qg[{g}]" for g in idx.gen_ids]
        if self.demand_scale:
            names.append("demand_scale")
        return names

    def con_names(self):
        net, br = self.net, self.br
        names = [""] * self.m
        for i, b in enumerate(self.idx.bus_ids):
            names[self.row_p[i]] = f"p_balance[{b}]"
            names[self.row_q[i]] = f"q_balance[{b}]"
        for j, bi in enumerate(self.thermal_branches):
            names[self.row_th_f[j]] = f"thermal_from[{net.branches[bi].id}]"
            names[self.row_th_t[j]] = f"thermal_to[{net.branches[bi].id}]"
        for j, bi in enumerate(self.current_branches):
            names[self.row_cu_f[j]] = f"current_from[{net.branches[bi].id}]"
            names[self.row_cu_t[j]] = f"current_to[{net.branches[bi].id}]"
        for j in range(br.nbr):
            names[self.row_ang[j]] = f"angle[{net.branches[j].id}]"
        return names

    def to_problem(self) -> NlpProblem:
        return NlpProblem(
            n=self.n,
            lb=self.lb,
            ub=self.ub,
            cl=self.cl,
            cu=self.cu,
            objective=self.objective,
            gradient=self.gradient,
            constraints=self.constraints,
            jacobian=self.jacobian,
            hessian=self.hessian,
            x0=self.flat_start(),
            var_names=self.var_names(),
            con_names=self.con_names(),
        )


def build_acopf(
    net: NetworkCase, mode: FlowLimitMode = FlowLimitMode.APPARENT_POWER
) -> NlpProblem:
    """Build the AC-OPF nonlinear program for a network."""
    net.validate()
    return AcopfStructure(net, mode).to_problem()


def build_max_loadability(
    net: NetworkCase, mode: FlowLimitMode = FlowLimitMode.APPARENT_POWER
) -> NlpProblem:
    """Maximize the uniform active-demand scale factor subject to all
    operating constraints (generation cost objective dropped)."""
    net.validate()
    return AcopfStructure(net, mode, demand_scale=True).to_problem()


# -- point-level evaluation helpers ----------------------------------------


def point_to_vector(net: NetworkCase, pt: OperatingPoint) -> np.ndarray:
    idx = _Index(net)
    x = np.zeros(idx.n)
    for i, b in enumerate(idx.bus_ids):
        x[idx.va(i)] = pt.va[b]
        x[idx.vm(i)] = pt.vm[b]
    for k, g in enumerate(idx.gen_ids):
        x[idx.pg(k)] = pt.pg[g]
        x[idx.qg(k)] = pt.qg[g]
    return x


def vector_to_point(net: NetworkCase, x: np.ndarray) -> OperatingPoint:
    idx = _Index(net)
    return OperatingPoint(
        va={b: float(x[idx.va(i)]) for i, b in enumerate(idx.bus_ids)},
        vm={b: float(x[idx.vm(i)]) for i, b in enumerate(idx.bus_ids)},
        pg={g: float(x[idx.pg(k)]) for k, g in enumerate(idx.gen_ids)},
        qg={g: float(x[idx.qg(k)]) for k, g in enumerate(idx.gen_ids)},
    )


def branch_flow(
    net: NetworkCase, pt: OperatingPoint, branch_id: int, direction: str
) -> complex:
    """Complex power flow on one branch, 'from' or 'to' side."""
    matches = [b for b in net.branches if b.id == branch_id]
    if not matches:
        raise KeyError(f"unknown branch id {branch_id}")
    b = matches[0]
    vi = pt.vm[b.from_bus] * np.exp(1j * pt.va[b.from_bus])
    vj = pt.vm[b.to_bus] * np.exp(1j * pt.va[b.to_bus])
    y_conj = np.conj(b.series_admittance)
    shunt = y_conj - 1j * b.charge / 2
    if direction == "from":
        return complex(
            shunt * abs(vi) ** 2 / abs(b.transformer) ** 2
            - y_conj * vi * np.conj(vj) / b.transformer
        )
    if direction == "to":
        return complex(
            shunt * abs(vj) ** 2
            - y_conj * np.conj(vi) * vj / np.conj(b.transformer)
        )
    raise ValueError(f"direction must be 'from' or 'to', got {direction!r}")


def objective_value(net: NetworkCase, pt: OperatingPoint) -> float:
    """Generation cost in $/h at an operating point."""
    return float(
        sum(
            g.cost_c2 * pt.pg[g.id] ** 2 + g.cost_c1 * pt.pg[g.id] + g.cost_c0
            for g in net.gens.values()
        )
    )


@dataclass(frozen=True)
class FeasibilityReport:
    balance: float
    bounds: float
    thermal: float
    current: float
    angle: float
    tol: float

    @property
    def max_violation(self) -> float:
        return max(self.balance, self.bounds, self.thermal, self.current, self.angle)

    @property
    def feasible(self) -> bool:
        return self.max_violation <= self.tol

    def __str__(self) -> str:
        verdict = "feasible" if self.feasible else "infeasible"
        return (
            f"{verdict} (tol {self.tol:g}): balance {self.balance:.3e}, "
            f"bounds {self.bounds:.3e}, thermal {self.thermal:.3e}, "
            f"current {self.current:.3e}, angle {self.angle:.3e}"
        )


def check_feasibility(
    net: NetworkCase,
    pt: OperatingPoint,
    tol: float = 1e-6,
    mode: FlowLimitMode = FlowLimitMode.APPARENT_POWER,
) -> FeasibilityReport:
    """Maximum violation per constraint family at an operating point."""
    struct = AcopfStructure(net, mode)
    x = point_to_vector(net, pt)
    c = struct.constraints(x)
    viol = np.maximum(np.maximum(struct.cl - c, c - struct.cu), 0.0)

    def fam(rows):
        return float(viol[rows].max()) if len(rows) else 0.0

    balance = max(fam(struct.row_p), fam(struct.row_q))
    thermal = max(fam(struct.row_th_f), fam(struct.row_th_t))
    current = max(fam(struct.row_cu_f), fam(struct.row_cu_t))
    angle = fam(struct.row_ang)
    vb = np.maximum(np.maximum(struct.lb - x, x - struct.ub), 0.0)
    bounds = float(vb.max()) if len(vb) else 0.0
    return FeasibilityReport(
        balance=balance, bounds=bounds, thermal=thermal,
        current=current, angle=angle, tol=tol,
    )
