"""Second-order cone relaxation of the AC-OPF in W-space.

Replaces the voltage phasors with the lifted variables w_i = |V_i|^2 and,
per connected bus pair, the real and imaginary parts of W_ij = V_i V_j*.
Power balance, angle difference limits, and current limits become linear;
thermal limits are convex quadratics; the only nonlinearity left is the
rotated cone wr^2 + wi^2 <= w_i w_j, written as a smooth inequality.
Parallel branches between the same pair of buses share the W variables.
"""

from __future__ import annotations

import collections
import math

import numpy as np
import scipy.sparse as sp

from opfbench.acopf import FlowLimitMode, OperatingPoint
from opfbench.network import NetworkCase
from opfbench.nlp import NlpProblem

__all__ = ["build_soc", "recover_point_estimate"]


class SocStructure:
    def __init__(self, net: NetworkCase, mode: FlowLimitMode):
        self.net = net
        self.mode = mode
        self.bus_ids = list(net.buses)
        self.gen_ids = list(net.gens)
        bus_pos = {b: i for i, b in enumerate(self.bus_ids)}
        nb = len(self.bus_ids)
        ng = len(self.gen_ids)
        brs = net.branches
        nbr = len(brs)

        # unordered bus pairs, canonical orientation low id -> high id
        pair_index: dict[tuple[int, int], int] = {}
        self.br_pair = np.empty(nbr, dtype=int)
        self.br_sign = np.empty(nbr)  # +1 if branch matches the orientation
        for k, br in enumerate(brs):
            key = (min(br.from_bus, br.to_bus), max(br.from_bus, br.to_bus))
            if key not in pair_index:
                pair_index[key] = len(pair_index)
            self.br_pair[k] = pair_index[key]
            self.br_sign[k] = 1.0 if br.from_bus < br.to_bus else -1.0
        self.pairs = list(pair_index)
        npair = len(self.pairs)
        self.pair_a = np.array([bus_pos[a] for a, _ in self.pairs], dtype=int)
        self.pair_b = np.array([bus_pos[b] for _, b in self.pairs], dtype=int)

        # variable layout [w | wr | wi | pg | qg]
        self.nb, self.ng, self.npair, self.nbr = nb, ng, npair, nbr
        self.i_w = np.arange(nb)
        self.i_wr = nb + np.arange(npair)
        self.i_wi = nb + npair + np.arange(npair)
        self.i_pg = nb + 2 * npair + np.arange(ng)
        self.i_qg = nb + 2 * npair + ng + np.arange(ng)
        self.n = nb + 2 * npair + 2 * ng

        lb = np.full(self.n, -np.inf)
        ub = np.full(self.n, np.inf)
        v_min = np.array([net.buses[b].v_min for b in self.bus_ids])
        v_max = np.array([net.buses[b].v_max for b in self.bus_ids])
        lb[self.i_w] = v_min**2
        ub[self.i_w] = v_max**2
        for j, (a, b) in enumerate(self.pairs):
            hi = v_max[bus_pos[a]] * v_max[bus_pos[b]]
            lb[self.i_wr[j]] = 0.0
            ub[self.i_wr[j]] = hi
            lb[self.i_wi[j]] = -hi
            ub[self.i_wi[j]] = hi
        for k, gid in enumerate(self.gen_ids):
            g = net.gens[gid]
            lb[self.i_pg[k]] = g.p_min
            ub[self.i_pg[k]] = g.p_max
            lb[self.i_qg[k]] = g.q_min
            ub[self.i_qg[k]] = g.q_max
        self.lb, self.ub = lb, ub

        self.c2 = np.array([net.gens[g].cost_c2 for g in self.gen_ids])
        self.c1 = np.array([net.gens[g].cost_c1 for g in self.gen_ids])
        self.c0 = np.array([net.gens[g].cost_c0 for g in self.gen_ids])

        # linear flow maps: rows are (P_from, Q_from, P_to, Q_to) per branch
        f = np.array([bus_pos[br.from_bus] for br in brs], dtype=int)
        t = np.array([bus_pos[br.to_bus] for br in brs], dtype=int)
        self.f, self.t = f, t
        y = np.array([br.series_admittance for br in brs], dtype=complex)
        bc = np.array([br.charge for br in brs])
        T = np.array([br.transformer for br in brs], dtype=complex)
        tap = np.abs(T)
        A = (np.conj(y) - 1j * bc / 2) / tap**2
        B = np.conj(y) - 1j * bc / 2
        cf = np.conj(y) / T
        ct = np.conj(y) / np.conj(T)
        sg = self.br_sign
        pw, pr, pi = self.i_w, self.i_wr[self.br_pair], self.i_wi[self.br_pair]

        def lin(rows_w, w_col, coef_w, coef_r, coef_i):
            r = np.concatenate([rows_w, rows_w, rows_w])
            c = np.concatenate([w_col, pr, pi])
            d = np.concatenate([coef_w, coef_r, coef_i])
            return r, c, d

        k = np.arange(nbr)
        blocks = [
            lin(4 * k + 0, pw[f], A.real, -cf.real, cf.imag * sg),
            lin(4 * k + 1, pw[f], A.imag, -cf.imag, -cf.real * sg),
            lin(4 * k + 2, pw[t], B.real, -ct.real, -ct.imag * sg),
            lin(4 * k + 3, pw[t], B.imag, -ct.imag, ct.real * sg),
        ]
        rows = np.concatenate([b[0] for b in blocks])
        cols = np.concatenate([b[1] for b in blocks])
        data = np.concatenate([b[2] for b in blocks])
        self.Mflow = sp.csr_matrix((data, (rows, cols)), shape=(4 * nbr, self.n))

        # linear current-magnitude maps (two rows per branch)
        yc = y + 1j * bc / 2
        a_f = yc / tap**2
        d_f = -y / np.conj(T)
        a_t = yc
        d_t = -y / T
        cross_f = a_f * np.conj(d_f)
        cross_t = d_t * np.conj(a_t)
        rows, cols, data = [], [], []
        for side, (alpha, beta, cross) in enumerate(
            [(np.abs(a_f) ** 2, np.abs(d_f) ** 2, cross_f),
             (np.abs(d_t) ** 2, np.abs(a_t) ** 2, cross_t)]
        ):
            r = 2 * k + side
            rows += [r, r, r, r]
            cols += [pw[f], pw[t], pr, pi]
            data += [alpha, beta, 2 * cross.real, -2 * cross.imag * sg]
        self.Mcur = sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(2 * nbr, self.n),
        )

        # constraint layout
        self.s_max = np.array(
            [br.s_max if br.s_max is not None else np.inf for br in brs]
        )
        self.i_max = np.array(
            [br.i_max if br.i_max is not None else np.inf for br in brs]
        )
        self.thermal_branches = (
            np.nonzero(np.isfinite(self.s_max))[0] if mode.apparent
            else np.array([], dtype=int)
        )
        self.current_branches = (
            np.nonzero(np.isfinite(self.i_max))[0] if mode.current
            else np.array([], dtype=int)
        )
        nth = len(self.thermal_branches)
        ncu = len(self.current_branches)
        self.row_p = np.arange(nb)
        self.row_q = nb + np.arange(nb)
        base = 2 * nb
        self.row_th = base + np.arange(2 * nth)  # from, to interleaved
        base += 2 * nth
        self.row_cu = base + np.arange(2 * ncu)
        base += 2 * ncu
        self.row_ang_hi = base + np.arange(nbr)
        self.row_ang_lo = base + nbr + np.arange(nbr)
        base += 2 * nbr
        self.row_cone = base + np.arange(npair)
        self.m = base + npair

        # linear part of every constraint row
        gen_bus = np.array([bus_pos[net.gens[g].bus] for g in self.gen_ids])
        self.pd = np.array([net.buses[b].demand.real for b in self.bus_ids])
        self.qd = np.array([net.buses[b].demand.imag for b in self.bus_ids])
        gs = np.array([net.buses[b].shunt.real for b in self.bus_ids])
        bs = np.array([net.buses[b].shunt.imag for b in self.bus_ids])

        inc_pf = sp.csr_matrix(
            (np.ones(nbr), (f, 4 * k + 0)), shape=(nb, 4 * nbr)
        )
        inc_qf = sp.csr_matrix(
            (np.ones(nbr), (f, 4 * k + 1)), shape=(nb, 4 * nbr)
        )
        inc_pt = sp.csr_matrix(
            (np.ones(nbr), (t, 4 * k + 2)), shape=(nb, 4 * nbr)
        )
        inc_qt = sp.csr_matrix(
            (np.ones(nbr), (t, 4 * k + 3)), shape=(nb, 4 * nbr)
        )
        gen_p = sp.csr_matrix(
            (np.ones(ng), (gen_bus, self.i_pg)), shape=(nb, self.n)
        )
        gen_q = sp.csr_matrix(
            (np.ones(ng), (gen_bus, self.i_qg)), shape=(nb, self.n)
        )
        shunt_p = sp.csr_matrix((-gs, (np.arange(nb), self.i_w)), shape=(nb, self.n))
        shunt_q = sp.csr_matrix((bs, (np.arange(nb), self.i_w)), shape=(nb, self.n))
        Ap = gen_p + shunt_p - (inc_pf + inc_pt) @ self.Mflow
        Aq = gen_q + shunt_q - (inc_qf + inc_qt) @ self.Mflow

        tan_hi = np.array([math.tan(br.angle_max) for br in brs])
        tan_lo = np.array([math.tan(br.angle_min) for br in brs])
        # sigma*wi - tan(hi)*wr <= 0 ; sigma*wi - tan(lo)*wr >= 0
        r = np.concatenate([k, k, k, k])
        c = np.concatenate([pi, pr, pi, pr])
        d = np.concatenate([sg, -tan_hi, sg, -tan_lo])
        rr = np.concatenate([r[: 2 * nbr], nbr + r[: 2 * nbr]])
        Aang = sp.csr_matrix((d, (rr, c)), shape=(2 * nbr, self.n))

        parts = [Ap, Aq]
        # thermal rows are quadratic; keep their flow maps separately
        th_rows = []
        for bi in self.thermal_branches:
            th_rows.append(self.Mflow[4 * bi])  # P from
            th_rows.append(self.Mflow[4 * bi + 1])  # Q from
            th_rows.append(self.Mflow[4 * bi + 2])
            th_rows.append(self.Mflow[4 * bi + 3])
        self.Mth = sp.vstack(th_rows, format="csr") if th_rows else None
        parts.append(sp.csr_matrix((2 * nth, self.n)))
        cu_rows = []
        for bi in self.current_branches:
            cu_rows.append(self.Mcur[2 * bi])
            cu_rows.append(self.Mcur[2 * bi + 1])
        Acur = sp.vstack(cu_rows, format="csr") if cu_rows else sp.csr_matrix(
            (0, self.n)
        )
        parts.append(Acur)
        parts.append(Aang)
        parts.append(sp.csr_matrix((npair, self.n)))  # cone rows, quadratic
        self.Alin = sp.vstack(parts, format="csr")
        self.blin = np.zeros(self.m)
        self.blin[self.row_p] = -self.pd
        self.blin[self.row_q] = -self.qd

        cl = np.full(self.m, -np.inf)
        cu_ = np.full(self.m, np.inf)
        cl[self.row_p] = cu_[self.row_p] = 0.0
        cl[self.row_q] = cu_[self.row_q] = 0.0
        lim = self.s_max[self.thermal_branches] ** 2
        cu_[self.row_th] = np.repeat(lim, 2)
        limc = self.i_max[self.current_branches] ** 2
        cu_[self.row_cu] = np.repeat(limc, 2)
        cu_[self.row_ang_hi] = 0.0
        cl[self.row_ang_lo] = 0.0
        cu_[self.row_cone] = 0.0
        self.cl, self.cu = cl, cu_

        # constant Hessian pieces: cone blocks and thermal Gram matrices
        self._build_hessian_pattern()

    def _build_hessian_pattern(self):
        ia = self.i_w[self.pair_a]
        ib = self.i_w[self.pair_b]
        # cone: d2/dwr2 = 2, d2/dwi2 = 2, d2/dw_a dw_b = -1 (both triangles)
        self._cone_rows = np.concatenate([self.i_wr, self.i_wi, ia, ib])
        self._cone_cols = np.concatenate([self.i_wr, self.i_wi, ib, ia])
        if self.Mth is not None:
            grams = []
            for q in range(2 * len(self.thermal_branches)):
                mp = self.Mth[2 * q]
                mq = self.Mth[2 * q + 1]
                grams.append(2 * (mp.T @ mp + mq.T @ mq).tocoo())
            self._th_grams = grams
        else:
            self._th_grams = []
        # row scatter for the quadratic thermal Jacobian rows
        nth2 = 2 * len(self.thermal_branches)
        self._Rth = sp.csr_matrix(
            (np.ones(nth2), (self.row_th, np.arange(nth2))),
            shape=(self.m, nth2),
        )

    # -- evaluators --

    def objective(self, x):
        pg = x[self.i_pg]
        return float(np.sum(self.c2 * pg**2 + self.c1 * pg + self.c0))

    def gradient(self, x):
        g = np.zeros(self.n)
        g[self.i_pg] = 2 * self.c2 * x[self.i_pg] + self.c1
        return g

    def constraints(self, x):
        c = self.Alin @ x + self.blin
        if self.Mth is not None:
            flows = self.Mth @ x
            p = flows[0::2]
            q = flows[1::2]
            c[self.row_th] = p**2 + q**2
        wr = x[self.i_wr]
        wi = x[self.i_wi]
        wa = x[self.i_w[self.pair_a]]
        wb = x[self.i_w[self.pair_b]]
        c[self.row_cone] = wr**2 + wi**2 - wa * wb
        return c

    def jacobian(self, x):
        J = self.Alin
        if self.Mth is not None:
            flows = self.Mth @ x
            nth2 = len(self.row_th)
            q = np.arange(nth2)
            scale = sp.csr_matrix(
                (
                    np.stack([2 * flows[0::2], 2 * flows[1::2]]).T.ravel(),
                    (np.repeat(q, 2), np.arange(2 * nth2)),
                ),
                shape=(nth2, 2 * nth2),
            )
            J = J + self._Rth @ (scale @ self.Mth)
        rows = np.tile(self.row_cone, 4)
        cols = np.concatenate(
            [self.i_wr, self.i_wi, self.i_w[self.pair_a], self.i_w[self.pair_b]]
        )
        data = np.concatenate(
            [2 * x[self.i_wr], 2 * x[self.i_wi],
             -x[self.i_w[self.pair_b]], -x[self.i_w[self.pair_a]]]
        )
        Jcone = sp.csr_matrix((data, (rows, cols)), shape=(self.m, self.n))
        return (J + Jcone).tocsr()

    def hessian(self, x, obj_factor, lam):
        data = []
        rows = []
        cols = []
        lam_cone = lam[self.row_cone]
        cone_data = np.concatenate(
            [2 * lam_cone, 2 * lam_cone, -lam_cone, -lam_cone]
        )
        rows.append(self._cone_rows)
        cols.append(self._cone_cols)
        data.append(cone_data)
        for q, gram in enumerate(self._th_grams):
            lv = lam[self.row_th[q]]
            if lv != 0.0:
                rows.append(gram.row)
                cols.append(gram.col)
                data.append(lv * gram.data)
        rows.append(self.i_pg)
        cols.append(self.i_pg)
        data.append(obj_factor * 2 * self.c2)
        return sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n, self.n),
        )

    def flat_start(self):
        x0 = np.zeros(self.n)
        both = np.isfinite(self.lb) & np.isfinite(self.ub)
        x0[both] = 0.5 * (self.lb[both] + self.ub[both])
        x0[self.i_wi] = 0.0
        # start the pair variables strictly inside the cone
        wa = x0[self.i_w[self.pair_a]]
        wb = x0[self.i_w[self.pair_b]]
        x0[self.i_wr] = 0.9 * np.sqrt(wa * wb)
        return x0

    def to_problem(self) -> NlpProblem:
        var_names = [f"w[{b}]" for b in self.bus_ids]
        var_names += [f"wr[{a},{b}]" for a, b in self.pairs]
        var_names += [f"wi[{a},{b}]" for a, b in self.pairs]
        var_names += [f"pg[{g}]" for g in self.gen_ids]
        var_names += [f"qg[{g}]" for g in self.gen_ids]
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
            var_names=var_names,
        )


def build_soc(
    net: NetworkCase, mode: FlowLimitMode = FlowLimitMode.APPARENT_POWER
) -> NlpProblem:
    """Build the SOC relaxation of the AC-OPF for a network."""
    net.validate()
    return SocStructure(net, mode).to_problem()


def recover_point_estimate(
    net: NetworkCase, x: np.ndarray, mode: FlowLimitMode = FlowLimitMode.APPARENT_POWER
) -> OperatingPoint:
    """Project a relaxation solution back to polar voltage coordinates.

    Magnitudes come from the square roots of the w variables. Angles are
    propagated along a spanning tree from the reference bus using the
    angle of each branch's W entry; off-tree branch angles (and the cone
    itself, when not tight) are generally inconsistent, so the result is
    an estimate rather than a feasible operating point.
    """
    s = SocStructure(net, mode)
    vm = {b: math.sqrt(float(x[s.i_w[i]])) for i, b in enumerate(s.bus_ids)}
    adj = collections.defaultdict(list)
    for k, br in enumerate(net.branches):
        j = s.br_pair[k]
        ang = math.atan2(
            s.br_sign[k] * float(x[s.i_wi[j]]), float(x[s.i_wr[j]])
        )
        adj[br.from_bus].append((br.to_bus, -ang))
        adj[br.to_bus].append((br.from_bus, ang))
    va = {net.ref_bus: 0.0}
    queue = collections.deque([net.ref_bus])
    while queue:
        u = queue.popleft()
        for v, delta in adj[u]:
            if v not in va:
                va[v] = va[u] + delta
                queue.append(v)
    for b in s.bus_ids:
        va.setdefault(b, 0.0)
    pg = {g: float(x[s.i_pg[k]]) for k, g in enumerate(s.gen_ids)}
    qg = {g: float(x[s.i_qg[k]]) for k, g in enumerate(s.gen_ids)}
    return OperatingPoint(vm=vm, va=va, pg=pg, qg=qg)
