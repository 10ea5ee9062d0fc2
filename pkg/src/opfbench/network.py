"""Validated per-unit network model built from a raw Matpower case.

Converts MW/MVAr quantities to per unit on the system base, computes the
branch series admittance and transformer phasor from the raw impedance and
tap columns, rescales cost coefficients so the objective of a per-unit
dispatch reproduces the $/h value, and filters out-of-service elements.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

from opfbench.matpower import BranchRow, CostRow, GenRow, RawCase

__all__ = [
    "Bus",
    "Gen",
    "Branch",
    "NetworkCase",
    "NetworkModelError",
    "branch_admittance",
    "transformer_phasor",
    "build_network",
    "network_to_raw",
]

DEFAULT_ANGLE_BOUND_DEG = 30.0


class NetworkModelError(ValueError):
    """Raised when a raw case cannot be turned into a valid network."""


@dataclass(frozen=True)
class Bus:
    id: int
    v_min: float  # p.u.
    v_max: float  # p.u.
    demand: complex  # p.u.
    shunt: complex  # p.u. admittance g_s + i b_s
    base_kv: float


@dataclass(frozen=True)
class Gen:
    id: int
    bus: int
    p_min: float  # p.u.
    p_max: float
    q_min: float
    q_max: float
    cost_c2: float  # $/h per p.u.^2
    cost_c1: float  # $/h per p.u.
    cost_c0: float  # $/h
    raw_index: int = -1  # row in the source gen table


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    series_admittance: complex  # p.u.
    charge: float  # p.u. total line charging susceptance
    transformer: complex  # tap * e^{i shift}
    s_max: float | None  # p.u. apparent power limit
    i_max: float | None  # p.u. current limit
    angle_min: float  # radians
    angle_max: float  # radians
    r: float  # raw impedance retained for the completion models
    x: float
    raw_index: int = -1


@dataclass(frozen=True)
class NetworkCase:
    name: str
    base_mva: float
    buses: dict[int, Bus]
    gens: dict[int, Gen]
    branches: tuple[Branch, ...]
    ref_bus: int

    def validate(self) -> None:
        if self.ref_bus not in self.buses:
            raise NetworkModelError(f"reference bus {self.ref_bus} not in bus set")
        for g in self.gens.values():
            if g.bus not in self.buses:
                raise NetworkModelError(f"gen {g.id} references unknown bus {g.bus}")
            if g.p_min > g.p_max or g.q_min > g.q_max:
                raise NetworkModelError(f"gen {g.id} has inverted injection bounds")
        for br in self.branches:
            if br.from_bus not in self.buses or br.to_bus not in self.buses:
                raise NetworkModelError(f"branch {br.id} references unknown bus")
            if abs(br.transformer) <= 0:
                raise NetworkModelError(f"branch {br.id} has zero transformer ratio")
            if not (br.angle_min <= 0.0 <= br.angle_max):
                raise NetworkModelError(f"branch {br.id} angle bounds exclude zero")
            if not (-math.pi / 2 < br.angle_min and br.angle_max < math.pi / 2):
                raise NetworkModelError(f"branch {br.id} angle bounds exceed +/-90 deg")
        for b in self.buses.values():
            if not (0 < b.v_min <= b.v_max):
                raise NetworkModelError(f"bus {b.id} has invalid voltage bounds")

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_branches(self) -> int:
        return len(self.branches)


def branch_admittance(r: float, x: float) -> complex:
    """Series admittance of a branch: the inverse of its impedance r + ix."""
    d = r * r + x * x
    if d == 0.0:
        raise NetworkModelError("ideal branch: r and x are both zero")
    return complex(r / d, -x / d)


def transformer_phasor(t: float, shift: float) -> complex:
    """Transformer phasor with tap magnitude t and phase shift in radians."""
    if t <= 0:
        raise NetworkModelError(f"tap ratio must be positive, got {t}")
    return cmath.rect(t, shift)


def _cost_coefficients(row: CostRow | None, base_mva: float) -> tuple[float, float, float]:
    """Quadratic coefficients rescaled to act on per-unit active injection."""
    if row is None:
        return 0.0, 0.0, 0.0
    if row.model != 2:
        raise NetworkModelError("piecewise-linear cost rows are not supported")
    coeffs = row.coefficients
    if len(coeffs) > 3:
        raise NetworkModelError(
            f"cost polynomial of degree {len(coeffs) - 1} exceeds quadratic"
        )
    padded = (0.0,) * (3 - len(coeffs)) + tuple(coeffs)
    c2, c1, c0 = padded
    return c2 * base_mva**2, c1 * base_mva, c0


def _angle_bounds(row: BranchRow) -> tuple[float, float]:
    lo, hi = row.angmin, row.angmax
    unconstrained = (lo == 0.0 and hi == 0.0) or (lo <= -360.0 and hi >= 360.0)
    if unconstrained:
        lo, hi = -DEFAULT_ANGLE_BOUND_DEG, DEFAULT_ANGLE_BOUND_DEG
    if not (-90.0 < lo <= 0.0 <= hi < 90.0):
        raise NetworkModelError(
            f"branch {row.from_bus}-{row.to_bus}: angle bounds "
            f"({lo}, {hi}) deg outside the supported (-90, 90) range"
        )
    return math.radians(lo), math.radians(hi)


def build_network(raw: RawCase) -> NetworkCase:
    """Build the validated per-unit network from a raw case."""
    raw.validate()
    base = raw.base_mva

    buses: dict[int, Bus] = {}
    ref_candidates = []
    for row in raw.bus_rows:
        if row.bus_type == 4:
            continue
        if row.bus_type == 3:
            ref_candidates.append(row.id)
        if row.v_min > row.v_max:
            raise NetworkModelError(f"bus {row.id}: v_min > v_max")
        buses[row.id] = Bus(
            id=row.id,
            v_min=row.v_min,
            v_max=row.v_max,
            demand=complex(row.pd, row.qd) / base,
            shunt=complex(row.gs, row.bs) / base,
            base_kv=row.base_kv,
        )
    if not ref_candidates:
        raise NetworkModelError("no reference (type 3) bus in case")
    if len(ref_candidates) > 1:
        raise NetworkModelError(f"multiple reference buses: {ref_candidates}")

    cost_rows: tuple[CostRow | None, ...]
    if raw.gencost_rows:
        cost_rows = raw.gencost_rows
    else:
        cost_rows = (None,) * len(raw.gen_rows)

    gens: dict[int, Gen] = {}
    for idx, (grow, crow) in enumerate(zip(raw.gen_rows, cost_rows)):
        if grow.status == 0:
            continue
        if grow.bus not in buses:
            raise NetworkModelError(f"gen row {idx} references unknown bus {grow.bus}")
        c2, c1, c0 = _cost_coefficients(crow, base)
        if grow.p_min > grow.p_max or grow.q_min > grow.q_max:
            raise NetworkModelError(f"gen row {idx}: inverted injection bounds")
        gens[idx] = Gen(
            id=idx,
            bus=grow.bus,
            p_min=grow.p_min / base,
            p_max=grow.p_max / base,
            q_min=grow.q_min / base,
            q_max=grow.q_max / base,
            cost_c2=c2,
            cost_c1=c1,
            cost_c0=c0,
            raw_index=idx,
        )

    branches = []
    for idx, row in enumerate(raw.branch_rows):
        if row.status == 0:
            continue
        if row.from_bus not in buses or row.to_bus not in buses:
            raise NetworkModelError(
                f"branch row {idx} references unknown bus "
                f"({row.from_bus}, {row.to_bus})"
            )
        tap = row.tap if row.tap != 0.0 else 1.0
        s_max = row.rate_a / base if row.rate_a > 0 else None
        lo, hi = _angle_bounds(row)
        branches.append(
            Branch(
                id=idx,
                from_bus=row.from_bus,
                to_bus=row.to_bus,
                series_admittance=branch_admittance(row.r, row.x),
                charge=row.b_charge,
                transformer=transformer_phasor(tap, math.radians(row.shift)),
                s_max=s_max,
                i_max=s_max,
                angle_min=lo,
                angle_max=hi,
                r=row.r,
                x=row.x,
                raw_index=idx,
            )
        )

    net = NetworkCase(
        name=raw.name,
        base_mva=base,
        buses=buses,
        gens=gens,
        branches=tuple(branches),
        ref_bus=ref_candidates[0],
    )
    net.validate()
    return net


def network_to_raw(net: NetworkCase, template: RawCase) -> RawCase:
    """Write a network's curated fields back onto its source raw case.

    Used after data completion or variant generation: generator bounds and
    costs, branch ratings, angle bounds, and bus demands are copied from
    the per-unit network back into a copy of the raw case it was built
    from. Rows the network dropped (out of service) pass through untouched.
    """
    base = net.base_mva
    gen_rows = list(template.gen_rows)
    cost_rows = list(template.gencost_rows)
    if not cost_rows:
        cost_rows = [
            CostRow(model=2, startup=0.0, shutdown=0.0, n=3,
                    coefficients=(0.0, 0.0, 0.0))
            for _ in gen_rows
        ]
    for g in net.gens.values():
        i = g.raw_index
        gen_rows[i] = replace(
            gen_rows[i],
            p_min=g.p_min * base,
            p_max=g.p_max * base,
            q_min=g.q_min * base,
            q_max=g.q_max * base,
        )
        cost_rows[i] = CostRow(
            model=2,
            startup=cost_rows[i].startup,
            shutdown=cost_rows[i].shutdown,
            n=3,
            coefficients=(g.cost_c2 / base**2, g.cost_c1 / base, g.cost_c0),
        )

    branch_rows = list(template.branch_rows)
    for br in net.branches:
        i = br.raw_index
        branch_rows[i] = replace(
            branch_rows[i],
            rate_a=(br.s_max * base if br.s_max is not None else 0.0),
            angmin=math.degrees(br.angle_min),
            angmax=math.degrees(br.angle_max),
        )

    bus_rows = list(template.bus_rows)
    for j, row in enumerate(bus_rows):
        if row.id in net.buses:
            d = net.buses[row.id].demand
            bus_rows[j] = replace(row, pd=d.real * base, qd=d.imag * base)

    return replace(
        template,
        bus_rows=tuple(bus_rows),
        gen_rows=tuple(gen_rows),
        gencost_rows=tuple(cost_rows),
        branch_rows=tuple(branch_rows),
    )
