"""Stress-variant generators: congested (API) and angle-tight (SAD) cases.

The API variant scales every bus's active demand by the largest uniform
factor the network can serve, then re-expands any generator whose active
limit the scaled dispatch saturates. The SAD variant bisects for the
smallest symmetric angle difference bound that keeps an AC power flow
feasible and applies it to every branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from opfbench.acopf import FlowLimitMode, build_acopf, build_max_loadability
from opfbench.completion import (
    FuelBinTable,
    FuelType,
    classify_fuel,
    apply_angle_bounds,
    load_default_bins,
    sample_active_capacity,
    sample_cost,
)
from opfbench.ipm import SolverOptions, SolverStatus, feasibility_phase, solve
from opfbench.network import NetworkCase

__all__ = [
    "VariantConfig",
    "VariantError",
    "ApiResult",
    "SadResult",
    "max_loadability",
    "generate_api",
    "generate_sad",
]

DEFAULT_SAD_START_DEG = 30.0


class VariantError(RuntimeError):
    pass


@dataclass(frozen=True)
class VariantConfig:
    kind: str = "api"  # "api" or "sad"
    sad_tolerance_rad: float = 1e-3
    seed: int = 0
    bins: FuelBinTable | None = None
    flow_limit: FlowLimitMode = FlowLimitMode.APPARENT_POWER
    solver: SolverOptions = field(default_factory=SolverOptions)
    binding_tol: float = 1e-5  # p.u. slack below p_max that counts as binding

    def validate(self) -> None:
        if self.kind not in ("api", "sad"):
            raise VariantError(f"unknown variant kind {self.kind!r}")
        if self.sad_tolerance_rad <= 0:
            raise VariantError("bisection tolerance must be positive")


@dataclass
class ApiResult:
    case: NetworkCase
    alpha: float
    expanded_gens: list[int]
    log: list[str]


@dataclass
class SadResult:
    case: NetworkCase
    theta_rad: float
    infeasible_theta_rad: float  # bracket witness below the returned bound
    log: list[str]

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta_rad)


def _scale_active_demand(net: NetworkCase, alpha: float) -> NetworkCase:
    buses = {
        b.id: replace(b, demand=complex(alpha * b.demand.real, b.demand.imag))
        for b in net.buses.values()
    }
    return replace(net, buses=buses)


def max_loadability(
    net: NetworkCase,
    options: SolverOptions | None = None,
    mode: FlowLimitMode = FlowLimitMode.APPARENT_POWER,
) -> tuple[float, np.ndarray]:
    """Largest uniform active-demand scale the network can serve.

    Returns the scale factor and the solver's primal point (the trailing
    variable is the factor itself).
    """
    total_pd = sum(b.demand.real for b in net.buses.values())
    if total_pd <= 0.0:
        raise VariantError(
            "total active demand is not positive; the scale is unbounded"
        )
    prob = build_max_loadability(net, mode)
    rep = solve(prob, options or SolverOptions())
    if rep.status != SolverStatus.OPTIMAL:
        raise VariantError(f"loadability solve ended with {rep.status}: {rep.message}")
    return float(rep.x[-1]), rep.x


def generate_api(net: NetworkCase, cfg: VariantConfig | None = None) -> ApiResult:
    """Build the congested variant of a case.

    Scales active demands to the maximal serviceable level, then applies
    the capacity and cost samplers to the generators whose active limits
    the congested dispatch saturates, so the congestion binds on the
    branches rather than on generation.
    """
    cfg = cfg or VariantConfig(kind="api")
    cfg.validate()
    net.validate()
    rng = np.random.default_rng(cfg.seed)
    log = []

    alpha, x = max_loadability(net, cfg.solver, cfg.flow_limit)
    log.append(f"maximal active demand scale: {alpha:.6f}")
    scaled = _scale_active_demand(net, alpha)

    # generators pinned at their active limit in the congested dispatch
    gen_ids = list(net.gens)
    nb = len(net.buses)
    pg = x[2 * nb:2 * nb + len(gen_ids)]
    bins = cfg.bins if cfg.bins is not None else load_default_bins()
    base = net.base_mva
    gens = dict(scaled.gens)
    expanded = []
    for k, gid in enumerate(gen_ids):
        g = gens[gid]
        if g.p_max - pg[k] > cfg.binding_tol or g.p_max <= g.p_min:
            continue
        fuel = classify_fuel(g.p_max * base, g.p_min * base, bins, rng)
        if fuel == FuelType.SYNC:
            continue
        new_mw = sample_active_capacity(fuel, g.p_max * base, rng)
        price = sample_cost(fuel, rng)
        gens[gid] = replace(
            g, p_max=new_mw / base, cost_c2=0.0, cost_c1=price * base, cost_c0=0.0
        )
        expanded.append(gid)
        log.append(
            f"gen {gid}: binding at {g.p_max * base:.1f} MW, {fuel.value} "
            f"resample to {new_mw:.1f} MW at {price:.2f} $/MWh"
        )
    out = replace(scaled, gens=gens)
    out.validate()

    check = feasibility_phase(build_acopf(out, cfg.flow_limit), cfg.solver)
    if check.violation > 1e-6:
        raise VariantError(
            f"congested case failed the feasibility check ({check.violation:.2e})"
        )
    log.append(f"feasibility check: max violation {check.violation:.2e}")
    return ApiResult(case=out, alpha=alpha, expanded_gens=expanded, log=log)


def generate_sad(net: NetworkCase, cfg: VariantConfig | None = None) -> SadResult:
    """Build the small-angle-difference variant of a case.

    Bisects the symmetric angle bound over (0, 30] degrees, testing AC
    power flow feasibility at each trial, and returns the case under the
    smallest feasible bound found. The last infeasible trial is kept as
    the bracket witness.
    """
    cfg = cfg or VariantConfig(kind="sad")
    cfg.validate()
    net.validate()
    log = []

    def feasible(theta_rad: float) -> bool:
        trial = apply_angle_bounds(net, math.degrees(theta_rad))
        rep = feasibility_phase(build_acopf(trial, cfg.flow_limit), cfg.solver)
        if rep.status == SolverStatus.NUMERICAL_FAILURE:
            raise VariantError(f"feasibility phase failed: {rep.message}")
        ok = rep.status == SolverStatus.OPTIMAL
        log.append(
            f"theta {math.degrees(theta_rad):8.4f} deg: "
            f"{'feasible' if ok else 'infeasible'} "
            f"(violation {rep.violation:.2e})"
        )
        return ok

    hi = math.radians(DEFAULT_SAD_START_DEG)
    if not feasible(hi):
        raise VariantError("case is infeasible at the 30 degree angle bound")
    lo = 0.0  # theta = 0 pins all angle differences, excluded by the open bracket
    while hi - lo > cfg.sad_tolerance_rad:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    out = apply_angle_bounds(net, math.degrees(hi))
    out.validate()
    log.append(f"selected angle bound {math.degrees(hi):.4f} deg")
    return SadResult(
        case=out, theta_rad=hi, infeasible_theta_rad=lo, log=log
    )
