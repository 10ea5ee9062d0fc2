"""Statistical models that fill missing generator and branch data.

A raw transmission case often lacks generation limits, cost functions,
thermal ratings, or angle difference bounds. The models here fill those
gaps: a fuel classifier driven by nameplate capacity (GF-Stat), capacity
and cost samplers fit per fuel type (AG-Stat, AC-Stat), a reactive-bound
envelope (RG-AM50), two thermal limit estimators (TL-Stat and TL-UB), and
a uniform angle bound. ``complete_case`` chains them in the canonical
order and records the provenance of every field it touches.
"""

from __future__ import annotations

import enum
import importlib.resources
import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from opfbench.network import Branch, Gen, NetworkCase

__all__ = [
    "FuelType",
    "FuelBinTable",
    "CompletionPlan",
    "CompletionError",
    "SamplingError",
    "ProvenanceRecord",
    "classify_fuel",
    "sample_active_capacity",
    "clamp_reactive_bounds",
    "sample_cost",
    "thermal_limit_stat",
    "thermal_limit_ub",
    "apply_angle_bounds",
    "complete_case",
    "load_default_bins",
]

# maximum-likelihood parameters of the nameplate capacity models:
# exponential rate per MW for the fossil fuels, normal (mean, std) for NUC
CAPACITY_RATE_PER_MW = {"PEL": 0.023254, "NG": 0.009188, "COW": 0.003201}
CAPACITY_NORMAL_MW = {"NUC": (1044.56, 219.27)}

# marginal generation cost models, normal (mean, std) in $/MWh
COST_NORMAL_USD_PER_MWH = {
    "PEL": (111.3398, 9.6736),
    "NG": (34.2731, 10.9810),
    "COW": (24.7919, 8.0866),
    "NUC": (7.2504, 0.7534),
}

_TL_STAT_COEF = math.exp(-5.0886)
_TL_STAT_EXP = 0.4772

_REJECTION_CAP = 10**6


class CompletionError(ValueError):
    pass


class SamplingError(CompletionError):
    pass


class FuelType(enum.Enum):
    PEL = "PEL"
    NG = "NG"
    COW = "COW"
    NUC = "NUC"
    SYNC = "SYNC"


@dataclass(frozen=True)
class FuelBinTable:
    """Capacity bins with a fuel-type probability per bin.

    ``edges`` holds the strictly increasing bin upper limits in MW, the
    last of which may be infinite; ``probabilities[i]`` is the fuel
    distribution of the bin ending at ``edges[i]``.
    """

    edges: tuple[float, ...]
    probabilities: tuple[dict[FuelType, float], ...]
    heat_rates_btu_per_kwh: dict[FuelType, float] = field(default_factory=dict)

    def validate(self) -> None:
        if len(self.edges) != len(self.probabilities):
            raise CompletionError("one probability row required per bin")
        if list(self.edges) != sorted(set(self.edges)):
            raise CompletionError("bin edges must be strictly increasing")
        if not self.edges or not math.isinf(self.edges[-1]):
            raise CompletionError("last bin must extend to infinity")
        for probs in self.probabilities:
            total = sum(probs.values())
            if abs(total - 1.0) > 1e-9:
                raise CompletionError(f"bin probabilities sum to {total}, not 1")
            if any(p < 0 for p in probs.values()):
                raise CompletionError("negative bin probability")
            if FuelType.SYNC in probs:
                raise CompletionError("SYNC is assigned by rule, not sampled")

    def bin_for(self, p_max_mw: float) -> dict[FuelType, float]:
        for hi, probs in zip(self.edges, self.probabilities):
            if p_max_mw <= hi:
                return probs
        return self.probabilities[-1]


def load_default_bins() -> FuelBinTable:
    """Load the fuel bin table and heat rates shipped with the package."""
    ref = importlib.resources.files("opfbench").joinpath("data/fuel_bins.yaml")
    raw = yaml.safe_load(ref.read_text())
    edges = []
    probs = []
    for entry in raw["capacity_bins"]:
        edges.append(float(entry["upper_mw"]))
        probs.append(
            {FuelType[k]: float(v) for k, v in entry["probabilities"].items()}
        )
    rates = {
        FuelType[k]: float(v)
        for k, v in raw.get("heat_rates_btu_per_kwh", {}).items()
    }
    table = FuelBinTable(
        edges=tuple(edges),
        probabilities=tuple(probs),
        heat_rates_btu_per_kwh=rates,
    )
    table.validate()
    return table


def classify_fuel(
    p_max_mw: float,
    p_min_mw: float,
    bins: FuelBinTable,
    rng: np.random.Generator,
) -> FuelType:
    """Weighted-die fuel classification from the nameplate capacity proxy.

    Machines with no active power range are synchronous condensers.
    """
    if p_max_mw == 0.0 and p_min_mw == 0.0:
        return FuelType.SYNC
    probs = bins.bin_for(p_max_mw)
    fuels = list(probs)
    weights = np.array([probs[f] for f in fuels])
    return fuels[int(rng.choice(len(fuels), p=weights / weights.sum()))]


def sample_active_capacity(
    fuel: FuelType, current_mw: float, rng: np.random.Generator
) -> float:
    """Sample a nameplate capacity exceeding the current limit or output."""
    if fuel == FuelType.SYNC:
        raise CompletionError("synchronous condensers have no active capacity")
    if fuel == FuelType.NUC:
        mean, std = CAPACITY_NORMAL_MW["NUC"]
        draw = lambda: rng.normal(mean, std)  # noqa: E731
    else:
        scale = 1.0 / CAPACITY_RATE_PER_MW[fuel.value]
        draw = lambda: rng.exponential(scale)  # noqa: E731
    for _ in range(_REJECTION_CAP):
        value = draw()
        if value > current_mw:
            return float(value)
    raise SamplingError(
        f"no {fuel.value} capacity draw exceeded {current_mw} MW in "
        f"{_REJECTION_CAP} attempts"
    )


def clamp_reactive_bounds(
    nameplate_mw: float, q_min: float, q_max: float
) -> tuple[float, float]:
    """Restrict reactive bounds to half the nameplate capacity each way."""
    if q_min > q_max:
        raise CompletionError("inverted reactive bounds")
    half = 0.5 * nameplate_mw
    return max(q_min, -half), min(q_max, half)


def sample_cost(fuel: FuelType, rng: np.random.Generator) -> float:
    """Draw a marginal cost in $/MWh; nonpositive draws are rejected."""
    if fuel == FuelType.SYNC:
        return 0.0
    mean, std = COST_NORMAL_USD_PER_MWH[fuel.value]
    for _ in range(_REJECTION_CAP):
        value = rng.normal(mean, std)
        if value >= 0.0:
            return float(value)
    raise SamplingError(f"cost sampling for {fuel.value} kept drawing negatives")


def thermal_limit_stat(r: float, x: float, base_kv: float) -> float | None:
    """Statistical thermal limit in MVA, or None when inapplicable.

    The reactance-to-resistance ratio proxies the conductor type since it
    is independent of line length; the fit is multiplied by the nominal
    voltage.
    """
    if r <= 0.0 or x <= 0.0 or base_kv <= 0.0:
        return None
    return base_kv * _TL_STAT_COEF * (x / r) ** _TL_STAT_EXP


def thermal_limit_ub(
    y_mag: float, vu_i: float, vu_j: float, angle_max_mag: float
) -> float:
    """Thermal limit that cannot cut off any point satisfying the voltage
    and angle bounds: the largest apparent power the branch can carry."""
    inner = vu_i**2 + vu_j**2 - 2 * vu_i * vu_j * math.cos(angle_max_mag)
    return math.sqrt(vu_i**2 * y_mag**2 * inner)


def apply_angle_bounds(net: NetworkCase, bound_deg: float) -> NetworkCase:
    """Set every branch's angle difference bounds to a symmetric value."""
    if not (0.0 < bound_deg < 90.0):
        raise CompletionError(f"angle bound {bound_deg} deg outside (0, 90)")
    rad = math.radians(bound_deg)
    branches = tuple(
        replace(br, angle_min=-rad, angle_max=rad) for br in net.branches
    )
    return replace(net, branches=branches)


@dataclass(frozen=True)
class CompletionPlan:
    gf_stat: bool = False
    ag_stat: bool = False
    rg_am50: bool = False
    ac_stat: bool = False
    tl_stat: bool = False
    tl_ub: bool = False
    angle_bound_deg: float | None = None
    seed: int = 0
    bins: FuelBinTable | None = None

    def validate(self) -> None:
        if (self.ag_stat or self.ac_stat) and not self.gf_stat:
            raise CompletionError(
                "AG-Stat and AC-Stat need fuel categories; enable GF-Stat"
            )
        if self.angle_bound_deg is not None and not (
            0.0 < self.angle_bound_deg < 90.0
        ):
            raise CompletionError("angle bound must lie in (0, 90) degrees")


@dataclass(frozen=True)
class ProvenanceRecord:
    model: str
    element: str  # e.g. "gen 3", "branch 7"
    field: str
    old: float | str | None
    new: float | str

    def __str__(self) -> str:
        return f"{self.model}: {self.element} {self.field} {self.old} -> {self.new}"


def complete_case(
    net: NetworkCase, plan: CompletionPlan
) -> tuple[NetworkCase, list[ProvenanceRecord]]:
    """Apply the enabled completion models in their canonical order.

    Order: fuel classification, active capacity, reactive envelope, cost,
    angle bounds, then thermal limits (the statistical model where the
    impedance and a shared nominal voltage allow it, the analytic upper
    bound as the fallback). Thermal models only fill branches that have no
    limit; the generator models re-sample every applicable generator.
    """
    plan.validate()
    net.validate()
    rng = np.random.default_rng(plan.seed)
    base = net.base_mva
    report: list[ProvenanceRecord] = []

    fuels: dict[int, FuelType] = {}
    if plan.gf_stat:
        bins = plan.bins if plan.bins is not None else load_default_bins()
        bins.validate()
        for gid in sorted(net.gens):
            g = net.gens[gid]
            fuel = classify_fuel(g.p_max * base, g.p_min * base, bins, rng)
            fuels[gid] = fuel
            report.append(
                ProvenanceRecord("GF-Stat", f"gen {gid}", "fuel", None, fuel.value)
            )

    gens = dict(net.gens)
    if plan.ag_stat:
        for gid in sorted(gens):
            g = gens[gid]
            if fuels[gid] == FuelType.SYNC:
                continue
            new_mw = sample_active_capacity(fuels[gid], g.p_max * base, rng)
            report.append(
                ProvenanceRecord(
                    "AG-Stat", f"gen {gid}", "p_max_mw", g.p_max * base, new_mw
                )
            )
            gens[gid] = replace(g, p_max=new_mw / base)

    if plan.rg_am50:
        for gid in sorted(gens):
            g = gens[gid]
            nameplate = g.p_max * base
            if nameplate <= 0.0:
                continue  # no proxy; keep the given reactive bounds
            q_lo, q_hi = clamp_reactive_bounds(
                nameplate, g.q_min * base, g.q_max * base
            )
            if (q_lo, q_hi) != (g.q_min * base, g.q_max * base):
                report.append(
                    ProvenanceRecord(
                        "RG-AM50", f"gen {gid}", "q_bounds_mvar",
                        f"({g.q_min * base}, {g.q_max * base})",
                        f"({q_lo}, {q_hi})",
                    )
                )
            gens[gid] = replace(g, q_min=q_lo / base, q_max=q_hi / base)

    if plan.ac_stat:
        for gid in sorted(gens):
            g = gens[gid]
            price = sample_cost(fuels[gid], rng)  # $/MWh
            report.append(
                ProvenanceRecord(
                    "AC-Stat", f"gen {gid}", "cost_c1_per_mwh",
                    g.cost_c1 / base, price,
                )
            )
            gens[gid] = replace(
                g, cost_c2=0.0, cost_c1=price * base, cost_c0=0.0
            )

    out = replace(net, gens=gens)

    if plan.angle_bound_deg is not None:
        for br in out.branches:
            report.append(
                ProvenanceRecord(
                    "angle-bound", f"branch {br.id}", "angle_bounds_deg",
                    f"({math.degrees(br.angle_min):g}, "
                    f"{math.degrees(br.angle_max):g})",
                    f"(-{plan.angle_bound_deg:g}, {plan.angle_bound_deg:g})",
                )
            )
        out = apply_angle_bounds(out, plan.angle_bound_deg)

    if plan.tl_stat or plan.tl_ub:
        branches = list(out.branches)
        for i, br in enumerate(branches):
            if br.s_max is not None:
                continue
            new_pu = None
            model = None
            if plan.tl_stat:
                kv_i = out.buses[br.from_bus].base_kv
                kv_j = out.buses[br.to_bus].base_kv
                if kv_i == kv_j:
                    mva = thermal_limit_stat(br.r, br.x, kv_i)
                    if mva is not None:
                        new_pu = mva / base
                        model = "TL-Stat"
            if new_pu is None and plan.tl_ub:
                vu_i = out.buses[br.from_bus].v_max
                vu_j = out.buses[br.to_bus].v_max
                theta_m = max(abs(br.angle_min), abs(br.angle_max))
                new_pu = thermal_limit_ub(
                    abs(br.series_admittance), vu_i, vu_j, theta_m
                )
                model = "TL-UB"
            if new_pu is not None:
                report.append(
                    ProvenanceRecord(
                        model, f"branch {br.id}", "s_max_mva", None,
                        new_pu * base,
                    )
                )
                branches[i] = replace(br, s_max=new_pu, i_max=new_pu)
        out = replace(out, branches=tuple(branches))

    out.validate()
    return out, report
