import math

import pytest

from opfbench.acopf import build_acopf, check_feasibility, vector_to_point
from opfbench.completion import apply_angle_bounds
from opfbench.ipm import SolverStatus, feasibility_phase, solve
from opfbench.variants import (
    ApiResult,
    SadResult,
    VariantConfig,
    VariantError,
    generate_api,
    generate_sad,
    max_loadability,
)

from conftest import make_two_bus


def test_config_validation():
    with pytest.raises(VariantError):
        VariantConfig(kind="bogus").validate()
    with pytest.raises(VariantError):
        VariantConfig(sad_tolerance_rad=0.0).validate()
    VariantConfig(kind="sad").validate()


def test_two_bus_loadability_near_capacity_ratio():
    # 50 MW of demand behind a 100 MVA line on a nearly lossless branch:
    # the line rating caps the uniform scale at about 2
    net = make_two_bus(pd=50.0, rate=100.0, pmax=500.0)
    alpha, x = max_loadability(net)
    assert alpha == pytest.approx(2.0, rel=0.01)
    assert x[-1] == alpha


def test_loadability_rejects_zero_demand():
    net = make_two_bus(pd=0.0)
    with pytest.raises(VariantError):
        max_loadability(net)


def test_api_scales_active_demand_only(case5):
    res = generate_api(case5, VariantConfig(kind="api", seed=3))
    assert isinstance(res, ApiResult)
    assert res.alpha > 1.0
    for bid, bus in res.case.buses.items():
        orig = case5.buses[bid]
        assert bus.demand.real == pytest.approx(res.alpha * orig.demand.real)
        assert bus.demand.imag == orig.demand.imag
    # expanded generators got new headroom and a linear cost
    for gid in res.expanded_gens:
        assert res.case.gens[gid].p_max > case5.gens[gid].p_max
        assert res.case.gens[gid].cost_c2 == 0.0
    assert any("demand scale" in line for line in res.log)


def test_api_case_is_feasible_and_pricier(case5):
    res = generate_api(case5, VariantConfig(kind="api", seed=3))
    base_obj = solve(build_acopf(case5)).objective
    rep = solve(build_acopf(res.case))
    assert rep.status == SolverStatus.OPTIMAL
    pt = vector_to_point(res.case, rep.x)
    assert check_feasibility(res.case, pt, tol=1e-6).feasible
    # serving more demand cannot be cheaper under the same network
    assert rep.objective > base_obj


def test_api_deterministic(case5):
    r1 = generate_api(case5, VariantConfig(kind="api", seed=11))
    r2 = generate_api(case5, VariantConfig(kind="api", seed=11))
    assert r1.alpha == r2.alpha
    assert r1.expanded_gens == r2.expanded_gens
    assert r1.case == r2.case


def test_sad_bracket_and_tightness(case5):
    cfg = VariantConfig(kind="sad", sad_tolerance_rad=1e-3)
    res = generate_sad(case5, cfg)
    assert isinstance(res, SadResult)
    assert 0.0 < res.theta_rad <= math.radians(30.0)
    assert res.theta_rad - res.infeasible_theta_rad <= cfg.sad_tolerance_rad

    # the returned bound admits a power flow; the bracket witness does not
    ok = feasibility_phase(build_acopf(res.case))
    assert ok.status == SolverStatus.OPTIMAL
    if res.infeasible_theta_rad > 0.0:
        tight = apply_angle_bounds(case5, math.degrees(res.infeasible_theta_rad))
        bad = feasibility_phase(build_acopf(tight))
        assert bad.status == SolverStatus.INFEASIBLE

    # constraining angles can only raise the optimal cost
    base_obj = solve(build_acopf(case5)).objective
    var_obj = solve(build_acopf(res.case)).objective
    assert var_obj >= base_obj * (1 - 1e-8)


def test_sad_only_touches_angle_bounds(case5):
    res = generate_sad(case5, VariantConfig(kind="sad"))
    assert res.case.buses == case5.buses
    assert res.case.gens == case5.gens
    for out, orig in zip(res.case.branches, case5.branches):
        assert out.angle_max == -out.angle_min == res.theta_rad
        assert (out.r, out.x, out.s_max) == (orig.r, orig.x, orig.s_max)
