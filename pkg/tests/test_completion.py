import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opfbench.acopf import OperatingPoint, branch_flow
from opfbench.completion import (
    CompletionError,
    CompletionPlan,
    FuelBinTable,
    FuelType,
    apply_angle_bounds,
    classify_fuel,
    clamp_reactive_bounds,
    complete_case,
    load_default_bins,
    sample_active_capacity,
    sample_cost,
    thermal_limit_stat,
    thermal_limit_ub,
)

from conftest import load_network


@pytest.fixture(scope="module")
def bins():
    return load_default_bins()


def test_sync_classification(bins):
    rng = np.random.default_rng(0)
    assert classify_fuel(0.0, 0.0, bins, rng) == FuelType.SYNC


def test_degenerate_bin_is_deterministic():
    table = FuelBinTable(
        edges=(math.inf,), probabilities=({FuelType.NUC: 1.0},)
    )
    table.validate()
    for seed in range(20):
        rng = np.random.default_rng(seed)
        assert classify_fuel(800.0, 0.0, table, rng) == FuelType.NUC


def test_weighted_die_frequencies():
    table = FuelBinTable(
        edges=(math.inf,),
        probabilities=({FuelType.PEL: 0.3, FuelType.NG: 0.7},),
    )
    rng = np.random.default_rng(123)
    n = 10**5
    draws = [classify_fuel(100.0, 0.0, table, rng) for _ in range(n)]
    freq = sum(1 for d in draws if d == FuelType.PEL) / n
    assert freq == pytest.approx(0.3, abs=0.01)


def test_bin_table_validation():
    with pytest.raises(CompletionError):
        FuelBinTable(edges=(100.0,), probabilities=({FuelType.NG: 0.5},)).validate()
    with pytest.raises(CompletionError):
        FuelBinTable(
            edges=(math.inf,), probabilities=({FuelType.SYNC: 1.0},)
        ).validate()


def test_capacity_sample_moments():
    rng = np.random.default_rng(7)
    n = 10**5
    cow = np.array([sample_active_capacity(FuelType.COW, 0.0, rng) for _ in range(n)])
    assert cow.mean() == pytest.approx(1.0 / 0.003201, rel=0.02)
    nuc = np.array([sample_active_capacity(FuelType.NUC, 0.0, rng) for _ in range(n)])
    assert nuc.mean() == pytest.approx(1044.56, rel=0.01)
    assert nuc.std() == pytest.approx(219.27, rel=0.02)


def test_capacity_rejection_condition():
    # thresholds chosen so acceptance stays likely enough to test quickly
    rng = np.random.default_rng(11)
    cases = [
        (FuelType.PEL, 150.0),
        (FuelType.NG, 400.0),
        (FuelType.COW, 500.0),
        (FuelType.NUC, 1200.0),
    ]
    for fuel, threshold in cases:
        for _ in range(200):
            assert sample_active_capacity(fuel, threshold, rng) > threshold


def test_cost_sample_moments():
    rng = np.random.default_rng(13)
    n = 10**5
    nuc = np.array([sample_cost(FuelType.NUC, rng) for _ in range(n)])
    assert nuc.mean() == pytest.approx(7.2504, rel=0.02)
    assert nuc.std() == pytest.approx(0.7534, rel=0.02)
    pel = np.array([sample_cost(FuelType.PEL, rng) for _ in range(n)])
    assert pel.mean() == pytest.approx(111.3398, rel=0.01)
    assert sample_cost(FuelType.SYNC, rng) == 0.0


def test_cost_draws_nonnegative():
    rng = np.random.default_rng(17)
    draws = [sample_cost(FuelType.COW, rng) for _ in range(5000)]
    assert min(draws) >= 0.0


def test_reactive_clamp_examples():
    assert clamp_reactive_bounds(100.0, -80.0, 80.0) == (-50.0, 50.0)
    assert clamp_reactive_bounds(100.0, -30.0, 30.0) == (-30.0, 30.0)
    assert clamp_reactive_bounds(100.0, -80.0, 20.0) == (-50.0, 20.0)


@settings(max_examples=300, deadline=None)
@given(
    nameplate=st.floats(min_value=0.0, max_value=1e4),
    q_lo=st.floats(min_value=-1e4, max_value=1e4),
    q_hi=st.floats(min_value=-1e4, max_value=1e4),
)
def test_reactive_clamp_envelope(nameplate, q_lo, q_hi):
    if q_lo > q_hi:
        q_lo, q_hi = q_hi, q_lo
    lo, hi = clamp_reactive_bounds(nameplate, q_lo, q_hi)
    assert lo >= max(q_lo, -0.5 * nameplate)
    assert hi <= min(q_hi, 0.5 * nameplate)
    assert lo >= q_lo and hi <= q_hi


def test_thermal_limit_stat_oracle_values():
    # frozen values from independent high-precision evaluation of the fit
    assert thermal_limit_stat(1.0, 1.0, 100.0) == pytest.approx(
        0.6166647152687679, rel=1e-6
    )
    assert thermal_limit_stat(0.1, 1.0, 100.0) == pytest.approx(
        1.85032961291798, rel=1e-6
    )
    # linearity in the nominal voltage
    assert thermal_limit_stat(1.0, 1.0, 200.0) == pytest.approx(
        2 * thermal_limit_stat(1.0, 1.0, 100.0)
    )
    assert thermal_limit_stat(0.0, 1.0, 100.0) is None
    assert thermal_limit_stat(1.0, -1.0, 100.0) is None
    assert thermal_limit_stat(1.0, 1.0, 0.0) is None


def test_thermal_limit_ub_oracle_values():
    assert thermal_limit_ub(10.0, 1.0, 1.0, 0.0) == 0.0
    got = thermal_limit_ub(10.0, 1.1, 1.1, math.radians(30.0))
    assert got == pytest.approx(6.263420891481004, rel=1e-6)
    # equivalent complex form: vu_i |Y| |vu_i - vu_j e^{i theta}|
    alt = 1.1 * 10.0 * abs(1.1 - 1.1 * complex(math.cos(math.radians(30)),
                                               math.sin(math.radians(30))))
    assert got == pytest.approx(alt, rel=1e-12)
    assert thermal_limit_ub(10.0, 1.1, 0.0, 1.0) == pytest.approx(1.21 * 10.0)


def test_thermal_limit_ub_never_cuts_feasible_operation(case5):
    """Any point inside the voltage and angle boxes has |S_from| within
    the analytic limit on every branch."""
    rng = np.random.default_rng(31)
    for _ in range(50):
        pt = OperatingPoint(
            vm={b.id: rng.uniform(b.v_min, b.v_max) for b in case5.buses.values()},
            va={b: 0.0 for b in case5.buses},
            pg={g: 0.0 for g in case5.gens},
            qg={g: 0.0 for g in case5.gens},
        )
        # assign angles so every branch difference respects its bounds
        order = sorted(case5.buses)
        for b in order:
            pt.va[b] = rng.uniform(-0.05, 0.05)
        for br in case5.branches:
            diff = pt.va[br.from_bus] - pt.va[br.to_bus]
            assert br.angle_min <= diff <= br.angle_max
            vu_i = case5.buses[br.from_bus].v_max
            vu_j = case5.buses[br.to_bus].v_max
            theta_m = max(abs(br.angle_min), abs(br.angle_max))
            limit = thermal_limit_ub(
                abs(br.series_admittance), vu_i, vu_j, theta_m
            )
            flow = abs(branch_flow(case5, pt, br.id, "from"))
            assert flow <= limit * (1 + 1e-9) + 1e-9


def test_apply_angle_bounds_uniform_and_idempotent(case14):
    out = apply_angle_bounds(case14, 10.0)
    rad = math.radians(10.0)
    assert all(b.angle_min == -rad and b.angle_max == rad for b in out.branches)
    again = apply_angle_bounds(out, 10.0)
    assert again.branches == out.branches
    with pytest.raises(CompletionError):
        apply_angle_bounds(case14, 95.0)


def test_identity_plan_is_identity(case14):
    out, report = complete_case(case14, CompletionPlan())
    assert out == case14
    assert report == []


def test_full_plan_fills_everything():
    # strip the ratings first so the thermal models have gaps to fill
    import dataclasses

    net = load_network("pglib_opf_case14_ieee")
    stripped = dataclasses.replace(
        net,
        branches=tuple(
            dataclasses.replace(b, s_max=None, i_max=None) for b in net.branches
        ),
    )
    plan = CompletionPlan(
        gf_stat=True, ag_stat=True, rg_am50=True, ac_stat=True,
        tl_stat=True, tl_ub=True, angle_bound_deg=30.0, seed=42,
    )
    out, report = complete_case(stripped, plan)
    out.validate()
    assert all(b.s_max is not None for b in out.branches)
    assert all(
        g.cost_c1 > 0 or g.p_max == g.p_min == 0 for g in out.gens.values()
    )
    models = {r.model for r in report}
    assert {"GF-Stat", "AG-Stat", "AC-Stat", "angle-bound"} <= models
    assert "TL-Stat" in models or "TL-UB" in models


def test_completion_deterministic(case14):
    plan = CompletionPlan(
        gf_stat=True, ag_stat=True, rg_am50=True, ac_stat=True, seed=7
    )
    out1, rep1 = complete_case(case14, plan)
    out2, rep2 = complete_case(case14, plan)
    assert out1 == out2
    assert [str(r) for r in rep1] == [str(r) for r in rep2]


def test_ag_stat_grows_every_limit(case14):
    plan = CompletionPlan(gf_stat=True, ag_stat=True, seed=1)
    out, _ = complete_case(case14, plan)
    for gid, g in case14.gens.items():
        if g.p_max == g.p_min == 0:
            assert out.gens[gid].p_max == g.p_max
        else:
            assert out.gens[gid].p_max > g.p_max


def test_rg_am50_respects_envelope(case14):
    plan = CompletionPlan(rg_am50=True, seed=1)
    out, _ = complete_case(case14, plan)
    for gid, g in out.gens.items():
        orig = case14.gens[gid]
        if orig.p_max <= 0:
            assert (g.q_min, g.q_max) == (orig.q_min, orig.q_max)
        else:
            assert g.q_max <= 0.5 * g.p_max + 1e-12
            assert g.q_min >= -0.5 * g.p_max - 1e-12
            assert g.q_min >= orig.q_min and g.q_max <= orig.q_max


def test_plan_validation():
    with pytest.raises(CompletionError):
        CompletionPlan(ag_stat=True).validate()
    with pytest.raises(CompletionError):
        CompletionPlan(angle_bound_deg=120.0).validate()
