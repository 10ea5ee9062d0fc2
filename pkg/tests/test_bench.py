import pytest

from opfbench.bench import (
    BenchOptions,
    GapError,
    GapRecord,
    format_table,
    optimality_gap,
    records_from_csv,
    records_to_csv,
    run_benchmark,
    run_case,
)
from opfbench.ipm import SolverStatus

from conftest import fixture_path


def test_optimality_gap_examples():
    assert optimality_gap(100.0, 99.0) == pytest.approx(1.0)
    assert optimality_gap(123.4, 123.4) == 0.0
    # a published pair: 1.7552e4 against 1.4998e4 rounds to 14.55
    assert optimality_gap(1.7552e4, 1.4998e4) == pytest.approx(14.55, abs=0.005)
    with pytest.raises(GapError):
        optimality_gap(0.0, -1.0)
    with pytest.raises(GapError):
        optimality_gap(-5.0, -6.0)


def make_record(**overrides):
    base = dict(
        case="toy",
        n_bus=5,
        n_branch=6,
        ac_objective=17551.89,
        soc_objective=14999.71,
        gap_percent=14.54,
        ac_runtime=0.42,
        soc_runtime=1.67,
        ac_status=SolverStatus.OPTIMAL,
        soc_status=SolverStatus.OPTIMAL,
    )
    base.update(overrides)
    return GapRecord(**base)


def test_gap_display_conventions():
    assert make_record().gap_display == "14.54"
    assert make_record(
        soc_status=SolverStatus.INFEASIBLE, soc_objective=None, gap_percent=None
    ).gap_display == "inf."
    assert make_record(
        ac_status=SolverStatus.ITERATION_LIMIT, ac_objective=None, gap_percent=None
    ).gap_display == "n.s."
    assert make_record(
        ac_status=SolverStatus.ITERATION_LIMIT, ac_objective=None
    ).ac_display == "n.s."
    assert make_record().ac_display == "1.7552e+04"


def test_format_table_layout():
    text = format_table([make_record(), make_record(case="toy_b", ac_runtime=12.3)])
    lines = text.splitlines()
    assert lines[0].split() == ["Case", "|N|", "|E|", "AC", "($/h)",
                                "Gap", "(%)", "AC", "(s)", "SOC", "(s)"]
    assert set(lines[1]) <= {"-", " "}
    assert "<1" in lines[2]  # sub-second runtime convention
    assert "12" in lines[3]
    # every row aligns to the same width
    assert len({len(l) for l in lines}) == 1


def test_csv_roundtrip():
    records = [
        make_record(),
        make_record(case="unsolved", ac_objective=None, soc_objective=None,
                    gap_percent=None, ac_runtime=None, soc_runtime=None,
                    ac_status=SolverStatus.NUMERICAL_FAILURE,
                    soc_status="skipped"),
    ]
    again = records_from_csv(records_to_csv(records))
    assert again == records


def test_run_case_on_fixture():
    rec = run_case(str(fixture_path("pglib_opf_case5_pjm")))
    assert rec.ac_status == SolverStatus.OPTIMAL
    assert rec.soc_status == SolverStatus.OPTIMAL
    assert rec.n_bus == 5 and rec.n_branch == 6
    assert rec.ac_objective == pytest.approx(1.7552e4, rel=1e-3)
    assert rec.gap_percent == pytest.approx(14.55, abs=0.25)
    assert rec.gap_percent >= 0.0


def test_run_case_ac_only_skips_relaxation():
    rec = run_case(
        str(fixture_path("pglib_opf_case5_pjm")), BenchOptions(mode="ac")
    )
    assert rec.soc_status == "skipped"
    assert rec.soc_objective is None and rec.gap_percent is None
    assert rec.gap_display == "n.s."


def test_run_benchmark_preserves_input_order():
    paths = [
        str(fixture_path("pglib_opf_case14_ieee")),
        str(fixture_path("pglib_opf_case5_pjm")),
    ]
    recs = run_benchmark(paths, BenchOptions(mode="ac"))
    assert [r.n_bus for r in recs] == [14, 5]


def test_dominance_violation_aborts(monkeypatch):
    import opfbench.bench as bench

    class FakeReport:
        status = SolverStatus.OPTIMAL

        def __init__(self, obj):
            self.objective = obj

    objectives = iter([100.0, 103.0])  # relaxation above the feasible cost

    monkeypatch.setattr(
        bench, "solve", lambda prob, opts: FakeReport(next(objectives))
    )
    with pytest.raises(GapError):
        bench.run_case(str(fixture_path("pglib_opf_case5_pjm")))
