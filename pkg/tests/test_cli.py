import pytest

from opfbench.bench import records_from_csv
from opfbench.cli import main
from opfbench.matpower import parse_case_file
from opfbench.network import build_network

from conftest import fixture_path

CASE5 = str(fixture_path("pglib_opf_case5_pjm"))
CASE14 = str(fixture_path("pglib_opf_case14_ieee"))


def test_bench_table_output(capsys):
    rc = main(["bench", CASE5, "--mode", "both"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "pglib_opf_case5_pjm" in out
    assert "Gap (%)" in out
    assert "1.7552e+04" in out


def test_bench_csv_output(capsys):
    rc = main(["bench", CASE5, CASE14, "--mode", "ac", "--out", "csv"])
    out = capsys.readouterr().out
    assert rc == 0
    records = records_from_csv(out)
    assert [r.n_bus for r in records] == [5, 14]
    assert all(r.soc_status == "skipped" for r in records)


def test_solve_dumps_solution(capsys):
    rc = main(["solve", CASE5, "--mode", "ac"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "status        optimal" in out
    assert "objective" in out and "$/h" in out
    assert "bus   vm (p.u.)" in out


def test_solve_soc_mode(capsys):
    rc = main(["solve", CASE5, "--mode", "soc"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "status        optimal" in out


def test_complete_writes_case_and_provenance(tmp_path, capsys):
    out_file = tmp_path / "case14_filled.m"
    rc = main([
        "complete", CASE14, str(out_file),
        "--gf-stat", "--ag-stat", "--rg-am50", "--ac-stat",
        "--tl-stat", "--tl-ub", "--angle-bound", "30", "--seed", "7",
    ])
    assert rc == 0
    assert out_file.exists()
    log = tmp_path / "case14_filled.provenance.txt"
    assert log.exists()
    assert "GF-Stat" in log.read_text()
    net = build_network(parse_case_file(str(out_file)))
    net.validate()
    assert all(b.s_max is not None for b in net.branches)


def test_variant_writes_named_case(tmp_path, capsys):
    rc = main([
        "variant", CASE5, "sad", "--out-dir", str(tmp_path), "--seed", "1",
    ])
    assert rc == 0
    out_file = tmp_path / "pglib_opf_case5_pjm__sad.m"
    assert out_file.exists()
    assert (tmp_path / "pglib_opf_case5_pjm__sad.log").exists()
    raw = parse_case_file(str(out_file))
    assert raw.name == "pglib_opf_case5_pjm__sad"
    net = build_network(raw)
    # every branch carries the tightened symmetric bound
    bounds = {(-b.angle_min, b.angle_max) for b in net.branches}
    assert len(bounds) == 1
    theta = bounds.pop()[1]
    assert 0.0 < theta < 0.52


def test_unknown_subcommand_rejected():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
