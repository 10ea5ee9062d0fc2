import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opfbench.matpower import (
    CaseFormatError,
    parse_case,
    write_case,
)

from conftest import ALL_CASES, load_raw


MINIMAL = """\
function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100.0;
mpc.bus = [
\t1\t3\t0.0\t0.0\t0.0\t0.0\t1\t1.0\t0.0\t135.0\t1\t1.05\t0.95;
];
mpc.gen = [
\t1\t10.0\t0.0\t30.0\t-30.0\t1.0\t100.0\t1\t40.0\t0.0;
];
mpc.gencost = [
\t2\t0.0\t0.0\t3\t0.01\t40.0\t0.0;
];
mpc.branch = [
];
"""


def test_parse_minimal_case():
    case = parse_case(MINIMAL)
    assert case.name == "tiny"
    assert case.base_mva == 100.0
    assert len(case.bus_rows) == 1
    assert case.bus_rows[0].bus_type == 3
    assert case.gen_rows[0].p_max == 40.0
    assert case.gencost_rows[0].coefficients == (0.01, 40.0, 0.0)
    assert case.branch_rows == ()


@pytest.mark.parametrize("name", ALL_CASES)
def test_fixture_roundtrip_identity(name):
    # parse(write(parse(text))) must equal parse(text) structurally
    first = load_raw(name)
    second = parse_case(write_case(first))
    assert first == second


def test_unknown_sections_survive_roundtrip():
    text = MINIMAL + (
        "mpc.bus_name = {\n\t'Alpha';\n\t'Beta';\n};\n"
        "mpc.areas = [\n\t1\t1;\n];\n"
    )
    case = parse_case(text)
    assert len(case.unknown_sections) == 2
    again = parse_case(write_case(case))
    assert again == case
    assert "bus_name" in write_case(case)


def test_missing_base_mva_rejected():
    broken = MINIMAL.replace("mpc.baseMVA = 100.0;\n", "")
    with pytest.raises(CaseFormatError):
        parse_case(broken)


def test_malformed_row_reports_line():
    broken = MINIMAL.replace(
        "\t1\t3\t0.0\t0.0\t0.0\t0.0\t1\t1.0\t0.0\t135.0\t1\t1.05\t0.95;",
        "\t1\t3\tnot_a_number;",
    )
    with pytest.raises(CaseFormatError):
        parse_case(broken)


finite_floats = st.floats(
    allow_nan=False, allow_infinity=False, width=64, min_value=-1e12, max_value=1e12
)


@settings(max_examples=200, deadline=None)
@given(pd=finite_floats, qd=finite_floats, r=finite_floats, x=finite_floats)
def test_numeric_fields_roundtrip_bit_faithfully(pd, qd, r, x):
    """Arbitrary float values in modeled columns survive write/parse."""
    text = MINIMAL.replace(
        "mpc.branch = [\n];",
        f"mpc.branch = [\n\t1\t1\t{r!r}\t{x!r}\t0.0\t0.0\t0.0\t0.0\t0.0\t0.0"
        f"\t1\t-30.0\t30.0;\n];",
    ).replace(
        "\t1\t3\t0.0\t0.0",
        f"\t1\t3\t{pd!r}\t{qd!r}",
    )
    case = parse_case(text)
    assert case.bus_rows[0].pd == pd
    assert case.bus_rows[0].qd == qd
    again = parse_case(write_case(case))
    assert again.bus_rows[0].pd == pd
    assert math.copysign(1, again.branch_rows[0].r) == math.copysign(1, r)
    assert again.branch_rows[0].r == r
    assert again.branch_rows[0].x == x
