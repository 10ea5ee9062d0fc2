import pathlib

import pytest

from opfbench.matpower import parse_case, parse_case_file
from opfbench.network import build_network

FIXTURE_DIR = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

SMALL_CASES = [
    "pglib_opf_case3_lmbd",
    "pglib_opf_case5_pjm",
    "pglib_opf_case14_ieee",
    "pglib_opf_case24_ieee_rts",
    "pglib_opf_case30_ieee",
]
VARIANT_CASES = [
    "pglib_opf_case5_pjm__api",
    "pglib_opf_case14_ieee__api",
    "pglib_opf_case3_lmbd__sad",
    "pglib_opf_case14_ieee__sad",
]
LARGE_CASE = "pglib_opf_case118_ieee"
ALL_CASES = SMALL_CASES + VARIANT_CASES + [LARGE_CASE]


def fixture_path(name: str) -> str:
    return str(FIXTURE_DIR / f"{name}.m")


def load_raw(name: str):
    return parse_case_file(fixture_path(name))


def load_network(name: str):
    return build_network(load_raw(name))


TWO_BUS_TEMPLATE = """\
function mpc = case2
mpc.version = '2';
mpc.baseMVA = 100.0;
mpc.bus = [
\t1\t3\t0.0\t0.0\t0.0\t0.0\t1\t1.0\t0.0\t135.0\t1\t1.05\t0.95;
\t2\t1\t{pd}\t{qd}\t0.0\t0.0\t1\t1.0\t0.0\t135.0\t1\t1.05\t0.95;
];
mpc.gen = [
\t1\t0.0\t0.0\t{qmax}\t{qmin}\t1.0\t100.0\t1\t{pmax}\t0.0;
];
mpc.gencost = [
\t2\t0.0\t0.0\t3\t0.0\t10.0\t0.0;
];
mpc.branch = [
\t1\t2\t{r}\t{x}\t0.0\t{rate}\t0.0\t0.0\t0.0\t0.0\t1\t-30.0\t30.0;
];
"""


def make_two_bus(pd=50.0, qd=0.0, pmax=300.0, qmin=-200.0, qmax=200.0,
                 r=0.0001, x=0.05, rate=100.0):
    """A radial 2-bus network: one generator feeding one load bus."""
    text = TWO_BUS_TEMPLATE.format(
        pd=pd, qd=qd, pmax=pmax, qmin=qmin, qmax=qmax, r=r, x=x, rate=rate
    )
    return build_network(parse_case(text))


@pytest.fixture(scope="session")
def case5():
    return load_network("pglib_opf_case5_pjm")


@pytest.fixture(scope="session")
def case14():
    return load_network("pglib_opf_case14_ieee")
