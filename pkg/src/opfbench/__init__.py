"""AC-OPF benchmark curation toolkit.

Parses Matpower cases, fills missing generator / cost / thermal-limit data
with statistical models, solves the AC-OPF problem and its second-order
cone relaxation with an in-repo interior-point solver, generates congested
(API) and angle-constrained (SAD) variants, and reports optimality gaps.
"""

from opfbench.acopf import (
    FlowLimitMode,
    OperatingPoint,
    build_acopf,
    build_max_loadability,
    check_feasibility,
    objective_value,
)
from opfbench.bench import BenchOptions, GapRecord, optimality_gap, run_benchmark
from opfbench.completion import CompletionPlan, FuelType, complete_case
from opfbench.ipm import SolveReport, SolverOptions, feasibility_phase, solve
from opfbench.matpower import RawCase, parse_case, parse_case_file, write_case
from opfbench.network import NetworkCase, build_network
from opfbench.nlp import NlpProblem, check_derivatives
from opfbench.soc import build_soc, recover_point_estimate
from opfbench.variants import VariantConfig, generate_api, generate_sad, max_loadability

__all__ = [
    "RawCase",
    "parse_case",
    "parse_case_file",
    "write_case",
    "NetworkCase",
    "build_network",
    "NlpProblem",
    "check_derivatives",
    "FlowLimitMode",
    "OperatingPoint",
    "build_acopf",
    "build_max_loadability",
    "check_feasibility",
    "objective_value",
    "build_soc",
    "recover_point_estimate",
    "SolverOptions",
    "SolveReport",
    "solve",
    "feasibility_phase",
    "FuelType",
    "CompletionPlan",
    "complete_case",
    "VariantConfig",
    "max_loadability",
    "generate_api",
    "generate_sad",
    "BenchOptions",
    "GapRecord",
    "optimality_gap",
    "run_benchmark",
]

__version__ = "0.1.0"
