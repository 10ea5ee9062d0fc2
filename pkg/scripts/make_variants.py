#!/usr/bin/env python3
"""Generate the congested (api) and angle-tightened (sad) stress variants
of a fixture and report how each one moves the AC optimum."""

import argparse
import pathlib
import sys

from opfbench.acopf import build_acopf
from opfbench.ipm import solve
from opfbench.matpower import parse_case_file
from opfbench.network import build_network
from opfbench.variants import VariantConfig, generate_api, generate_sad

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("case", nargs="?", default="pglib_opf_case5_pjm")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    net = build_network(parse_case_file(str(FIXTURES / f"{args.case}.m")))
    base = solve(build_acopf(net))
    print(f"{args.case}: base AC objective {base.objective:.4e} $/h")

    api = generate_api(net, VariantConfig(kind="api", seed=args.seed))
    api_obj = solve(build_acopf(api.case)).objective
    print(f"  api: demand scale {api.alpha:.4f}, "
          f"{len(api.expanded_gens)} generators expanded, "
          f"objective {api_obj:.4e} $/h")

    sad = generate_sad(net, VariantConfig(kind="sad", seed=args.seed))
    sad_obj = solve(build_acopf(sad.case)).objective
    print(f"  sad: angle bound {sad.theta_deg:.2f} deg, "
          f"objective {sad_obj:.4e} $/h")
    return 0


if __name__ == "__main__":
    sys.exit(main())
