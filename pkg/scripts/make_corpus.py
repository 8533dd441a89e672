"""Regenerate corpus/ job files.

Lift data is built as sigma of explicit root curves, so every expected
residual is exactly zero.  Run from the repository root:

    python scripts/make_corpus.py
"""

import json
from pathlib import Path

from invlift.invariants import InvariantSystem, sigma
from invlift.series import format_series, parse_series

OUT = Path(__file__).resolve().parent.parent / "corpus"


def data_from_roots(family, n, roots, nvars):
    sys = InvariantSystem(family, n)
    vals = sigma(sys, [parse_series(r, nvars=nvars) for r in roots])
    return [format_series(v) for v in vals]


def lift_job(name, family, n, nvars, f=None, roots=None, expect=None, trunc=8):
    if f is None:
        f = data_from_roots(family, n, roots, nvars)
    exp = {"residual": "exact", "checks_ok": True}
    if family != "symmetric_complex":
        exp["power_free"] = True
    exp.update(expect or {})
    job = {"name": name, "subcommand": "lift-curve" if nvars == 1 else "lift-surface",
           "system": {"family": family, "n": n}, "input": {"f": f},
           "options": {"truncation": trunc}, "expect": exp}
    if roots is not None:
        job["input"]["roots"] = roots
    return job


C, B = "symmetric_complex", "signed_perm_real"

JOBS = [
    # one parameter, complex
    lift_job("c2_puiseux_half", C, 2, 1, f=["0", "-t"], expect={"chart_count": 2, "gammas": [[2]]}),
    lift_job("c2_split_roots", C, 2, 1, f=["t+t^2", "t^3"], expect={"chart_count": 1, "power_free": True}),
    lift_job("c2_rational_pair", C, 2, 1, roots=["t", "-t+t^2"], expect={"chart_count": 1, "power_free": True}),
    lift_job("c2_three_halves", C, 2, 1, f=["0", "-t^3"], expect={"chart_count": 2, "gammas": [[2]]}),
    lift_job("c2_shifted_puiseux", C, 2, 1, f=["2*t", "t^2-t^3"], expect={"chart_count": 2, "gammas": [[2]]}),
    lift_job("c3_rational", C, 3, 1, roots=["t", "t^2", "-t"], expect={"chart_count": 1, "power_free": True}),
    lift_job("c3_recentred", C, 3, 1, roots=["1", "t", "t^2"], expect={"chart_count": 1, "power_free": True}),
    lift_job("c3_tangent", C, 3, 1, roots=["t", "t+t^2", "t^3"], expect={"chart_count": 1, "power_free": True}),
    lift_job("c3_cube_root", C, 3, 1, f=["0", "0", "t"], expect={"gammas": [[3]], "residual": "enclosed"}),
    lift_job("c4_rational", C, 4, 1, roots=["t", "-t", "2*t", "t^2"], expect={"chart_count": 1, "power_free": True}),
    lift_job("c4_two_clusters", C, 4, 1, roots=["1", "-1", "t", "-t"], expect={"chart_count": 1, "power_free": True}),
    lift_job("c4_fourth_root", C, 4, 1, f=["0", "0", "0", "-t"],
             expect={"gammas": [[4]], "residual": "enclosed"}),
    # two parameters, complex
    lift_job("c2_monomial", C, 2, 2, f=["0", "-x^2*y^2"], expect={"chart_count": 1, "power_free": True}),
    lift_job("c2_square_root_xy", C, 2, 2, f=["0", "-x*y"], expect={"chart_count": 4, "gammas": [[2, 2]]}),
    lift_job("c2_coordinate_roots", C, 2, 2, roots=["x", "y"]),
    lift_job("c3_coordinate_roots", C, 3, 2, roots=["x", "y", "x*y"]),
    lift_job("c4_symmetric_pairs", C, 4, 2, roots=["x", "-x", "y", "-y"]),
    # one parameter, real signed permutations
    lift_job("b1_square", B, 1, 1, f=["t^2"], expect={"chart_count": 1}),
    lift_job("b1_square_plus_quartic", B, 1, 1, f=["t^2+t^4"]),
    lift_job("b1_rational", B, 1, 1, roots=["t+t^2"], expect={"chart_count": 1}),
    lift_job("b2_rational", B, 2, 1, roots=["t", "t^2"], expect={"chart_count": 1}),
    lift_job("b2_recentred", B, 2, 1, roots=["1+t", "t"], expect={"chart_count": 1}),
    lift_job("b3_rational", B, 3, 1, roots=["t", "2*t", "t^3"], expect={"chart_count": 1}),
    lift_job("b3_mixed", B, 3, 1, roots=["1", "t", "t+t^2"], expect={"chart_count": 1}, trunc=16),
    # two parameters, real signed permutations
    lift_job("b1_sum_of_squares", B, 1, 2, f=["x^2+y^2"]),
    lift_job("b2_coordinates", B, 2, 2, roots=["x", "y"]),
    lift_job("b2_product", B, 2, 2, roots=["x", "x*y"]),
    lift_job("b3_coordinates", B, 3, 2, roots=["x", "y", "x+y"]),
    # invariant systems
    {"name": "describe_c3", "subcommand": "describe", "system": {"family": C, "n": 3},
     "expect": {"D": 6, "degrees": [1, 2, 3], "group_order": 6,
                "generators": ["e1(x)", "e2(x)", "e3(x)"]}},
    {"name": "describe_b3", "subcommand": "describe", "system": {"family": B, "n": 3},
     "expect": {"D": 48, "degrees": [2, 4, 6], "group_order": 48,
                "generators": ["e1(x^2)", "e2(x^2)", "e3(x^2)"]}},
    {"name": "describe_a3", "subcommand": "describe",
     "system": {"family": "symmetric_real_trace_zero", "n": 4},
     "expect": {"D": 24, "degrees": [2, 3, 4], "group_order": 24,
                "generators": ["p2(x)", "p3(x)", "p4(x)"]}},
    # membership
    {"name": "member_b1_negative", "subcommand": "check-membership", "system": {"family": B, "n": 1},
     "input": {"z": ["-1"]}, "expect": {"verdict": "outside"}},
    {"name": "member_b1_positive", "subcommand": "check-membership", "system": {"family": B, "n": 1},
     "input": {"z": ["2"]}, "expect": {"verdict": "inside"}},
    {"name": "member_b2_discriminant", "subcommand": "check-membership", "system": {"family": B, "n": 2},
     "input": {"z": ["1", "1"]}, "expect": {"verdict": "outside"}},
    {"name": "member_b2_inside", "subcommand": "check-membership", "system": {"family": B, "n": 2},
     "input": {"z": ["5", "4"]}, "expect": {"verdict": "inside"}},
    # resolution fixtures
    {"name": "resolve_node", "subcommand": "resolve", "input": {"f": ["x*y"]},
     "expect": {"certificates_ok": True, "descent_ok": True, "leaves": 1}},
    {"name": "resolve_two_lines", "subcommand": "resolve", "input": {"f": ["x^2-y^2"]},
     "expect": {"certificates_ok": True, "descent_ok": True}},
    {"name": "resolve_cusp", "subcommand": "resolve", "input": {"f": ["y^2-x^3"]},
     "expect": {"certificates_ok": True, "descent_ok": True}},
    {"name": "resolve_cusp_and_line", "subcommand": "resolve", "input": {"f": ["y^2-x^3", "x-y"]},
     "expect": {"certificates_ok": True, "descent_ok": True}},
]


def main():
    OUT.mkdir(exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    for job in JOBS:
        (OUT / f"{job['name']}.json").write_text(json.dumps(job, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(JOBS)} jobs to {OUT}")


if __name__ == "__main__":
    main()
