#!/usr/bin/env python3
"""Derive the polar index sets of a running binary design and freeze them.

Two schemes share the machinery: the joint design (noisy-link coordination,
the default) and the separate design (identity link; legs picked by the
separate operating point for a target BSC(p) over BSC(p_o)).  Writes
tests/fixtures/{prefix}_n{N}.json so the tests get a real construction
without re-running the Monte Carlo profiler.
"""

import argparse
import pathlib
import sys

import numpy as np

from polarcoord.polar import SetThresholds, derive_sets, estimate_entropy_profile
from polarcoord.polar.sets import sets_to_json
from polarcoord.rate_region import bsc_example_design
from polarcoord.sep import separate_operating_point


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scheme", choices=("joint", "separate"), default="joint")
    parser.add_argument("--n", type=int, default=1024)
    parser.add_argument("--delta", type=float, default=0.1)
    parser.add_argument("--mc-samples", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=20_240)
    parser.add_argument("--p", type=float, default=0.4, help="separate scheme: target flip")
    parser.add_argument("--p-o", type=float, default=0.1, help="separate scheme: link flip")
    parser.add_argument("--margin", type=float, default=0.5, help="separate scheme: rate margin")
    parser.add_argument(
        "--out",
        type=pathlib.Path,
        default=None,
        help="default: tests/fixtures/{sets|sep_sets}_n{N}.json",
    )
    args = parser.parse_args(argv)

    if args.scheme == "joint":
        design = bsc_example_design(p1=0.375, alpha=0.0, beta=1.0, p_o=0.1)
        prefix = "sets"
    else:
        p1, p2 = separate_operating_point(args.p, args.p_o, args.margin)
        design = bsc_example_design(p1, p2, 0.0, 0.0)
        prefix = "sep_sets"
    thresholds = SetThresholds(delta=args.delta, mc_samples=args.mc_samples)
    profile = estimate_entropy_profile(
        design, args.n, thresholds, np.random.default_rng(args.seed)
    )
    sets = derive_sets(profile, thresholds)

    out = args.out
    if out is None:
        root = pathlib.Path(__file__).resolve().parents[1]
        out = root / "tests" / "fixtures" / f"{prefix}_n{args.n}.json"
    out.write_text(sets_to_json(sets))
    for name in (
        "fresh_rand", "reused_rand", "hidden_fresh", "hidden_reused",
        "carry", "info", "act_local", "act_shared", "act_from_input",
        "synth_uniform",
    ):
        print(f"{name:>16}: {sets.size(name)}")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
