#!/usr/bin/env python3
"""Run the full verification battery and print a result table.

Every functional identity the library rests on is checked by Monte
Carlo against its closed form: the Poisson Campbell identity, the
Polya integration-by-parts formula on both sampling routes, the
forward/backward conjugacy agreement, the mixed-process identity with
plug-in coefficients, and the deterministic transform identities.
Exits nonzero if any check fails.

Usage: python scripts/run_checks.py [--n 20000] [--seed 0] [--eps 1e-6]
"""

import argparse
import sys

import numpy as np

from polyasum import (MixingMeasure, PolyaParams, ReferenceMeasure, RngSeed,
                      TestFunction, Window, check_conjugacy,
                      check_transform_identity, check_mecke, check_mixed_ibp,
                      check_polya_ibp)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eps", type=float, default=1e-6)
    args = ap.parse_args()

    window = Window.interval(0.0, 1.0, 4)
    rho = ReferenceMeasure.uniform(window, 2.0)
    params = PolyaParams(0.5, rho)
    f = TestFunction.constant(window, 1.0)
    g = TestFunction(window, np.array([0.3, 0.0, 0.8, 1.4]))
    h = TestFunction(window, np.array([0.2, 0.6, 0.0, 0.4]))
    mixing = MixingMeasure(ReferenceMeasure.uniform(window, 500.0),
                           ((0.3, 1.0, 0.5), (0.7, 1.0, 0.5)))

    reports = [
        check_transform_identity(200, RngSeed(args.seed, stream=0)),
        check_mecke(rho, f, g, args.n, RngSeed(args.seed, stream=1)),
        check_polya_ibp(params, "direct", f, g, args.n,
                        RngSeed(args.seed, stream=2)),
        check_polya_ibp(params, "cox", f, g, args.n,
                        RngSeed(args.seed, stream=3), eps=args.eps,
                        name="polya-ibp-cox"),
        check_conjugacy(params, g, h, args.eps, args.n,
                        RngSeed(args.seed, stream=4)),
        check_mixed_ibp(mixing, f, TestFunction.constant(window, 0.0),
                        max(args.n // 2, 1000),
                        RngSeed(args.seed, stream=5)),
    ]
    for report in reports:
        print(report.summary_line())
        print(f"     runtime {report.runtime:.2f}s, details: "
              f"{report.details}")
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print(f"\nFAILED: {', '.join(failed)}")
        return 1
    print(f"\nall {len(reports)} checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
