#!/usr/bin/env python3
"""Emit the three headline curves as CSV into out/.

Runs the same code paths as the CLI subcommands fig1/fig2/fig3 at the
default operating point (G=10, N_T=2e6, N=2460): outcome distributions at
0% and 50% loss, Bob's error rate versus loss, and Eve's tap-inference
probability versus sampled fraction.
"""

import sys
from pathlib import Path

from macroqkd.cli import main

OUT = Path(__file__).resolve().parents[1] / "out"


def run() -> int:
    OUT.mkdir(exist_ok=True)
    jobs = [
        ["fig1", "--loss", "0", "--out", str(OUT / "fig1_distributions_eta0.csv")],
        ["fig1", "--loss", "0.5", "--out", str(OUT / "fig1_distributions_eta05.csv")],
        ["fig2", "--grid", "0:0.9:181", "--out", str(OUT / "fig2_error_vs_loss.csv")],
        ["fig3", "--grid", "0:1:201", "--out", str(OUT / "fig3_eve_tap_probability.csv")],
    ]
    for args in jobs:
        code = main(args)
        if code != 0:
            print(f"FAILED ({code}): {' '.join(args)}", file=sys.stderr)
            return code
        print(f"wrote {args[-1]}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
