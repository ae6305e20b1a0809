"""Triangle network: residual amplitude on edge 6 and the WENO variant.

For each refinement level reports max|q| on edge 6 at t = 70 (third order)
and the edge-6 extremes at t = 35 for third order, HR and WENO, then runs
the CLI to write CSVs and plot scripts for the medium level.
"""
import argparse
from pathlib import Path

import numpy as np

from spacemarch import cli
from spacemarch.bench import triangle_model
from spacemarch.kernels import SchemeConfig
from spacemarch.network import solve_network

THRESHOLD = {"coarse": 0.1, "medium": 0.05, "fine": 0.05}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/triangle")
    args = ap.parse_args()
    for level in ("coarse", "medium", "fine"):
        m = triangle_model(level)
        n35 = int(round(35 / m.time.tau))
        third = solve_network(m, SchemeConfig("third"))["6"].Q
        print(f"{level:6s} max|q6(., 70)| = {np.abs(third[:, -1]).max():.5f}")
        for name, config in (("third", SchemeConfig("third")), ("hr", SchemeConfig("hr")),
                             ("weno", SchemeConfig("weno", weno_threshold=THRESHOLD[level]))):
            q = solve_network(m, config)["6"].Q[:, n35]
            print(f"    t=35 {name:5s} min {q.min():+.5f} max {q.max():.5f}")
    runs = []
    for scheme in ("third", "hr", "weno"):
        d = Path(args.out) / scheme
        extra = ["--weno-threshold", "0.05"] if scheme == "weno" else []
        cli.main(["run", "--scenario", "triangle", "--level", "medium", "--scheme", scheme,
                  "--out", str(d), "--snapshot", "17.5,35,52.5,70", *extra])
        runs.append(str(d))
    cli.main(["plot", *runs, "--to", args.out, "--time", "35"])


if __name__ == "__main__":
    main()
