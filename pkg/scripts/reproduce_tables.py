"""Convergence tables for the smooth Gaussian pulse at C = 2 and C = 8.

Prints, per scheme, the error E (h*tau weighted L1), EOC and the extreme
values at the final time, and writes one CSV per (C, scheme) to --out.
"""
import argparse
from pathlib import Path

from spacemarch.bench import convergence_study
from spacemarch.kernels import SchemeConfig

SCHEMES = {
    "first": SchemeConfig("first"),
    "second": SchemeConfig("fixed", weight=1 / 3),
    "third": SchemeConfig("third"),
    "hr": SchemeConfig("hr"),
}
IS = (256, 512, 1024, 2048)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/tables")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for C in (2, 8):
        print(f"\nC = {C}")
        print(f"{'scheme':8s} {'I':>5s} {'E':>11s} {'EOC':>6s} {'min':>11s} {'max':>8s}")
        for name, config in SCHEMES.items():
            report = convergence_study("smooth", config, [(I, I // C) for I in IS])
            (out / f"C{C}_{name}.csv").write_text(report.to_csv())
            for r in report.rows:
                eoc = "" if r.EOC != r.EOC else f"{r.EOC:.2f}"
                print(f"{name:8s} {r.I:5d} {r.E:11.4e} {eoc:>6s} {r.min:11.2e} {r.max:8.4f}")


if __name__ == "__main__":
    main()
