"""Synthetic sewer network: Courant numbers, bounds, conservation and timing."""
import argparse
import time

from spacemarch import cli
from spacemarch.bench import scenario_sewer
from spacemarch.kernels import SchemeConfig
from spacemarch.network import network_audit, solve_network


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/sewer")
    args = ap.parse_args()
    model = scenario_sewer()
    solve_network(model, SchemeConfig("hr"))  # compile
    for scheme in ("first", "third", "hr"):
        t0 = time.perf_counter()
        sol = solve_network(model, SchemeConfig(scheme))
        dt = time.perf_counter() - t0
        audit = network_audit(sol)
        viol = sum(len(v) for v in audit.dmp_violations.values())
        lo = min(s.Q.min() for s in sol.edges.values())
        hi = max(s.Q.max() for s in sol.edges.values())
        print(f"{scheme:5s} {dt:.3f} s min {lo:+.2e} max {hi:.4f} dmp {viol} residual {audit.residual:.1e}")
    for e in model.edges:
        print(f"  edge {e.id:>2s} I={e.cells:4d} C={e.courant(model.time).max():.3f}")
    cli.main(["run", "--scenario", "sewer", "--scheme", "hr", "--out", args.out])


if __name__ == "__main__":
    main()
