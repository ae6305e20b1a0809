"""Four-shape benchmark at C = 5, h = 1/400 and the composite nonlinear case.

Reports error, extremes and corrector statistics per shape and scheme.
"""
import numpy as np

from spacemarch.bench import SCENARIOS, error_norm, scenario_four_shapes, scenario_nonlinear_isotherm
from spacemarch.edge import conservation_audit, dmp_check, solve_first_order, solve_high_resolution, solve_third_order
from spacemarch.nonlinear import solve_nonlinear_first_order, solve_nonlinear_hr

SOLVERS = {"first": solve_first_order, "third": solve_third_order, "hr": solve_high_resolution}


def main():
    print("four shapes, C = 5, h = 0.0025")
    for k in (1, 2, 3, 4):
        p = scenario_four_shapes(k)
        exact = SCENARIOS["four_shapes"].exact(shape=k)
        ex = lambda x, t: exact("1", x, t)  # noqa: E731
        for name, solver in SOLVERS.items():
            s = solver(p)
            extra = f" repeated {np.count_nonzero(s.repeats)}" if name == "hr" else ""
            print(f"  shape {k} {name:5s} E {error_norm(s, ex):.3e} min {s.Q.min():+.2e} "
                  f"max {s.Q.max():.5f} dmp {len(dmp_check(s))}{extra}")
    print("theta(q) = 0.9 q + 0.1 q^2")
    for I in (400, 800):
        p = scenario_nonlinear_isotherm(I)
        for name, solver in (("first", solve_nonlinear_first_order), ("hr", solve_nonlinear_hr)):
            s = solver(p)
            a = conservation_audit(s)
            print(f"  I={I} {name:5s} min {s.Q.min():+.2e} max {s.Q.max():.6f} residual {a.residual:.1e}")


if __name__ == "__main__":
    main()
