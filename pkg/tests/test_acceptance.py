"""Acceptance checks, one per criterion, with a pass/fail line each.

Run with pytest (lines appear in the terminal summary) or directly:
``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from conftest import ACCEPTANCE_LINES, gaussian_problem  # noqa: E402
from spacemarch.bench import (  # noqa: E402
    error_norm,
    scenario_four_shapes,
    scenario_nonlinear_isotherm,
    triangle_model,
)
from spacemarch.edge import (  # noqa: E402
    EdgeProblem,
    Stencil,
    conservation_audit,
    correct_node,
    dmp_check,
    predict_node,
    solve_first_order,
    solve_fixed_weight,
    solve_high_resolution,
    solve_third_order,
)
from spacemarch.kernels import SchemeConfig, SpaceGrid, TimeGrid, preferred_weight  # noqa: E402
from spacemarch.network import solve_network  # noqa: E402
from spacemarch.nonlinear import RetardationModel, solve_nonlinear_hr  # noqa: E402

LEVELS_C2 = [(256, 128), (512, 256), (1024, 512), (2048, 1024)]


def record(number: int, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def eocs(solver, levels=LEVELS_C2):
    errs = []
    for I, N in levels:
        p, ex = gaussian_problem(I, N)
        errs.append(error_norm(solver(p), ex))
    errs = np.array(errs)
    return np.log2(errs[:-1] / errs[1:])


def warm_up():
    p, _ = gaussian_problem(8, 4)
    for solver in (solve_first_order, solve_third_order, solve_high_resolution):
        solver(p)
    solve_network(triangle_model("coarse", T=5.0), SchemeConfig("third"))


def fmt(values):
    return ", ".join(f"{v:.3f}" for v in values)


def test_criterion_1_third_order_eoc():
    warm_up()
    t0 = time.perf_counter()
    e = eocs(solve_third_order)
    elapsed = time.perf_counter() - t0
    ok = abs(e[-1] - 3.0) <= 0.15 and elapsed < 5.0
    record(1, ok, f"third order EOC {fmt(e)} (final 3.00 +- 0.15), {elapsed:.2f} s (< 5 s)")


def test_criterion_2_fixed_weight_eoc():
    e = eocs(lambda p: solve_fixed_weight(p, 1 / 3))
    record(2, abs(e[-1] - 2.02) <= 0.15, f"fixed w=1/3 EOC {fmt(e)} (final 2.02 +- 0.15)")


def test_criterion_3_first_order_eoc():
    e = eocs(solve_first_order)
    ok = bool(np.all((e >= 0.7) & (e <= 1.0)))
    record(3, ok, f"first order EOC {fmt(e)} (all in [0.7, 1.0])")


def test_criterion_4_hr_eoc():
    e = eocs(solve_high_resolution)
    ok = bool(e[-1] >= 2.3 and np.all((e >= 2.3) & (e <= 3.1)))
    record(4, ok, f"HR EOC {fmt(e)} (all in [2.3, 3.1])")


def test_criterion_5_bounds_c2():
    p, _ = gaussian_problem(512, 256)
    hr = solve_high_resolution(p).Q[:, -1]
    third = solve_third_order(p).Q[:, -1]
    ok = hr.min() >= -1e-14 and hr.max() <= 0.9951 + 5e-3 and third.min() < 0
    record(5, ok, f"C=2 I=512 HR min {hr.min():.2e} max {hr.max():.4f}; third min {third.min():.2e} (< 0)")


def test_criterion_6_bounds_c8():
    p, _ = gaussian_problem(256, 32)
    hr = solve_high_resolution(p).Q[:, -1]
    third = solve_third_order(p).Q[:, -1]
    ok = hr.min() >= -1e-13 and third.min() <= -1e-3
    record(6, ok, f"C=8 I=256 HR min {hr.min():.2e} (>= -1e-13); third min {third.min():.2e} (<= -1e-3)")


def test_criterion_7_four_shapes():
    lo, hi, repeated, nodes, worst = np.inf, -np.inf, 0, 0, 0
    for k in (1, 2, 3, 4):
        p = scenario_four_shapes(k)
        assert abs(np.nanmax(p.courant) - 5.0) < 1e-12 and abs(np.nanmax(p.space.h) - 0.0025) < 1e-15
        s = solve_high_resolution(p)
        lo, hi = min(lo, s.Q.min()), max(hi, s.Q.max())
        repeated += int(np.count_nonzero(s.repeats))
        worst = max(worst, int(s.repeats.max()))
        nodes += s.Q[1:, 1:].size
    frac = repeated / nodes
    ok = lo >= -1e-13 and hi <= 1 + 1e-13 and worst <= 1 and frac <= 0.01
    record(7, ok, f"four shapes HR range [{lo:.2e}, {hi:.6f}], max repeats {worst}, "
                  f"repeated fraction {frac:.2%} (<= 1%)")


def test_criterion_8_nonlinear():
    parts, ok = [], True
    for I in (400, 800):
        p = scenario_nonlinear_isotherm(I)
        s = solve_nonlinear_hr(p)
        a = conservation_audit(s)
        good = s.Q.min() >= -1e-12 and s.Q.max() <= 1 + 1e-12 and abs(a.residual) <= 1e-10 * a.inflow
        ok &= good
        parts.append(f"I={I} range [{s.Q.min():.2e}, {s.Q.max():.6f}] residual {a.residual:.1e}")
    record(8, ok, "; ".join(parts))


def test_criterion_9_triangle_refinement():
    warm_up()
    t0 = time.perf_counter()
    amp = {}
    for level in ("medium", "fine"):
        sol = solve_network(triangle_model(level), SchemeConfig("third"))
        amp[level] = float(np.abs(sol["6"].Q[:, -1]).max())
    elapsed = time.perf_counter() - t0
    ok = amp["fine"] < amp["medium"] and elapsed < 30.0
    record(9, ok, f"max|q6(.,70)| medium {amp['medium']:.5f} -> fine {amp['fine']:.5f}, {elapsed:.2f} s (< 30 s)")


def _random_problem(rng):
    I, N = int(rng.integers(2, 40)), int(rng.integers(2, 40))
    C = float(np.exp(rng.uniform(np.log(0.1), np.log(50.0))))
    L = 1.0
    T = C * (L / I) * N
    kind = rng.integers(3)
    if kind == 0:
        bc, ic = rng.uniform(0, 1, N + 1), rng.uniform(0, 1, I + 1)
    elif kind == 1:
        bc, ic = rng.integers(0, 2, N + 1).astype(float), rng.integers(0, 2, I + 1).astype(float)
    else:
        bc, ic = np.where(rng.uniform(size=N + 1) < 0.2, 1.0, 0.0), np.zeros(I + 1)
    return EdgeProblem(SpaceGrid.uniform(L, I), TimeGrid(T, N), 1.0, 1.0, bc, ic)


def _bisect(f, lo=-1e3, hi=1e3):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_criterion_10_properties():
    rng = np.random.default_rng(20240610)
    dmp_fail = div_fail = cons_fail = 0
    cons_worst = 0.0
    for _ in range(200):
        p = _random_problem(rng)
        for solver in (solve_first_order, solve_high_resolution):
            s = solver(p)
            dmp_fail += bool(dmp_check(s))
            div_fail += not s.min_divisor > 0
            a = conservation_audit(s)
            rel = abs(a.residual) / a.throughput if a.throughput > 0 else abs(a.residual)
            cons_worst = max(cons_worst, rel)
            cons_fail += rel > 1e-11

    # nonlinear solver with a linear retardation against the linear solver
    red_worst = 0.0
    for _ in range(20):
        p = _random_problem(rng)
        kappa = float(rng.uniform(0.5, 2.0))
        lin = EdgeProblem(p.space, TimeGrid(p.time.T * kappa, p.time.N), kappa, 1.0, p.boundary, p.initial)
        nl = EdgeProblem(lin.space, lin.time, kappa, 1.0, lin.boundary, lin.initial,
                         retardation=RetardationModel(kappa, 0.0))
        red_worst = max(red_worst, float(np.max(np.abs(solve_nonlinear_hr(nl).Q - solve_high_resolution(lin).Q))))

    oracle_worst = 0.0
    for _ in range(10_000):
        a, b, c = rng.uniform(-1, 1, 3)
        C = float(np.exp(rng.uniform(np.log(0.1), np.log(50.0))))
        w, pp, psi = preferred_weight(C), rng.uniform(0, 2), rng.uniform(0, 2)
        s = Stencil(a, b, c)
        prev = a + 0.5 * pp * (b - a)
        pred = _bisect(lambda q: q + 0.5 * (1 - w) * (c - q) + 0.5 * w * (b - a) - prev + C * (q - b))
        corr = _bisect(lambda q: q + 0.5 * psi * (c - q) - prev + C * (q - b))
        oracle_worst = max(oracle_worst, abs(predict_node(s, C, w, pp) - pred),
                           abs(correct_node(s, C, psi, pp) - corr))

    ok = (dmp_fail == 0 and div_fail == 0 and cons_fail == 0
          and red_worst <= 1e-12 and oracle_worst <= 1e-12)
    record(10, ok, f"200 random cases: DMP failures {dmp_fail}, divisor failures {div_fail}, "
                   f"worst conservation {cons_worst:.1e}; linear reduction {red_worst:.1e}; "
                   f"bisection oracle {oracle_worst:.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([os.path.abspath(__file__), "-q", "-p", "no:cacheprovider"]))
