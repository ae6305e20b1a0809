import dataclasses
import math

import numpy as np
import pytest

from spacemarch.bench import (
    SCENARIOS,
    TRIANGLE_LEVELS,
    UnsupportedError,
    composite_model,
    convergence_study,
    error_norm,
    scenario_four_shapes,
    scenario_nonlinear_isotherm,
    scenario_sewer,
    scenario_smooth_gaussian,
    triangle_model,
)
from spacemarch.edge import solve_high_resolution
from spacemarch.kernels import SchemeConfig
from spacemarch.network import solve_network, network_audit
from spacemarch.signals import shape_profile


def _exact_solution(s, exact):
    return dataclasses.replace(s, Q=exact(s.x[:, None], s.t[None, :]))


def test_error_norm_trivial_cases():
    p = scenario_smooth_gaussian(32, 16)
    exact = lambda x, t: np.exp(-40 * (x - t + 1) ** 2)  # noqa: E731
    s = _exact_solution(solve_high_resolution(p), exact)
    assert error_norm(s, exact) == 0.0
    delta = 1e-3
    shifted = lambda x, t: exact(x, t) + delta  # noqa: E731
    nodes = 33 * 17
    assert error_norm(s, shifted, weighted=False) == pytest.approx(nodes * delta)
    assert error_norm(s, shifted) == pytest.approx(nodes * delta * (2 / 32) * (2 / 16))


@pytest.mark.parametrize("I, N, C", [(512, 256, 2.0), (256, 32, 8.0), (256, 16, 16.0)])
def test_smooth_courant(I, N, C):
    p = scenario_smooth_gaussian(I, N)
    assert np.allclose(p.courant[1:], C, rtol=1e-14)
    assert scenario_smooth_gaussian(I, C_target=C).time.N == N


def test_four_shapes_geometry():
    for k, cells in zip((1, 2, 3, 4), (960, 1120, 1280, 1440)):
        p = scenario_four_shapes(k)
        assert p.space.I == cells
        assert p.space.nodes[1] == pytest.approx(0.0025)
        assert p.time.tau == pytest.approx(0.0125)
        assert np.allclose(p.courant[1:], 5.0)
        assert 0.0 <= p.boundary.min() and p.boundary.max() <= 1.0


def test_shapes_travel_distance_two():
    model = SCENARIOS["four_shapes"].model()
    exact = SCENARIOS["four_shapes"].exact()
    for e in model.edges:
        x = e.space.nodes
        k = int(e.id)
        # the profile that sat at the inlet side at t = 0 is found 2 units downstream at T
        assert np.allclose(exact(e.id, x, 2.0), shape_profile(k, SHAPE_A[k - 1] + x - 2.0))
        peak = x[np.argmax(exact(e.id, x, 2.0))]
        assert 1.55 <= peak <= 2.0


SHAPE_A = (0.6, 0.2, -0.2, -0.6)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_shapes_have_unit_range(k):
    y = np.linspace(-1.5, 1.5, 20001)
    v = shape_profile(k, y)
    assert v.min() == 0.0 and v.max() == pytest.approx(1.0, abs=1e-6)
    assert np.all(v[(y < SHAPE_A[k - 1] - 0.4) | (y > SHAPE_A[k - 1])] == 0)


def test_nonlinear_isotherm_courant_numbers():
    p = scenario_nonlinear_isotherm(400)
    lam = p.time.tau * 1.0 / p.space.nodes[1]
    model = p.retardation
    assert lam / model.kappa_min == pytest.approx(40 / 9)
    assert lam / model.kappa_max == pytest.approx(40 / 11)
    assert scenario_nonlinear_isotherm(800).time.N == 100


def test_nonlinear_with_zero_b_is_linear_composite():
    from spacemarch.bench import edge_problem
    from spacemarch.nonlinear import solve_nonlinear_hr

    lin = solve_high_resolution(edge_problem(composite_model(200, 25)))
    nl = solve_nonlinear_hr(edge_problem(composite_model(200, 25, 1.0, 0.0)))
    assert np.max(np.abs(lin.Q - nl.Q)) <= 1e-12


@pytest.mark.parametrize("level, expected", [
    ("coarse", (0.625, 1.25, 0.625, 0.625, 25 / 23, 0.625)),
    ("medium", (2.5, 2.5, 2.5, 2.5, 50 / 23, 2.5)),
    ("fine", (2.5, 2.5, 2.5, 2.5, 50 / 23, 2.5)),
])
def test_triangle_courant_numbers(level, expected):
    m = triangle_model(level)
    got = [m.edge(str(k)).courant(m.time)[0] for k in range(1, 7)]
    assert np.allclose(got, expected, rtol=1e-14)
    assert m.time.N * TRIANGLE_LEVELS[level]["tau"] == pytest.approx(70.0)


TABLE3 = {"0": 2.61, "1": 1.16, "2": 1.21, "3": 3.70, "4": 3.58, "5": 2.37, "6": 1.69, "7": 2.56,
          "8": 8.015, "9": 0.88, "10": 2.12, "11": 5.37, "12": 5.18, "13": 6.01, "14": 2.42,
          "15": 3.52, "16": 2.15}


def test_sewer_matches_courant_table():
    m = scenario_sewer()
    assert len(m.vertices) == 18 and len(m.edges) == 17
    kinds = [v.kind for v in m.vertices]
    assert kinds.count("inflow") == 5 and kinds.count("outflow") == 1 and kinds.count("internal") == 12
    for e in m.edges:
        assert e.courant(m.time)[0] == pytest.approx(TABLE3[e.id], rel=1e-12)
        assert 0.24 <= e.length <= 1.0 and 0.3 <= e.diameter <= 1.0
    merges = sorted(len(m.incoming(v.id)) for v in m.vertices if len(m.incoming(v.id)) > 1)
    assert merges == [2, 2, 3]
    half = scenario_sewer(192)
    for e in half.edges:
        assert e.courant(half.time)[0] == pytest.approx(2 * TABLE3[e.id], rel=1e-12)


def test_sewer_inflow_amplitudes():
    m = scenario_sewer()
    t = np.linspace(0, 2, 2001)
    for k in range(1, 6):
        assert m.boundaries[f"BC{k}"](t).max() == pytest.approx(k, rel=1e-6)


def _pairs(variant, C, weight=None):
    cfg = SchemeConfig.fixed(weight) if weight else SchemeConfig(variant)
    rep = convergence_study("smooth", cfg, [(I, I // C) for I in (256, 512, 1024, 2048)])
    return rep.eocs[-2:]


def test_eoc_bands():
    assert all(0.6 <= e <= 1.05 for e in _pairs("first", 2))
    assert all(1.9 <= e <= 2.9 for e in _pairs("fixed", 2, 1 / 3))
    assert all(2.4 <= e <= 3.1 for e in _pairs("third", 2))
    assert all(2.4 <= e <= 3.1 for e in _pairs("third", 8))


def test_report_csv_layout():
    rep = convergence_study("smooth", SchemeConfig("third"), [(64, 32), (128, 64)])
    lines = rep.to_csv().splitlines()
    assert lines[0] == "I,N,E,EOC,min,max"
    assert lines[1].split(",")[3] == ""
    assert float(lines[2].split(",")[3]) == pytest.approx(rep.rows[1].EOC)
    assert rep.rows[1].EOC == pytest.approx(math.log2(rep.rows[0].E / rep.rows[1].E))


def test_unsupported_eoc():
    with pytest.raises(UnsupportedError):
        convergence_study("triangle", SchemeConfig("hr"), [(1, 1)])


@pytest.mark.parametrize("name", ["smooth", "four_shapes", "composite", "nonlinear", "sewer"])
def test_hr_bounds_on_scenarios(name):
    sol = solve_network(SCENARIOS[name].model(), SchemeConfig("hr"))
    audit = network_audit(sol)
    assert not audit.dmp_violations
    assert audit.ok(1e-10)
    if name != "sewer":
        for s in sol.edges.values():
            assert s.Q.min() >= -1e-14 and s.Q.max() <= 1 + 1e-14


def test_triangle_residual_wave_shrinks():
    amp = {}
    for level in ("medium", "fine"):
        sol = solve_network(triangle_model(level), SchemeConfig("third"))
        amp[level] = np.abs(sol["6"].Q[:, -1]).max()
    assert amp["fine"] < amp["medium"] < 0.01


@pytest.mark.parametrize("level,thr", [("coarse", 0.1), ("medium", 0.05), ("medium", None)])
def test_weno_reduces_triangle_undershoot(level, thr):
    # edge 6 at t = 35: the residual wave is formed and third order dips below zero
    m = triangle_model(level)
    n = int(round(35 / m.time.tau))
    third = solve_network(m, SchemeConfig("third"))["6"].Q[:, n]
    weno = solve_network(m, SchemeConfig("weno", weno_threshold=thr))["6"].Q[:, n]
    assert third.min() < 0
    assert weno.min() > 0.5 * third.min()
    # the price is clipping of the extreme
    assert weno.max() <= third.max()


def test_scenario_params_are_checked():
    with pytest.raises(UnsupportedError):
        SCENARIOS["smooth"].model(level="fine")
