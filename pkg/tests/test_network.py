import numpy as np
import pytest

from spacemarch.bench import triangle_model, scenario_sewer, smooth_model, edge_problem
from spacemarch.edge import solve_edge, solve_high_resolution
from spacemarch.kernels import SchemeConfig, TimeGrid
from spacemarch.network import (
    Edge,
    NetworkError,
    NetworkModel,
    SequencingError,
    Vertex,
    network_audit,
    path_profile,
    solve_network,
    split_to_downstream,
    validate_and_order,
    vertex_signal,
)
from spacemarch.signals import Constant, Gaussian, Sine


def chain(split=False, cells=(10, 10), speeds=(1.0, 1.0)):
    vs = (Vertex("a", "inflow"), Vertex("b", "internal"), Vertex("c", "outflow"))
    es = (Edge("1", "a", "b", 1.0, cells[0], speeds[0], kappa=1.0, initial=Gaussian(0.5, 0.1)),
          Edge("2", "b", "c", 1.0, cells[1], speeds[1], kappa=1.0))
    return NetworkModel(TimeGrid(1.5, 12), vs, es, {}, {"a": Sine(1.0, 3.0)})


def test_triangle_order():
    assert validate_and_order(triangle_model("coarse")) == ["1", "2", "3", "4", "5", "6"]


def test_single_edge_order():
    assert validate_and_order(smooth_model(8, 4)) == ["1"]


def test_cycle_detected():
    vs = (Vertex("s", "inflow"), Vertex("x", "internal"), Vertex("y", "internal"), Vertex("o", "outflow"))
    es = (Edge("0", "s", "x", 1, 2, 1, kappa=1), Edge("1", "x", "y", 1, 2, 1, kappa=1),
          Edge("2", "y", "x", 1, 2, 1, kappa=1), Edge("3", "y", "o", 1, 2, 1, kappa=1))
    m = NetworkModel(TimeGrid(1, 2), vs, es, {"y": {"2": 0.5, "3": 0.5}}, {"s": Constant(1.0)})
    with pytest.raises(NetworkError, match="cycle"):
        validate_and_order(m)


def test_alpha_row_must_sum_to_one():
    m = triangle_model("coarse")
    bad = NetworkModel(m.time, m.vertices, m.edges, {"p1": {"2": 0.7, "3": 0.2}, "p2": m.alpha["p2"]},
                       m.boundaries)
    with pytest.raises(NetworkError, match="alpha row for vertex p1 sums to 0.9"):
        validate_and_order(bad)


def test_orphan_vertex_rejected():
    m = chain()
    bad = NetworkModel(m.time, m.vertices + (Vertex("z", "internal"),), m.edges, {}, m.boundaries)
    with pytest.raises(NetworkError, match="not incident"):
        validate_and_order(bad)


def test_vertex_signal_sums_upstream_outlets():
    m = triangle_model("coarse")
    sol = solve_network(m, SchemeConfig("third"))
    q = vertex_signal(m, "p3", sol.edges)
    assert np.array_equal(q, sol["3"].Q[-1, :] + sol["5"].Q[-1, :])
    assert np.array_equal(sol["6"].Q[0, :], q)
    assert np.array_equal(vertex_signal(m, "p0", {}), m.boundaries["p0"](m.time.times))
    with pytest.raises(SequencingError):
        vertex_signal(m, "p2", {})


def test_split_examples():
    cols = split_to_downstream(np.array([0.8]), {"2": 0.75, "3": 0.25})
    assert cols["2"][0] == pytest.approx(0.6) and cols["3"][0] == pytest.approx(0.2)
    assert np.array_equal(split_to_downstream(np.arange(3.0), {"x": 1.0})["x"], np.arange(3.0))
    assert not split_to_downstream(np.zeros(4), {"x": 0.4, "y": 0.6})["y"].any()


def test_junction_columns_are_exact_copies_and_splits():
    m = triangle_model("coarse")
    sol = solve_network(m, SchemeConfig("hr"))
    assert np.array_equal(sol["2"].Q[0, :], 0.75 * sol["1"].Q[-1, :])
    assert np.array_equal(sol["3"].Q[0, :], 0.25 * sol["1"].Q[-1, :])
    assert np.allclose(sol["2"].Q[0, :] + sol["3"].Q[0, :], sol.vertex_signals["p1"], rtol=0, atol=1e-15)


def test_single_edge_network_matches_edge_solver():
    m = smooth_model(64, 32)
    sol = solve_network(m, SchemeConfig("hr"))
    ref = solve_high_resolution(edge_problem(m))
    assert np.array_equal(sol["1"].Q, ref.Q)


@pytest.mark.parametrize("variant", ["first", "third", "hr", "weno"])
def test_two_edge_chain_matches_one_long_edge(variant):
    m = chain()
    long_edge = Edge("L", "a", "c", 2.0, 20, 1.0, kappa=1.0, initial=Gaussian(0.5, 0.1))
    init = long_edge.initial(np.linspace(0, 2, 21))
    init[11:] = 0.0  # the second edge starts empty
    from spacemarch.edge import EdgeProblem

    p = EdgeProblem(long_edge.space, m.time, 1.0, 1.0, m.boundaries["a"](m.time.times), init)
    ref = solve_edge(p, SchemeConfig(variant)).Q
    sol = solve_network(m, SchemeConfig(variant))
    assert np.max(np.abs(sol["1"].Q - ref[:11])) <= 1e-12
    assert np.max(np.abs(sol["2"].Q - ref[10:])) <= 1e-12


def test_result_independent_of_admissible_order():
    m = triangle_model("coarse")
    a = solve_network(m, SchemeConfig("hr"))
    b = solve_network(m, SchemeConfig("hr"), order=["1", "3", "2", "5", "4", "6"])
    for eid in a.edges:
        assert np.array_equal(a[eid].Q, b[eid].Q)
    with pytest.raises(NetworkError):
        solve_network(m, SchemeConfig("hr"), order=["2", "1", "3", "4", "5", "6"])


def test_level_parallel_matches_sequential():
    m = scenario_sewer()
    a = solve_network(m, SchemeConfig("hr"))
    b = solve_network(m, SchemeConfig("hr"), max_workers=4)
    for eid in a.edges:
        assert np.array_equal(a[eid].Q, b[eid].Q)


@pytest.mark.parametrize("model", [triangle_model("coarse"), scenario_sewer()])
def test_global_conservation_identity(model):
    sol = solve_network(model, SchemeConfig("hr"))
    audit = network_audit(sol)
    assert audit.ok(1e-10)
    assert not audit.dmp_violations


def test_path_profile_concatenates_edges():
    m = scenario_sewer()
    sol = solve_network(m, SchemeConfig("hr"))
    x, q, owners = path_profile(sol, "BC3", m.time.N)
    lengths = [m.edge(e).length for e in m.paths["BC3"]]
    assert x[-1] == pytest.approx(sum(lengths))
    assert np.all(np.diff(x) >= 0)
    assert owners[0] == "4" and owners[-1] == "16"


def test_edge_validation():
    with pytest.raises(NetworkError):
        Edge("x", "a", "b", 1.0, 3, 1.0)
    with pytest.raises(NetworkError):
        Edge("x", "a", "b", 1.0, 3, 1.0, kappa=1.0, diameter=0.5)
    with pytest.raises(NetworkError):
        Edge("x", "a", "b", -1.0, 3, 1.0, kappa=1.0)
    assert Edge("x", "a", "b", 1.0, 3, 1.0, diameter=2.0).capacity == pytest.approx(np.pi)
