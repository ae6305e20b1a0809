"""Built-in scenarios, error norms and convergence (EOC) reports."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from .edge import EdgeProblem, EdgeSolution
from .kernels import SchemeConfig, TimeGrid
from .network import Edge, NetworkModel, NetworkSolution, Vertex, solve_network
from .nonlinear import Quadratic
from .signals import SHAPE_ORIGINS, Gaussian, Shapes, Sine, shape_profile

__all__ = [
    "Scenario",
    "ConvergenceRow",
    "ConvergenceReport",
    "UnsupportedError",
    "SCENARIOS",
    "error_norm",
    "network_error",
    "edge_problem",
    "single_edge_model",
    "scenario_smooth_gaussian",
    "scenario_four_shapes",
    "scenario_composite_shapes",
    "scenario_nonlinear_isotherm",
    "scenario_triangle",
    "scenario_sewer",
    "convergence_study",
    "TRIANGLE_LEVELS",
]


class UnsupportedError(ValueError):
    """The requested operation needs data the scenario does not provide."""


# ---------------------------------------------------------------- error norm


def error_norm(solution: EdgeSolution, exact: Callable, weighted: bool = True) -> float:
    """Sum of |Q_i^n - q(x_i, t^n)| over all nodes.

    With ``weighted`` (the default used for EOC tables) the sum is scaled by
    h * tau, i.e. it is a discrete space-time L1 norm; ``weighted=False``
    returns the plain nodal sum.
    """
    x = solution.x[:, None]
    t = solution.t[None, :]
    err = float(np.sum(np.abs(solution.Q - exact(x, t))))
    if not weighted:
        return err
    h = np.diff(solution.x)
    if np.ptp(h) > 1e-12 * h.max():
        raise UnsupportedError("the weighted error norm needs a uniform space grid")
    return err * float(h.mean()) * solution.problem.time.tau


def network_error(sol: NetworkSolution, exact: Callable, weighted: bool = True) -> float:
    """Sum of per-edge error norms; ``exact(edge_id, x, t)``."""
    return math.fsum(error_norm(s, lambda x, t, e=eid: exact(e, x, t), weighted) for eid, s in sol.edges.items())


# ---------------------------------------------------------------- helpers


def single_edge_model(time: TimeGrid, edge: Edge, inflow, retardation=None) -> NetworkModel:
    vertices = (Vertex(edge.source, "inflow"), Vertex(edge.target, "outflow"))
    return NetworkModel(time, vertices, (edge,), {}, {edge.source: inflow}, retardation)


def edge_problem(model: NetworkModel) -> EdgeProblem:
    """The EdgeProblem of a single-edge model."""
    if len(model.edges) != 1:
        raise UnsupportedError("edge_problem needs a single-edge model")
    e = model.edges[0]
    return model.problem(e, model.boundaries[e.source](model.time.times))


@dataclass(frozen=True)
class Scenario:
    """A named model factory; ``exact(edge_id, x, t)`` is None when no closed form exists."""

    name: str
    description: str
    build: Callable[..., NetworkModel]
    defaults: dict
    exact_for: Callable[..., Callable] | None = None
    linear_only: bool = True
    refine: Callable[[dict], dict] | None = None

    def model(self, **params) -> NetworkModel:
        return self.build(**self.params(**params))

    def params(self, **params) -> dict:
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise UnsupportedError(f"scenario {self.name!r} has no parameters {sorted(unknown)}")
        out = dict(self.defaults)
        out.update({k: v for k, v in params.items() if v is not None})
        return out

    def exact(self, **params):
        if self.exact_for is None:
            raise UnsupportedError(f"scenario {self.name!r} has no exact solution")
        return self.exact_for(**self.params(**params))


# ---------------------------------------------------------------- smooth


def _gauss_profile(y):
    return np.exp(-40.0 * (y + 1.0) ** 2)


def smooth_model(I: int = 512, N: int = 256) -> NetworkModel:
    width = 1.0 / math.sqrt(40.0)
    edge = Edge("1", "in", "out", 2.0, I, 1.0, kappa=1.0, initial=Gaussian(-1.0, width))
    return single_edge_model(TimeGrid(2.0, N), edge, Gaussian(1.0, width))


def scenario_smooth_gaussian(I: int, N: int | None = None, C_target: float | None = None) -> EdgeProblem:
    """Gaussian exp(-40 (x + 1)^2) advected with unit speed on (0, 2) x [0, 2].

    Give either ``N`` or the Courant number ``C_target`` (then N = I / C).
    """
    if N is None:
        if C_target is None:
            raise ValueError("give N or C_target")
        N = I / C_target
        if abs(N - round(N)) > 1e-9:
            raise ValueError(f"I / C must be an integer, got {N}")
        N = int(round(N))
    return edge_problem(smooth_model(I, N))


def _smooth_exact(I, N):
    return lambda eid, x, t: _gauss_profile(x - t)


# ---------------------------------------------------------------- four shapes


def four_shapes_model(cells_per_unit: int = 400, N: int = 160, shape: int | None = None) -> NetworkModel:
    """Shape k enters edge (a_k, 3) through its inlet; ``shape=None`` puts all four on parallel edges."""
    shapes = (1, 2, 3, 4) if shape is None else (shape,)
    edges, vertices, bcs = [], [], {}
    for k in shapes:
        a = SHAPE_ORIGINS[k - 1]
        length = 3.0 - a
        cells = length * cells_per_unit
        if abs(cells - round(cells)) > 1e-9:
            raise ValueError(f"cells_per_unit must give an integer cell count on length {length}")
        src, dst = f"in{k}", f"out{k}"
        edges.append(Edge(str(k), src, dst, length, int(round(cells)), 1.0, kappa=1.0))
        vertices += [Vertex(src, "inflow"), Vertex(dst, "outflow")]
        bcs[src] = Shapes(k, a, -1.0)
    return NetworkModel(TimeGrid(2.0, N), tuple(vertices), tuple(edges), {}, bcs)


def scenario_four_shapes(k: int, cells_per_unit: int = 400, N: int = 160) -> EdgeProblem:
    return edge_problem(four_shapes_model(cells_per_unit, N, k))


def _shapes_exact(cells_per_unit, N, shape):
    return lambda eid, x, t: shape_profile(int(eid), SHAPE_ORIGINS[int(eid) - 1] + x - t)


# ---------------------------------------------------------------- composite / nonlinear

COMPOSITE_SHIFT = 0.6  # profile coordinate of the inlet at t = 0


def composite_model(I: int = 400, N: int = 50, a: float | None = None, b: float = 0.0) -> NetworkModel:
    """All four shapes in one inflow on an edge of length 4 (coordinates -1..3).

    With ``a`` given the stored quantity is a*q + b*q^2; the edge capacity is
    then ``a`` as well.
    """
    retardation = None
    kappa = 1.0
    if a is not None:
        retardation = Quadratic(a, b)
        kappa = a
    edge = Edge("1", "in", "out", 4.0, I, 1.0, kappa=kappa)
    return single_edge_model(TimeGrid(2.0, N), edge, Shapes(None, COMPOSITE_SHIFT, -1.0), retardation)


def scenario_composite_shapes(I: int = 400, N: int = 50) -> EdgeProblem:
    return edge_problem(composite_model(I, N))


def _composite_exact(I, N, a=None, b=0.0):
    if a is not None and (b != 0.0 or a != 1.0):
        return None
    return lambda eid, x, t: shape_profile(None, COMPOSITE_SHIFT + x - t)


def scenario_nonlinear_isotherm(I: int = 400, N: int | None = None, a: float = 0.9, b: float = 0.1) -> EdgeProblem:
    """theta(q) = 0.9 q + 0.1 q^2 with the composite inflow; tau v / h = 4 when N = I / 8."""
    if N is None:
        N = I // 8
    return edge_problem(composite_model(I, N, a, b))


# ---------------------------------------------------------------- triangle

# per level: time step and space step for edges with speed 1; the speed-2 and
# speed-40/23 edges get h scaled by ``fast_scale`` at the refined levels so
# that all edges have Courant number 2.5 or 40/23 * 5/4.
TRIANGLE_LEVELS = {
    "coarse": {"tau": 5 / 16, "h": 1 / 2, "fast_scale": 1},
    "medium": {"tau": 5 / 16, "h": 1 / 8, "fast_scale": 2},
    "fine": {"tau": 5 / 32, "h": 1 / 16, "fast_scale": 2},
}
TRIANGLE_T = 70.0


def triangle_model(level: str = "medium", T: float = TRIANGLE_T) -> NetworkModel:
    if level not in TRIANGLE_LEVELS:
        raise ValueError(f"unknown triangle level {level!r}; expected one of {sorted(TRIANGLE_LEVELS)}")
    spec = TRIANGLE_LEVELS[level]
    N = T / spec["tau"]
    if abs(N - round(N)) > 1e-9:
        raise ValueError(f"T must be a multiple of {spec['tau']}")
    lengths = (5.0, 20.0, 20.0, 30.0, 20.0, 30.0)
    speeds = (1.0, 2.0, 1.0, 1.0, 40.0 / 23.0, 1.0)
    ends = (("p0", "p1"), ("p1", "p2"), ("p1", "p3"), ("p2", "q4"), ("p2", "p3"), ("p3", "q6"))
    edges = []
    for k in range(6):
        h = spec["h"] * (spec["fast_scale"] if speeds[k] != 1.0 else 1)
        cells = int(round(lengths[k] / h))
        init = Gaussian(2.5, 0.5) if k == 0 else None
        edges.append(Edge(str(k + 1), ends[k][0], ends[k][1], lengths[k], cells, speeds[k], kappa=1.0, initial=init))
    vertices = (Vertex("p0", "inflow"), Vertex("p1", "internal"), Vertex("p2", "internal"),
                Vertex("p3", "internal"), Vertex("q4", "outflow"), Vertex("q6", "outflow"))
    alpha = {"p1": {"2": 0.75, "3": 0.25}, "p2": {"4": 2 / 3, "5": 1 / 3}}
    return NetworkModel(TimeGrid(T, int(round(N))), vertices, tuple(edges), alpha,
                        {"p0": Sine(1.0, 2.0 * math.pi / 3.0)}, None,
                        {"main": ("1", "2", "5", "6")})


def scenario_triangle(level: str = "medium") -> NetworkModel:
    return triangle_model(level)


# ---------------------------------------------------------------- sewer


def scenario_sewer(N: int = 384) -> NetworkModel:
    """Bundled synthetic sewer network; N = 192 doubles every Courant number."""
    from .netfile import loads

    text = resources.files("spacemarch").joinpath("data/sewer.json").read_text()
    model = loads(text)
    if N != model.time.N:
        model = NetworkModel(TimeGrid(model.time.T, N), model.vertices, model.edges, model.alpha,
                             model.boundaries, model.retardation, model.paths)
    return model


# ---------------------------------------------------------------- registry


def _double(keys):
    def refine(params):
        out = dict(params)
        for k in keys:
            out[k] = 2 * out[k]
        return out

    return refine


SCENARIOS = {
    s.name: s
    for s in (
        Scenario("smooth", "Gaussian pulse, unit speed, exact solution (I cells, N steps)",
                 smooth_model, {"I": 512, "N": 256}, _smooth_exact, refine=_double(("I", "N"))),
        Scenario("four_shapes", "four profiles on parallel edges (I cells per unit length, C = 5 by default)",
                 lambda I, N, shape: four_shapes_model(I, N, shape), {"I": 400, "N": 160, "shape": None},
                 lambda I, N, shape: _shapes_exact(I, N, shape), refine=_double(("I", "N"))),
        Scenario("composite", "all four profiles through one edge of length 4",
                 lambda I, N: composite_model(I, N), {"I": 400, "N": 50},
                 lambda I, N: _composite_exact(I, N), refine=_double(("I", "N"))),
        Scenario("nonlinear", "composite inflow with theta(q) = 0.9 q + 0.1 q^2",
                 lambda I, N: composite_model(I, N, 0.9, 0.1), {"I": 400, "N": 50},
                 None, linear_only=False, refine=_double(("I", "N"))),
        Scenario("triangle", "six-edge triangular network up to t = 70 (levels coarse, medium, fine)",
                 lambda level: triangle_model(level), {"level": "medium"}),
        Scenario("sewer", "synthetic 17-edge sewer network with impulse inflows",
                 lambda N: scenario_sewer(N), {"N": 384}),
    )
}


# ---------------------------------------------------------------- convergence


@dataclass(frozen=True)
class ConvergenceRow:
    I: int
    N: int
    E: float
    EOC: float
    min: float
    max: float


@dataclass
class ConvergenceReport:
    scenario: str
    scheme: str
    rows: list = field(default_factory=list)

    @property
    def eocs(self) -> list[float]:
        return [r.EOC for r in self.rows[1:]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("I,N,E,EOC,min,max\n")
        for r in self.rows:
            eoc = "" if math.isnan(r.EOC) else f"{r.EOC:.17g}"
            buf.write(f"{r.I},{r.N},{r.E:.17g},{eoc},{r.min:.17g},{r.max:.17g}\n")
        return buf.getvalue()


def convergence_study(scenario: str | Scenario, config: SchemeConfig, levels: list[tuple[int, int]],
                      weighted: bool = True, extra: dict | None = None) -> ConvergenceReport:
    """Errors on the given (I, N) levels; EOC_r = log2(E_{r-1} / E_r).

    min/max are taken at the final time over all edges.
    """
    sc = SCENARIOS[scenario] if isinstance(scenario, str) else scenario
    report = ConvergenceReport(sc.name, config.variant)
    prev = None
    for I, N in levels:
        params = dict(extra or {}, I=I, N=N)
        exact = sc.exact(**params)
        if exact is None:
            raise UnsupportedError(f"scenario {sc.name!r} has no exact solution for these parameters")
        sol = solve_network(sc.model(**params), config)
        E = network_error(sol, exact, weighted)
        last = np.concatenate([s.Q[:, -1] for s in sol.edges.values()])
        eoc = math.log2(prev / E) if prev is not None and E > 0 else math.nan
        report.rows.append(ConvergenceRow(I, N, E, eoc, float(last.min()), float(last.max())))
        prev = E
    return report
