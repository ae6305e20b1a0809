"""Directed acyclic pipe networks: model, validation, vertex coupling and the driver.

Vertex coupling follows the concentration-sum convention: the signal at a
vertex is the sum of the outlet values of its incoming edges, and each
outgoing edge receives ``alpha * signal`` as its inlet value.
"""
from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .edge import ConservationAudit, EdgeProblem, EdgeSolution, conservation_audit, dmp_check, solve_edge
from .kernels import SchemeConfig, SpaceGrid, TimeGrid
from .signals import Signal

__all__ = [
    "NetworkError",
    "SequencingError",
    "Vertex",
    "Edge",
    "NetworkModel",
    "NetworkSolution",
    "NetworkAudit",
    "validate_and_order",
    "vertex_signal",
    "split_to_downstream",
    "solve_network",
    "network_audit",
    "path_profile",
]

VERTEX_KINDS = ("inflow", "internal", "outflow")
ALPHA_TOL = 1e-12


class NetworkError(ValueError):
    """The network description is not a valid model."""


class SequencingError(RuntimeError):
    """A vertex signal was requested before all of its upstream edges were solved."""


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: str

    def __post_init__(self):
        if self.kind not in VERTEX_KINDS:
            raise NetworkError(f"vertex {self.id}: kind must be one of {VERTEX_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class Edge:
    """A pipe. Either ``kappa`` or ``diameter`` (capacity pi d^2 / 4) is given.

    ``velocity`` is a number or a tuple of N+1 samples; ``initial`` is an
    optional signal of the local coordinate x in [0, length].
    """

    id: str
    source: str
    target: str
    length: float
    cells: int
    velocity: float | tuple
    kappa: float | None = None
    diameter: float | None = None
    initial: Signal | None = None

    def __post_init__(self):
        if (self.kappa is None) == (self.diameter is None):
            raise NetworkError(f"edge {self.id}: give exactly one of kappa and diameter")
        if not self.capacity > 0:
            raise NetworkError(f"edge {self.id}: capacity must be positive")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise NetworkError(f"edge {self.id}: length must be positive, got {self.length}")
        if isinstance(self.cells, bool) or int(self.cells) != self.cells or self.cells < 1:
            raise NetworkError(f"edge {self.id}: cells must be a positive integer, got {self.cells}")
        if not isinstance(self.velocity, (int, float)):
            object.__setattr__(self, "velocity", tuple(float(v) for v in self.velocity))

    @property
    def capacity(self) -> float:
        if self.kappa is not None:
            return float(self.kappa)
        return math.pi * self.diameter**2 / 4.0

    @property
    def space(self) -> SpaceGrid:
        return SpaceGrid.uniform(self.length, int(self.cells))

    def velocity_samples(self, time: TimeGrid) -> np.ndarray:
        if isinstance(self.velocity, tuple):
            v = np.asarray(self.velocity)
            if v.shape != (time.N + 1,):
                raise NetworkError(f"edge {self.id}: velocity needs {time.N + 1} samples, got {v.size}")
            return v
        return np.full(time.N + 1, float(self.velocity))

    def courant(self, time: TimeGrid) -> np.ndarray:
        return self.velocity_samples(time) * time.tau * self.cells / (self.capacity * self.length)


@dataclass(frozen=True)
class NetworkModel:
    """Vertices, edges, splitting coefficients and inflow signals on one time grid.

    ``alpha[m][e]`` is the share of vertex m's signal sent into edge e. A
    vertex with a single outgoing edge and no row gets alpha = 1.
    """

    time: TimeGrid
    vertices: tuple
    edges: tuple
    alpha: dict = field(default_factory=dict)
    boundaries: dict = field(default_factory=dict)
    retardation: object = None
    paths: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))

    def vertex(self, vid: str) -> Vertex:
        return self._vertex_map()[vid]

    def edge(self, eid: str) -> Edge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def _vertex_map(self):
        return {v.id: v for v in self.vertices}

    def incoming(self, vid: str) -> list[Edge]:
        return [e for e in self.edges if e.target == vid]

    def outgoing(self, vid: str) -> list[Edge]:
        return [e for e in self.edges if e.source == vid]

    def alpha_row(self, vid: str) -> dict:
        row = self.alpha.get(vid)
        if row is None:
            out = self.outgoing(vid)
            return {out[0].id: 1.0} if len(out) == 1 else {}
        return dict(row)

    def problem(self, edge: Edge, boundary: np.ndarray) -> EdgeProblem:
        initial = None
        space = edge.space
        if edge.initial is not None:
            initial = np.asarray(edge.initial(space.nodes), dtype=float)
        return EdgeProblem(space, self.time, edge.capacity, edge.velocity_samples(self.time),
                           boundary, initial, self.retardation)


def validate_and_order(model: NetworkModel) -> list[str]:
    """Check the model and return edge ids in an upstream-first order (Kahn)."""
    vmap = {}
    for v in model.vertices:
        if v.id in vmap:
            raise NetworkError(f"duplicate vertex id {v.id!r}")
        vmap[v.id] = v
    seen = set()
    for e in model.edges:
        if e.id in seen:
            raise NetworkError(f"duplicate edge id {e.id!r}")
        seen.add(e.id)
        for end in (e.source, e.target):
            if end not in vmap:
                raise NetworkError(f"edge {e.id}: unknown vertex {end!r}")
        if e.source == e.target:
            raise NetworkError(f"edge {e.id}: self loop at vertex {e.source!r}")
        if vmap[e.source].kind == "outflow":
            raise NetworkError(f"edge {e.id}: leaves outflow vertex {e.source!r}")
        if vmap[e.target].kind == "inflow":
            raise NetworkError(f"edge {e.id}: enters inflow vertex {e.target!r}")
        e.velocity_samples(model.time)
    for v in model.vertices:
        ins, outs = model.incoming(v.id), model.outgoing(v.id)
        if not ins and not outs:
            raise NetworkError(f"vertex {v.id!r} is not incident to any edge")
        if v.kind == "inflow" and v.id not in model.boundaries:
            raise NetworkError(f"inflow vertex {v.id!r} has no boundary signal")
        if v.kind != "inflow" and v.id in model.boundaries:
            raise NetworkError(f"boundary signal given for non-inflow vertex {v.id!r}")
        if v.kind == "internal" and not (ins and outs):
            raise NetworkError(f"internal vertex {v.id!r} needs incoming and outgoing edges")
        if v.kind == "outflow":
            if v.id in model.alpha:
                raise NetworkError(f"alpha row given for outflow vertex {v.id!r}")
            continue
        row = model.alpha_row(v.id)
        out_ids = {e.id for e in outs}
        if set(row) != out_ids:
            raise NetworkError(
                f"alpha row for vertex {v.id} must list exactly its outgoing edges {sorted(out_ids)}, got {sorted(row)}")
        if any(not (a >= 0 and math.isfinite(a)) for a in row.values()):
            raise NetworkError(f"alpha row for vertex {v.id} has negative or non-finite entries")
        s = math.fsum(row.values())
        if abs(s - 1.0) > ALPHA_TOL:
            raise NetworkError(f"alpha row for vertex {v.id} sums to {s:.15g}")
    for vid in model.alpha:
        if vid not in vmap:
            raise NetworkError(f"alpha row for unknown vertex {vid!r}")
    for vid in model.boundaries:
        if vid not in vmap:
            raise NetworkError(f"boundary signal for unknown vertex {vid!r}")
    for name, ids in model.paths.items():
        for a, b in zip(ids, ids[1:]):
            if model.edge(a).target != model.edge(b).source:
                raise NetworkError(f"path {name}: edges {a} and {b} are not consecutive")
    return _kahn(model)


def _kahn(model: NetworkModel) -> list[str]:
    """Edge ordering; among ready edges the declaration order is kept."""
    pending = {v.id: len(model.incoming(v.id)) for v in model.vertices}
    index = {e.id: k for k, e in enumerate(model.edges)}
    ready = deque(sorted((e for e in model.edges if pending[e.source] == 0), key=lambda e: index[e.id]))
    order = []
    while ready:
        e = ready.popleft()
        order.append(e.id)
        pending[e.target] -= 1
        if pending[e.target] == 0:
            ready.extend(sorted(model.outgoing(e.target), key=lambda x: index[x.id]))
    if len(order) != len(model.edges):
        stuck = sorted(e.id for e in model.edges if e.id not in order)
        raise NetworkError(f"directed cycle detected among edges {stuck}")
    return order


def vertex_signal(model: NetworkModel, vid: str, solutions: dict) -> np.ndarray:
    """q_m(t^n): boundary samples for inflow vertices, else the sum of upstream outlets."""
    v = model.vertex(vid)
    if v.kind == "inflow":
        return np.asarray(model.boundaries[vid](model.time.times), dtype=float)
    total = np.zeros(model.time.N + 1)
    for e in model.incoming(vid):
        if e.id not in solutions:
            raise SequencingError(f"vertex {vid}: upstream edge {e.id} has not been solved")
        total = total + solutions[e.id].Q[-1, :]
    return total


def split_to_downstream(signal: np.ndarray, alpha_row: dict) -> dict:
    """Inlet column alpha_e * signal for every outgoing edge e."""
    return {eid: a * np.asarray(signal) for eid, a in alpha_row.items()}


@dataclass(frozen=True)
class NetworkSolution:
    model: NetworkModel
    order: tuple
    edges: dict
    vertex_signals: dict

    def __getitem__(self, eid: str) -> EdgeSolution:
        return self.edges[eid]


def _levels(model: NetworkModel, order: list[str]) -> list[list[str]]:
    depth = {}
    for eid in order:
        e = model.edge(eid)
        depth[eid] = 1 + max((depth[u.id] for u in model.incoming(e.source)), default=-1)
    out = [[] for _ in range(max(depth.values(), default=-1) + 1)]
    for eid in order:
        out[depth[eid]].append(eid)
    return out


def solve_network(model: NetworkModel, config: SchemeConfig | None = None,
                  max_workers: int | None = None, order: list[str] | None = None) -> NetworkSolution:
    """Solve all edges upstream first.

    With ``max_workers`` > 1 the edges of each DAG level are solved on a
    thread pool (the compiled kernels release the GIL). A caller supplied
    ``order`` must be admissible; the result does not depend on it.
    """
    config = config or SchemeConfig("hr")
    valid = validate_and_order(model)
    if order is None:
        order = valid
    else:
        _check_order(model, order)
    solutions: dict = {}
    signals: dict = {}

    def inlet(eid):
        e = model.edge(eid)
        if e.source not in signals:
            signals[e.source] = vertex_signal(model, e.source, solutions)
        return model.alpha_row(e.source)[eid] * signals[e.source]

    def run(eid, boundary):
        return solve_edge(model.problem(model.edge(eid), boundary), config)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            for level in _levels(model, valid):
                bcs = {eid: inlet(eid) for eid in level}
                futures = {eid: pool.submit(run, eid, bcs[eid]) for eid in level}
                for eid in level:
                    solutions[eid] = futures[eid].result()
    else:
        for eid in order:
            solutions[eid] = run(eid, inlet(eid))
    for v in model.vertices:
        if v.id not in signals:
            signals[v.id] = vertex_signal(model, v.id, solutions)
    return NetworkSolution(model, tuple(order), solutions, signals)


def _check_order(model: NetworkModel, order: list[str]):
    if sorted(order) != sorted(e.id for e in model.edges):
        raise NetworkError("edge order must be a permutation of the edge ids")
    pos = {eid: k for k, eid in enumerate(order)}
    for e in model.edges:
        for u in model.incoming(e.source):
            if pos[u.id] > pos[e.id]:
                raise NetworkError(f"edge {e.id} is ordered before its upstream edge {u.id}")


@dataclass(frozen=True)
class NetworkAudit:
    """Per-edge conservation audits plus the junction bookkeeping.

    ``junction_imbalance`` is the mass created at internal vertices by the
    concentration-sum coupling (inlet transport minus outlet transport over
    all steps); the network identity
    stored - initial - inflow + outflow = junction_imbalance + residual
    holds with ``residual`` at round-off level.
    """

    edges: dict
    stored: float
    initial: float
    inflow: float
    outflow: float
    junction_imbalance: float
    residual: float
    dmp_violations: dict

    @property
    def throughput(self) -> float:
        return max(abs(self.stored), abs(self.initial), abs(self.inflow), abs(self.outflow),
                   abs(self.junction_imbalance))

    def ok(self, rtol: float = 1e-10) -> bool:
        return abs(self.residual) <= rtol * max(self.throughput, 1e-300)


def network_audit(solution: NetworkSolution, dmp: bool = True) -> NetworkAudit:
    model = solution.model
    edges: dict[str, ConservationAudit] = {}
    for eid, sol in solution.edges.items():
        if np.isnan(sol.flux[1:, :]).any():
            continue
        edges[eid] = conservation_audit(sol)
    stored = math.fsum(a.stored for a in edges.values())
    initial = math.fsum(a.initial for a in edges.values())
    inflow = outflow = junction = 0.0
    for eid, a in edges.items():
        e = model.edge(eid)
        if model.vertex(e.source).kind == "inflow":
            inflow += a.inflow
        else:
            junction += a.inflow
        if model.vertex(e.target).kind == "outflow":
            outflow += a.outflow
        else:
            junction -= a.outflow
    residual = stored - initial - inflow + outflow - junction
    dmp_bad = {}
    if dmp:
        for eid, sol in solution.edges.items():
            bad = dmp_check(sol)
            if bad:
                dmp_bad[eid] = bad
    return NetworkAudit(edges, stored, initial, inflow, outflow, junction, residual, dmp_bad)


def path_profile(solution: NetworkSolution, name_or_edges, n: int):
    """Concatenated (x, Q) along a chain of edges at time level ``n``.

    Junction nodes appear twice (outlet of one edge, inlet of the next).
    """
    ids = solution.model.paths[name_or_edges] if isinstance(name_or_edges, str) else list(name_or_edges)
    xs, qs, owners = [], [], []
    offset = 0.0
    for eid in ids:
        sol = solution.edges[eid]
        xs.append(offset + sol.x)
        qs.append(sol.Q[:, n])
        owners.extend([eid] * sol.x.size)
        offset += sol.problem.space.length
    return np.concatenate(xs), np.concatenate(qs), owners
