"""Generate the bundled synthetic sewer network (src/spacemarch/data/sewer.json).

Topology: five inflow vertices BC1..BC5, internal vertices 1..12 and one
outflow vertex; 17 edges numbered 0..16 with the cell counts and Courant
numbers of the reference table. Each inflow carries a constant discharge;
edge discharges follow from summing upstream discharges. Diameters are
design inputs; each length is solved from C = (discharge / area) tau I / L,
so the Courant numbers are reproduced to round-off.
"""
import math
from pathlib import Path

from spacemarch.kernels import TimeGrid
from spacemarch.netfile import save_model
from spacemarch.network import Edge, NetworkModel, Vertex
from spacemarch.signals import Impulse

T, N = 2.0, 384
DISCHARGE = {"BC1": 0.18, "BC2": 0.12, "BC3": 0.225, "BC4": 0.45, "BC5": 0.15}
# id, from, to, cells, Courant number, diameter
EDGES = [
    ("0", "BC1", "1", 128, 2.61, 0.38),
    ("1", "BC2", "1", 128, 1.16, 0.43),
    ("2", "1", "2", 128, 1.21, 0.66),
    ("3", "2", "3", 128, 3.70, 0.4),
    ("4", "BC3", "6", 128, 3.58, 0.38),
    ("5", "6", "7", 128, 2.37, 0.42),
    ("6", "BC4", "4", 128, 1.69, 0.68),
    ("7", "BC5", "5", 128, 2.56, 0.37),
    ("8", "4", "8", 128, 8.015, 0.37),
    ("9", "5", "8", 256, 0.88, 0.73),
    ("10", "8", "9", 128, 2.12, 0.7),
    ("11", "9", "10", 128, 5.37, 0.44),
    ("12", "3", "11", 128, 5.18, 0.37),
    ("13", "7", "11", 128, 6.01, 0.33),
    ("14", "10", "11", 128, 2.42, 0.66),
    ("15", "11", "12", 256, 3.52, 0.86),
    ("16", "12", "OUTFLOW", 256, 2.15, 0.97),
]
PATHS = {"BC1": ["0", "2", "3", "12", "15", "16"], "BC3": ["4", "5", "13", "15", "16"]}


def build():
    tau = T / N
    discharge = dict(DISCHARGE)
    edges = []
    for eid, a, b, cells, C, d in EDGES:
        q = discharge[a]
        discharge[b] = discharge.get(b, 0.0) + q
        kappa = math.pi * d * d / 4.0
        length = q * tau * cells / (C * kappa)
        if not 0.24 <= length <= 1.0:
            raise SystemExit(f"edge {eid}: length {length:.3f} outside [0.24, 1]; adjust its diameter")
        edges.append(Edge(eid, a, b, length, cells, q, diameter=d))
    names = ["BC1", "BC2", "BC3", "BC4", "BC5"] + [str(k) for k in range(1, 13)] + ["OUTFLOW"]
    kinds = {n: "inflow" if n.startswith("BC") else "outflow" if n == "OUTFLOW" else "internal" for n in names}
    vertices = tuple(Vertex(n, kinds[n]) for n in names)
    boundaries = {f"BC{m}": Impulse(float(m), -(1.0 + 0.1 * m)) for m in range(1, 6)}
    return NetworkModel(TimeGrid(T, N), vertices, tuple(edges), {}, boundaries, None,
                        {k: tuple(v) for k, v in PATHS.items()})


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "spacemarch" / "data" / "sewer.json"
    model = build()
    save_model(model, out)
    for e in model.edges:
        print(e.id, f"L={e.length:.3f} d={e.diameter:.3f} C={e.courant(model.time)[0]:.4f}")
    print("wrote", out)
