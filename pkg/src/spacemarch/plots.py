"""Emission of standalone matplotlib scripts for the CSV output of ``run``.

The package itself never imports matplotlib; the generated scripts do.
"""
from __future__ import annotations

import os
import re
from pathlib import Path

__all__ = ["PlotError", "emit_plot_scripts"]


class PlotError(ValueError):
    pass


_HEADER = '''"""Generated by spacemarch plot."""
import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def read_rows(path):
    with open(os.path.join(HERE, path)) as fh:
        return list(csv.DictReader(fh))


def profile(path, level=None):
    """x and Q at time level ``level`` (last level when None) of an edge CSV."""
    rows = read_rows(path)
    last = max(int(r["n"]) for r in rows) if level is None else level
    sel = [r for r in rows if int(r["n"]) == last]
    return [float(r["x"]) for r in sel], [float(r["Q"]) for r in sel], float(sel[0]["t"])
'''


def _scheme(run: Path) -> str:
    audit = run / "audit.txt"
    if audit.exists():
        m = re.search(r"^scheme: (.+)$", audit.read_text(), re.M)
        if m:
            return m.group(1)
    return run.name


def _edge_ids(run: Path) -> list[str]:
    return sorted((p.stem[len("edge_"):] for p in run.glob("edge_*.csv")), key=lambda s: (len(s), s))


def _rel(path: Path, base: Path) -> str:
    return os.path.relpath(path.resolve(), base.resolve())


def _level(run: Path, time: float | None) -> str:
    if time is None:
        return "None"
    text = (run / "model.json").read_text() if (run / "model.json").exists() else ""
    m_T = re.search(r'"T":\s*([0-9.eE+-]+)', text)
    m_N = re.search(r'"N":\s*([0-9]+)', text)
    if not (m_T and m_N):
        raise PlotError(f"{run}: model.json is needed to locate time {time}")
    T, N = float(m_T.group(1)), int(m_N.group(1))
    if not 0 <= time <= T:
        raise PlotError(f"time {time} outside [0, {T}]")
    return str(int(round(time / (T / N))))


def emit_plot_scripts(runs: list[Path], to: Path | None = None, time: float | None = None) -> list[Path]:
    """Write plot scripts overlaying the given runs; returns the script paths."""
    if not runs:
        raise PlotError("no run directories given")
    for run in runs:
        if not run.is_dir():
            raise PlotError(f"run directory {run} does not exist")
        if not _edge_ids(run):
            raise PlotError(f"no edge_*.csv artifacts in {run}")
    to = to or runs[0]
    to.mkdir(parents=True, exist_ok=True)
    written = []
    edges = _edge_ids(runs[0])
    level = _level(runs[0], time)

    lines = [_HEADER, f"EDGES = {edges!r}", f"LEVEL = {level}", "RUNS = ["]
    for run in runs:
        lines.append(f"    ({_scheme(run)!r}, {_rel(run, to)!r}),")
    lines.append("]")
    exact = {e: _rel(runs[0] / f"exact_{e}.csv", to) for e in edges if (runs[0] / f"exact_{e}.csv").exists()}
    lines.append(f"EXACT = {exact!r}")
    lines.append('''

cols = min(3, len(EDGES))
rows = (len(EDGES) + cols - 1) // cols
fig, axes = plt.subplots(rows, cols, figsize=(4.5 * cols, 3.2 * rows), squeeze=False)
for ax, eid in zip(axes.flat, EDGES):
    if eid in EXACT:
        x, q, t = profile(EXACT[eid], LEVEL)
        ax.plot(x, q, "k-", lw=1, label="exact")
    for label, run in RUNS:
        path = os.path.join(run, f"edge_{eid}.csv")
        if os.path.exists(os.path.join(HERE, path)):
            x, q, t = profile(path, LEVEL)
            ax.plot(x, q, ".-", ms=2, lw=0.8, label=label)
    ax.set_title(f"edge {eid}, t = {t:g}")
    ax.set_xlabel("x")
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(os.path.join(HERE, "profiles.png"), dpi=150)
''')
    target = to / "plot_profiles.py"
    target.write_text("\n".join(lines))
    written.append(target)

    for path_file in sorted(runs[0].glob("path_*.csv")):
        name = path_file.stem[len("path_"):]
        sources = [(_scheme(r), _rel(r / path_file.name, to)) for r in runs if (r / path_file.name).exists()]
        body = [_HEADER, f"SOURCES = {sources!r}", f"NAME = {name!r}", '''

data = {}
for label, path in SOURCES:
    by_level = defaultdict(list)
    for r in read_rows(path):
        by_level[int(r["n"])].append((float(r["t"]), float(r["x"]), float(r["Q"])))
    data[label] = by_level
levels = sorted(next(iter(data.values())))
if len(levels) > 4:
    levels = [levels[k * (len(levels) - 1) // 4] for k in range(1, 5)]
fig, axes = plt.subplots(len(levels), 1, figsize=(8, 2.4 * len(levels)), squeeze=False)
for ax, n in zip(axes[:, 0], levels):
    for label, by_level in data.items():
        pts = by_level[n]
        ax.plot([p[1] for p in pts], [p[2] for p in pts], lw=0.9, label=label)
        ax.set_title(f"path {NAME}, t = {pts[0][0]:g}")
    ax.legend(fontsize=7)
axes[-1, 0].set_xlabel("distance along path")
fig.tight_layout()
fig.savefig(os.path.join(HERE, f"path_{NAME}.png"), dpi=150)
''']
        target = to / f"plot_path_{name}.py"
        target.write_text("\n".join(body))
        written.append(target)

    vertices = sorted(p.name for p in runs[0].glob("vertex_*.csv"))
    if vertices:
        body = [_HEADER, f"FILES = {[_rel(runs[0] / v, to) for v in vertices]!r}", '''

fig, ax = plt.subplots(figsize=(8, 4))
for path in FILES:
    rows = read_rows(path)
    ax.plot([float(r["t"]) for r in rows], [float(r["q"]) for r in rows], lw=0.9,
            label=os.path.basename(path)[len("vertex_"):-4])
ax.set_xlabel("t")
ax.legend(fontsize=7, ncol=3)
fig.tight_layout()
fig.savefig(os.path.join(HERE, "vertices.png"), dpi=150)
''']
        target = to / "plot_vertices.py"
        target.write_text("\n".join(body))
        written.append(target)
    return written
