"""Command line front end: ``spacemarch run | eoc | plot | scenarios``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bench import SCENARIOS, UnsupportedError, convergence_study
from .edge import ConfigurationError
from .kernels import DomainError, SchemeConfig
from .netfile import NetworkFileError, load_model, save_model
from .network import NetworkError, NetworkSolution, network_audit, solve_network
from .plots import PlotError, emit_plot_scripts
from .signals import SignalError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INVARIANT = 3

SCHEMES = ("first", "second", "third", "weno", "hr", "direct", "direct-hr")
# schemes whose solutions must satisfy the local bounds at every node
BOUNDED = ("first", "hr", "direct-hr")
VALIDATION_ERRORS = (NetworkFileError, NetworkError, DomainError, ConfigurationError,
                     UnsupportedError, SignalError, ValueError)


class ValidationError(ValueError):
    pass


def scheme_config(name: str, weight: float | None = None, cmin: float | None = None,
                  weno_threshold: float | None = None) -> SchemeConfig:
    if name not in SCHEMES:
        raise ValidationError(f"unknown scheme {name!r}; expected one of {SCHEMES}")
    kw = {"cmin": cmin, "weno_threshold": weno_threshold}
    if name == "second":
        return SchemeConfig.fixed(1 / 3 if weight is None else weight, **kw)
    return SchemeConfig(name, **kw)


def _scenario_params(args, sc) -> dict:
    params = {}
    for key in ("I", "N", "level", "shape"):
        value = getattr(args, key, None)
        if value is not None:
            if key not in sc.defaults:
                raise ValidationError(f"scenario {sc.name!r} does not take --{key}")
            params[key] = value
    return params


def _load(args):
    """(model, exact or None, label)"""
    if args.config:
        for key in ("I", "N", "level", "shape"):
            if getattr(args, key, None) is not None:
                raise ValidationError(f"--{key} only applies to built-in scenarios")
        return load_model(args.config), None, Path(args.config).stem
    sc = SCENARIOS.get(args.scenario)
    if sc is None:
        raise ValidationError(f"unknown scenario {args.scenario!r}; run 'spacemarch scenarios'")
    params = _scenario_params(args, sc)
    exact = sc.exact(**params) if sc.exact_for is not None else None
    return sc.model(**params), exact, sc.name


# ---------------------------------------------------------------- writers

FMT = "%.17g"


def _write_table(path: Path, header: str, columns: list, int_cols: int):
    data = np.column_stack(columns)
    fmt = ["%d"] * int_cols + [FMT] * (len(columns) - int_cols)
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=header, comments="")


def _write_edge(path: Path, sol, values=None):
    Q = sol.Q if values is None else values
    I1, N1 = Q.shape
    n = np.repeat(np.arange(N1), I1)
    i = np.tile(np.arange(I1), N1)
    data = np.column_stack([n, sol.t[n], i, sol.x[i], Q.T.ravel()])
    np.savetxt(path, data, fmt=["%d", FMT, "%d", FMT, FMT], delimiter=",", header="n,t,i,x,Q", comments="")


def _snapshot_levels(model, snapshots) -> list[int]:
    if not snapshots:
        return list(range(model.time.N + 1))
    levels = []
    for s in snapshots:
        if not 0.0 <= s <= model.time.T * (1 + 1e-12):
            raise ValidationError(f"snapshot time {s} outside [0, {model.time.T}]")
        levels.append(int(round(s / model.time.tau)))
    return sorted(set(levels))


def _write_path(path: Path, solution: NetworkSolution, ids, levels):
    offsets = np.concatenate(([0.0], np.cumsum([solution.edges[e].problem.space.length for e in ids])))
    with open(path, "w") as fh:
        fh.write("n,t,edge,i,x,Q\n")
        for n in levels:
            for k, eid in enumerate(ids):
                sol = solution.edges[eid]
                i = np.arange(sol.x.size)
                data = np.column_stack([np.full(i.size, n), np.full(i.size, sol.t[n]), i,
                                        offsets[k] + sol.x, sol.Q[:, n]])
                np.savetxt(fh, data, fmt=f"%d,{FMT},{eid},%d,{FMT},{FMT}")


def _audit_text(solution: NetworkSolution, scheme: str, label: str) -> tuple[str, list[str]]:
    audit = network_audit(solution)
    model = solution.model
    lines = [f"scenario: {label}", f"scheme: {scheme}", f"T: {model.time.T!r}", f"N: {model.time.N}",
             f"order: {' '.join(solution.order)}"]
    problems = []
    gmin, gmax = math.inf, -math.inf
    for eid in solution.order:
        sol = solution.edges[eid]
        C = model.edge(eid).courant(model.time)
        nviol = len(audit.dmp_violations.get(eid, []))
        gmin, gmax = min(gmin, sol.Q.min()), max(gmax, sol.Q.max())
        parts = [f"edge {eid}:", f"I={sol.problem.space.I}", f"C={C.min():.6g}..{C.max():.6g}",
                 f"min={sol.Q.min():.17g}", f"max={sol.Q.max():.17g}",
                 f"final_min={sol.Q[:, -1].min():.17g}", f"final_max={sol.Q[:, -1].max():.17g}",
                 f"dmp_violations={nviol}"]
        if eid in audit.edges:
            a = audit.edges[eid]
            parts.append(f"conservation_residual={a.residual:.3e}")
            if not a.ok(1e-10):
                problems.append(f"edge {eid}: conservation residual {a.residual:.3e}")
        for k in ("corrected_nodes", "repeated_nodes", "fallback_nodes"):
            if k in sol.stats:
                parts.append(f"{k}={sol.stats[k]}")
        lines.append(" ".join(parts))
        if nviol and scheme in BOUNDED:
            problems.append(f"edge {eid}: {nviol} local bound violations")
    lines.append(f"min: {gmin:.17g}")
    lines.append(f"max: {gmax:.17g}")
    lines.append(f"stored: {audit.stored:.17g}")
    lines.append(f"initial: {audit.initial:.17g}")
    lines.append(f"inflow: {audit.inflow:.17g}")
    lines.append(f"outflow: {audit.outflow:.17g}")
    lines.append(f"junction_imbalance: {audit.junction_imbalance:.17g}")
    lines.append(f"conservation_residual: {audit.residual:.3e}")
    if audit.edges and not audit.ok(1e-10):
        problems.append(f"network conservation residual {audit.residual:.3e}")
    lines.append("status: " + ("ok" if not problems else "VIOLATION"))
    lines.extend(f"violation: {p}" for p in problems)
    return "\n".join(lines) + "\n", problems


def cmd_run(args) -> int:
    model, exact, label = _load(args)
    config = scheme_config(args.scheme, args.weight, args.cmin, args.weno_threshold)
    levels = _snapshot_levels(model, args.snapshot)
    solution = solve_network(model, config, max_workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    for eid in solution.order:
        sol = solution.edges[eid]
        _write_edge(out / f"edge_{eid}.csv", sol)
        if exact is not None:
            _write_edge(out / f"exact_{eid}.csv", sol, exact(eid, sol.x[:, None], sol.t[None, :]))
    t = model.time.times
    for vid, series in solution.vertex_signals.items():
        _write_table(out / f"vertex_{vid}.csv", "n,t,q", [np.arange(t.size), t, series], 1)
    for name, ids in model.paths.items():
        _write_path(out / f"path_{name}.csv", solution, ids, levels)
    if args.snapshot:
        (out / "snapshots.txt").write_text("\n".join(f"{n} {t[n]:.17g}" for n in levels) + "\n")
    text, problems = _audit_text(solution, args.scheme, label)
    (out / "audit.txt").write_text(text)
    print(text, end="")
    if problems and args.strict:
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_eoc(args) -> int:
    sc = SCENARIOS.get(args.scenario)
    if sc is None:
        raise ValidationError(f"unknown scenario {args.scenario!r}")
    if sc.exact_for is None or sc.refine is None:
        raise UnsupportedError(f"scenario {sc.name!r} has no exact solution; EOC is unsupported")
    if args.levels < 2:
        raise ValidationError("--levels must be at least 2")
    params = sc.params(**_scenario_params(args, sc))
    extra = {k: v for k, v in params.items() if k not in ("I", "N")}
    levels = []
    for _ in range(args.levels):
        levels.append((params["I"], params["N"]))
        params = sc.refine(params)
    config = scheme_config(args.scheme, args.weight, args.cmin, args.weno_threshold)
    report = convergence_study(sc, config, levels, extra=extra)
    text = report.to_csv()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_plot(args) -> int:
    written = emit_plot_scripts([Path(d) for d in args.runs], Path(args.to) if args.to else None, args.time)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for sc in SCENARIOS.values():
        params = ", ".join(f"{k}={v}" for k, v in sc.defaults.items())
        exact = "exact" if sc.exact_for is not None else "no exact"
        print(f"{sc.name:12s} {sc.description} [{params}; {exact}]")
    return EXIT_OK


def _times(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated times, got {text!r}") from None


def _shape(text: str):
    return None if text in ("all", "none") else int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spacemarch", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def scheme_flags(sp):
        sp.add_argument("--scheme", default="hr", choices=SCHEMES)
        sp.add_argument("--weight", type=float, help="linear weight for --scheme second (default 1/3)")
        sp.add_argument("--cmin", type=float, help="fixed Courant number used by the nonlinear limiter")
        sp.add_argument("--weno-threshold", type=float, dest="weno_threshold")

    def scenario_flags(sp):
        sp.add_argument("--I", type=int, dest="I")
        sp.add_argument("--N", type=int, dest="N")
        sp.add_argument("--level", choices=("coarse", "medium", "fine"))
        sp.add_argument("--shape", type=_shape, help="1..4 or 'all'")

    run = sub.add_parser("run", help="solve a scenario or network file and write CSVs")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario")
    src.add_argument("--config", help="network description file (JSON)")
    scheme_flags(run)
    scenario_flags(run)
    run.add_argument("--out", default="out")
    run.add_argument("--snapshot", type=_times, default=None, help="t1,t2,... for path files")
    run.add_argument("--strict", action="store_true", help="exit 3 on invariant violations")
    run.add_argument("--workers", type=int, default=None, help="threads for level-parallel edge solves")
    run.set_defaults(func=cmd_run)

    eoc = sub.add_parser("eoc", help="convergence table (I, N, E, EOC, min, max)")
    eoc.add_argument("--scenario", required=True)
    scheme_flags(eoc)
    scenario_flags(eoc)
    eoc.add_argument("--levels", type=int, default=4, help="number of doublings, starting at --I/--N")
    eoc.add_argument("--out", help="also write the CSV here")
    eoc.set_defaults(func=cmd_eoc)

    plot = sub.add_parser("plot", help="emit matplotlib scripts for run directories")
    plot.add_argument("runs", nargs="+", help="output directories of 'run'")
    plot.add_argument("--to", help="directory for the scripts (default: first run directory)")
    plot.add_argument("--time", type=float, default=None, help="time of the edge profiles (default T)")
    plot.set_defaults(func=cmd_plot)

    sc = sub.add_parser("scenarios", help="list built-in scenarios")
    sc.set_defaults(func=cmd_scenarios)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, PlotError, *VALIDATION_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:  # pragma: no cover - loads() converts these
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
