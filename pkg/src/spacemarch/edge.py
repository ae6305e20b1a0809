"""Linear advection on a single edge by space marching.

Every inverse scheme is written in the conservative form

    h_i * Theta_i^{n+1/2} + tau * v^n * Q_i^n = h_i * Theta_i^{n-1/2} + tau * v^n * Q_{i-1}^n

and solved column by column (outer loop over i, inner loop over n). The
flux ``Theta_i^{n+1/2}`` produced at one level is stored and reused as the
right-hand side of the next level, so the discrete conservation identity
holds node by node up to rounding.

Closures that the scheme itself does not provide:

* ghost level ``Q_i^{-1} := Q_i^0``;
* the level-0 flux uses the limiter seed ``Psi_i^0 = 1`` (HR) or the
  scheme's own weight (weighted variants);
* at the last level ``n = N`` the future value ``Q_{i-1}^{N+1}`` does not
  exist, so the flux is taken in the ratio form
  ``Theta = Q + phi/2 (Q_{i-1}^N - Q_i^{N-1})`` with ``phi = 1`` (the w = 1
  stencil) clipped to ``2C + Psi_prev`` for the HR scheme.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .kernels import (
    BRANCH_MIDDLE,
    DomainError,
    SchemeConfig,
    SpaceGrid,
    TimeGrid,
    _limiter_branch,
    _preferred_weight,
    _weno_heuristic,
)

__all__ = [
    "EdgeProblem",
    "EdgeSolution",
    "ConservationAudit",
    "Stencil",
    "ConfigurationError",
    "solve_first_order",
    "solve_fixed_weight",
    "solve_third_order",
    "solve_high_resolution",
    "solve_weno_heuristic",
    "solve_direct",
    "solve_direct_hr",
    "solve_edge",
    "predict_node",
    "correct_node",
    "dmp_check",
    "conservation_audit",
]

MODE_FIRST = 0
MODE_FIXED = 1
MODE_THIRD = 2
MODE_WENO = 3
MODE_HR = 4


class ConfigurationError(ValueError):
    """The scheme cannot be applied to this problem."""


@dataclass(frozen=True)
class EdgeProblem:
    """Data of one edge: grids, capacity, velocity samples and boundary/initial values.

    ``velocity`` may be a scalar or the samples ``v(t^n)``, n = 0..N.
    ``boundary`` holds ``q_0(t^n)`` and ``initial`` holds ``q(x_i, 0)``; at the
    corner node the boundary value wins. ``retardation`` is only read by the
    nonlinear solver.
    """

    space: SpaceGrid
    time: TimeGrid
    kappa: float
    velocity: np.ndarray
    boundary: np.ndarray
    initial: np.ndarray | None = None
    retardation: object = None

    def __post_init__(self):
        I, N = self.space.I, self.time.N
        v = np.asarray(self.velocity, dtype=float)
        if v.ndim == 0:
            v = np.full(N + 1, float(v))
        if v.shape != (N + 1,):
            raise DomainError(f"velocity needs {N + 1} samples, got {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise DomainError("velocity samples must be positive (fixed flow direction)")
        if not self.kappa > 0:
            raise DomainError(f"capacity must be positive, got {self.kappa}")
        bc = np.asarray(self.boundary, dtype=float)
        if bc.shape != (N + 1,) or not np.all(np.isfinite(bc)):
            raise DomainError(f"boundary needs {N + 1} finite samples, got shape {bc.shape}")
        if self.initial is None:
            ic = np.zeros(I + 1)
        else:
            ic = np.asarray(self.initial, dtype=float)
        if ic.shape != (I + 1,) or not np.all(np.isfinite(ic)):
            raise DomainError(f"initial row needs {I + 1} finite samples, got shape {ic.shape}")
        for name, arr in (("velocity", v), ("boundary", bc), ("initial", ic)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def courant(self) -> np.ndarray:
        """Courant numbers C[i, n]; column 0 is NaN."""
        return self.velocity[None, :] * self.time.tau / (self.kappa * self.space.h[:, None])

    def initial_table(self):
        I, N = self.space.I, self.time.N
        Q = np.empty((I + 1, N + 1))
        Q[:, 0] = self.initial
        Q[0, :] = self.boundary
        return Q


@dataclass(frozen=True)
class EdgeSolution:
    """Space-time values ``Q[i, n]`` with the per-node scheme history.

    ``flux[i, n]`` is Theta_i^{n+1/2} in conserved units. ``psi`` holds the
    limiter used by the HR schemes (NaN for weighted schemes) and ``weight``
    the linear weight of weighted schemes (NaN for HR). ``corrections``
    counts corrector solves per node; ``fallback`` marks nodes where the
    first-order update was forced.
    """

    problem: EdgeProblem
    scheme: str
    Q: np.ndarray
    ghost: np.ndarray
    flux: np.ndarray
    psi: np.ndarray
    weight: np.ndarray
    corrections: np.ndarray
    fallback: np.ndarray
    min_divisor: float
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("Q", "ghost", "flux", "psi", "weight", "corrections", "fallback"):
            getattr(self, name).setflags(write=False)

    @property
    def x(self) -> np.ndarray:
        return self.problem.space.nodes

    @property
    def t(self) -> np.ndarray:
        return self.problem.time.times

    @property
    def repeats(self) -> np.ndarray:
        """Corrector repetitions beyond the first correction."""
        return np.maximum(self.corrections.astype(np.int64) - 1, 0)

    def at_time(self, n: int) -> np.ndarray:
        return self.Q[:, n]


@dataclass(frozen=True)
class ConservationAudit:
    stored: float
    initial: float
    inflow: float
    outflow: float
    residual: float
    max_node_residual: float

    @property
    def throughput(self) -> float:
        return max(abs(self.stored), abs(self.initial), abs(self.inflow), abs(self.outflow))

    def ok(self, rtol: float = 1e-11) -> bool:
        scale = self.throughput
        return abs(self.residual) <= rtol * scale if scale > 0 else self.residual == 0


@dataclass(frozen=True)
class Stencil:
    """Known values around an unknown ``Q_i^n``."""

    q_prev: float  # Q_i^{n-1}
    up: float  # Q_{i-1}^n
    up_next: float  # Q_{i-1}^{n+1}


# ---------------------------------------------------------------- node algebra


def _prev_flux(s: Stencil, psi_prev: float) -> float:
    return s.q_prev + 0.5 * psi_prev * (s.up - s.q_prev)


def predict_node(s: Stencil, C: float, wbar: float, psi_prev: float) -> float:
    """Single-unknown solve with the linear weight ``wbar``."""
    if not 0.0 <= psi_prev <= 2.0:
        raise DomainError(f"previous limiter must lie in [0, 2], got {psi_prev}")
    rhs = _prev_flux(s, psi_prev) + C * s.up
    div = 1.0 + C - 0.5 * (1.0 - wbar)
    return (rhs - 0.5 * (1.0 - wbar) * s.up_next - 0.5 * wbar * (s.up - s.q_prev)) / div


def correct_node(s: Stencil, C: float, psi: float, psi_prev: float) -> float:
    """Single-unknown solve with the limiter value ``psi``."""
    if not 0.0 <= psi <= 2.0 or not 0.0 <= psi_prev <= 2.0:
        raise DomainError("limiter values must lie in [0, 2]")
    rhs = _prev_flux(s, psi_prev) + C * s.up
    return (rhs - 0.5 * psi * s.up_next) / (1.0 + C - 0.5 * psi)


# ---------------------------------------------------------------- marching loops


@njit(cache=True, nogil=True)
def _degenerate(den, a, b, c, d, tol):
    scale = max(1.0, abs(a), abs(b), abs(c), abs(d))
    return abs(den) <= tol * scale


@njit(cache=True, nogil=True)
def _march_inverse(Q, ghost, h, tau, kappa, v, mode, wfix, eps, thr, max_rep, tol,
                   flux, psi, weight, corr, fb):
    I = Q.shape[0] - 1
    N = Q.shape[1] - 1
    min_div = np.inf
    for i in range(1, I + 1):
        # flux at level 0
        q0 = Q[i, 0]
        C0 = v[0] * tau / (kappa * h[i])
        if mode == MODE_FIRST:
            flux[i, 0] = q0
            psi[i, 0] = 0.0
        elif mode == MODE_HR:
            psi[i, 0] = 1.0
            flux[i, 0] = q0 + 0.5 * (Q[i - 1, 1] - q0)
        else:
            if mode == MODE_FIXED:
                w = wfix
            else:
                w = _preferred_weight(C0)
            weight[i, 0] = w
            flux[i, 0] = q0 + 0.5 * (1.0 - w) * (Q[i - 1, 1] - q0) + 0.5 * w * (Q[i - 1, 0] - ghost[i])

        for n in range(1, N + 1):
            C = v[n] * tau / (kappa * h[i])
            a = Q[i, n - 1]
            b = Q[i - 1, n]
            rhs = flux[i, n - 1] + C * b

            if mode == MODE_FIRST:
                div = 1.0 + C
                q = rhs / div
                F = q
                psi[i, n] = 0.0
            elif n == N:
                if mode == MODE_HR:
                    phi = min(1.0, 2.0 * C + psi[i, n - 1])
                    psi[i, n] = phi
                else:
                    phi = 1.0
                    weight[i, n] = 1.0
                div = 1.0 + C
                q = (rhs - 0.5 * phi * (b - a)) / div
                F = q + 0.5 * phi * (b - a)
            else:
                bp = Q[i - 1, n + 1]
                if mode == MODE_FIXED:
                    w = wfix
                else:
                    w = _preferred_weight(C)
                div = 1.0 + C - 0.5 * (1.0 - w)
                q = (rhs - 0.5 * (1.0 - w) * bp - 0.5 * w * (b - a)) / div
                F = q + 0.5 * (1.0 - w) * (bp - q) + 0.5 * w * (b - a)
                if mode == MODE_FIXED or mode == MODE_THIRD:
                    weight[i, n] = w
                elif mode == MODE_WENO:
                    if thr > 0.0 and abs(q) >= thr:
                        weight[i, n] = w
                    else:
                        ww = _weno_heuristic(bp - q, b - a, w, eps)
                        weight[i, n] = ww
                        div = 1.0 + C - 0.5 * (1.0 - ww)
                        q = (rhs - 0.5 * (1.0 - ww) * bp - 0.5 * ww * (b - a)) / div
                        F = q + 0.5 * (1.0 - ww) * (bp - q) + 0.5 * ww * (b - a)
                else:
                    # HR predictor-corrector; q is the predicted value
                    pp = psi[i, n - 1]
                    num = b - a
                    den = bp - q
                    if _degenerate(den, a, b, bp, q, tol):
                        lim = 0.0
                        branch = 0
                    else:
                        lim, branch = _limiter_branch(num / den, w, C, pp)
                    if branch == BRANCH_MIDDLE:
                        psi[i, n] = lim
                    else:
                        k = 0
                        while True:
                            div = 1.0 + C - 0.5 * lim
                            q = (rhs - 0.5 * lim * bp) / div
                            corr[i, n] += 1
                            if lim == 0.0:
                                break
                            # ratio Psi / r evaluated with the corrected value
                            phi = lim * (bp - q) / num
                            if 0.0 <= phi and phi <= 2.0 * C + pp:
                                break
                            if k < max_rep:
                                k += 1
                                den = bp - q
                                if _degenerate(den, a, b, bp, q, tol):
                                    lim = 0.0
                                else:
                                    lim = _limiter_branch(num / den, w, C, pp)[0]
                            else:
                                lim = 0.0
                                fb[i, n] = True
                                div = 1.0 + C
                                q = rhs / div
                                break
                        psi[i, n] = lim
                        F = q + 0.5 * lim * (bp - q)
            if div < min_div:
                min_div = div
            Q[i, n] = q
            flux[i, n] = F
    # flux was computed per unit capacity
    for i in range(1, I + 1):
        for n in range(N + 1):
            flux[i, n] *= kappa
    return min_div


@njit(cache=True, nogil=True)
def _march_direct(Q, C, limited, tol, phis):
    """Time-marching compact scheme (direct counterpart) with constant C."""
    I = Q.shape[0] - 1
    N = Q.shape[1] - 1
    wb = min(1.0, (2.0 + C) / 6.0)
    min_div = np.inf
    for n in range(1, N + 1):
        G_prev = Q[0, n]
        phi_prev = 0.0
        for i in range(1, I + 1):
            a = Q[i, n - 1]
            b = Q[i - 1, n]
            rhs = a + C * G_prev
            if i == I:
                if limited:
                    phi = min(1.0, 2.0 / C + phi_prev)
                else:
                    phi = 1.0
                div = 1.0 + C
                q = (rhs - C * 0.5 * phi * (a - b)) / div
                G = q + 0.5 * phi * (a - b)
            else:
                c = Q[i + 1, n - 1]
                div = 1.0 + C - C * 0.5 * (1.0 - wb)
                q = (rhs - C * 0.5 * (1.0 - wb) * c - C * 0.5 * wb * (a - b)) / div
                G = q + 0.5 * (1.0 - wb) * (c - q) + 0.5 * wb * (a - b)
                phi = 1.0 - wb
                if limited:
                    den = c - q
                    if _degenerate(den, a, b, c, q, tol):
                        phi = 0.0
                        branch = 0
                    else:
                        phi, branch = _limiter_branch((a - b) / den, wb, 1.0 / C, phi_prev)
                    if branch != BRANCH_MIDDLE:
                        div = 1.0 + C - C * 0.5 * phi
                        q = (rhs - C * 0.5 * phi * c) / div
                        # same acceptance test as the inverse corrector, with 1/C for C
                        if phi > 0.0:
                            ratio = phi * (c - q) / (a - b)
                            if not (0.0 <= ratio <= 2.0 / C + phi_prev):
                                phi = 0.0
                                div = 1.0 + C
                                q = rhs / div
                        G = q + 0.5 * phi * (c - q)
            if div < min_div:
                min_div = div
            Q[i, n] = q
            phis[i, n] = phi
            G_prev = G
            phi_prev = phi
    return min_div


# ---------------------------------------------------------------- drivers


def _run_inverse(problem: EdgeProblem, mode: int, config: SchemeConfig, w: float, name: str) -> EdgeSolution:
    I, N = problem.space.I, problem.time.N
    Q = problem.initial_table()
    ghost = Q[:, 0].copy()
    flux = np.full((I + 1, N + 1), np.nan)
    flux[0, :] = problem.kappa * Q[0, :]
    psi = np.full((I + 1, N + 1), np.nan)
    weight = np.full((I + 1, N + 1), np.nan)
    corr = np.zeros((I + 1, N + 1), dtype=np.int8)
    fb = np.zeros((I + 1, N + 1), dtype=np.bool_)
    thr = config.weno_threshold if config.weno_threshold is not None else -1.0
    min_div = _march_inverse(
        Q, ghost, problem.space.h, problem.time.tau, float(problem.kappa), problem.velocity,
        mode, float(w), float(config.weno_epsilon), float(thr), int(config.max_corrector_repeats),
        float(config.denominator_tolerance), flux, psi, weight, corr, fb,
    )
    if not min_div >= min(0.5, float(np.nanmin(problem.courant))) - 1e-15:
        raise AssertionError(f"non-positive node divisor {min_div}")
    stats = {
        "corrected_nodes": int(np.count_nonzero(corr)),
        "repeated_nodes": int(np.count_nonzero(corr > 1)),
        "fallback_nodes": int(np.count_nonzero(fb)),
        "nodes": I * N,
    }
    return EdgeSolution(problem, name, Q, ghost, flux, psi, weight, corr, fb, float(min_div), stats)


def solve_first_order(problem: EdgeProblem) -> EdgeSolution:
    return _run_inverse(problem, MODE_FIRST, SchemeConfig("first"), 0.0, "first")


def solve_fixed_weight(problem: EdgeProblem, w: float) -> EdgeSolution:
    if not 0.0 <= w <= 1.0:
        raise DomainError(f"weight must lie in [0, 1], got {w}")
    return _run_inverse(problem, MODE_FIXED, SchemeConfig.fixed(w), w, "fixed")


def solve_third_order(problem: EdgeProblem) -> EdgeSolution:
    return _run_inverse(problem, MODE_THIRD, SchemeConfig("third"), 0.0, "third")


def solve_high_resolution(problem: EdgeProblem, config: SchemeConfig | None = None) -> EdgeSolution:
    config = config or SchemeConfig("hr")
    return _run_inverse(problem, MODE_HR, config, 0.0, "hr")


def solve_weno_heuristic(problem: EdgeProblem, config: SchemeConfig | None = None) -> EdgeSolution:
    config = config or SchemeConfig("weno")
    return _run_inverse(problem, MODE_WENO, config, 0.0, "weno")


def _constant_courant(problem: EdgeProblem) -> float:
    C = problem.courant[1:, :]
    c0 = float(C[0, 0])
    if np.max(np.abs(C - c0)) > 1e-12 * c0:
        raise ConfigurationError("the direct scheme needs a constant Courant number on the edge")
    return c0


def _run_direct(problem: EdgeProblem, limited: bool, config: SchemeConfig, name: str) -> EdgeSolution:
    C = _constant_courant(problem)
    I, N = problem.space.I, problem.time.N
    Q = problem.initial_table()
    phis = np.full((I + 1, N + 1), np.nan)
    min_div = _march_direct(Q, C, limited, float(config.denominator_tolerance), phis)
    if limited:
        psi, weight = phis, np.full((I + 1, N + 1), np.nan)
    else:
        psi, weight = np.full((I + 1, N + 1), np.nan), np.full((I + 1, N + 1), min(1.0, (2.0 + C) / 6.0))
    return EdgeSolution(
        problem, name, Q, Q[:, 0].copy(), np.full((I + 1, N + 1), np.nan), psi, weight,
        np.zeros((I + 1, N + 1), dtype=np.int8), np.zeros((I + 1, N + 1), dtype=np.bool_),
        float(min_div), {"nodes": I * N},
    )


def solve_direct(problem: EdgeProblem, config: SchemeConfig | None = None) -> EdgeSolution:
    """Unlimited time-marching compact scheme, for comparison only."""
    return _run_direct(problem, False, config or SchemeConfig("direct"), "direct")


def solve_direct_hr(problem: EdgeProblem, config: SchemeConfig | None = None) -> EdgeSolution:
    """Limited time-marching compact scheme; the limiter has 2/C where the inverse one has 2C."""
    return _run_direct(problem, True, config or SchemeConfig("direct-hr"), "direct-hr")


def solve_edge(problem: EdgeProblem, config: SchemeConfig) -> EdgeSolution:
    """Dispatch on ``config.variant``; nonlinear retardation goes to the nonlinear solver."""
    if problem.retardation is not None and not getattr(problem.retardation, "is_linear", False):
        from .nonlinear import solve_nonlinear

        return solve_nonlinear(problem, config)
    variant = config.variant
    if variant == "first":
        return solve_first_order(problem)
    if variant == "fixed":
        return solve_fixed_weight(problem, config.weight)
    if variant == "third":
        return solve_third_order(problem)
    if variant == "weno":
        return solve_weno_heuristic(problem, config)
    if variant == "hr":
        return solve_high_resolution(problem, config)
    if variant == "direct":
        return solve_direct(problem, config)
    return solve_direct_hr(problem, config)


# ---------------------------------------------------------------- audits


def dmp_check(solution: EdgeSolution, rtol: float = 1e-13) -> list[tuple[int, int, float]]:
    """Nodes violating min{Q_i^{n-1}, Q_{i-1}^n} <= Q_i^n <= max{...}.

    Returns ``(i, n, magnitude)`` for every violation beyond ``rtol * scale``.
    """
    Q = solution.Q
    scale = max(1.0, float(np.max(np.abs(Q))))
    tol = rtol * scale
    old = Q[1:, :-1]
    up = Q[:-1, 1:]
    new = Q[1:, 1:]
    lo = np.minimum(old, up)
    hi = np.maximum(old, up)
    excess = np.maximum(lo - new, new - hi)
    bad = np.argwhere(excess > tol)
    return [(int(i) + 1, int(n) + 1, float(excess[i, n])) for i, n in bad]


def conservation_audit(solution: EdgeSolution, problem: EdgeProblem | None = None) -> ConservationAudit:
    """Totals of the telescoped conservation identity plus the worst node residual."""
    problem = problem or solution.problem
    if np.isnan(solution.flux[1:, :]).any():
        raise ValueError(f"scheme {solution.scheme!r} does not store conservative fluxes")
    h = problem.space.h[1:]
    tau = problem.time.tau
    v = problem.velocity
    F = solution.flux
    Q = solution.Q
    stored = float(np.sum(h * F[1:, -1]))
    initial = float(np.sum(h * F[1:, 0]))
    inflow = float(tau * np.sum(v[1:] * Q[0, 1:]))
    outflow = float(tau * np.sum(v[1:] * Q[-1, 1:]))
    node = h[:, None] * (F[1:, 1:] - F[1:, :-1]) + tau * v[None, 1:] * (Q[1:, 1:] - Q[:-1, 1:])
    return ConservationAudit(
        stored=stored,
        initial=initial,
        inflow=inflow,
        outflow=outflow,
        residual=stored - initial - inflow + outflow,
        max_node_residual=float(np.max(np.abs(node))) if node.size else 0.0,
    )
