"""Advection with a nonlinear retardation function theta(q).

The HR scheme is applied to the stored quantity Theta = theta(Q): fluxes,
limiter ratios and the limiter itself live in Theta-space, while the
advective term stays linear in Q. Every predicted or corrected value is a
root of a strictly increasing scalar function, found with a safeguarded
Newton iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .edge import EdgeProblem, EdgeSolution
from .kernels import BRANCH_MIDDLE, DomainError, SchemeConfig, _limiter_branch, _preferred_weight

__all__ = [
    "RetardationModel",
    "Linear",
    "Quadratic",
    "NonlinearNodeEquation",
    "BracketError",
    "nonlinear_courant",
    "solve_node_scalar",
    "solve_nonlinear",
    "solve_nonlinear_hr",
    "solve_nonlinear_first_order",
]

ROOT_RTOL = 1e-12
MAX_ITER = 60
MAX_WIDEN = 8


class BracketError(RuntimeError):
    """No sign change of the node equation could be bracketed."""


@dataclass(frozen=True)
class RetardationModel:
    """theta(q) = a*q + b*q**2 on an operating range where theta' >= kappa_min > 0."""

    a: float
    b: float = 0.0
    q_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        lo, hi = self.q_range
        if not lo < hi:
            raise DomainError(f"operating range must be increasing, got {self.q_range}")
        if not self.kappa_min > 0:
            raise DomainError(f"theta must be strictly increasing on {self.q_range}")

    @property
    def is_linear(self) -> bool:
        return self.b == 0.0

    @property
    def kappa_min(self) -> float:
        return min(self.derivative(self.q_range[0]), self.derivative(self.q_range[1]))

    @property
    def kappa_max(self) -> float:
        return max(self.derivative(self.q_range[0]), self.derivative(self.q_range[1]))

    def theta(self, q):
        return self.a * q + self.b * q * q

    def derivative(self, q):
        return self.a + 2.0 * self.b * q

    def secant(self, q1, q2):
        """(theta(q1) - theta(q2)) / (q1 - q2), exact for the quadratic family."""
        return self.a + self.b * (q1 + q2)

    def to_dict(self) -> dict:
        if self.is_linear:
            return {"type": "linear", "kappa": self.a}
        return {"type": "quadratic", "a": self.a, "b": self.b}


def Linear(kappa: float) -> RetardationModel:
    return RetardationModel(kappa, 0.0)


def Quadratic(a: float, b: float, q_range=(0.0, 1.0)) -> RetardationModel:
    return RetardationModel(a, b, tuple(q_range))


@dataclass(frozen=True)
class NonlinearNodeEquation:
    """F(Q) = c_theta * theta(Q) + lam * Q - rhs with c_theta >= 0 and lam > 0."""

    model: RetardationModel
    c_theta: float
    lam: float
    rhs: float

    def __call__(self, q: float) -> float:
        return self.c_theta * self.model.theta(q) + self.lam * q - self.rhs

    def derivative(self, q: float) -> float:
        return self.c_theta * self.model.derivative(q) + self.lam


def nonlinear_courant(q_i: float, q_im1: float, tau: float, v: float, h: float,
                      model: RetardationModel) -> float:
    """Courant number with the secant (or tangent, for equal values) of theta."""
    lam = tau * v / h
    if q_i != q_im1:
        return lam / model.secant(q_i, q_im1)
    return lam / model.derivative(q_i)


# ---------------------------------------------------------------- root solve


@njit(cache=True, nogil=True)
def _eq(q, ct, lam, rhs, a, b):
    return ct * (a * q + b * q * q) + lam * q - rhs


@njit(cache=True, nogil=True)
def _root(ct, lam, rhs, a, b, lo, hi, guess):
    """Safeguarded Newton for the increasing F; returns (q, status, iterations).

    status 0: converged, 1: could not bracket.
    """
    if lo > hi:
        lo, hi = hi, lo
    width = hi - lo
    floor = 1e-12 * max(1.0, abs(lo), abs(hi))
    if width < floor:
        width = floor
    flo = _eq(lo, ct, lam, rhs, a, b)
    fhi = _eq(hi, ct, lam, rhs, a, b)
    k = 0
    while (flo > 0.0 or fhi < 0.0) and k < MAX_WIDEN:
        if flo > 0.0:
            lo -= width
            flo = _eq(lo, ct, lam, rhs, a, b)
        if fhi < 0.0:
            hi += width
            fhi = _eq(hi, ct, lam, rhs, a, b)
        width *= 2.0
        k += 1
    if flo > 0.0 or fhi < 0.0:
        return 0.5 * (lo + hi), 1, 0
    if flo == 0.0:
        return lo, 0, 0
    if fhi == 0.0:
        return hi, 0, 0
    scale = max(abs(rhs), abs(ct * (a * lo + b * lo * lo)) + abs(lam * lo),
                abs(ct * (a * hi + b * hi * hi)) + abs(lam * hi))
    ftol = ROOT_RTOL * scale
    q = guess
    if not (lo < q < hi):
        q = 0.5 * (lo + hi)
    for it in range(MAX_ITER):
        f = _eq(q, ct, lam, rhs, a, b)
        if f == 0.0:
            return q, 0, it + 1
        if f < 0.0:
            lo = q
        else:
            hi = q
        df = ct * (a + 2.0 * b * q) + lam
        qn = q - f / df
        if not (lo <= qn <= hi):
            qn = 0.5 * (lo + hi)
        if qn == q or (abs(f) <= ftol and abs(qn - q) <= 4e-16 * max(1.0, abs(q))):
            return qn, 0, it + 1
        q = qn
    return q, 0, MAX_ITER


def solve_node_scalar(eq: NonlinearNodeEquation, bracket: tuple[float, float],
                      guess: float | None = None) -> float:
    """Root of the monotone node equation inside (a widened) ``bracket``."""
    lo, hi = bracket
    if not eq.lam > 0 or eq.c_theta < 0:
        raise DomainError("node equation must be strictly increasing")
    if eq(hi) < eq(lo) and hi > lo:
        raise DomainError("node equation is not monotone on the bracket")
    if guess is None:
        # linearisation of theta around the bracket midpoint
        mid = 0.5 * (lo + hi)
        m = eq.model
        guess = (eq.rhs - eq.c_theta * (m.theta(mid) - m.derivative(mid) * mid)) / (
            eq.c_theta * m.derivative(mid) + eq.lam)
    q, status, _ = _root(eq.c_theta, eq.lam, eq.rhs, eq.model.a, eq.model.b,
                         float(lo), float(hi), float(guess))
    if status:
        raise BracketError(f"no root bracketed from [{lo}, {hi}] after {MAX_WIDEN} widenings")
    return float(q)


# ---------------------------------------------------------------- marching


@njit(cache=True, nogil=True)
def _solve(ct, lam, rhs, a, b, s1, s2, s3, s4, lin_at):
    lo = min(s1, s2, s3, s4)
    hi = max(s1, s2, s3, s4)
    d = a + 2.0 * b * lin_at
    guess = (rhs - ct * (a * lin_at + b * lin_at * lin_at - d * lin_at)) / (ct * d + lam)
    return _root(ct, lam, rhs, a, b, lo, hi, guess)


@njit(cache=True, nogil=True)
def _march_nonlinear(Q, h, tau, v, a, b, hr, cmin, max_rep, tol, flux, psi, corr, fb, diag):
    """diag[0]: worst status, diag[1]: failing i, diag[2]: failing n, diag[3]: max iterations."""
    I = Q.shape[0] - 1
    N = Q.shape[1] - 1
    for i in range(1, I + 1):
        q0 = Q[i, 0]
        T0 = a * q0 + b * q0 * q0
        if hr:
            psi[i, 0] = 1.0
            up1 = Q[i - 1, 1]
            flux[i, 0] = T0 + 0.5 * ((a * up1 + b * up1 * up1) - T0)
        else:
            psi[i, 0] = 0.0
            flux[i, 0] = T0
        for n in range(1, N + 1):
            lam = tau * v[n] / h[i]
            qa = Q[i, n - 1]
            qb = Q[i - 1, n]
            Ta = a * qa + b * qa * qa
            Tb = a * qb + b * qb * qb
            rhs = flux[i, n - 1] + lam * qb
            if not hr:
                q, st, it = _solve(1.0, lam, rhs, a, b, qa, qb, qa, qb, qa)
                F = a * q + b * q * q
                psi[i, n] = 0.0
            elif n == N:
                pp = psi[i, n - 1]
                if cmin > 0.0:
                    c_est = cmin
                else:
                    c_est = lam / (a + 2.0 * b * qa)
                phi = min(1.0, 2.0 * c_est + pp)
                q, st, it = _solve(1.0, lam, rhs - 0.5 * phi * (Tb - Ta), a, b, qa, qb, qa, qb, qa)
                c_nl = cmin if cmin > 0.0 else lam / (a + b * (q + qb))
                if phi > 2.0 * c_nl + pp:
                    phi = min(1.0, pp)
                    q, st, it = _solve(1.0, lam, rhs - 0.5 * phi * (Tb - Ta), a, b, qa, qb, qa, qb, qa)
                psi[i, n] = phi
                F = a * q + b * q * q + 0.5 * phi * (Tb - Ta)
            else:
                pp = psi[i, n - 1]
                qbp = Q[i - 1, n + 1]
                Tbp = a * qbp + b * qbp * qbp
                w = _preferred_weight(lam / (a + 2.0 * b * qa))
                # predictor with the linear weight
                q, st, it = _solve(0.5 * (1.0 + w), lam,
                                   rhs - 0.5 * (1.0 - w) * Tbp - 0.5 * w * (Tb - Ta),
                                   a, b, qa, qb, qbp, qa, qa)
                Tq = a * q + b * q * q
                F = Tq + 0.5 * (1.0 - w) * (Tbp - Tq) + 0.5 * w * (Tb - Ta)
                num = Tb - Ta
                den = Tbp - Tq
                C = cmin if cmin > 0.0 else lam / (a + b * (q + qb))
                scale = max(1.0, abs(Ta), abs(Tb), abs(Tbp), abs(Tq))
                if abs(den) <= tol * scale:
                    lim = 0.0
                    branch = 0
                else:
                    lim, branch = _limiter_branch(num / den, w, C, pp)
                if branch == BRANCH_MIDDLE:
                    psi[i, n] = lim
                else:
                    k = 0
                    while True:
                        q, st, it = _solve(1.0 - 0.5 * lim, lam, rhs - 0.5 * lim * Tbp,
                                           a, b, qa, qb, qbp, qa, qa)
                        corr[i, n] += 1
                        if lim == 0.0 or st != 0:
                            break
                        Tq = a * q + b * q * q
                        C = cmin if cmin > 0.0 else lam / (a + b * (q + qb))
                        phi = lim * (Tbp - Tq) / num
                        if 0.0 <= phi and phi <= 2.0 * C + pp:
                            break
                        if k < max_rep:
                            k += 1
                            den = Tbp - Tq
                            if abs(den) <= tol * scale:
                                lim = 0.0
                            else:
                                lim = _limiter_branch(num / den, w, C, pp)[0]
                        else:
                            lim = 0.0
                            fb[i, n] = True
                            q, st, it = _solve(1.0, lam, rhs, a, b, qa, qb, qa, qb, qa)
                            break
                    psi[i, n] = lim
                    Tq = a * q + b * q * q
                    F = Tq + 0.5 * lim * (Tbp - Tq)
            if st > diag[0]:
                diag[0] = st
                diag[1] = i
                diag[2] = n
            if it > diag[3]:
                diag[3] = it
            Q[i, n] = q
            flux[i, n] = F
    return 0


def _model_of(problem: EdgeProblem) -> RetardationModel:
    model = problem.retardation
    if model is None:
        return Linear(problem.kappa)
    return model


def _run(problem: EdgeProblem, config: SchemeConfig, hr: bool) -> EdgeSolution:
    model = _model_of(problem)
    I, N = problem.space.I, problem.time.N
    Q = problem.initial_table()
    flux = np.full((I + 1, N + 1), np.nan)
    flux[0, :] = model.theta(Q[0, :])
    psi = np.full((I + 1, N + 1), np.nan)
    corr = np.zeros((I + 1, N + 1), dtype=np.int8)
    fb = np.zeros((I + 1, N + 1), dtype=np.bool_)
    diag = np.zeros(4, dtype=np.int64)
    cmin = config.cmin if config.cmin is not None else -1.0
    _march_nonlinear(Q, problem.space.h, problem.time.tau, problem.velocity, float(model.a),
                     float(model.b), hr, float(cmin), int(config.max_corrector_repeats),
                     float(config.denominator_tolerance), flux, psi, corr, fb, diag)
    if diag[0]:
        raise BracketError(f"node equation at i={diag[1]}, n={diag[2]} could not be bracketed")
    stats = {
        "corrected_nodes": int(np.count_nonzero(corr)),
        "repeated_nodes": int(np.count_nonzero(corr > 1)),
        "fallback_nodes": int(np.count_nonzero(fb)),
        "max_root_iterations": int(diag[3]),
        "nodes": I * N,
    }
    name = "nonlinear-hr" if hr else "nonlinear-first"
    min_div = math.nan
    return EdgeSolution(problem, name, Q, Q[:, 0].copy(), flux, psi, np.full((I + 1, N + 1), np.nan),
                        corr, fb, min_div, stats)


def solve_nonlinear_hr(problem: EdgeProblem, config: SchemeConfig | None = None) -> EdgeSolution:
    return _run(problem, config or SchemeConfig("hr"), True)


def solve_nonlinear_first_order(problem: EdgeProblem) -> EdgeSolution:
    return _run(problem, SchemeConfig("first"), False)


def solve_nonlinear(problem: EdgeProblem, config: SchemeConfig) -> EdgeSolution:
    if config.variant == "hr":
        return solve_nonlinear_hr(problem, config)
    if config.variant == "first":
        return solve_nonlinear_first_order(problem)
    raise DomainError(f"scheme {config.variant!r} is not available with nonlinear retardation")
