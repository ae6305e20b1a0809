"""Scalar algebra shared by every scheme: grids, Courant numbers, linear
weights, the Courant-dependent limiter and the WENO-type weights.

The ``_``-prefixed functions are numba-compiled and are called from the
marching loops; the public wrappers validate their inputs (NaN and domain
checks) and then delegate to them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "DomainError",
    "TimeGrid",
    "SpaceGrid",
    "SchemeConfig",
    "VARIANTS",
    "courant_number",
    "preferred_weight",
    "limiter_value",
    "weno_weight_from_limiter",
    "weno_heuristic_weight",
]


class DomainError(ValueError):
    """An argument lies outside the domain of a kernel function."""


# limiter branch codes returned by _limiter_branch
BRANCH_ZERO = 0
BRANCH_COURANT = 1
BRANCH_MIDDLE = 2
BRANCH_CAP = 3


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time levels t^n = n * tau on [0, T]."""

    T: float
    N: int

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DomainError(f"time horizon must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"step count must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.tau


@dataclass(frozen=True)
class SpaceGrid:
    """Strictly increasing nodes 0 = x_0 < x_1 < ... < x_I = L."""

    nodes: np.ndarray = field(repr=False)

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise DomainError("a space grid needs at least two nodes")
        if not np.all(np.isfinite(x)):
            raise DomainError("space grid nodes must be finite")
        if x[0] != 0.0:
            raise DomainError(f"first node must be 0, got {x[0]}")
        if np.any(np.diff(x) <= 0):
            raise DomainError("space grid nodes must be strictly increasing")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @classmethod
    def uniform(cls, length: float, cells: int) -> "SpaceGrid":
        if not length > 0:
            raise DomainError(f"edge length must be positive, got {length}")
        if int(cells) != cells or cells < 1:
            raise DomainError(f"cell count must be a positive integer, got {cells}")
        x = np.arange(int(cells) + 1) * (length / cells)
        x[-1] = length
        return cls(x)

    @property
    def I(self) -> int:  # noqa: E743 - matches the usual index name
        return self.nodes.size - 1

    @property
    def length(self) -> float:
        return float(self.nodes[-1])

    @property
    def h(self) -> np.ndarray:
        """Steps padded with NaN at index 0 so that ``h[i] = x_i - x_{i-1}``."""
        return np.concatenate(([np.nan], np.diff(self.nodes)))


VARIANTS = ("first", "fixed", "third", "weno", "hr", "direct", "direct-hr")


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme selection and the tunables of the limited variants.

    ``weight`` is only used by the ``fixed`` variant. ``cmin`` replaces the
    local nonlinear Courant number inside the limiter when given.
    ``weno_threshold`` restricts the WENO re-solve to nodes whose predicted
    magnitude is below the threshold.
    """

    variant: str = "hr"
    weight: float | None = None
    weno_epsilon: float = 1e-6
    weno_threshold: float | None = None
    max_corrector_repeats: int = 1
    denominator_tolerance: float = 1e-14
    cmin: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown scheme variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == "fixed":
            if self.weight is None or not 0.0 <= self.weight <= 1.0:
                raise DomainError(f"fixed-weight scheme needs weight in [0, 1], got {self.weight}")
        if not self.weno_epsilon > 0:
            raise DomainError("weno_epsilon must be positive")
        if self.weno_threshold is not None and not self.weno_threshold > 0:
            raise DomainError("weno_threshold must be positive when given")
        if int(self.max_corrector_repeats) != self.max_corrector_repeats or self.max_corrector_repeats < 0:
            raise DomainError("max_corrector_repeats must be a non-negative integer")
        if not self.denominator_tolerance >= 0:
            raise DomainError("denominator_tolerance must be non-negative")
        if self.cmin is not None and not self.cmin > 0:
            raise DomainError("cmin must be positive when given")

    @classmethod
    def fixed(cls, w: float, **kw) -> "SchemeConfig":
        return cls(variant="fixed", weight=w, **kw)


# ---------------------------------------------------------------- jit cores


@njit(cache=True, nogil=True)
def _preferred_weight(C):
    if C < 0.25:
        return 1.0
    return (2.0 + 1.0 / C) / 6.0


@njit(cache=True, nogil=True)
def _limiter_branch(r, wbar, C, psi_prev):
    """Return (Psi, branch) for max{0, min{(2C + psi_prev) r, 1 - wbar + wbar r, 2}}.

    Ties are resolved in favour of the middle (linear-weight) branch.
    """
    courant = (2.0 * C + psi_prev) * r
    middle = 1.0 - wbar + wbar * r
    if r > 0.0 and 0.0 <= middle and middle <= courant and middle <= 2.0:
        return middle, BRANCH_MIDDLE
    m = courant
    code = BRANCH_COURANT
    if middle < m:
        m = middle
        code = BRANCH_MIDDLE
    if 2.0 < m:
        m = 2.0
        code = BRANCH_CAP
    if m <= 0.0:
        return 0.0, BRANCH_ZERO
    return m, code


@njit(cache=True, nogil=True)
def _limiter(r, wbar, C, psi_prev):
    return _limiter_branch(r, wbar, C, psi_prev)[0]


@njit(cache=True, nogil=True)
def _weno_heuristic(dA, dB, wbar, eps):
    # smoothness ratio of the past stencil over the future one: the weight
    # moves toward the stencil with the smaller jump
    num = eps + dB * dB
    den = eps + dA * dA
    r = (num * num) / (den * den)
    return wbar / (wbar + (1.0 - wbar) * r)


# ---------------------------------------------------------------- public API


def _finite(**kw):
    for name, value in kw.items():
        if value is None or not math.isfinite(value):
            raise DomainError(f"{name} must be a finite number, got {value}")


def courant_number(v: float, tau: float, kappa: float, h: float) -> float:
    """Local Courant number ``v * tau / (kappa * h)``."""
    _finite(v=v, tau=tau, kappa=kappa, h=h)
    for name, value in (("v", v), ("tau", tau), ("kappa", kappa), ("h", h)):
        if value <= 0:
            raise DomainError(f"{name} must be positive, got {value}")
    return v * tau / (kappa * h)


def preferred_weight(C: float) -> float:
    """Linear weight giving third order for constant coefficients.

    Falls back to 1 for C < 1/4, where ``(2 + 1/C)/6`` would exceed one.
    """
    _finite(C=C)
    if C <= 0:
        raise DomainError(f"Courant number must be positive, got {C}")
    return float(_preferred_weight(C))


def _check_limiter_args(r, wbar, C, psi_prev):
    _finite(r=r, wbar=wbar, C=C, psi_prev=psi_prev)
    if C <= 0:
        raise DomainError(f"Courant number must be positive, got {C}")
    if not 0.0 <= wbar <= 1.0:
        raise DomainError(f"linear weight must lie in [0, 1], got {wbar}")
    if not 0.0 <= psi_prev <= 2.0:
        raise DomainError(f"previous limiter value must lie in [0, 2], got {psi_prev}")


def limiter_value(r: float, wbar: float, C: float, psi_prev: float) -> float:
    """Courant-dependent limiter; the result always lies in [0, 2]."""
    _check_limiter_args(r, wbar, C, psi_prev)
    return float(_limiter(r, wbar, C, psi_prev))


def weno_weight_from_limiter(r: float, wbar: float, C: float, psi_prev: float) -> float:
    """Solution dependent weight w with ``1 - w + w r == limiter_value(r, ...)``."""
    _check_limiter_args(r, wbar, C, psi_prev)
    if r == 1.0:
        return wbar
    psi, branch = _limiter_branch(r, wbar, C, psi_prev)
    if branch == BRANCH_MIDDLE:
        return wbar
    if branch == BRANCH_ZERO:
        return 1.0 / (1.0 - r)
    if branch == BRANCH_CAP:
        return 1.0 / (r - 1.0)
    return (1.0 - (2.0 * C + psi_prev) * r) / (1.0 - r)


def weno_heuristic_weight(dA: float, dB: float, wbar: float, eps: float) -> float:
    """Heuristic WENO weight from the jumps ``dA`` (future) and ``dB`` (past).

    Returns ``wbar`` when the jumps match, tends to 1 (past stencil only) when
    the future jump dominates and to 0 in the opposite case.
    """
    _finite(dA=dA, dB=dB, wbar=wbar, eps=eps)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if not 0.0 <= wbar <= 1.0:
        raise DomainError(f"linear weight must lie in [0, 1], got {wbar}")
    return float(_weno_heuristic(dA, dB, wbar, eps))
