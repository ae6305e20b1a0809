"""Scalar signals used for boundary series q_m(t) and initial profiles q(x, 0).

Every signal is a small frozen dataclass, evaluates elementwise on arrays and
round-trips through ``to_dict`` / ``signal_from_dict``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

__all__ = [
    "Signal",
    "Constant",
    "Sine",
    "Gaussian",
    "Impulse",
    "Table",
    "Shapes",
    "SHAPE_ORIGINS",
    "SHAPE_WIDTH",
    "shape_profile",
    "signal_from_dict",
    "SignalError",
]


class SignalError(ValueError):
    pass


class Signal:
    kind = ""

    def __call__(self, s):
        raise NotImplementedError

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = [list(p) if isinstance(p, tuple) else p for p in value]
            out[f.name] = value
        return out


@dataclass(frozen=True)
class Constant(Signal):
    c: float
    kind = "constant"

    def __call__(self, s):
        return np.full(np.shape(s), float(self.c))


@dataclass(frozen=True)
class Sine(Signal):
    """amplitude * sin(angular_frequency * s + phase)"""

    amplitude: float
    angular_frequency: float
    phase: float = 0.0
    kind = "sine"

    def __call__(self, s):
        return self.amplitude * np.sin(self.angular_frequency * np.asarray(s, float) + self.phase)


@dataclass(frozen=True)
class Gaussian(Signal):
    """amplitude * exp(-((s - center) / width)**2)"""

    center: float
    width: float
    amplitude: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not self.width > 0:
            raise SignalError(f"gaussian width must be positive, got {self.width}")

    def __call__(self, s):
        z = (np.asarray(s, float) - self.center) / self.width
        return self.amplitude * np.exp(-z * z)


@dataclass(frozen=True)
class Impulse(Signal):
    """Flat-topped pulse c * exp(-2 (3 (x - 0.3 s) - x0)**10) observed at x = 0."""

    c: float
    x0: float
    kind = "impulse"

    def __call__(self, s):
        z = -0.9 * np.asarray(s, float) - self.x0
        return self.c * np.exp(-2.0 * z**10)


@dataclass(frozen=True)
class Table(Signal):
    """Piecewise linear through ``points`` (held constant outside)."""

    points: tuple
    kind = "table"

    def __post_init__(self):
        pts = tuple((float(a), float(b)) for a, b in self.points)
        if len(pts) < 1:
            raise SignalError("table signal needs at least one point")
        if any(pts[k + 1][0] <= pts[k][0] for k in range(len(pts) - 1)):
            raise SignalError("table abscissae must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __call__(self, s):
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        return np.interp(np.asarray(s, float), xs, ys)


SHAPE_ORIGINS = (0.6, 0.2, -0.2, -0.6)
SHAPE_WIDTH = 0.4


def shape_profile(k: int | None, y):
    """Shape ``k`` (1..4) with support (a_k - 0.4, a_k); ``None`` sums all four.

    1: half-cosine hump, 2: triangle, 3: square pulse, 4: smooth C-infinity bump.
    All take values in [0, 1].
    """
    y = np.asarray(y, float)
    if k is None:
        return sum(shape_profile(j, y) for j in (1, 2, 3, 4))
    if k not in (1, 2, 3, 4):
        raise SignalError(f"shape index must be 1..4, got {k}")
    half = SHAPE_WIDTH / 2
    s = (y - (SHAPE_ORIGINS[k - 1] - half)) / half
    inside = np.abs(s) < 1.0
    out = np.zeros_like(s)
    si = s[inside]
    if k == 1:
        out[inside] = np.cos(0.5 * math.pi * si)
    elif k == 2:
        out[inside] = 1.0 - np.abs(si)
    elif k == 3:
        out[inside] = 1.0
    else:
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


@dataclass(frozen=True)
class Shapes(Signal):
    """shape_profile(shape, origin + direction * s); ``shape`` None means all four."""

    shape: int | None
    origin: float
    direction: float = 1.0
    kind = "shapes"

    def __post_init__(self):
        if self.shape is not None and self.shape not in (1, 2, 3, 4):
            raise SignalError(f"shape index must be 1..4 or null, got {self.shape}")

    def __call__(self, s):
        return shape_profile(self.shape, self.origin + self.direction * np.asarray(s, float))


_KINDS = {cls.kind: cls for cls in (Constant, Sine, Gaussian, Impulse, Table, Shapes)}


def signal_from_dict(d: dict, where: str = "signal") -> Signal:
    if not isinstance(d, dict):
        raise SignalError(f"{where}: expected an object, got {type(d).__name__}")
    kind = d.get("kind")
    if kind not in _KINDS:
        raise SignalError(f"{where}.kind: unknown signal kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls = _KINDS[kind]
    names = {f.name for f in fields(cls)}
    extra = set(d) - names - {"kind"}
    if extra:
        raise SignalError(f"{where}: unknown keys {sorted(extra)} for signal kind {kind!r}")
    kw = {k: v for k, v in d.items() if k != "kind"}
    for name, value in kw.items():
        if name == "points":
            continue
        if name == "shape" and value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SignalError(f"{where}.{name}: expected a number, got {value!r}")
    try:
        return cls(**kw)
    except TypeError as exc:
        raise SignalError(f"{where}: {exc}") from None
