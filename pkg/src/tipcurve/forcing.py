"""Composable time-dependent coefficient functions.

A :class:`Forcing` is a closed expression tree (constants, sinusoids, sums,
scalings, arctan ramps, rational bumps and center-clamped wrappers), rather
than an arbitrary callback, so that a true upper bound on ``sup_t |f(t)|``
can always be computed by structural recursion.  Instances are immutable and
evaluation is pure, so forcings can be shared freely between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Forcing",
    "Constant",
    "Sinusoid",
    "Sum",
    "Scaled",
    "ArctanRamp",
    "RationalBump",
    "CenterClamped",
    "evaluate",
    "sup_bound",
    "q_c_tail_bound",
    "forcing_to_json",
    "forcing_from_json",
    "compile_forcing",
]

TWO_OVER_PI = 2.0 / math.pi

# Node kind codes shared with the compiled kernels.
K_CONST = 0
K_SIN = 1
K_SUM = 2
K_SCALED = 3
K_RAMP = 4
K_BUMP = 5
K_CLAMP = 6


class Forcing:
    """Base class of the expression tree."""

    def __call__(self, t):
        return evaluate(self, t)

    def sup_bound(self) -> float:
        return sup_bound(self)

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Sum((self, other))

    def __radd__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Sum((other, self))

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Sum((self, Scaled(other, -1.0)))

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Sum((other, Scaled(self, -1.0)))

    def __mul__(self, factor):
        if not isinstance(factor, (int, float)):
            return NotImplemented
        return Scaled(self, float(factor))

    __rmul__ = __mul__

    def __neg__(self):
        return Scaled(self, -1.0)


def _coerce(value):
    if isinstance(value, Forcing):
        return value
    if isinstance(value, (int, float)):
        return Constant(float(value))
    return None


@dataclass(frozen=True)
class Constant(Forcing):
    value: float


@dataclass(frozen=True)
class Sinusoid(Forcing):
    """``amplitude * sin(angular_frequency * t + phase)``."""

    amplitude: float
    angular_frequency: float
    phase: float = 0.0


@dataclass(frozen=True)
class Sum(Forcing):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("Sum needs at least one child")
        for child in self.children:
            if not isinstance(child, Forcing):
                raise TypeError(f"Sum child is not a Forcing: {child!r}")


@dataclass(frozen=True)
class Scaled(Forcing):
    child: Forcing
    factor: float


@dataclass(frozen=True)
class ArctanRamp(Forcing):
    """``(2/pi) * arctan(rate * t)``; odd, nondecreasing, range (-1, 1)."""

    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("ArctanRamp rate must be >= 0")


@dataclass(frozen=True)
class RationalBump(Forcing):
    """``2c / (pi (c^2 t^2 + 1))``; even, positive, maximum 2c/pi at t=0."""

    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("RationalBump rate must be > 0")


@dataclass(frozen=True)
class CenterClamped(Forcing):
    """Equals ``child(t)`` for |t| >= t_star and the constant ``child(t_star)``
    for |t| <= t_star."""

    child: Forcing
    t_star: float

    def __post_init__(self):
        if self.t_star <= 0:
            raise ValueError("CenterClamped t_star must be > 0")


def _eval(f: Forcing, t):
    if isinstance(f, Constant):
        return np.full_like(t, f.value, dtype=float)
    if isinstance(f, Sinusoid):
        return f.amplitude * np.sin(f.angular_frequency * t + f.phase)
    if isinstance(f, Sum):
        out = _eval(f.children[0], t)
        for child in f.children[1:]:
            out = out + _eval(child, t)
        return out
    if isinstance(f, Scaled):
        return f.factor * _eval(f.child, t)
    if isinstance(f, ArctanRamp):
        return TWO_OVER_PI * np.arctan(f.rate * t)
    if isinstance(f, RationalBump):
        c = f.rate
        return 2.0 * c / (math.pi * (c * c * t * t + 1.0))
    if isinstance(f, CenterClamped):
        u = np.where(np.abs(t) >= f.t_star, t, f.t_star)
        return _eval(f.child, u)
    raise TypeError(f"unknown forcing node {f!r}")


def evaluate(f: Forcing, t):
    """Evaluate ``f`` at scalar or array ``t``.  Total on finite inputs."""
    arr = _eval(f, np.asarray(t, dtype=float))
    if np.ndim(arr) == 0:
        return float(arr)
    return arr


def sup_bound(f: Forcing) -> float:
    """An upper bound B >= sup_t |f(t)|.

    Exact for constants, single sinusoids, ramps and bumps; a triangle
    inequality over-estimate for sums (validity is what the bifurcation
    brackets need, not tightness).
    """
    if isinstance(f, Constant):
        return abs(f.value)
    if isinstance(f, Sinusoid):
        return abs(f.amplitude)
    if isinstance(f, Sum):
        return sum(sup_bound(child) for child in f.children)
    if isinstance(f, Scaled):
        return abs(f.factor) * sup_bound(f.child)
    if isinstance(f, ArctanRamp):
        return 1.0
    if isinstance(f, RationalBump):
        return 2.0 * f.rate / math.pi
    if isinstance(f, CenterClamped):
        # inside the clamp the value is child(t_star), which the child
        # bound already dominates
        return sup_bound(f.child)
    raise TypeError(f"unknown forcing node {f!r}")


def q_c_tail_bound(c: float, t):
    """Bound ``1/(pi t)`` valid for ``q_c(s)`` whenever |s| >= t, any c > 0.

    Accepts scalar or array ``t`` (all entries positive).
    """
    if c <= 0:
        raise ValueError("rate c must be > 0")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("t must be > 0")
    out = 1.0 / (math.pi * t_arr)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def forcing_to_json(f: Forcing) -> dict:
    if isinstance(f, Constant):
        return {"kind": "const", "value": f.value}
    if isinstance(f, Sinusoid):
        return {
            "kind": "sin",
            "amplitude": f.amplitude,
            "omega": f.angular_frequency,
            "phase": f.phase,
        }
    if isinstance(f, Sum):
        return {"kind": "sum", "children": [forcing_to_json(c) for c in f.children]}
    if isinstance(f, Scaled):
        return {"kind": "scaled", "child": forcing_to_json(f.child), "factor": f.factor}
    if isinstance(f, ArctanRamp):
        return {"kind": "atan_ramp", "rate": f.rate}
    if isinstance(f, RationalBump):
        return {"kind": "bump", "rate": f.rate}
    if isinstance(f, CenterClamped):
        return {"kind": "clamp", "child": forcing_to_json(f.child), "tstar": f.t_star}
    raise TypeError(f"unknown forcing node {f!r}")


def forcing_from_json(d: dict) -> Forcing:
    kind = d.get("kind")
    if kind == "const":
        return Constant(float(d["value"]))
    if kind == "sin":
        return Sinusoid(float(d["amplitude"]), float(d["omega"]),
                        float(d.get("phase", 0.0)))
    if kind == "sum":
        return Sum(tuple(forcing_from_json(c) for c in d["children"]))
    if kind == "scaled":
        return Scaled(forcing_from_json(d["child"]), float(d["factor"]))
    if kind == "atan_ramp":
        return ArctanRamp(float(d["rate"]))
    if kind == "bump":
        return RationalBump(float(d["rate"]))
    if kind == "clamp":
        return CenterClamped(forcing_from_json(d["child"]), float(d["tstar"]))
    raise ValueError(f"unknown forcing kind {kind!r}")


# ---------------------------------------------------------------------------
# Flat encoding for the integration kernels
# ---------------------------------------------------------------------------

def _flatten(f: Forcing, parent: int, kinds, params, parents):
    idx = len(kinds)
    parents.append(parent)
    if isinstance(f, Constant):
        kinds.append(K_CONST)
        params.append((f.value, 0.0, 0.0))
    elif isinstance(f, Sinusoid):
        kinds.append(K_SIN)
        params.append((f.amplitude, f.angular_frequency, f.phase))
    elif isinstance(f, Sum):
        kinds.append(K_SUM)
        params.append((0.0, 0.0, 0.0))
        for child in f.children:
            _flatten(child, idx, kinds, params, parents)
    elif isinstance(f, Scaled):
        kinds.append(K_SCALED)
        params.append((f.factor, 0.0, 0.0))
        _flatten(f.child, idx, kinds, params, parents)
    elif isinstance(f, ArctanRamp):
        kinds.append(K_RAMP)
        params.append((f.rate, 0.0, 0.0))
    elif isinstance(f, RationalBump):
        kinds.append(K_BUMP)
        params.append((f.rate, 0.0, 0.0))
    elif isinstance(f, CenterClamped):
        kinds.append(K_CLAMP)
        params.append((f.t_star, 0.0, 0.0))
        _flatten(f.child, idx, kinds, params, parents)
    else:
        raise TypeError(f"unknown forcing node {f!r}")


@lru_cache(maxsize=512)
def compile_forcing(f: Forcing):
    """Flatten a tree (preorder) into arrays for the jitted evaluator.

    Returns ``(kinds int64[n], params float64[n,3], parents int64[n])``.
    Callers must treat the arrays as read-only (they are cached).
    """
    kinds: list = []
    params: list = []
    parents: list = []
    _flatten(f, 0, kinds, params, parents)
    return (
        np.asarray(kinds, dtype=np.int64),
        np.asarray(params, dtype=np.float64),
        np.asarray(parents, dtype=np.int64),
    )
