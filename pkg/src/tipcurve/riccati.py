"""Model objects for the concave quadratic (Riccati-type) equation.

Covers the x-frame equation ``x' = -x^2 + q(t) x + p(t) + lam``, the
transition equation in the y-frame with an arctan ramp, absorbing bounds,
tail approximations of the extremal solutions a (maximal backward-bounded)
and r (minimal forward-bounded), separation and exponential dichotomy fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import NotHyperbolicError
from .forcing import (
    ArctanRamp,
    Forcing,
    RationalBump,
    Scaled,
    Sum,
    evaluate,
    sup_bound,
)
from .integrator import (
    Escaped,
    IntegratorConfig,
    QuadraticRHS,
    Trajectory,
    integrate_threshold,
)

__all__ = [
    "QuadraticModel",
    "TransitionModel",
    "TailEstimate",
    "DichotomyEstimate",
    "EscapedBefore",
    "bound_m",
    "approx_a_tail",
    "approx_r_tail",
    "compute_tails",
    "to_y_frame",
    "to_x_frame",
    "separation",
    "estimate_dichotomy",
]

TWO_OVER_PI = 2.0 / math.pi


@dataclass(frozen=True)
class QuadraticModel:
    """``x' = -x^2 + q(t) x + p(t) + lam`` with q, p bounded forcings."""

    q: Optional[Forcing]
    p: Optional[Forcing]
    lam: float = 0.0

    def rhs(self) -> QuadraticRHS:
        return QuadraticRHS(shift=None, q=self.q, p=self.p, lam=self.lam)


@dataclass(frozen=True)
class TransitionModel:
    """``y' = -(y - (2/pi) arctan(c t))^2 + p(t) + lam`` with rate c >= 0."""

    p: Forcing
    c: float
    lam: float = 0.0

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("rate c must be >= 0")

    def to_quadratic(self) -> QuadraticModel:
        """The x-frame equation ``x' = -x^2 + p(t) - q_c(t) + lam`` obtained
        from the exact change of variables x = y - (2/pi) arctan(ct)."""
        if self.c == 0:
            return QuadraticModel(q=None, p=self.p, lam=self.lam)
        p_eff = Sum((self.p, Scaled(RationalBump(self.c), -1.0)))
        return QuadraticModel(q=None, p=p_eff, lam=self.lam)

    def rhs(self) -> QuadraticRHS:
        """The y-frame right-hand side, integrated directly (no transform)."""
        shift = ArctanRamp(self.c) if self.c > 0 else None
        return QuadraticRHS(shift=shift, q=None, p=self.p, lam=self.lam)


@dataclass(frozen=True)
class EscapedBefore:
    """A tail probe blew up before reaching the query time."""

    t: float


@dataclass(frozen=True)
class DichotomyEstimate:
    k: float
    beta: float
    residual: float

    def __post_init__(self):
        if self.k < 1 or self.beta <= 0:
            raise ValueError("need k >= 1 and beta > 0")


@dataclass
class TailEstimate:
    """Sampled approximations of a and r on a grid.

    Missing values (queried beyond a finite escape) are NaN; the escape
    times, when witnessed, are recorded separately.
    """

    grid: np.ndarray
    a_values: Optional[np.ndarray] = None
    r_values: Optional[np.ndarray] = None
    a_escape: Optional[float] = None
    r_escape: Optional[float] = None
    frame: str = "x"

    def to_json(self) -> dict:
        def ser(values):
            if values is None:
                return None
            return [None if math.isnan(v) else v for v in values.tolist()]

        return {
            "grid": self.grid.tolist(),
            "a": ser(self.a_values),
            "r": ser(self.r_values),
            "a_escape": self.a_escape,
            "r_escape": self.r_escape,
            "frame": self.frame,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TailEstimate":
        def de(values):
            if values is None:
                return None
            return np.array([math.nan if v is None else v for v in values])

        return cls(
            grid=np.asarray(d["grid"], dtype=float),
            a_values=de(d["a"]),
            r_values=de(d["r"]),
            a_escape=d["a_escape"],
            r_escape=d["r_escape"],
            frame=d["frame"],
        )


def bound_m(model: QuadraticModel) -> float:
    """Absorbing bound: m > 0 with ``-m^2 +- |q| m + |p| + lam <= -1``.

    The positive root of ``m^2 - |q| m - (|p| + lam + 1)``; any larger value
    is also valid, and we floor at 1 (which covers the degenerate case where
    the radicand is non-positive and every m works).
    """
    nq = sup_bound(model.q) if model.q is not None else 0.0
    np_ = sup_bound(model.p) if model.p is not None else 0.0
    rad = nq * nq + 4.0 * (np_ + model.lam + 1.0)
    root = (nq + math.sqrt(rad)) / 2.0 if rad > 0 else 0.0
    return max(root, 1.0)


def _tail_cfg(m: float, cfg: Optional[IntegratorConfig]) -> IntegratorConfig:
    cfg = cfg or IntegratorConfig()
    if cfg.blowup_threshold is None:
        cfg = replace(cfg, blowup_threshold=max(100.0, 10.0 * m))
    return cfg


def approx_a_tail(
    model: QuadraticModel,
    t_query: float = -50.0,
    horizon: float = -1000.0,
    cfg: Optional[IntegratorConfig] = None,
):
    """Approximate a(t_query) by integrating from (horizon, +m) forward.

    The start value +m dominates a everywhere, so the probe collapses onto a
    exponentially fast; with the default horizons the dichotomy condition
    makes the difference sub-double-precision.  Returns the value, or
    :class:`EscapedBefore` when the probe blows up first (t_query is then
    outside the domain of a).
    """
    if not horizon < t_query:
        raise ValueError("need horizon < t_query for the a tail")
    m = bound_m(model)
    traj = integrate_threshold(model.rhs(), horizon, +m, t_query, _tail_cfg(m, cfg))
    if isinstance(traj.outcome, Escaped):
        return EscapedBefore(t=traj.outcome.t_escape)
    return traj.x_end


def approx_r_tail(
    model: QuadraticModel,
    t_query: float = 50.0,
    horizon: float = 1000.0,
    cfg: Optional[IntegratorConfig] = None,
):
    """Mirror of :func:`approx_a_tail`: integrate from (horizon, -m)
    backward to approximate r(t_query)."""
    if not horizon > t_query:
        raise ValueError("need horizon > t_query for the r tail")
    m = bound_m(model)
    traj = integrate_threshold(model.rhs(), horizon, -m, t_query, _tail_cfg(m, cfg))
    if isinstance(traj.outcome, Escaped):
        return EscapedBefore(t=traj.outcome.t_escape)
    return traj.x_end


def _sample_probe(traj: Trajectory, grid: np.ndarray):
    """Sample a probe on the grid; NaN outside the covered span."""
    lo, hi = sorted(traj.dense.t_span)
    values = np.full(grid.shape, math.nan)
    mask = (grid >= lo) & (grid <= hi)
    if np.any(mask):
        values[mask] = np.atleast_1d(traj.dense(grid[mask]))
    return values


def compute_tails(
    model,
    grid,
    horizon: float = 1000.0,
    cfg: Optional[IntegratorConfig] = None,
    frame: Optional[str] = None,
) -> TailEstimate:
    """Sample both tails on ``grid``.

    ``model`` may be a :class:`QuadraticModel` (x-frame) or a
    :class:`TransitionModel`; for the latter, ``frame`` selects direct
    y-frame integration (``"y"``, default) or nothing prevents passing
    ``model.to_quadratic()`` and mapping with :func:`to_y_frame` instead.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be nonempty and strictly ascending")
    if isinstance(model, TransitionModel):
        rhs = model.rhs()
        m = bound_m(model.to_quadratic()) + 1.0  # y-frame absorbing bound
        out_frame = frame or "y"
    else:
        rhs = model.rhs()
        m = bound_m(model)
        out_frame = frame or "x"
    cfg = _tail_cfg(m, cfg)

    a_traj = integrate_threshold(rhs, -horizon, +m, float(grid[-1]), cfg)
    r_traj = integrate_threshold(rhs, +horizon, -m, float(grid[0]), cfg)

    a_escape = a_traj.outcome.t_escape if isinstance(a_traj.outcome, Escaped) else None
    r_escape = r_traj.outcome.t_escape if isinstance(r_traj.outcome, Escaped) else None
    return TailEstimate(
        grid=grid,
        a_values=_sample_probe(a_traj, grid),
        r_values=_sample_probe(r_traj, grid),
        a_escape=a_escape,
        r_escape=r_escape,
        frame=out_frame,
    )


def to_y_frame(x_value, t, c: float):
    """y = x + (2/pi) arctan(c t); exact inverse of :func:`to_x_frame`."""
    return x_value + TWO_OVER_PI * np.arctan(c * np.asarray(t, dtype=float))


def to_x_frame(y_value, t, c: float):
    return y_value - TWO_OVER_PI * np.arctan(c * np.asarray(t, dtype=float))


def separation(tail: TailEstimate) -> float:
    """inf over the grid of (a - r); a negative value flags a numerical
    inconsistency (a < r is impossible while bounded solutions exist)."""
    if tail.a_values is None or tail.r_values is None:
        raise ValueError("both tails required")
    mask = np.isfinite(tail.a_values) & np.isfinite(tail.r_values)
    if not np.any(mask):
        raise ValueError("tails share no common grid points")
    return float(np.min(tail.a_values[mask] - tail.r_values[mask]))


def estimate_dichotomy(
    model,
    solution_samples: Trajectory,
    n: int = 4001,
) -> DichotomyEstimate:
    """Fit dichotomy constants (k, beta) along a bounded solution b.

    The variational transition factor is E(s,t) = exp(int_s^t (-2 b + q));
    its log-integrand is integrated by composite Simpson on a uniform
    resampling of the dense output, beta is the least-squares slope of the
    cumulative integral against time, and k is lifted so that
    E(s,t) <= k e^{-beta (t - s)} holds on every sampled pair.
    """
    lo, hi = sorted(solution_samples.dense.t_span)
    ts = np.linspace(lo, hi, n)
    b = np.atleast_1d(solution_samples.dense(ts))
    if isinstance(model, TransitionModel):
        # y-frame: d/dy rhs = -2 (y - (2/pi) arctan(ct))
        shift = TWO_OVER_PI * np.arctan(model.c * ts)
        integrand = -2.0 * (b - shift)
    else:
        qv = (
            np.broadcast_to(np.atleast_1d(evaluate(model.q, ts)), ts.shape)
            if model.q is not None
            else np.zeros_like(ts)
        )
        integrand = -2.0 * b + qv
    cum = cumulative_simpson(integrand, x=ts, initial=0.0)

    coef = np.polyfit(ts, cum, 1)
    beta = -float(coef[0])
    if beta <= 0:
        raise NotHyperbolicError(f"fitted decay rate is not positive: beta={beta:.3g}")
    drift = cum + beta * ts
    run_min = np.minimum.accumulate(drift)
    k = float(np.exp(np.max(drift - run_min)))
    residual = float(np.std(cum - np.polyval(coef, ts)))
    return DichotomyEstimate(k=max(k, 1.0), beta=beta, residual=residual)
