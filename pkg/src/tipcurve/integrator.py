"""Adaptive embedded Runge-Kutta 5(4) integration with dense output,
threshold/event detection and finite-time blow-up detection.

Two execution paths share the same scheme and constants:

* :class:`QuadraticRHS` right-hand sides (the Riccati family) run through
  the compiled kernel in :mod:`tipcurve._kernels`;
* arbitrary Python callables ``rhs(t, x) -> float`` run through a plain
  Python loop (used for tests and one-off oracles).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels as K
from .errors import NumericError, StiffnessError
from .forcing import Constant, Forcing, compile_forcing, evaluate

__all__ = [
    "IntegratorConfig",
    "QuadraticRHS",
    "Trajectory",
    "Completed",
    "Escaped",
    "integrate",
    "integrate_until",
    "integrate_threshold",
    "get_integration_count",
    "reset_integration_count",
]

_ZERO = Constant(0.0)

# Counts every integration performed in this process; the results cache is
# validated against it (a cache hit must leave it untouched).
_INTEGRATION_COUNT = 0


def get_integration_count() -> int:
    return _INTEGRATION_COUNT


def reset_integration_count() -> None:
    global _INTEGRATION_COUNT
    _INTEGRATION_COUNT = 0


def _bump_count() -> None:
    global _INTEGRATION_COUNT
    _INTEGRATION_COUNT += 1


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and step-size limits.

    ``h_min``/``h_max`` default to ``1e-12 * span`` and ``span / 10`` of the
    requested integration span; ``blowup_threshold`` defaults to 100 (model
    code overrides it with ``max(100, 10 * m)`` for absorbing bound m).
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    h_init: Optional[float] = None
    h_min: Optional[float] = None
    h_max: Optional[float] = None
    blowup_threshold: Optional[float] = None
    max_steps: int = 20_000_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.h_min is not None and self.h_max is not None and self.h_min > self.h_max:
            raise ValueError("h_min must not exceed h_max")
        if self.blowup_threshold is not None and self.blowup_threshold <= 0:
            raise ValueError("blowup_threshold must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def resolve(self, span: float):
        h_min = self.h_min if self.h_min is not None else 1e-12 * span
        h_max = self.h_max if self.h_max is not None else span / 10.0
        h_init = self.h_init if self.h_init is not None else 0.0
        blowup = self.blowup_threshold if self.blowup_threshold is not None else 100.0
        return h_init, h_min, h_max, blowup


@dataclass(frozen=True)
class QuadraticRHS:
    """``x' = -(x - shift(t))^2 + q(t) x + p(t) + lam``.

    ``shift`` covers the y-frame transition equation (shift = arctan ramp);
    the plain Riccati x-frame uses shift = None.
    """

    shift: Optional[Forcing] = None
    q: Optional[Forcing] = None
    p: Optional[Forcing] = None
    lam: float = 0.0

    def trees(self):
        s = compile_forcing(self.shift if self.shift is not None else _ZERO)
        q = compile_forcing(self.q if self.q is not None else _ZERO)
        p = compile_forcing(self.p if self.p is not None else _ZERO)
        return s, q, p

    def __call__(self, t, x):
        s = evaluate(self.shift, t) if self.shift is not None else 0.0
        q = evaluate(self.q, t) if self.q is not None else 0.0
        p = evaluate(self.p, t) if self.p is not None else 0.0
        d = x - s
        return -d * d + q * x + p + self.lam


@dataclass(frozen=True)
class Completed:
    pass


@dataclass(frozen=True)
class Escaped:
    t_escape: float
    sign: int


class DenseOutput:
    """Piecewise-quartic continuous extension over the accepted steps."""

    def __init__(self, ts: np.ndarray, rc: np.ndarray, dirn: float):
        self._ts = ts
        self._rc = rc
        self._dirn = dirn
        self._key = ts * dirn  # ascending

    @property
    def t_span(self):
        return float(self._ts[0]), float(self._ts[-1])

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        key = self._key
        u = t_arr * self._dirn
        slack = 1e-9 * (abs(key[-1] - key[0]) + 1.0)
        if np.any(u < key[0] - slack) or np.any(u > key[-1] + slack):
            raise ValueError(
                f"dense output queried outside covered span {self.t_span}"
            )
        idx = np.clip(np.searchsorted(key, u, side="right") - 1, 0, len(key) - 2)
        h = self._ts[idx + 1] - self._ts[idx]
        theta = np.clip((t_arr - self._ts[idx]) / h, 0.0, 1.0)
        r = self._rc[idx]
        val = r[..., 0] + theta * (
            r[..., 1]
            + (1.0 - theta) * (r[..., 2] + theta * (r[..., 3] + (1.0 - theta) * r[..., 4]))
        )
        if val.ndim == 0:
            return float(val)
        return val


@dataclass
class Trajectory:
    """Result of one integration run.

    ``ts``/``xs`` are the accepted nodes (strictly ordered in the
    integration direction); ``dense`` evaluates the continuous extension on
    the covered span; ``outcome`` distinguishes normal completion from a
    finite-time escape; ``event_time`` is set when a threshold/event stop
    was requested and fired.
    """

    direction: str
    ts: np.ndarray
    xs: np.ndarray
    dense: DenseOutput
    outcome: Union[Completed, Escaped]
    event_time: Optional[float] = None

    @property
    def samples(self):
        return np.column_stack((self.ts, self.xs))

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def x_end(self) -> float:
        return float(self.xs[-1])

    def __call__(self, t):
        return self.dense(t)

    def to_csv(self, path) -> None:
        """Write ``t,x`` rows at 17 significant digits (LF endings)."""
        lines = ["t,x"]
        for t, x in zip(self.ts, self.xs):
            lines.append(f"{t:.17g},{x:.17g}")
        if isinstance(self.outcome, Escaped):
            sign = "+" if self.outcome.sign > 0 else "-"
            lines.append(f"# escaped t={self.outcome.t_escape:.17g} sign={sign}")
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _build_trajectory(t0, t1, ts, xs, rc, status, t_escape, esc_sign, t_event):
    dirn = 1.0 if t1 > t0 else -1.0
    direction = "forward" if dirn > 0 else "backward"
    if status == K.ST_STIFF:
        raise StiffnessError(
            f"step size underflow near t={ts[-1]:.6g} (stiffness or vanishing h_min)"
        )
    if status == K.ST_NAN:
        raise NumericError(f"NaN/Inf in right-hand side near t={ts[-1]:.6g}")
    if status == K.ST_MAX_STEPS:
        raise NumericError("step budget exhausted")
    dense = DenseOutput(ts, rc, dirn)
    if status == K.ST_ESCAPED:
        outcome = Escaped(t_escape=float(t_escape), sign=int(esc_sign))
        return Trajectory(direction, ts, xs, dense, outcome)
    outcome = Completed()
    ev = None if math.isnan(t_event) else float(t_event)
    return Trajectory(direction, ts, xs, dense, outcome, event_time=ev)


def integrate_threshold(
    rhs: QuadraticRHS,
    t0: float,
    x0: float,
    t1: float,
    cfg: Optional[IntegratorConfig] = None,
    lower: Optional[float] = None,
    upper: Optional[float] = None,
) -> Trajectory:
    """Kernel-path integration with optional stop thresholds on the state."""
    if t0 == t1:
        raise ValueError("t0 and t1 must differ")
    cfg = cfg or IntegratorConfig()
    h_init, h_min, h_max, blowup = cfg.resolve(abs(t1 - t0))
    (sk, sp, spa), (qk, qp, qpa), (pk, pp, ppa) = rhs.trees()
    _bump_count()
    out = K.integrate_quadratic(
        sk, sp, spa, qk, qp, qpa, pk, pp, ppa, rhs.lam,
        float(t0), float(x0), float(t1),
        cfg.rel_tol, cfg.abs_tol, h_init, h_min, h_max, blowup,
        math.nan if lower is None else float(lower),
        math.nan if upper is None else float(upper),
        cfg.max_steps,
    )
    return _build_trajectory(t0, t1, *out)


def _integrate_py(rhs, t0, x0, t1, cfg, event=None):
    """Generic-callable DP5(4) loop; mirrors the kernel's scheme."""
    h_init, h_min, h_max, blowup = cfg.resolve(abs(t1 - t0))
    dirn = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    rtol, atol = cfg.rel_tol, cfg.abs_tol

    t, x = float(t0), float(x0)
    ts, xs, rcs = [t], [x], []
    f = rhs
    k1 = f(t, x)

    if h_init > 0:
        h = h_init
    else:
        sc = atol + rtol * abs(x)
        d0, d1 = abs(x) / sc, abs(k1) / sc
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h0 = min(h0, span)
        f1 = f(t + dirn * h0, x + dirn * h0 * k1)
        d2 = abs(f1 - k1) / sc / h0
        dm = max(d1, d2)
        h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
        h = min(100.0 * h0, h1, span)
    h = min(max(h, h_min), h_max)

    status = K.ST_MAX_STEPS
    t_escape, esc_sign, t_event = math.nan, 0, math.nan
    ev_prev = event(t, x) if event is not None else None

    for _ in range(cfg.max_steps):
        remaining = (t1 - t) * dirn
        if remaining <= 0:
            status = K.ST_COMPLETED
            break
        h = min(h, remaining)
        hs = dirn * h

        k2 = f(t + K.C2 * hs, x + hs * (K.A21 * k1))
        k3 = f(t + K.C3 * hs, x + hs * (K.A31 * k1 + K.A32 * k2))
        k4 = f(t + K.C4 * hs, x + hs * (K.A41 * k1 + K.A42 * k2 + K.A43 * k3))
        k5 = f(t + K.C5 * hs, x + hs * (K.A51 * k1 + K.A52 * k2 + K.A53 * k3 + K.A54 * k4))
        k6 = f(t + hs, x + hs * (K.A61 * k1 + K.A62 * k2 + K.A63 * k3 + K.A64 * k4 + K.A65 * k5))
        x1 = x + hs * (K.B1 * k1 + K.B3 * k3 + K.B4 * k4 + K.B5 * k5 + K.B6 * k6)
        k7 = f(t + hs, x1)

        err_est = hs * (K.E1 * k1 + K.E3 * k3 + K.E4 * k4 + K.E5 * k5 + K.E6 * k6 + K.E7 * k7)
        sc = atol + rtol * max(abs(x), abs(x1))
        err = abs(err_est) / sc

        if not math.isfinite(err):
            h *= 0.1
            if h < h_min:
                status = K.ST_NAN
                break
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < h_min:
                status = K.ST_STIFF
                break
            continue

        ydiff = x1 - x
        bspl = hs * k1 - ydiff
        rc = (
            x,
            ydiff,
            bspl,
            ydiff - hs * k7 - bspl,
            hs * (K.D1 * k1 + K.D3 * k3 + K.D4 * k4 + K.D5 * k5 + K.D6 * k6 + K.D7 * k7),
        )
        rcs.append(rc)
        t_new = t + hs
        ts.append(t_new)
        xs.append(x1)

        hit_theta, hit_code, hit_level = 2.0, -1, 0.0
        if (x + blowup > 0) and (x1 + blowup <= 0):
            th = K.locate_level(*rc, -blowup)
            if th < hit_theta:
                hit_theta, hit_code, hit_level = th, K.ST_ESCAPED, -blowup
        if (x - blowup < 0) and (x1 - blowup >= 0):
            th = K.locate_level(*rc, blowup)
            if th < hit_theta:
                hit_theta, hit_code, hit_level = th, K.ST_ESCAPED, blowup
        if event is not None:
            ev_new = event(t_new, x1)
            if (ev_prev > 0) != (ev_new > 0) or ev_new == 0.0:
                # refine the sign change on the dense interpolant
                lo, hi, glo = 0.0, 1.0, ev_prev
                for _ in range(90):
                    mid = 0.5 * (lo + hi)
                    gm = event(t + hs * mid, K.dense_eval(*rc, mid))
                    if (gm > 0) == (glo > 0):
                        lo, glo = mid, gm
                    else:
                        hi = mid
                th = 0.5 * (lo + hi)
                if th < hit_theta:
                    hit_theta, hit_code = th, K.ST_EVENT_LO
            ev_prev = ev_new

        x, t = x1, t_new
        k1 = k7

        if hit_code >= 0:
            t_hit = t - hs + hit_theta * hs
            if hit_code == K.ST_ESCAPED:
                status = K.ST_ESCAPED
                t_escape = t_hit + dirn / abs(hit_level)
                esc_sign = 1 if hit_level > 0 else -1
            else:
                status = hit_code
                t_event = t_hit
            break

        fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
        h = max(min(h * fac, h_max), h_min)

    ts = np.asarray(ts)
    xs = np.asarray(xs)
    rc = np.asarray(rcs) if rcs else np.empty((0, 5))
    return _build_trajectory(t0, t1, ts, xs, rc, status, t_escape, esc_sign, t_event)


def integrate(
    rhs: Union[QuadraticRHS, Callable[[float, float], float]],
    t0: float,
    x0: float,
    t1: float,
    cfg: Optional[IntegratorConfig] = None,
) -> Trajectory:
    """Integrate ``x' = rhs(t, x)`` from (t0, x0) towards t1.

    Stops early with an ``Escaped`` outcome when |x| crosses the blow-up
    threshold; the escape time carries the 1/|x| Riccati tail correction.
    """
    if t0 == t1:
        raise ValueError("t0 and t1 must differ")
    if isinstance(rhs, QuadraticRHS):
        return integrate_threshold(rhs, t0, x0, t1, cfg)
    cfg = cfg or IntegratorConfig()
    _bump_count()
    return _integrate_py(rhs, t0, x0, t1, cfg)


def integrate_until(
    rhs: Union[QuadraticRHS, Callable[[float, float], float]],
    t0: float,
    x0: float,
    t1: float,
    cfg: Optional[IntegratorConfig] = None,
    event: Callable[[float, float], float] = None,
) -> Trajectory:
    """Like :func:`integrate` but stops at the first sign change of
    ``event(t, x)``, refined on the dense output; ``event_time`` is None when
    no crossing occurs on the span."""
    if t0 == t1:
        raise ValueError("t0 and t1 must differ")
    if event is None:
        raise ValueError("event function required")
    cfg = cfg or IntegratorConfig()
    f = rhs if not isinstance(rhs, QuadraticRHS) else rhs.__call__
    _bump_count()
    return _integrate_py(f, t0, x0, t1, cfg, event=event)
