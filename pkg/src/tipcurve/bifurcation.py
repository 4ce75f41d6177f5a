"""Case A/B/C classification, the saddle-node value lambda*, the tipping
curve lambda*(c), tipping-point location and collision diagnostics.

The classifier follows the probe protocol: integrate from (-horizon, +m)
forward (the a probe) watching for a drop below -(m+1), integrate from
(+horizon, -m) backward (the r probe), and compare the probes on the
separation window.  Case B is a tolerance band, never an exact verdict.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import NumericInconsistencyError, OracleInconsistencyError
from .forcing import Forcing, sup_bound
from .integrator import Escaped, IntegratorConfig, integrate_threshold
from .riccati import QuadraticModel, TransitionModel, bound_m, to_y_frame

__all__ = [
    "ClassifierParams",
    "CaseVerdict",
    "LambdaStarResult",
    "TippingPoint",
    "CurvePoint",
    "classify",
    "lambda_star",
    "lambda_star_of_c",
    "lambda_star_curve",
    "find_tipping_points",
    "collision_diagnostics",
    "default_workers",
]


@dataclass(frozen=True)
class ClassifierParams:
    """Probe horizons and tolerances for the classifier.

    ``sep_tol`` balances the 1e-9 integrator tolerances against error growth
    over the probe length; verdict B is the band |gap| <= sep_tol.
    """

    t_star: float = 50.0
    horizon: float = 1000.0
    sep_tol: float = 1e-7
    grid_n: int = 2001
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if not 0 < self.t_star < self.horizon:
            raise ValueError("need 0 < t_star < horizon")
        if self.sep_tol <= 0:
            raise ValueError("sep_tol must be positive")


@dataclass(frozen=True)
class CaseVerdict:
    case: str  # "A" | "B" | "C"
    gap: Optional[float]
    escape_time: Optional[float]
    diagnostics: dict

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "gap": self.gap,
            "escape_time": self.escape_time,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class LambdaStarResult:
    value: float
    bracket: Tuple[float, float]
    iterations: int
    oracle_calls: int
    warning: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "oracle_calls": self.oracle_calls,
            "warning": self.warning,
        }


@dataclass(frozen=True)
class TippingPoint:
    c: float
    direction: str  # "A->C" | "C->A"
    bracket: Tuple[float, float]


@dataclass(frozen=True)
class CurvePoint:
    c: float
    value: Optional[float]
    iterations: int = 0
    oracle_calls: int = 0
    error: Optional[str] = None


def _resolve_cfg(params: ClassifierParams, m: float) -> IntegratorConfig:
    cfg = params.integrator
    if cfg.blowup_threshold is None:
        cfg = replace(cfg, blowup_threshold=max(100.0, 10.0 * m))
    return cfg


def classify(
    model: Union[TransitionModel, QuadraticModel],
    params: Optional[ClassifierParams] = None,
) -> CaseVerdict:
    """Classify the global dynamics as Case A, B or C.

    For a :class:`TransitionModel` the separation window is [-t*, t*] (the
    clamped-coefficient argument reduces global separation to separation
    there); for a plain :class:`QuadraticModel` no such reduction applies and
    the full window [-horizon, horizon] is used.
    """
    params = params or ClassifierParams()
    if isinstance(model, TransitionModel):
        quad = model.to_quadratic()
        window = (-params.t_star, params.t_star)
        ramp_c = model.c
    else:
        quad = model
        window = (-params.horizon, params.horizon)
        ramp_c = None

    m = bound_m(quad)
    cfg = _resolve_cfg(params, m)
    ev = m + 1.0
    T = params.horizon
    rhs = quad.rhs()

    def _finish_escape(traj, probe: str):
        """Continue past the event threshold to witness the actual blow-up."""
        if isinstance(traj.outcome, Escaped):
            return traj.outcome.t_escape
        t_ev = traj.event_time
        x_ev = traj.dense(t_ev)
        t_end = T if probe == "a" else -T
        if t_ev == t_end:
            return t_ev
        cont = integrate_threshold(rhs, t_ev, x_ev, t_end, cfg)
        if isinstance(cont.outcome, Escaped):
            return cont.outcome.t_escape
        return t_ev  # threshold crossed but blow-up beyond the horizon

    def _diag(extra):
        d = {"m": m, "window": list(window)}
        d.update(extra)
        return d

    # a probe: from the deep past, watching for a definitive drop
    a_traj = integrate_threshold(rhs, -T, +m, window[1], cfg, lower=-ev)
    if isinstance(a_traj.outcome, Escaped) or a_traj.event_time is not None:
        t_esc = _finish_escape(a_traj, "a")
        return CaseVerdict("C", None, t_esc, _diag({"witness": "a-probe"}))

    # r probe: from the far future, backward
    r_traj = integrate_threshold(rhs, +T, -m, window[0], cfg, upper=+ev)
    if isinstance(r_traj.outcome, Escaped) or r_traj.event_time is not None:
        t_esc = _finish_escape(r_traj, "r")
        return CaseVerdict("C", None, t_esc, _diag({"witness": "r-probe"}))

    grid = np.linspace(window[0], window[1], params.grid_n)
    a_vals = np.atleast_1d(a_traj.dense(grid))
    r_vals = np.atleast_1d(r_traj.dense(grid))
    gap = float(np.min(a_vals - r_vals))

    diag = {
        "a_left": float(a_vals[0]),
        "a_right": float(a_vals[-1]),
        "r_left": float(r_vals[0]),
        "r_right": float(r_vals[-1]),
    }
    if ramp_c is not None:
        # report probe endpoints in the y-frame as well
        diag["a_right_y"] = float(to_y_frame(a_vals[-1], grid[-1], ramp_c))
        diag["r_left_y"] = float(to_y_frame(r_vals[0], grid[0], ramp_c))

    if gap > params.sep_tol:
        return CaseVerdict("A", gap, None, _diag(diag))
    if gap >= -params.sep_tol:
        return CaseVerdict("B", gap, None, _diag(diag))

    # The a probe fell below the r probe without triggering the escape
    # event: for a transition model this happens when the blow-up sits
    # between t* and the horizon, so extend the probe and look for it.
    if window[1] < T:
        cont = integrate_threshold(rhs, window[1], float(a_vals[-1]), T, cfg, lower=-ev)
        if isinstance(cont.outcome, Escaped) or cont.event_time is not None:
            t_esc = _finish_escape(cont, "a")
            return CaseVerdict("C", gap, t_esc, _diag({"witness": "a-probe-extended"}))
    raise NumericInconsistencyError(
        f"probes crossed (gap={gap:.3g}) with no escape witness up to the horizon"
    )


def _auto_horizon(horizon: float, tol: float) -> float:
    """Grow the probe horizon so the finite-window bias of the bisection
    (the bottleneck passage time pi/sqrt(lambda* - lambda) exceeding the
    window) stays below ~tol/4."""
    return max(horizon, math.pi / math.sqrt(tol))


def _is_case_c(model, params: ClassifierParams) -> bool:
    """Cheap Case C oracle: does the a probe blow down inside the window?

    The probe starts above the maximal backward-bounded solution a, so its
    escape forces the escape of every solution (Case C); if it stays bounded
    over [-T, T] a bounded solution exists on the window (Case A or B).
    Exactly the classifier's C criterion, minus the A/B gap work.
    """
    quad = model.to_quadratic() if isinstance(model, TransitionModel) else model
    m = bound_m(quad)
    cfg = _resolve_cfg(params, m)
    T = params.horizon
    traj = integrate_threshold(quad.rhs(), -T, +m, T, cfg, lower=-(m + 1.0))
    return isinstance(traj.outcome, Escaped) or traj.event_time is not None


def _bisect_lambda(make_model, lo, hi, tol, params, widen_lo, widen_hi):
    """Bisection on lambda with the a-probe escape test as oracle.

    B verdicts count as the A side (bounded solutions exist at lambda*), so
    the invariant is: verdict(lo) = C, verdict(hi) in {A, B}.
    """
    calls = 0

    def is_c(lam: float) -> bool:
        nonlocal calls
        calls += 1
        return _is_case_c(make_model(lam), params)

    for _ in range(4):
        if is_c(lo):
            break
        lo -= widen_lo
        widen_lo *= 2
    else:
        raise OracleInconsistencyError(
            f"no Case C verdict at or below lambda={lo:.6g}"
        )
    for _ in range(4):
        if not is_c(hi):
            break
        hi += widen_hi
        widen_hi *= 2
    else:
        raise OracleInconsistencyError(
            f"no Case A verdict at or above lambda={hi:.6g}"
        )

    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        iterations += 1
        if is_c(mid):
            lo = mid
        else:
            hi = mid

    cfg = params.integrator
    warning = None
    if tol < 10.0 * (cfg.abs_tol + cfg.rel_tol):
        warning = "requested tolerance is near the integrator accuracy"
    return LambdaStarResult(
        value=0.5 * (lo + hi),
        bracket=(lo, hi),
        iterations=iterations,
        oracle_calls=calls,
        warning=warning,
    )


def lambda_star(
    q: Optional[Forcing],
    p: Optional[Forcing],
    tol: float = 1e-8,
    params: Optional[ClassifierParams] = None,
) -> LambdaStarResult:
    """Saddle-node value lambda*(q, p) of ``x' = -x^2 + q x + p + lambda``.

    Bounded solutions exist iff lambda >= lambda*, and lambda* lies in
    [-||q^2/4 + p||, ||p||]; bisection on the classifier over that bracket.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    params = params or ClassifierParams()
    T = _auto_horizon(params.horizon, tol)
    params = replace(params, horizon=T)

    nq = sup_bound(q) if q is not None else 0.0
    np_ = sup_bound(p) if p is not None else 0.0
    # escape must be witnessed inside the finite window, so the lower margin
    # must dominate the window bias (pi / sqrt(margin) <= horizon)
    margin = max(tol, 4.0 * (math.pi / (2.0 * T)) ** 2)
    lo = -(nq * nq / 4.0 + np_) - margin
    hi = np_ + margin
    return _bisect_lambda(
        lambda lam: QuadraticModel(q=q, p=p, lam=lam),
        lo, hi, tol, params, widen_lo=max(margin, 0.5), widen_hi=max(margin, 0.5),
    )


def lambda_star_of_c(
    p: Forcing,
    c: float,
    tol: float = 1e-8,
    params: Optional[ClassifierParams] = None,
) -> LambdaStarResult:
    """The tipping curve value lambda*(c) = lambda*(0, p - q_c).

    Valid initial bracket: lambda*(c) in [lambda*(0), ||p|| + 1] and
    lambda*(0) >= -||p||.
    """
    if c < 0:
        raise ValueError("rate c must be >= 0")
    if tol <= 0:
        raise ValueError("tol must be positive")
    params = params or ClassifierParams()
    T = _auto_horizon(params.horizon, tol)
    params = replace(params, horizon=T)

    np_ = sup_bound(p)
    lo = -np_ - 1.0 - tol
    hi = np_ + 1.0 + tol
    return _bisect_lambda(
        lambda lam: TransitionModel(p=p, c=c, lam=lam),
        lo, hi, tol, params, widen_lo=1.0, widen_hi=1.0,
    )


# ---------------------------------------------------------------------------
# Parallel sweeps
# ---------------------------------------------------------------------------

def default_workers() -> int:
    env = os.environ.get("TIPCURVE_WORKERS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _curve_task(args):
    p, c, tol, params = args
    try:
        res = lambda_star_of_c(p, c, tol, params)
        return CurvePoint(c=c, value=res.value, iterations=res.iterations,
                          oracle_calls=res.oracle_calls)
    except Exception as exc:  # errors recorded inline, sweep continues
        return CurvePoint(c=c, value=None, error=f"{type(exc).__name__}: {exc}")


def _classify_task(args):
    p, c, lam, params = args
    return classify(TransitionModel(p=p, c=c, lam=lam), params)


def _parallel_map(func, items, workers: Optional[int]):
    workers = workers if workers is not None else default_workers()
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # executor.map preserves input order, so assembly is deterministic
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * workers))))


def lambda_star_curve(
    p: Forcing,
    c_grid: Sequence[float],
    tol: float = 1e-8,
    params: Optional[ClassifierParams] = None,
    workers: Optional[int] = None,
) -> List[CurvePoint]:
    """lambda*(c) on an ascending grid; points run as independent tasks and
    the output order matches the input order."""
    c_grid = list(c_grid)
    if not c_grid or any(b <= a for a, b in zip(c_grid, c_grid[1:])):
        raise ValueError("c_grid must be nonempty and ascending")
    tasks = [(p, float(c), tol, params) for c in c_grid]
    return _parallel_map(_curve_task, tasks, workers)


def find_tipping_points(
    p: Forcing,
    c_range: Tuple[float, float],
    coarse_n: int = 200,
    c_tol: float = 1e-6,
    lam: float = 0.0,
    params: Optional[ClassifierParams] = None,
    workers: Optional[int] = None,
) -> List[TippingPoint]:
    """Locate rate values where the verdict at ``lam`` flips between A and C.

    A coarse classify sweep is refined by bisection on c over every adjacent
    (A, C) or (C, A) pair; a cell containing an even number of crossings is
    missed (documented limitation).  A B verdict exactly at a grid point is
    itself a crossing witness.
    """
    lo, hi = c_range
    if not lo < hi:
        raise ValueError("need c_range lo < hi")
    if coarse_n < 2:
        raise ValueError("coarse_n must be >= 2")
    if c_tol <= 0:
        raise ValueError("c_tol must be positive")
    params = params or ClassifierParams()

    grid = np.linspace(lo, hi, coarse_n)
    verdicts = _parallel_map(
        _classify_task, [(p, float(c), lam, params) for c in grid], workers
    )
    cases = [v.case for v in verdicts]

    def refine(c_lo: float, c_hi: float, left_case: str) -> TippingPoint:
        while c_hi - c_lo > c_tol:
            mid = 0.5 * (c_lo + c_hi)
            v = classify(TransitionModel(p=p, c=mid, lam=lam), params)
            # B counts as the bounded (A) side, as in the lambda bisection
            mid_is_c = v.case == "C"
            if mid_is_c == (left_case == "C"):
                c_lo = mid
            else:
                c_hi = mid
        direction = "A->C" if left_case == "A" else "C->A"
        return TippingPoint(c=0.5 * (c_lo + c_hi), direction=direction,
                            bracket=(c_lo, c_hi))

    points: List[TippingPoint] = []
    for i in range(len(grid) - 1):
        ca, cb = cases[i], cases[i + 1]
        if ca == "B":
            continue  # handled below as its own witness
        if cb == "B":
            # grid point sitting in the B band is a crossing witness
            nxt = next((c for c in cases[i + 1:] if c != "B"), ca)
            direction = f"{ca}->{nxt}" if nxt != ca else f"{ca}->{'C' if ca == 'A' else 'A'}"
            points.append(TippingPoint(c=float(grid[i + 1]), direction=direction,
                                       bracket=(float(grid[i + 1]), float(grid[i + 1]))))
        elif {ca, cb} == {"A", "C"}:
            points.append(refine(float(grid[i]), float(grid[i + 1]), ca))
    return points


def collision_diagnostics(
    p: Forcing,
    c_0: float,
    deltas: Sequence[float],
    params: Optional[ClassifierParams] = None,
) -> List[dict]:
    """Probe both sides of a tipping point c_0.

    On the A side the gap profile shrinks to 0 as c -> c_0; on the C side
    the escape time of the probes grows without bound.  One row per
    (delta, side).
    """
    params = params or ClassifierParams()
    rows: List[dict] = []
    for delta in deltas:
        if delta < 0:
            raise ValueError("deltas must be >= 0")
        sides = (0,) if delta == 0 else (-1, +1)
        for side in sides:
            c = c_0 + side * delta
            if c < 0:
                continue
            verdict = classify(TransitionModel(p=p, c=c, lam=0.0), params)
            rows.append(
                {
                    "c": c,
                    "delta": delta,
                    "side": {-1: "-", 0: "0", 1: "+"}[side],
                    "case": verdict.case,
                    "gap": verdict.gap,
                    "escape_time": verdict.escape_time,
                }
            )
    return rows
