"""Hot numeric kernels: forcing evaluation and the Dormand-Prince 5(4) loop.

By default every function here is compiled with ``numba.njit(cache=True)``.
Setting the environment variable ``TIPCURVE_NO_NUMBA=1`` before import skips
the compilation and runs the very same code as plain Python, which serves as
the reference/fallback path (see ``benchmarks/bench_kernels.py`` for the
speed comparison).  Both paths execute identical floating point operations.
"""

import math
import os

import numpy as np

NUMBA_DISABLED = os.environ.get("TIPCURVE_NO_NUMBA", "").strip().lower() in (
    "1", "true", "yes",
)

if NUMBA_DISABLED:
    def _jit(func):
        return func
else:
    from numba import njit

    def _jit(func):
        return njit(cache=True)(func)


# Node kinds, mirrored from forcing.py (kept as plain ints for numba).
K_CONST = 0
K_SIN = 1
K_SUM = 2
K_SCALED = 3
K_RAMP = 4
K_BUMP = 5
K_CLAMP = 6

TWO_OVER_PI = 2.0 / math.pi

# Dormand-Prince 5(4) tableau.
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# fifth-minus-fourth order error weights
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# dense-output weights (Hairer & Wanner, DOPRI5 continuous extension)
D1 = -12715105075.0 / 11282082432.0
D3 = 87487479700.0 / 32700410799.0
D4 = -10690763975.0 / 1880347072.0
D5 = 701980252875.0 / 199316789632.0
D6 = -1453857185.0 / 822651844.0
D7 = 69997945.0 / 29380423.0

# Kernel status codes.
ST_COMPLETED = 0
ST_ESCAPED = 1
ST_EVENT_LO = 2
ST_EVENT_HI = 3
ST_STIFF = 4
ST_NAN = 5
ST_MAX_STEPS = 6


def eval_forcing(kinds, params, parents, t, teff, vals):
    """Evaluate a flattened forcing tree at scalar ``t``.

    ``teff``/``vals`` are caller-provided scratch arrays of length >= n.
    Nodes are stored in preorder, so a parent index is always smaller than
    its children; effective times propagate top-down (only CLAMP rewrites
    the time seen by its subtree) and values accumulate bottom-up.
    """
    n = kinds.shape[0]
    teff[0] = t
    for i in range(1, n):
        p = parents[i]
        pt = teff[p]
        if kinds[p] == K_CLAMP:
            ts = params[p, 0]
            if abs(pt) >= ts:
                teff[i] = pt
            else:
                teff[i] = ts
        else:
            teff[i] = pt
    for i in range(n):
        k = kinds[i]
        if k == K_CONST:
            vals[i] = params[i, 0]
        elif k == K_SIN:
            vals[i] = params[i, 0] * math.sin(params[i, 1] * teff[i] + params[i, 2])
        elif k == K_RAMP:
            vals[i] = TWO_OVER_PI * math.atan(params[i, 0] * teff[i])
        elif k == K_BUMP:
            c = params[i, 0]
            vals[i] = 2.0 * c / (math.pi * (c * c * teff[i] * teff[i] + 1.0))
        else:
            vals[i] = 0.0
    for i in range(n - 1, 0, -1):
        v = vals[i]
        if kinds[i] == K_SCALED:
            v *= params[i, 0]
        vals[parents[i]] += v
    v0 = vals[0]
    if kinds[0] == K_SCALED:
        v0 *= params[0, 0]
    return v0


eval_forcing = _jit(eval_forcing)


def quad_rhs(t, x, sk, sp, spa, qk, qp, qpa, pk, pp, ppa, lam, teff, vals):
    """x' = -(x - shift(t))^2 + q(t) x + p(t) + lam."""
    s = eval_forcing(sk, sp, spa, t, teff, vals)
    q = eval_forcing(qk, qp, qpa, t, teff, vals)
    p = eval_forcing(pk, pp, ppa, t, teff, vals)
    d = x - s
    return -d * d + q * x + p + lam


quad_rhs = _jit(quad_rhs)


def dense_eval(rc0, rc1, rc2, rc3, rc4, theta):
    """Quartic continuous extension on one step, theta in [0, 1]."""
    return rc0 + theta * (rc1 + (1.0 - theta) * (rc2 + theta * (rc3 + (1.0 - theta) * rc4)))


dense_eval = _jit(dense_eval)


def locate_level(rc0, rc1, rc2, rc3, rc4, level):
    """Bisect theta in [0, 1] where the step interpolant crosses ``level``.

    Assumes opposite signs at the step endpoints.
    """
    lo = 0.0
    hi = 1.0
    glo = dense_eval(rc0, rc1, rc2, rc3, rc4, 0.0) - level
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        gm = dense_eval(rc0, rc1, rc2, rc3, rc4, mid) - level
        if (gm > 0.0) == (glo > 0.0):
            lo = mid
            glo = gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


locate_level = _jit(locate_level)


def _grow1(a):
    b = np.empty(a.shape[0] * 2, dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


_grow1 = _jit(_grow1)


def _grow2(a):
    b = np.empty((a.shape[0] * 2, a.shape[1]), dtype=a.dtype)
    b[: a.shape[0], :] = a
    return b


_grow2 = _jit(_grow2)


def integrate_quadratic(sk, sp, spa, qk, qp, qpa, pk, pp, ppa, lam,
                        t0, x0, t1, rtol, atol, h_init, h_min, h_max,
                        blowup, ev_lo, ev_hi, max_steps):
    """Adaptive DP5(4) integration of the quadratic ODE with dense output.

    ``ev_lo``/``ev_hi`` are optional threshold events (pass NaN to disable):
    integration stops when the state crosses below ``ev_lo`` or above
    ``ev_hi``; the crossing time is refined on the step interpolant.
    Crossing ``+-blowup`` stops with an escape; the escape time adds the
    Riccati tail correction 1/|x| (for x' ~ -x^2 the remaining time to the
    vertical asymptote is asymptotically 1/|x|).

    Returns ``(ts, xs, rc, status, t_escape, esc_sign, t_event)`` where
    ``ts``/``xs`` are the n+1 accepted nodes and ``rc`` holds the 5 dense
    coefficients of each of the n steps.
    """
    nbuf = max(sk.shape[0], max(qk.shape[0], pk.shape[0]))
    teff = np.empty(nbuf, dtype=np.float64)
    vals = np.empty(nbuf, dtype=np.float64)

    dirn = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)

    cap = 1024
    ts = np.empty(cap + 1, dtype=np.float64)
    xs = np.empty(cap + 1, dtype=np.float64)
    rc = np.empty((cap, 5), dtype=np.float64)

    t = t0
    x = x0
    ts[0] = t
    xs[0] = x

    k1 = quad_rhs(t, x, sk, sp, spa, qk, qp, qpa, pk, pp, ppa, lam, teff, vals)

    # initial step selection (simplified Hairer hinit)
    if h_init > 0.0:
        h = h_init
    else:
        sc = atol + rtol * abs(x)
        d0 = abs(x) / sc
        d1 = abs(k1) / sc
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        h0 = min(h0, span)
        xe = x + dirn * h0 * k1
        f1 = quad_rhs(t + dirn * h0, xe, sk, sp, spa, qk, qp, qpa, pk, pp, ppa,
                      lam, teff, vals)
        d2 = abs(f1 - k1) / sc / h0
        dm = max(d1, d2)
        if dm <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / dm) ** 0.2
        h = min(min(100.0 * h0, h1), span)
    h = min(max(h, h_min), h_max)

    status = ST_MAX_STEPS
    t_escape = math.nan
    esc_sign = 0
    t_event = math.nan
    n = 0

    for _ in range(max_steps):
        remaining = (t1 - t) * dirn
        if remaining <= 0.0:
            status = ST_COMPLETED
            break
        if h > remaining:
            h = remaining
        hs = dirn * h

        k2 = quad_rhs(t + C2 * hs, x + hs * (A21 * k1),
                      sk, sp, spa, qk, qp, qpa, pk, pp, ppa, lam, teff, vals)
        k3 = quad_rhs(t + C3 * hs, x + hs * (A31 * k1 + A32 * k2),
                      sk, sp, spa, qk, qp, qpa, pk, pp, ppa, lam, teff, vals)
        k4 = quad_rhs(t + C4 * hs, x + hs * (A41 * k1 + A42 * k2 + A43 * k3),
                      sk, sp, spa, qk, qp, qpa, pk, pp, ppa, lam, teff, vals)
        k5 = quad_rhs(t + C5 * hs, x + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
                      sk, sp, spa, qk, qp, qpa, pk, pp, ppa, lam, teff, vals)
        k6 = quad_rhs(t + hs, x + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
                      sk, sp, spa, qk, qp, qpa, pk, pp, ppa, lam, teff, vals)
        x1 = x + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = quad_rhs(t + hs, x1,
                      sk, sp, spa, qk, qp, qpa, pk, pp, ppa, lam, teff, vals)

        err_est = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sc = atol + rtol * max(abs(x), abs(x1))
        err = abs(err_est) / sc

        if not math.isfinite(err):
            h *= 0.1
            if h < h_min:
                status = ST_NAN
                break
            continue

        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < h_min:
                status = ST_STIFF
                break
            continue

        # accepted
        if n == rc.shape[0]:
            ts = _grow1(ts)
            xs = _grow1(xs)
            rc = _grow2(rc)
        ydiff = x1 - x
        bspl = hs * k1 - ydiff
        rc[n, 0] = x
        rc[n, 1] = ydiff
        rc[n, 2] = bspl
        rc[n, 3] = ydiff - hs * k7 - bspl
        rc[n, 4] = hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)

        t_new = t + hs
        ts[n + 1] = t_new
        xs[n + 1] = x1

        # threshold crossings on this step, earliest first
        theta_hit = 2.0
        hit_code = -1
        hit_level = 0.0
        if not math.isnan(ev_lo):
            if (x - ev_lo > 0.0) and (x1 - ev_lo <= 0.0):
                th = locate_level(rc[n, 0], rc[n, 1], rc[n, 2], rc[n, 3], rc[n, 4], ev_lo)
                if th < theta_hit:
                    theta_hit = th
                    hit_code = ST_EVENT_LO
                    hit_level = ev_lo
        if not math.isnan(ev_hi):
            if (x - ev_hi < 0.0) and (x1 - ev_hi >= 0.0):
                th = locate_level(rc[n, 0], rc[n, 1], rc[n, 2], rc[n, 3], rc[n, 4], ev_hi)
                if th < theta_hit:
                    theta_hit = th
                    hit_code = ST_EVENT_HI
                    hit_level = ev_hi
        if (x + blowup > 0.0) and (x1 + blowup <= 0.0):
            th = locate_level(rc[n, 0], rc[n, 1], rc[n, 2], rc[n, 3], rc[n, 4], -blowup)
            if th < theta_hit:
                theta_hit = th
                hit_code = ST_ESCAPED
                hit_level = -blowup
        if (x - blowup < 0.0) and (x1 - blowup >= 0.0):
            th = locate_level(rc[n, 0], rc[n, 1], rc[n, 2], rc[n, 3], rc[n, 4], blowup)
            if th < theta_hit:
                theta_hit = th
                hit_code = ST_ESCAPED
                hit_level = blowup

        n += 1
        x = x1
        t = t_new
        k1 = k7  # FSAL

        if hit_code >= 0:
            t_hit = t_new - hs + theta_hit * hs
            if hit_code == ST_ESCAPED:
                status = ST_ESCAPED
                t_escape = t_hit + dirn / abs(hit_level)
                esc_sign = 1 if hit_level > 0.0 else -1
            else:
                status = hit_code
                t_event = t_hit
            break

        if err == 0.0:
            fac = 10.0
        else:
            fac = min(10.0, max(0.2, 0.9 * err ** -0.2))
        h = min(h * fac, h_max)
        if h < h_min:
            h = h_min

    return ts[: n + 1], xs[: n + 1], rc[:n], status, t_escape, esc_sign, t_event


integrate_quadratic = _jit(integrate_quadratic)
