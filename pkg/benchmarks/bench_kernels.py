"""Compare the compiled integration kernels against the pure-Python fallback.

The fallback is selected with TIPCURVE_NO_NUMBA=1 (same source, no JIT), so
this script re-launches itself in a subprocess with that flag set.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import math
import os
import subprocess
import sys
import time


CASES = [
    ("autonomous probe", {
        "p": {"kind": "const", "value": 1.0},
        "span": 2000.0,
    }),
    ("two-tone probe", {
        "p": {"kind": "sum", "children": [
            {"kind": "const", "value": 0.895},
            {"kind": "scaled", "factor": -1.0,
             "child": {"kind": "sin", "amplitude": 1.0, "omega": 0.5}},
            {"kind": "scaled", "factor": -1.0,
             "child": {"kind": "sin", "amplitude": 1.0, "omega": 2.2360679774997896}},
        ]},
        "span": 2000.0,
    }),
    ("ramp transition probe", {
        "p": {"kind": "sum", "children": [
            {"kind": "const", "value": 0.9},
            {"kind": "scaled", "factor": -1.0,
             "child": {"kind": "sin", "amplitude": 1.0, "omega": 0.2}},
            {"kind": "scaled", "factor": -1.0, "child": {"kind": "bump", "rate": 0.5}},
        ]},
        "span": 2000.0,
    }),
]


def run_cases(repeat):
    import tipcurve as tc

    results = {}
    for name, case in CASES:
        p = tc.forcing_from_json(case["p"])
        rhs = tc.QuadraticRHS(shift=None, q=None, p=p, lam=0.0)
        cfg = tc.IntegratorConfig(blowup_threshold=100.0)
        half = case["span"] / 2.0
        # warm once (JIT compile on the kernel path)
        tc.integrate_threshold(rhs, -half, 1.4, half, cfg)
        best = math.inf
        steps = 0
        for _ in range(repeat):
            t0 = time.perf_counter()
            traj = tc.integrate_threshold(rhs, -half, 1.4, half, cfg)
            best = min(best, time.perf_counter() - t0)
            steps = len(traj.ts)
        results[name] = {"seconds": best, "steps": steps}
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--emit-json", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.emit_json:
        print(json.dumps(run_cases(args.repeat)))
        return

    jit = run_cases(args.repeat)

    env = dict(os.environ, TIPCURVE_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--emit-json",
         "--repeat", str(args.repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    plain = json.loads(out.stdout.strip().splitlines()[-1])

    width = max(len(n) for n, _ in CASES)
    print(f"{'case':<{width}}  {'steps':>8}  {'jit':>10}  {'python':>10}  speedup")
    for name, _ in CASES:
        j, p = jit[name], plain[name]
        assert j["steps"] == p["steps"], "paths diverged"
        print(
            f"{name:<{width}}  {j['steps']:>8}  {j['seconds']:>9.4f}s  "
            f"{p['seconds']:>9.4f}s  {p['seconds'] / j['seconds']:>6.1f}x"
        )


if __name__ == "__main__":
    main()
