"""The ``tipcurve`` command line interface.

``tipcurve <mode> --config <file> [--out <dir>] [--workers N] [--no-cache]``

Modes: simulate, classify, lambda-star, curve, tipping, collision.
Exit codes: 0 success, 2 config error, 3 numeric inconsistency,
4 integration failure.  Errors are reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .bifurcation import (
    ClassifierParams,
    classify,
    collision_diagnostics,
    default_workers,
    find_tipping_points,
    lambda_star,
    lambda_star_curve,
    lambda_star_of_c,
)
from .cache import ResultsCache, cache_key
from .errors import (
    ConfigError,
    IntegrationError,
    NumericInconsistencyError,
    OracleInconsistencyError,
    TipcurveError,
)
from .forcing import forcing_from_json
from .integrator import IntegratorConfig
from .riccati import TransitionModel, compute_tails, separation
from .svg import emit_svg

__all__ = ["main", "run", "validate_config"]

MODES = ("simulate", "classify", "lambda-star", "curve", "tipping", "collision")

_REQUIRED = {
    "simulate": (),
    "classify": (),
    "lambda-star": (),
    "curve": ("c_grid",),
    "tipping": ("c_range",),
    "collision": ("c0", "deltas"),
}

# keys that are meaningful per mode (on top of the common ones)
_ALLOWED = {
    "simulate": {"c", "lambda", "t_window", "grid_n", "svg", "horizon"},
    "classify": {"c", "lambda", "t_star", "horizon", "sep_tol", "grid_n", "svg"},
    "lambda-star": {"q", "c", "tol", "t_star", "horizon", "sep_tol", "grid_n"},
    "curve": {"c_grid", "tol", "t_star", "horizon", "sep_tol", "grid_n", "svg"},
    "tipping": {"c_range", "coarse_n", "c_tol", "lambda", "t_star", "horizon",
                "sep_tol", "grid_n"},
    "collision": {"c0", "deltas", "t_star", "horizon", "sep_tol", "grid_n"},
}

_DEFAULTS = {
    "simulate": {"c": 0.0, "lambda": 0.0, "t_window": [-50.0, 50.0],
                 "grid_n": 2001, "svg": True, "horizon": 1000.0},
    "classify": {"c": 0.0, "lambda": 0.0, "t_star": 50.0, "horizon": 1000.0,
                 "sep_tol": 1e-7, "grid_n": 2001},
    "lambda-star": {"tol": 1e-8, "t_star": 50.0, "horizon": 1000.0,
                    "sep_tol": 1e-7, "grid_n": 2001},
    "curve": {"tol": 1e-8, "t_star": 50.0, "horizon": 1000.0, "sep_tol": 1e-7,
              "grid_n": 2001, "svg": True},
    "tipping": {"coarse_n": 200, "c_tol": 1e-6, "lambda": 0.0, "t_star": 50.0,
                "horizon": 1000.0, "sep_tol": 1e-7, "grid_n": 2001},
    "collision": {"t_star": 50.0, "horizon": 1000.0, "sep_tol": 1e-7,
                  "grid_n": 2001},
}


def _load_schema() -> dict:
    text = resources.files("tipcurve").joinpath("config_schema.json").read_text("utf-8")
    return json.loads(text)


def validate_config(config: dict) -> dict:
    """Validate against the shipped JSON schema, reject keys that are not
    meaningful for the requested mode, and fill mode defaults.

    Returns the normalized config (the cache key input).
    """
    import jsonschema

    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    schema = _load_schema()
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.path))
    if errors:
        first = errors[0]
        loc = "/".join(str(p) for p in first.path) or "<root>"
        raise ConfigError(f"config invalid at {loc}: {first.message}")

    mode = config["mode"]
    allowed = {"mode", "p", "integrator"} | _ALLOWED[mode]
    unknown = sorted(set(config) - allowed)
    if unknown:
        raise ConfigError(f"keys not valid for mode {mode!r}: {', '.join(unknown)}")
    missing = [k for k in _REQUIRED[mode] if k not in config]
    if missing:
        raise ConfigError(f"mode {mode!r} requires keys: {', '.join(missing)}")

    normalized = dict(_DEFAULTS[mode])
    normalized.update(config)
    normalized["mode"] = mode

    if mode == "tipping" and not normalized["c_range"][0] < normalized["c_range"][1]:
        raise ConfigError("c_range must be ascending")
    if mode == "curve" and not normalized["c_grid"]["min"] < normalized["c_grid"]["max"]:
        raise ConfigError("c_grid min must be below max")
    if mode == "simulate" and not normalized["t_window"][0] < normalized["t_window"][1]:
        raise ConfigError("t_window must be ascending")
    return normalized


def _params(config: dict) -> ClassifierParams:
    cfg = IntegratorConfig(**config.get("integrator", {}))
    return ClassifierParams(
        t_star=config.get("t_star", 50.0),
        horizon=config.get("horizon", 1000.0),
        sep_tol=config.get("sep_tol", 1e-7),
        grid_n=config.get("grid_n", 2001),
        integrator=cfg,
    )


def _g(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.17g}"


def _csv(header: str, rows) -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(_g(v) if isinstance(v, (int, float, type(None))) else str(v)
                              for v in row))
    return "\n".join(lines) + "\n"


def _result_json(payload: dict) -> str:
    def clean(obj):
        if isinstance(obj, float) and not math.isfinite(obj):
            return None
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        return obj

    return json.dumps(clean(payload), sort_keys=True, indent=2) + "\n"


def _execute(config: dict, workers: Optional[int]) -> Dict[str, str]:
    mode = config["mode"]
    p = forcing_from_json(config["p"])
    params = _params(config)
    artifacts: Dict[str, str] = {}

    if mode == "simulate":
        model = TransitionModel(p=p, c=config["c"], lam=config["lambda"])
        lo, hi = config["t_window"]
        grid = np.linspace(lo, hi, config["grid_n"])
        tails = compute_tails(model, grid, horizon=config["horizon"],
                              cfg=params.integrator)
        artifacts["tails.csv"] = _csv(
            "t,a,r",
            zip(grid.tolist(), tails.a_values.tolist(), tails.r_values.tolist()),
        )
        sep = None
        both = np.isfinite(tails.a_values) & np.isfinite(tails.r_values)
        if np.any(both):
            sep = separation(tails)
        payload = {
            "mode": mode,
            "tails": tails.to_json(),
            "separation": sep,
            "artifacts": sorted({"tails.csv", *(("tails.svg",) if config["svg"] else ())}),
        }
        artifacts["result.json"] = _result_json(payload)
        if config["svg"] and (np.any(np.isfinite(tails.a_values))
                              or np.any(np.isfinite(tails.r_values))):
            artifacts["tails.svg"] = emit_svg(
                [("a (pullback attractor probe)", grid, tails.a_values),
                 ("r (pullback repeller probe)", grid, tails.r_values)],
                title=f"tails at c={config['c']:g}, lambda={config['lambda']:g}",
                x_label="t", y_label="y",
            )
        return artifacts

    if mode == "classify":
        model = TransitionModel(p=p, c=config["c"], lam=config["lambda"])
        verdict = classify(model, params)
        artifacts["result.json"] = _result_json(
            {"mode": mode, "c": config["c"], "lambda": config["lambda"],
             "verdict": verdict.to_json()}
        )
        return artifacts

    if mode == "lambda-star":
        if "c" in config:
            res = lambda_star_of_c(p, config["c"], config["tol"], params)
        else:
            q = forcing_from_json(config["q"]) if "q" in config else None
            res = lambda_star(q, p, config["tol"], params)
        artifacts["result.json"] = _result_json(
            {"mode": mode, "c": config.get("c"), "lambda_star": res.to_json()}
        )
        return artifacts

    if mode == "curve":
        g = config["c_grid"]
        grid = np.linspace(g["min"], g["max"], g["n"])
        points = lambda_star_curve(p, grid.tolist(), config["tol"], params, workers)
        artifacts["curve.csv"] = _csv(
            "c,lambda_star,iterations,oracle_calls",
            [(pt.c, pt.value, pt.iterations, pt.oracle_calls) for pt in points],
        )
        sign_changes = []
        prev = None
        for pt in points:
            if pt.value is None:
                continue
            if prev is not None and prev[1] * pt.value < 0:
                sign_changes.append(
                    {"c_lo": prev[0], "c_hi": pt.c,
                     "direction": "A->C" if prev[1] < 0 else "C->A"}
                )
            prev = (pt.c, pt.value)
        payload = {
            "mode": mode,
            "points": [
                {"c": pt.c, "lambda_star": pt.value, "iterations": pt.iterations,
                 "oracle_calls": pt.oracle_calls, "error": pt.error}
                for pt in points
            ],
            "sign_changes": sign_changes,
        }
        artifacts["result.json"] = _result_json(payload)
        if config["svg"]:
            cs = np.array([pt.c for pt in points if pt.value is not None])
            vs = np.array([pt.value for pt in points if pt.value is not None])
            if cs.size >= 2:
                zero = np.zeros_like(cs)
                artifacts["curve.svg"] = emit_svg(
                    [("lambda*(c)", cs, vs), ("0", cs, zero)],
                    title="tipping curve", x_label="c", y_label="lambda*(c)",
                )
        return artifacts

    if mode == "tipping":
        points = find_tipping_points(
            p, tuple(config["c_range"]), config["coarse_n"], config["c_tol"],
            lam=config["lambda"], params=params, workers=workers,
        )
        artifacts["points.csv"] = _csv(
            "c,direction", [(pt.c, pt.direction) for pt in points]
        )
        artifacts["result.json"] = _result_json(
            {"mode": mode,
             "points": [{"c": pt.c, "direction": pt.direction,
                         "bracket": list(pt.bracket)} for pt in points]}
        )
        return artifacts

    if mode == "collision":
        rows = collision_diagnostics(p, config["c0"], config["deltas"], params)
        artifacts["collision.csv"] = _csv(
            "c,delta,side,case,gap,escape_time",
            [(r["c"], r["delta"], r["side"], r["case"], r["gap"], r["escape_time"])
             for r in rows],
        )
        artifacts["result.json"] = _result_json({"mode": mode, "rows": rows})
        return artifacts

    raise ConfigError(f"unknown mode {mode!r}")


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(
    config: dict,
    out_dir,
    workers: Optional[int] = None,
    no_cache: bool = False,
) -> Dict[str, str]:
    """Validate, compute (or fetch from cache) and write the artifacts.

    Returns the artifact map (relative name -> content).
    """
    normalized = validate_config(config)
    out = Path(out_dir)
    cache = ResultsCache(out / "cache")
    key = cache_key(normalized)

    artifacts = None if no_cache else cache.get(key)
    cached = artifacts is not None
    if artifacts is None:
        artifacts = _execute(normalized, workers)
        if not no_cache:
            cache.put(key, artifacts)

    for name, text in artifacts.items():
        _write_atomic(out / name, text)
    artifacts["__cached__"] = "1" if cached else "0"
    return artifacts


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tipcurve",
        description="Rate-induced tipping analysis for concave quadratic ODEs",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", default="tipcurve-out", help="output directory")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--no-cache", action="store_true")
    args = parser.parse_args(argv)

    def fail(code: int, kind: str, message: str) -> int:
        sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
        return code

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        return fail(2, "ConfigError", f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        return fail(2, "ConfigError", f"config is not valid JSON: {exc}")

    if not isinstance(config, dict):
        return fail(2, "ConfigError", "config must be a JSON object")
    if "mode" in config and config["mode"] != args.mode:
        return fail(2, "ConfigError",
                    f"config mode {config['mode']!r} does not match subcommand {args.mode!r}")
    config["mode"] = args.mode

    workers = args.workers if args.workers is not None else default_workers()
    try:
        artifacts = run(config, args.out, workers=workers, no_cache=args.no_cache)
    except ConfigError as exc:
        return fail(2, "ConfigError", str(exc))
    except (NumericInconsistencyError, OracleInconsistencyError) as exc:
        return fail(3, type(exc).__name__, str(exc))
    except IntegrationError as exc:
        return fail(4, type(exc).__name__, str(exc))

    names = sorted(n for n in artifacts if not n.startswith("__"))
    cached = artifacts.get("__cached__") == "1"
    print(f"wrote {', '.join(names)} to {args.out}" + (" (cache hit)" if cached else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
