import math
import os

import numpy as np
import pytest

import tipcurve as tc
from tipcurve.bifurcation import default_workers
from tipcurve.errors import OracleInconsistencyError

import oracles


FAST = tc.ClassifierParams(t_star=10.0, horizon=120.0)


class TestClassify:
    def test_case_c_when_forcing_negative(self):
        # sup(p) + lam < 0: no bounded solutions, finite escape witness
        v = tc.classify(tc.QuadraticModel(q=None, p=tc.Constant(-0.5)), FAST)
        assert v.case == "C"
        assert v.escape_time is not None and math.isfinite(v.escape_time)

    def test_case_a_autonomous(self):
        v = tc.classify(tc.QuadraticModel(q=None, p=tc.Constant(1.0)), FAST)
        assert v.case == "A"
        assert v.gap == pytest.approx(2.0, abs=1e-6)

    def test_transition_model_gap_in_x_frame(self):
        v = tc.classify(tc.TransitionModel(p=tc.Constant(1.0), c=0.5), FAST)
        assert v.case == "A"
        assert "a_right_y" in v.diagnostics

    def test_agrees_with_reference_probe(self, p_slow_sine):
        for c, expected in ((0.15, True), (0.30, False)):
            v = tc.classify(tc.TransitionModel(p=p_slow_sine, c=c))
            quad = tc.TransitionModel(p=p_slow_sine, c=c).to_quadratic()
            hit, _ = oracles.probe_escapes(None, quad.p, 0.0)
            assert hit is expected
            assert (v.case == "C") is expected

    def test_verdict_json(self):
        v = tc.classify(tc.QuadraticModel(q=None, p=tc.Constant(1.0)), FAST)
        d = v.to_json()
        assert d["case"] == "A" and "diagnostics" in d


class TestLambdaStar:
    def test_constant_coefficients(self):
        # closed form: lambda* = -(q0^2/4 + p0)
        for q0, p0 in ((0.0, 0.0), (1.0, -0.5), (-2.0, 2.0)):
            res = tc.lambda_star(tc.Constant(q0), tc.Constant(p0), tol=1e-8)
            assert res.value == pytest.approx(-(q0 * q0 / 4 + p0), abs=2e-8 + 1e-7)
            lo, hi = res.bracket
            assert lo <= res.value <= hi and hi - lo <= 1.1e-8

    def test_cross_checked_against_reference(self):
        p = tc.Constant(0.3) + tc.Sinusoid(0.8, 0.9)
        params = tc.ClassifierParams(t_star=10.0, horizon=300.0)
        res = tc.lambda_star(None, p, tol=1e-5, params=params)
        ref = oracles.lambda_star_reference(None, p, lo=-2.0, hi=2.0, tol=1e-5, horizon=300.0)
        assert res.value == pytest.approx(ref, abs=5e-5)

    def test_of_c_matches_transformed_problem(self, p_slow_sine):
        # lambda*(c) = lambda*(0, p - q_c): both entry points must agree
        c = 0.4
        res_c = tc.lambda_star_of_c(p_slow_sine, c, tol=1e-6)
        p_eff = tc.Sum((p_slow_sine, tc.Scaled(tc.RationalBump(c), -1.0)))
        res_q = tc.lambda_star(None, p_eff, tol=1e-6)
        assert res_c.value == pytest.approx(res_q.value, abs=3e-6)

    def test_validation(self, p_slow_sine):
        with pytest.raises(ValueError):
            tc.lambda_star(None, tc.Constant(1.0), tol=-1.0)
        with pytest.raises(ValueError):
            tc.lambda_star_of_c(p_slow_sine, -0.1)

    def test_tolerance_warning(self):
        res = tc.lambda_star(None, tc.Constant(0.0), tol=1e-9)
        assert res.warning is not None


class TestCurve:
    def test_grid_validation(self, p_slow_sine):
        with pytest.raises(ValueError):
            tc.lambda_star_curve(p_slow_sine, [0.2, 0.1])
        with pytest.raises(ValueError):
            tc.lambda_star_curve(p_slow_sine, [])

    def test_points_and_order(self, p_slow_sine):
        grid = [0.05, 0.15, 0.3]
        pts = tc.lambda_star_curve(p_slow_sine, grid, tol=1e-4, workers=1)
        assert [pt.c for pt in pts] == grid
        signs = [math.copysign(1, pt.value) for pt in pts]
        assert signs == [-1.0, 1.0, -1.0]
        assert all(pt.error is None for pt in pts)


class TestTippingPoints:
    def test_no_points_for_uniform_case(self):
        # p >> 0: Case A for every rate, nothing to find
        pts = tc.find_tipping_points(
            tc.Constant(2.0), (0.0, 1.0), coarse_n=10, c_tol=1e-4, params=FAST
        )
        assert pts == []

    def test_validation(self, p_slow_sine):
        with pytest.raises(ValueError):
            tc.find_tipping_points(p_slow_sine, (1.0, 0.0))
        with pytest.raises(ValueError):
            tc.find_tipping_points(p_slow_sine, (0.0, 1.0), coarse_n=1)

    def test_bracket_tightness(self, p_slow_sine):
        pts = tc.find_tipping_points(
            p_slow_sine, (0.2, 0.25), coarse_n=6, c_tol=1e-5
        )
        assert len(pts) == 1
        lo, hi = pts[0].bracket
        assert hi - lo <= 1e-5
        assert pts[0].direction == "C->A"
        assert pts[0].c == pytest.approx(0.2260930, abs=1e-4)


class TestCollision:
    def test_rows_and_sides(self, p_slow_sine):
        rows = tc.collision_diagnostics(p_slow_sine, 0.2260930, [0.0, 1e-2])
        sides = [(r["delta"], r["side"]) for r in rows]
        assert (0.0, "0") in sides and (1e-2, "-") in sides and (1e-2, "+") in sides
        by_side = {r["side"]: r for r in rows}
        # C side (below c0) has an escape witness, A side (above) a positive gap
        assert by_side["-"]["case"] == "C" and by_side["-"]["escape_time"] is not None
        assert by_side["+"]["case"] == "A" and by_side["+"]["gap"] > 0

    def test_rejects_negative_delta(self, p_slow_sine):
        with pytest.raises(ValueError):
            tc.collision_diagnostics(p_slow_sine, 0.2, [-1e-3])


class TestWorkers:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("TIPCURVE_WORKERS", "3")
        assert default_workers() == 3
        monkeypatch.delenv("TIPCURVE_WORKERS")
        assert default_workers() == (os.cpu_count() or 1)

    def test_worker_count_does_not_change_results(self, p_slow_sine):
        grid = [0.05, 0.15, 0.3]
        a = tc.lambda_star_curve(p_slow_sine, grid, tol=1e-3, workers=1)
        b = tc.lambda_star_curve(p_slow_sine, grid, tol=1e-3, workers=2)
        assert [(pt.c, pt.value) for pt in a] == [(pt.c, pt.value) for pt in b]


class TestOracleConsistency:
    def test_unreachable_bracket_raises(self):
        # a forcing with bounded solutions for every lambda in the widened
        # bracket cannot produce a C endpoint; the bisection must say so
        params = tc.ClassifierParams(t_star=10.0, horizon=120.0)
        with pytest.raises(OracleInconsistencyError):
            tc.bifurcation._bisect_lambda(
                lambda lam: tc.QuadraticModel(q=None, p=tc.Constant(5.0), lam=lam),
                4.9, 5.0, 1e-4, params, widen_lo=0.001, widen_hi=0.001,
            )
