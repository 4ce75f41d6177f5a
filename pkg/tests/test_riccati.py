import math

import numpy as np
import pytest

import tipcurve as tc
from tipcurve.errors import NotHyperbolicError

import oracles


CFG = tc.IntegratorConfig()


class TestBoundM:
    def test_autonomous(self):
        # x' = -x^2 + 1: positive root of m^2 - 2 is sqrt(2)
        m = tc.bound_m(tc.QuadraticModel(q=None, p=tc.Constant(1.0)))
        assert m == pytest.approx(math.sqrt(2.0))

    def test_absorbing_property(self):
        rng = np.random.default_rng(5)
        ts = np.linspace(-50.0, 50.0, 301)
        for _ in range(100):
            q = tc.Sinusoid(float(rng.uniform(-2, 2)), float(rng.uniform(0.1, 2)))
            p = tc.Constant(float(rng.uniform(-2, 2)))
            lam = float(rng.uniform(-1, 1))
            model = tc.QuadraticModel(q=q, p=p, lam=lam)
            m = tc.bound_m(model)
            rhs = model.rhs()
            # rhs(t, +-x) <= -1 for all x >= m (the absorbing inequality)
            for x in (m, m + 0.5, 3 * m):
                up = -x * x + tc.evaluate(q, ts) * x + tc.evaluate(p, ts) + lam
                dn = -x * x - tc.evaluate(q, ts) * x + tc.evaluate(p, ts) + lam
                assert np.all(up <= -1.0 + 1e-9)
                assert np.all(dn <= -1.0 + 1e-9)

    def test_floor_at_one(self):
        # radicand non-positive: every m > 0 absorbs, the floor of 1 is used
        m = tc.bound_m(tc.QuadraticModel(q=None, p=None, lam=-2.0))
        assert m == 1.0


class TestTails:
    def test_autonomous_closed_form(self):
        # x' = -x^2 + 1: a = 1, r = -1
        model = tc.QuadraticModel(q=None, p=tc.Constant(1.0))
        assert tc.approx_a_tail(model) == pytest.approx(1.0, abs=1e-8)
        assert tc.approx_r_tail(model) == pytest.approx(-1.0, abs=1e-8)

    def test_autonomous_lambda_shift(self):
        # x' = -x^2 + lam: a = sqrt(lam), r = -sqrt(lam)
        for lam in (0.25, 4.0):
            model = tc.QuadraticModel(q=None, p=None, lam=lam)
            assert tc.approx_a_tail(model) == pytest.approx(math.sqrt(lam), abs=1e-8)
            assert tc.approx_r_tail(model) == pytest.approx(-math.sqrt(lam), abs=1e-8)

    def test_escaped_before(self):
        # sup p + lam < 0: every solution blows down, a does not reach t=-50
        model = tc.QuadraticModel(q=None, p=tc.Constant(-1.0))
        out = tc.approx_a_tail(model)
        assert isinstance(out, tc.EscapedBefore)
        assert out.t < -50.0

    def test_argument_validation(self):
        model = tc.QuadraticModel(q=None, p=tc.Constant(1.0))
        with pytest.raises(ValueError):
            tc.approx_a_tail(model, t_query=-50.0, horizon=0.0)
        with pytest.raises(ValueError):
            tc.approx_r_tail(model, t_query=50.0, horizon=0.0)

    def test_matches_reference_solver(self):
        p = tc.Constant(1.2) + tc.Sinusoid(0.5, 0.8)
        model = tc.QuadraticModel(q=None, p=p)
        a = tc.approx_a_tail(model, horizon=-300.0)
        ref = oracles.solve_reference(None, p, 0.0, -300.0, tc.bound_m(model), -50.0)
        assert a == pytest.approx(float(ref.y[0][-1]), abs=1e-7)


class TestComputeTails:
    def test_grid_sampling_and_frames(self):
        p = tc.Constant(1.0)
        model = tc.TransitionModel(p=p, c=1.0, lam=0.0)
        grid = np.linspace(-50.0, 50.0, 201)
        tails = tc.compute_tails(model, grid, horizon=1000.0)
        assert tails.frame == "y"
        assert np.all(np.isfinite(tails.a_values))
        assert np.all(np.isfinite(tails.r_values))
        # y-frame limits: a -> shift +- 1 far from the ramp center
        assert tails.a_values[-1] == pytest.approx(
            1.0 + (2 / math.pi) * math.atan(50.0), abs=1e-3
        )

    def test_nan_outside_escape(self):
        # Case C: the a probe dies, later grid points must be NaN
        p = tc.Constant(-0.5)
        model = tc.QuadraticModel(q=None, p=p)
        grid = np.linspace(-900.0, 900.0, 101)
        tails = tc.compute_tails(model, grid, horizon=1000.0)
        assert tails.a_escape is not None
        assert np.any(np.isnan(tails.a_values))

    def test_json_roundtrip(self):
        model = tc.QuadraticModel(q=None, p=tc.Constant(-0.5))
        grid = np.linspace(-900.0, 900.0, 51)
        tails = tc.compute_tails(model, grid)
        back = tc.TailEstimate.from_json(tails.to_json())
        np.testing.assert_array_equal(back.grid, tails.grid)
        np.testing.assert_array_equal(back.a_values, tails.a_values)
        assert back.a_escape == tails.a_escape

    def test_rejects_bad_grid(self):
        model = tc.QuadraticModel(q=None, p=tc.Constant(1.0))
        with pytest.raises(ValueError):
            tc.compute_tails(model, np.array([1.0, 0.5]))


class TestFrames:
    def test_transform_inverse(self):
        ts = np.linspace(-30, 30, 101)
        ys = np.sin(ts)
        back = tc.to_y_frame(tc.to_x_frame(ys, ts, 0.7), ts, 0.7)
        np.testing.assert_allclose(back, ys, atol=1e-14)

    def test_to_quadratic_consistency(self):
        # y-frame rhs and x-frame rhs agree under the exact change of variables
        p = tc.Constant(0.8) + tc.Sinusoid(0.3, 1.7)
        model = tc.TransitionModel(p=p, c=0.9, lam=0.1)
        y_rhs = model.rhs()
        x_rhs = model.to_quadratic().rhs()
        for t in (-7.0, -0.5, 0.0, 2.0, 40.0):
            y = 0.3
            x = tc.to_x_frame(y, t, 0.9)
            # dy/dt = dx/dt + d(shift)/dt
            qc = 2 * 0.9 / (math.pi * (0.81 * t * t + 1))
            assert y_rhs(t, y) == pytest.approx(x_rhs(t, float(x)) + qc, rel=1e-12)


class TestSeparation:
    def test_positive_when_hyperbolic(self):
        model = tc.QuadraticModel(q=None, p=tc.Constant(1.0))
        grid = np.linspace(-50.0, 50.0, 101)
        tails = tc.compute_tails(model, grid)
        assert tc.separation(tails) == pytest.approx(2.0, abs=1e-7)

    def test_requires_overlap(self):
        tails = tc.TailEstimate(
            grid=np.array([0.0, 1.0]),
            a_values=np.array([math.nan, math.nan]),
            r_values=np.array([1.0, 1.0]),
        )
        with pytest.raises(ValueError):
            tc.separation(tails)


class TestDichotomy:
    def test_autonomous_rate(self):
        # along a = sqrt(lam), the variational rate is 2 sqrt(lam)
        for lam in (1.0, 2.25):
            model = tc.QuadraticModel(q=None, p=None, lam=lam)
            traj = tc.integrate_threshold(
                model.rhs(), -500.0, tc.bound_m(model), 500.0,
                tc.IntegratorConfig(blowup_threshold=100.0),
            )
            est = tc.estimate_dichotomy(model, traj)
            assert est.beta == pytest.approx(2 * math.sqrt(lam), abs=1e-4)
            assert est.k >= 1.0

    def test_rejects_non_decay(self):
        # along the repeller r = -1, the variational rate is +2: not attracting
        model = tc.QuadraticModel(q=None, p=tc.Constant(1.0))
        traj = tc.integrate_threshold(
            model.rhs(), 500.0, -tc.bound_m(model), -500.0,
            tc.IntegratorConfig(blowup_threshold=100.0),
        )
        with pytest.raises(NotHyperbolicError):
            tc.estimate_dichotomy(model, traj)

    def test_transition_model_shift_accounted(self):
        # autonomous in the y-frame far from the ramp: beta = 2 sqrt(p + lam)
        model = tc.TransitionModel(p=tc.Constant(1.0), c=2.0, lam=0.0)
        m = tc.bound_m(model.to_quadratic()) + 1.0
        traj = tc.integrate_threshold(
            model.rhs(), -800.0, m, 800.0, tc.IntegratorConfig(blowup_threshold=100.0)
        )
        est = tc.estimate_dichotomy(model, traj)
        assert est.beta == pytest.approx(2.0, abs=5e-2)
