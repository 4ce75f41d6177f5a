import math

import pytest

import tipcurve as tc


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Absorb the one-time JIT compile so timed tests measure steady state."""
    rhs = tc.QuadraticRHS(shift=None, q=None, p=tc.Constant(0.0), lam=1.0)
    tc.integrate_threshold(rhs, -1.0, 0.0, 1.0, tc.IntegratorConfig())
    rhs = tc.QuadraticRHS(shift=tc.ArctanRamp(1.0), q=None, p=tc.Constant(0.0), lam=1.0)
    tc.integrate_threshold(rhs, -1.0, 0.0, 1.0, tc.IntegratorConfig())


@pytest.fixture(scope="session")
def p_two_tone():
    # 0.895 - sin(t/2) - sin(sqrt(5) t): quasi-periodic, three known tipping points
    return (
        tc.Constant(0.895)
        + tc.Scaled(tc.Sinusoid(1.0, 0.5), -1.0)
        + tc.Scaled(tc.Sinusoid(1.0, math.sqrt(5.0)), -1.0)
    )


@pytest.fixture(scope="session")
def p_slow_sine():
    # 0.9 - sin(t/5): slow single tone with tipping points near 0.0921 and 0.2261
    return tc.Constant(0.9) + tc.Scaled(tc.Sinusoid(1.0, 0.2), -1.0)
