import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from poissonint.errors import BlowUp, DomainExit
from poissonint.scalar_flow import FlowOutcome, ScalarAutonomousODE, solve_scalar_flow


def solve(f, q0, t, domain=(-math.inf, math.inf), tol=1e-12):
    return solve_scalar_flow(ScalarAutonomousODE(f, domain), q0, t, tol)


def test_zero_field_is_equilibrium():
    out = solve(lambda q: 0.0, 3.0, 10.0)
    assert out == FlowOutcome("equilibrium", 3.0)


def test_exponential_growth():
    out = solve(lambda q: q, 1.0, 1.0)
    assert out.kind == "value"
    assert out.value == pytest.approx(math.e, rel=1e-10)


def test_quadratic_blow_up_reports_escape_time():
    out = solve(lambda q: q * q, 1.0, 2.0)
    assert out.kind == "blow_up"
    assert out.escape_time == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(BlowUp):
        out.unwrap()


def test_quadratic_before_escape():
    out = solve(lambda q: q * q, 1.0, 0.5)
    assert out.value == pytest.approx(2.0, rel=1e-10)


def test_decay_approaches_but_does_not_cross_zero():
    out = solve(lambda q: -q, 1.0, 50.0)
    assert out.kind == "value"
    assert out.value == pytest.approx(math.exp(-50.0), rel=1e-10)
    assert out.value > 0


def test_settles_at_zero_reached_in_finite_time():
    # dq/dt = sqrt(1 - q): q(t) = 1 - (1 - t/2)^2 until t = 2, then q = 1
    f = lambda q: math.sqrt(max(1.0 - q, 0.0))
    assert solve(f, 0.0, 1.0).value == pytest.approx(0.75, rel=1e-10)
    late = solve(f, 0.0, 3.0)
    assert late.kind == "equilibrium"
    assert late.value == pytest.approx(1.0, abs=1e-8)


def test_settles_at_zero_from_above():
    f = lambda q: -math.sqrt(abs(q))
    assert solve(f, 1.0, 1.5).value == pytest.approx(0.0625, rel=1e-9)
    out = solve(f, 1.0, 2.5)
    assert out.kind == "equilibrium"
    assert out.value == pytest.approx(0.0, abs=1e-8)


def test_non_integrable_zero_is_approached_forever():
    # dq/dt = (q - 2)^2 from q0 = 1: q(t) = 2 - 1/(1 + t)
    out = solve(lambda q: (q - 2.0) ** 2, 1.0, 5.0)
    assert out.kind == "value"
    assert out.value == pytest.approx(2.0 - 1.0 / 6.0, rel=1e-10)


def test_domain_edge_raises():
    f = lambda q: 1.0
    assert solve(f, 0.0, 1.5, domain=(-1.0, 2.0)).value == pytest.approx(1.5)
    with pytest.raises(DomainExit):
        solve(f, 0.0, 2.5, domain=(-1.0, 2.0))
    with pytest.raises(DomainExit):
        solve(f, 3.0, 1.0, domain=(-1.0, 2.0))


def test_zero_time_returns_start():
    assert solve(lambda q: q, 2.5, 0.0) == FlowOutcome("value", 2.5)


@pytest.mark.parametrize("bad", [dict(t=-1.0), dict(tol=0.0)])
def test_rejects_bad_arguments(bad):
    kw = dict(t=1.0, tol=1e-12) | bad
    with pytest.raises(ValueError):
        solve_scalar_flow(ScalarAutonomousODE(lambda q: q), 1.0, kw["t"], kw["tol"])


def test_cubic_growth():
    # q' = q^3, q(t) = 1 / sqrt(1/q0^2 - 2t)
    out = solve(lambda q: q ** 3, 1.0, 0.3)
    assert out.value == pytest.approx(1.0 / math.sqrt(1.0 - 0.6), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(q0=st.floats(0.1, 2.0), t1=st.floats(0.0, 0.4), t2=st.floats(0.0, 0.4))
def test_semigroup(q0, t1, t2):
    f = lambda q: 1.0 + q * q
    a = solve(f, q0, t1 + t2)
    b = solve(f, solve(f, q0, t1).value, t2)
    if a.kind == b.kind == "value":
        assert abs(a.value - b.value) <= 5e-12 * max(1.0, abs(a.value))


@settings(max_examples=40, deadline=None)
@given(q0=st.floats(-3.0, 3.0), t=st.floats(0.0, 2.0), sign=st.sampled_from([-1.0, 1.0]))
def test_monotone_in_direction_of_f(q0, t, sign):
    f = lambda q: sign * (0.5 + math.cos(q) ** 2)
    out = solve(f, q0, t)
    assert out.kind == "value"
    assert (out.value - q0) * sign >= 0


def test_random_polynomials_match_rk_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        a0, a1, a2 = rng.uniform(1, 2), rng.uniform(-1, 1), rng.uniform(0.3, 0.6)
        # a0 + a1 q + a2 q^2 has no real zero when a1^2 < 4 a0 a2; keep those only
        if a1 * a1 >= 4 * a0 * a2:
            a1 = 0.5 * a1 * math.sqrt(4 * a0 * a2) / abs(a1) if a1 else 0.0
        sign = rng.choice([-1.0, 1.0])
        f = lambda q, a0=a0, a1=a1, a2=a2, s=sign: s * (a0 + a1 * q + a2 * q * q)
        q0, t = rng.uniform(-1, 1), rng.uniform(0.05, 0.5)
        got = solve(f, q0, t).value
        ref = solve_ivp(lambda _, y: [f(y[0])], (0, t), [q0], method="DOP853",
                        rtol=1e-13, atol=1e-14).y[0, -1]
        worst = max(worst, abs(got - ref) / max(1.0, abs(ref)))
    assert worst < 1e-8
