import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from odensemble.models import (
    BubblePhysical,
    DuffingParams,
    ValveParams,
    bubble_coefficients,
    duffing_lyapunov_rhs,
    duffing_rhs,
    keller_miksis_rhs,
    lyapunov_accumulate,
    valve_impact_action,
    valve_rhs,
)


def call(fn, t, y, p, n):
    out = np.empty(n)
    fn(float(t), np.asarray(y, dtype=float), np.asarray(p, dtype=float), out)
    return out


# -- Duffing -----------------------------------------------------------------


def test_duffing_zero_state():
    p = DuffingParams(k=0.2, B=0.3).vector()
    assert call(duffing_rhs, 0.0, [0, 0], p, 2).tolist() == [0.0, 0.3]


def test_duffing_cubic_cancels():
    p = DuffingParams(k=0.2, B=0.3).vector()
    dy = call(duffing_rhs, math.pi / 2, [1, 0], p, 2)
    assert dy[0] == 0.0 and abs(dy[1]) < 1e-16


def test_duffing_generic_point():
    p = DuffingParams(k=0.3, B=0.3).vector()
    y1, y2, t = 0.5, -0.2, 1.0
    expected = y1 - y1**3 - 0.3 * y2 + 0.3 * math.cos(t)
    dy = call(duffing_rhs, t, [y1, y2], p, 2)
    assert dy[0] == y2
    assert abs(dy[1] - expected) <= 1e-15


def test_duffing_params_validation():
    with pytest.raises(ValueError):
        DuffingParams(B=0.0)


def test_lyapunov_angle_zero():
    p = DuffingParams(k=0.25).vector()
    y = [0.7, 0.1, 2.0, 0.0]
    dy = call(duffing_lyapunov_rhs, 0.3, y, p, 4)
    g1 = 1.0 - 3 * 0.7**2
    assert dy[2] == 0.0
    assert dy[3] == pytest.approx(g1, abs=1e-15)


def test_lyapunov_angle_right():
    p = DuffingParams(k=0.25).vector()
    y = [0.7, 0.1, 2.0, math.pi / 2]
    dy = call(duffing_lyapunov_rhs, 0.3, y, p, 4)
    assert dy[2] == pytest.approx(-0.25 * 2.0, abs=1e-15)
    assert dy[3] == pytest.approx(-1.0, abs=1e-15)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 3), st.floats(-math.pi, math.pi),
       st.floats(0, 10), st.floats(0.1, 0.5))
def test_lyapunov_matches_finite_difference_jacobian(y1, y2, r, phi, t, k):
    p = DuffingParams(k=k).vector()
    eps = 1e-6

    def f2(a, b):
        return call(duffing_rhs, t, [a, b], p, 2)[1]

    g1 = (f2(y1 + eps, y2) - f2(y1 - eps, y2)) / (2 * eps)
    g2 = (f2(y1, y2 + eps) - f2(y1, y2 - eps)) / (2 * eps)
    s, c = math.sin(phi), math.cos(phi)
    # tangent vector (u, v) = r (cos, sin) with u' = v, v' = g1 u + g2 v
    du, dv = r * s, g1 * r * c + g2 * r * s
    dr = c * du + s * dv
    dphi = (c * dv - s * du) / r
    dy = call(duffing_lyapunov_rhs, t, [y1, y2, r, phi], p, 4)
    assert dy[2] == pytest.approx(dr, abs=1e-6 * (1 + abs(dr)))
    assert dy[3] == pytest.approx(dphi, abs=1e-6 * (1 + abs(dphi)))
    np.testing.assert_array_equal(dy[:2], call(duffing_rhs, t, [y1, y2], p, 2))


def test_lyapunov_accumulate():
    assert lyapunov_accumulate(np.ones(10), 2 * math.pi) == 0.0
    assert lyapunov_accumulate(np.full(5, math.exp(2 * math.pi)), 2 * math.pi) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        lyapunov_accumulate([1.0, -1.0], 1.0)
    with pytest.raises(ValueError):
        lyapunov_accumulate([], 1.0)


# -- Keller-Miksis ----------------------------------------------------------


def coefficient_oracle(P_A1, P_A2, w1, w2, theta, R_E, c_L, rho, P_inf, p_V, sigma, mu, gamma):
    """Printed dimensionless coefficients, evaluated term by term."""
    s = 2 * math.pi / (R_E * w1)
    pr = P_inf - p_V + 2 * sigma / R_E
    return [
        1 / rho * pr * s**2,
        (1 - 3 * gamma) / (rho * c_L) * pr * s,
        (P_inf - p_V) / rho * s**2,
        2 * sigma / (rho * R_E) * s**2,
        4 * mu / (rho * R_E**2) * 2 * math.pi / w1,
        P_A1 / rho * s**2,
        P_A2 / rho * s**2,
        R_E * w1 * P_A1 / (rho * c_L) * s**2,
        R_E * w1 * P_A2 / (rho * c_L) * s**2,
        R_E * w1 / (2 * math.pi * c_L),
        3 * gamma,
        w2 / w1,
        theta,
    ]


def _phys_args(ph):
    return (ph.P_A1, ph.P_A2, ph.omega1, ph.omega2, ph.theta, ph.R_E, ph.c_L, ph.rho_L,
            ph.P_inf, ph.p_V, ph.sigma, ph.mu_L, ph.gamma)


def test_c10_for_air():
    assert bubble_coefficients(BubblePhysical(gamma=1.4))[10] == pytest.approx(4.2, rel=1e-15)


def test_c11_equal_frequencies():
    assert bubble_coefficients(BubblePhysical())[11] == 1.0


def test_coefficients_against_oracle():
    ph = BubblePhysical(P_A1=1.1e5, P_A2=0.7e5, omega1=2 * math.pi * 20e3, omega2=2 * math.pi * 37e3, theta=0.4)
    c = bubble_coefficients(ph)
    ref = coefficient_oracle(*_phys_args(ph))
    for i, (a, b) in enumerate(zip(c, ref)):
        assert a == pytest.approx(b, rel=1e-12, abs=0), i
    assert abs(c[0] - c[2] - c[3]) <= 1e-15 * c[0]


def test_zero_frequency_rejected():
    with pytest.raises((ZeroDivisionError, ValueError)):
        bubble_coefficients(BubblePhysical(omega1=0.0))


def _random_phys(draw):
    return BubblePhysical(
        P_A1=draw(st.floats(0, 3e5)), P_A2=draw(st.floats(0, 3e5)),
        omega1=2 * math.pi * draw(st.floats(1e3, 2e6)), omega2=2 * math.pi * draw(st.floats(1e3, 2e6)),
        R_E=draw(st.floats(1e-6, 1e-3)), c_L=draw(st.floats(1000, 2000)),
        rho_L=draw(st.floats(500, 2000)), sigma=draw(st.floats(0.01, 0.1)),
        mu_L=draw(st.floats(1e-4, 1e-2)), gamma=draw(st.floats(1.05, 1.7)),
    )


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


@given(st.data())
def test_coefficient_identities(data):
    c = bubble_coefficients(_random_phys(data.draw))
    assert _rel(c[0], c[2] + c[3]) <= 1e-15 or abs(c[0] - c[2] - c[3]) <= 2 * np.spacing(c[0])
    assert _rel(c[7], 2 * math.pi * c[9] * c[5]) <= 1e-15 or c[5] == 0
    assert _rel(c[8], 2 * math.pi * c[9] * c[6]) <= 1e-15 or c[6] == 0


def test_km_equilibrium_without_forcing():
    c = bubble_coefficients(BubblePhysical())
    c[0] = c[2] + c[3]
    dy = call(keller_miksis_rhs, 0.0, [1, 0], c, 2)
    assert dy[0] == 0.0
    # the terms cancel up to rounding of the O(C0) partial sums
    assert abs(dy[1]) <= 4 * np.spacing(c[0])


def test_km_forcing_at_rest():
    c = bubble_coefficients(BubblePhysical(P_A1=0.5e5, P_A2=0.3e5))
    c[0] = c[2] + c[3]
    dy = call(keller_miksis_rhs, 0.0, [1, 0], c, 2)
    expected = -(c[7] + c[8]) / (1 + c[4] * c[9])
    assert dy[1] == pytest.approx(expected, rel=1e-14)


def km_oracle(tau, y1, y2, C):
    n = ((C[0] + C[1] * y2) * (1 / y1) ** C[10] - C[2] * (1 + C[9] * y2) - C[3] / y1
         - C[4] * y2 / y1 - (1 - C[9] * y2 / 3) * 1.5 * y2**2
         - (C[5] * math.sin(2 * math.pi * tau) + C[6] * math.sin(2 * math.pi * C[11] * tau + C[12])) * (1 + C[9] * y2)
         - y1 * (C[7] * math.cos(2 * math.pi * tau) + C[8] * math.cos(2 * math.pi * C[11] * tau + C[12])))
    d = y1 - C[9] * y1 * y2 + C[4] * C[9]
    return n / d


@given(st.floats(0.2, 5), st.floats(-3, 3), st.floats(0, 50))
def test_km_generic_against_oracle(y1, y2, tau):
    c = bubble_coefficients(BubblePhysical(P_A1=0.8e5, P_A2=0.4e5, omega2=2 * math.pi * 53e3, theta=0.3))
    dy = call(keller_miksis_rhs, tau, [y1, y2], c, 2)
    ref = km_oracle(tau, y1, y2, c)
    assert dy[0] == y2
    assert dy[1] == pytest.approx(ref, rel=1e-13, abs=1e-14 * c[0])


def test_km_nonpositive_radius_is_nonfinite():
    c = bubble_coefficients(BubblePhysical())
    assert math.isnan(call(keller_miksis_rhs, 0.0, [0.0, 1.0], c, 2)[1])


# -- valve -------------------------------------------------------------------


def test_valve_seated():
    p = ValveParams(q=0.3).vector()
    assert call(valve_rhs, 0.0, [0, 0, 10], p, 3).tolist() == [0.0, 0.0, 6.0]


def test_valve_balanced_flow():
    p = ValveParams(q=2.0).vector()
    assert call(valve_rhs, 0.0, [1, 0, 4], p, 3)[2] == 0.0


@given(st.floats(0, 3), st.floats(-3, 3), st.floats(0, 30), st.floats(0.2, 10))
def test_valve_generic(y1, y2, y3, q):
    kappa, delta, beta = 1.25, 10.0, 20.0
    p = ValveParams(q=q).vector()
    dy = call(valve_rhs, 0.0, [y1, y2, y3], p, 3)
    assert dy[0] == y2
    assert abs(dy[1] - (-kappa * y2 - (y1 + delta) + y3)) <= 1e-15 * (1 + abs(y3) + delta)
    assert abs(dy[2] - beta * (q - y1 * math.sqrt(y3))) <= 1e-15 * beta * (1 + q + y1 * math.sqrt(y3))


def _impact(y, event=1):
    y = np.array(y, dtype=float)
    valve_impact_action(event, 1, 0.0, y, ValveParams().vector())
    return y


def test_impact_reverses_velocity():
    assert _impact([0.0, -1.0, 10.0])[1] == 0.8


def test_impact_zero_velocity():
    assert _impact([0.0, 0.0, 10.0])[1] == 0.0


@given(st.floats(-1e-6, 1e-6), st.floats(-10, 0), st.floats(0, 50))
def test_impact_keeps_pressure_and_dissipates(y1, y2, y3):
    after = _impact([y1, y2, y3])
    assert after[2] == y3
    assert after[1] == -0.8 * y2
    if abs(y2) >= np.finfo(float).tiny:
        assert (after[1] / y2) ** 2 == pytest.approx(0.64, rel=1e-15)


def test_other_event_leaves_state():
    assert _impact([0.5, -1.0, 10.0], event=0).tolist() == [0.5, -1.0, 10.0]
