import math

import numba as nb
import numpy as np
import pytest
from hypothesis import settings

from odensemble import EventControls, OdeControls, SystemDefinition

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@nb.njit
def harmonic_rhs(t, y, p, dy):
    dy[0] = y[1]
    dy[1] = -y[0]


@nb.njit
def unit_rhs(t, y, p, dy):
    dy[0] = 1.0


@nb.njit
def cubic_rhs(t, y, p, dy):
    dy[0] = t * t * t


@nb.njit
def exp_rhs(t, y, p, dy):
    dy[0] = y[0]


@nb.njit
def zero_rhs(t, y, p, dy):
    for i in range(y.shape[0]):
        dy[i] = 0.0


@nb.njit
def decay_rhs(t, y, p, dy):
    dy[0] = -p[0] * y[0]


@nb.njit
def decay_event(t, y, p, f):
    f[0] = y[0]


@nb.njit
def linear_event(t, y, p, f):
    # linear in time along any step: F = 0.3 - t
    f[0] = 0.3 - t


@nb.njit
def count_init(t, td, y, p, acc):
    acc[0] += 1.0


@nb.njit
def count_ordinary(t, y, p, acc):
    acc[1] += 1.0
    # acc[3] holds the previous accepted time, acc[4] counts non-increasing times
    if t <= acc[3]:
        acc[4] += 1.0
    acc[3] = t


@nb.njit
def count_final(t, td, y, p, acc):
    acc[2] += 1.0


def simple(rhs, dim=1, **kw):
    return SystemDefinition(system_dim=dim, ode_rhs=rhs, **kw)


@pytest.fixture(scope="session")
def harmonic():
    return simple(harmonic_rhs, 2)


@pytest.fixture(scope="session")
def unit():
    return simple(unit_rhs)


@pytest.fixture(scope="session")
def decay():
    return simple(decay_rhs, param_count=1)


def decay_with_event(stop=0, max_in_zone=50, tol=1e-6, direction=0, max_step=0.5):
    return simple(
        decay_rhs,
        param_count=1,
        event_count=1,
        event_values=decay_event,
        event_controls=EventControls([direction], [tol], [stop], max_in_zone),
        ode_controls=OdeControls(rel_tol=1e-8, abs_tol=1e-8, max_step=max_step),
    )


@pytest.fixture(scope="session")
def counting():
    return simple(
        harmonic_rhs,
        2,
        accessory_count=5,
        initialize=count_init,
        ordinary_accessory=count_ordinary,
        finalize=count_final,
    )


TWO_PI = 2.0 * math.pi


def rk4_oracle(f, t, y, h):
    """Plain-Python classical RK4 step, written independently of the library."""
    y = np.asarray(y, dtype=float)
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
