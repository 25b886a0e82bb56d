"""Dual-frequency driven Keller-Miksis bubble model in dimensionless form.

Time is scaled by the period of the first driver (``tau = omega1 t / 2 pi``)
and the radius by the equilibrium radius.  The parameter vector holds the
13 precomputed coefficients ``C0 .. C12``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from ..system import EventControls, OdeControls, SystemDefinition

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BubblePhysical:
    """Excitation, bubble size and material data in SI units.

    Material defaults: water at room temperature; ``mu_L`` is the dynamic
    viscosity.
    """

    P_A1: float = 0.0
    P_A2: float = 0.0
    omega1: float = TWO_PI * 20e3
    omega2: float = TWO_PI * 20e3
    theta: float = 0.0
    R_E: float = 10e-6
    c_L: float = 1497.3
    rho_L: float = 997.1
    P_inf: float = 1.0e5
    p_V: float = 3166.8
    sigma: float = 0.072
    mu_L: float = 8.902e-4
    gamma: float = 1.4

    def __post_init__(self):
        if not self.R_E > 0:
            raise ValueError("R_E must be positive")
        if not self.omega1 > 0:
            raise ValueError("omega1 must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")


def bubble_coefficients(phys: BubblePhysical) -> np.ndarray:
    """The dimensionless coefficients ``C0 .. C12`` as a length-13 array."""
    if phys.omega1 == 0:
        raise ZeroDivisionError("omega1 must be non-zero")
    rho, c_l, r_e, w1 = phys.rho_L, phys.c_L, phys.R_E, phys.omega1
    scale = TWO_PI / (r_e * w1)
    scale2 = scale * scale
    p_ref = phys.P_inf - phys.p_V + 2.0 * phys.sigma / r_e
    c = np.empty(13)
    c[0] = p_ref / rho * scale2
    c[1] = (1.0 - 3.0 * phys.gamma) / (rho * c_l) * p_ref * scale
    c[2] = (phys.P_inf - phys.p_V) / rho * scale2
    c[3] = 2.0 * phys.sigma / (rho * r_e) * scale2
    c[4] = 4.0 * phys.mu_L / (rho * r_e * r_e) * TWO_PI / w1
    c[5] = phys.P_A1 / rho * scale2
    c[6] = phys.P_A2 / rho * scale2
    c[7] = r_e * w1 * phys.P_A1 / (rho * c_l) * scale2
    c[8] = r_e * w1 * phys.P_A2 / (rho * c_l) * scale2
    c[9] = r_e * w1 / (TWO_PI * c_l)
    c[10] = 3.0 * phys.gamma
    c[11] = phys.omega2 / w1
    c[12] = phys.theta
    return c


@nb.njit
def keller_miksis_rhs(t, y, c, dy):
    y1 = y[0]
    y2 = y[1]
    dy[0] = y2
    if not y1 > 0.0:
        dy[1] = np.nan
        return
    rx = 1.0 / y1
    arg1 = TWO_PI * t
    arg2 = TWO_PI * c[11] * t + c[12]
    num = (
        (c[0] + c[1] * y2) * rx ** c[10]
        - c[2] * (1.0 + c[9] * y2)
        - c[3] * rx
        - c[4] * y2 * rx
        - (1.0 - c[9] * y2 / 3.0) * 1.5 * y2 * y2
        - (c[5] * math.sin(arg1) + c[6] * math.sin(arg2)) * (1.0 + c[9] * y2)
        - y1 * (c[7] * math.cos(arg1) + c[8] * math.cos(arg2))
    )
    den = y1 - c[9] * y1 * y2 + c[4] * c[9]
    dy[1] = num / den


# -- collapse scan hooks ---------------------------------------------------
# acc layout: [tau_max, y1_max, tau_min, y1_min]


@nb.njit
def _local_max_event(t, y, c, f):
    f[0] = y[1]


@nb.njit
def _init_collapse(t, td, y, c, acc):
    acc[0] = t
    acc[1] = y[0]
    acc[2] = t
    acc[3] = y[0]


@nb.njit
def _track_minimum(t, y, c, acc):
    if y[0] < acc[3]:
        acc[2] = t
        acc[3] = y[0]


@nb.njit
def _continue_time(t, td, y, c, acc):
    td[0] = t


def bubble_system(tol: float = 1e-10, event_tol: float = 1e-6) -> SystemDefinition:
    """Max-to-max iteration with collapse accessories and continuous time tracking."""
    return SystemDefinition(
        system_dim=2,
        param_count=13,
        event_count=1,
        accessory_count=4,
        ode_rhs=keller_miksis_rhs,
        ode_controls=OdeControls(rel_tol=tol, abs_tol=tol),
        event_controls=EventControls(direction=[-1], tolerance=[event_tol], stop_condition=[1]),
        event_values=_local_max_event,
        initialize=_init_collapse,
        ordinary_accessory=_track_minimum,
        finalize=_continue_time,
        name="keller-miksis",
    )


def keller_miksis_plain(tol: float = 1e-10) -> SystemDefinition:
    return SystemDefinition(
        system_dim=2,
        param_count=13,
        ode_rhs=keller_miksis_rhs,
        ode_controls=OdeControls(rel_tol=tol, abs_tol=tol),
        name="keller-miksis-plain",
    )
