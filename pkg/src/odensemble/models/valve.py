"""Pressure relief valve with Newtonian impacts on the seat.

Parameter vector layout: ``[kappa, delta, beta, q, r]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from ..system import EventControls, OdeControls, SystemDefinition

IMPACT_EVENT = 1


@dataclass(frozen=True)
class ValveParams:
    kappa: float = 1.25
    delta: float = 10.0
    beta: float = 20.0
    q: float = 1.0
    r: float = 0.8

    def __post_init__(self):
        if not 0 < self.r < 1:
            raise ValueError("restitution coefficient must lie in (0, 1)")
        if not self.q > 0:
            raise ValueError("flow rate must be positive")

    def vector(self) -> np.ndarray:
        return np.array([self.kappa, self.delta, self.beta, self.q, self.r])


@nb.njit
def valve_rhs(t, y, p, dy):
    y1 = y[0]
    y2 = y[1]
    y3 = y[2]
    dy[0] = y2
    dy[1] = -p[0] * y2 - (y1 + p[1]) + y3
    if y3 < 0.0:
        dy[2] = np.nan
    else:
        dy[2] = p[2] * (p[3] - y1 * math.sqrt(y3))


@nb.njit
def valve_events(t, y, p, f):
    f[0] = y[1]
    f[1] = y[0]


@nb.njit
def valve_impact_action(event, counter, t, y, p):
    if event == IMPACT_EVENT:
        y[0] = 0.0
        y[1] = -p[4] * y[1]


@nb.njit
def _init_extrema(t, td, y, p, acc):
    acc[0] = y[0]
    acc[1] = y[0]


@nb.njit
def _track_extrema(t, y, p, acc):
    if y[0] > acc[0]:
        acc[0] = y[0]
    if y[0] < acc[1]:
        acc[1] = y[0]


def valve_event_controls(event_tol: float = 1e-6, max_steps_in_zone: int = 50) -> EventControls:
    return EventControls(
        direction=[-1, -1],
        tolerance=[event_tol, event_tol],
        stop_condition=[1, 0],
        max_steps_in_zone=max_steps_in_zone,
    )


def valve_system(tol: float = 1e-10, event_tol: float = 1e-6) -> SystemDefinition:
    """Section-to-section iteration at local maxima of ``y1``; acc = ``[y1_max, y1_min]``."""
    return SystemDefinition(
        system_dim=3,
        param_count=5,
        event_count=2,
        accessory_count=2,
        ode_rhs=valve_rhs,
        ode_controls=OdeControls(rel_tol=tol, abs_tol=tol),
        event_controls=valve_event_controls(event_tol),
        event_values=valve_events,
        event_action=valve_impact_action,
        initialize=_init_extrema,
        ordinary_accessory=_track_extrema,
        name="valve",
    )
