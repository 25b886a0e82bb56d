"""Forced Duffing oscillator and its polar-form linearization.

Parameter vector layout: ``[k, B, delta, omega]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from ..system import EventControls, OdeControls, SystemDefinition

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DuffingParams:
    k: float = 0.2
    B: float = 0.3
    delta: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if not (self.B > 0 and self.omega > 0):
            raise ValueError("B and omega must be positive")

    def vector(self) -> np.ndarray:
        return np.array([self.k, self.B, self.delta, self.omega])


@nb.njit
def duffing_rhs(t, y, p, dy):
    y1 = y[0]
    y2 = y[1]
    dy[0] = y2
    dy[1] = p[2] * y1 - y1 * y1 * y1 - p[0] * y2 + p[1] * math.cos(p[3] * t)


@nb.njit
def duffing_lyapunov_rhs(t, y, p, dy):
    y1 = y[0]
    y2 = y[1]
    y3 = y[2]
    s = math.sin(y[3])
    c = math.cos(y[3])
    g1 = p[2] - 3.0 * y1 * y1
    g2 = -p[0]
    dy[0] = y2
    dy[1] = p[2] * y1 - y1 * y1 * y1 - p[0] * y2 + p[1] * math.cos(p[3] * t)
    dy[2] = y3 * ((1.0 + g1) * s * c + g2 * s * s)
    dy[3] = -s * s + (g1 * c + g2 * s) * c


def lyapunov_accumulate(samples, period: float) -> float:
    """Largest Lyapunov exponent from linearized radii sampled once per period.

    The radius is assumed to have been reset to one after every sample, so
    each sample is the growth factor over one period.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("need at least one sample")
    if not period > 0:
        raise ValueError("period must be positive")
    if np.any(~(samples > 0)):
        raise ValueError("linearized radius samples must be positive")
    return float(np.sum(np.log(samples)) / (samples.size * period))


# -- accessories for the maxima scans ------------------------------------


@nb.njit
def _init_max(t, td, y, p, acc):
    acc[0] = y[0]
    acc[1] = t


@nb.njit
def _track_global_max(t, y, p, acc):
    if y[0] > acc[0]:
        acc[0] = y[0]
        acc[1] = t


@nb.njit
def _init_local_max(t, td, y, p, acc):
    acc[0] = -np.inf
    acc[1] = 0.0


@nb.njit
def _record_local_max(event, counter, t, y, p, acc):
    if event == 0:
        if y[0] > acc[0]:
            acc[0] = y[0]
        acc[1] = counter


@nb.njit
def _y2_event(t, y, p, f):
    f[0] = y[1]


def maxima_event_controls(tolerance: float = 1e-6) -> EventControls:
    return EventControls(direction=[-1], tolerance=[tolerance], stop_condition=[0])


def duffing_system(tol: float = 1e-9) -> SystemDefinition:
    return SystemDefinition(
        system_dim=2,
        param_count=4,
        ode_rhs=duffing_rhs,
        ode_controls=OdeControls(rel_tol=tol, abs_tol=tol),
        name="duffing",
    )


def duffing_lyapunov_system(tol: float = 1e-9) -> SystemDefinition:
    return SystemDefinition(
        system_dim=4,
        param_count=4,
        ode_rhs=duffing_lyapunov_rhs,
        ode_controls=OdeControls(rel_tol=tol, abs_tol=tol),
        name="duffing-lyapunov",
    )


def duffing_maxima_system(mode: str, tol: float = 1e-9, event_tol: float = 1e-6) -> SystemDefinition:
    """Per-iteration maximum of ``y1`` via an ordinary accessory or via local-maximum events.

    Both modes run the same ``y2 = 0`` event machine so that they integrate
    identical trajectories; only the recorder differs.
    acc layout: accessory mode ``[global max, time]``; event mode
    ``[largest local max, number of maxima]``.
    """
    common = dict(
        system_dim=2,
        param_count=4,
        event_count=1,
        accessory_count=2,
        ode_rhs=duffing_rhs,
        ode_controls=OdeControls(rel_tol=tol, abs_tol=tol),
        event_controls=maxima_event_controls(event_tol),
        event_values=_y2_event,
    )
    if mode == "accessory":
        return SystemDefinition(
            **common,
            initialize=_init_max,
            ordinary_accessory=_track_global_max,
            name="duffing-max-acc",
        )
    if mode == "event":
        return SystemDefinition(
            **common,
            initialize=_init_local_max,
            event_accessory=_record_local_max,
            name="duffing-max-event",
        )
    raise ValueError(f"unknown maxima mode {mode!r}")
