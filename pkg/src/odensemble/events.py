"""Event-zone state machine and secant event location.

Each event function ``F`` gets a zone ``|F| <= tol``.  While an event is in
the *normal* phase, an accepted step is checked for one of the detection
configurations:

``a``   the step jumps over the whole zone (sign change, needs location)
``b1``  enters from above and lands in the upper half of the zone
``b2``  enters from above and lands in the lower half (curve crossed)
``c1``  enters from below and lands in the lower half
``c2``  enters from below and lands in the upper half (curve crossed)

After a detection, or after any step landing inside the zone, the event is
*leaving*: nothing is detected until the trajectory exits the zone again.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .steppers import _step

BELOW = -1
INSIDE = 0
ABOVE = 1
UNDEFINED = 2

NORMAL = 0
LEAVING = 1

CFG_NONE = 0
CFG_A = 1
CFG_B1 = 2
CFG_B2 = 3
CFG_C1 = 4
CFG_C2 = 5

NO_STOP = 0
EVENT_STOP = 1
EQUILIBRIUM_STOP = 2

MAX_SECANT_ITERATIONS = 50


class Zone(enum.IntEnum):
    BELOW = BELOW
    INSIDE = INSIDE
    ABOVE = ABOVE


class Phase(enum.IntEnum):
    NORMAL = NORMAL
    LEAVING = LEAVING


class Config(enum.IntEnum):
    A = CFG_A
    B1 = CFG_B1
    B2 = CFG_B2
    C1 = CFG_C1
    C2 = CFG_C2


@nb.njit
def _zone(value, tol):
    if not np.isfinite(value):
        return UNDEFINED
    if abs(value) <= tol:
        return INSIDE
    return ABOVE if value > 0.0 else BELOW


@nb.njit
def _classify(prev_value, next_value, tol, direction, phase):
    if phase != NORMAL:
        return CFG_NONE
    z0 = _zone(prev_value, tol)
    z1 = _zone(next_value, tol)
    if z0 == ABOVE and direction <= 0:
        if z1 == BELOW:
            return CFG_A
        if z1 == INSIDE:
            return CFG_B1 if next_value >= 0.0 else CFG_B2
    elif z0 == BELOW and direction >= 0:
        if z1 == ABOVE:
            return CFG_A
        if z1 == INSIDE:
            return CFG_C1 if next_value <= 0.0 else CFG_C2
    return CFG_NONE


@nb.njit
def _machine_start(values, tol, phase, prev, counter, zone_steps):
    for e in range(values.shape[0]):
        prev[e] = values[e]
        counter[e] = 0
        phase[e] = LEAVING if _zone(values[e], tol[e]) == INSIDE else NORMAL
    zone_steps[0] = 0


@nb.njit
def _classify_all(values, tol, direction, phase, prev, cfg):
    """Fill ``cfg`` per event; return the largest detected index or -1."""
    best = -1
    for e in range(values.shape[0]):
        cfg[e] = _classify(prev[e], values[e], tol[e], direction[e], phase[e])
        if cfg[e] != CFG_NONE:
            best = e
    return best


@nb.njit
def _refresh(values, tol, phase, prev):
    """Re-arm phases from the event values at the current point."""
    any_inside = False
    for e in range(values.shape[0]):
        z = _zone(values[e], tol[e])
        if z == UNDEFINED:
            continue
        prev[e] = values[e]
        if z == INSIDE:
            phase[e] = LEAVING
            any_inside = True
        else:
            phase[e] = NORMAL
    return any_inside


@nb.njit
def _commit(values, cfg, tol, stop, max_in_zone, phase, prev, counter, zone_steps):
    """Count detections, update phases and the in-zone timer; return a stop code."""
    for e in range(values.shape[0]):
        if cfg[e] != CFG_NONE:
            counter[e] += 1
    inside = _refresh(values, tol, phase, prev)
    if inside:
        zone_steps[0] += 1
    else:
        zone_steps[0] = 0
    for e in range(values.shape[0]):
        if stop[e] > 0 and counter[e] >= stop[e]:
            return EVENT_STOP
    if inside and zone_steps[0] >= max_in_zone:
        return EQUILIBRIUM_STOP
    return NO_STOP


@nb.njit
def _locate(rhs, event_fn, algorithm, t, h, y, p, e, f_lo, f_hi, tol,
            y_out, f_out, k, err, tmp, y_trial, f_trial):
    """Secant (Illinois) search for a step length landing event ``e`` in its zone.

    Every trial re-steps from ``(t, y)``.  On entry ``y_out``/``f_out`` hold
    the full step of length ``h``; on return they hold the best point found.
    Returns ``(theta, converged)``.
    """
    n_ev = f_out.shape[0]
    lo = 0.0
    hi = h
    flo = f_lo
    fhi = f_hi
    best_theta = h
    best_abs = abs(f_hi)
    side = 0
    for _ in range(MAX_SECANT_ITERATIONS):
        theta = hi - fhi * (hi - lo) / (fhi - flo)
        if not (theta > lo and theta < hi):
            theta = 0.5 * (lo + hi)
        bad = _step(rhs, algorithm, t, theta, y, p, y_trial, err, k, tmp)
        event_fn(t + theta, y_trial, p, f_trial)
        f = f_trial[e]
        if bad or not np.isfinite(f):
            hi = theta
            fhi = np.nan
            continue
        if abs(f) < best_abs:
            best_abs = abs(f)
            best_theta = theta
            y_out[:] = y_trial
            for j in range(n_ev):
                f_out[j] = f_trial[j]
        if abs(f) <= tol:
            return best_theta, True
        if (f > 0.0) == (flo > 0.0):
            lo = theta
            flo = f
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi = theta
            fhi = f
            if side == 1:
                flo *= 0.5
            side = 1
    return best_theta, False


# ---------------------------------------------------------------------------
# Python-facing wrappers


def zone_of(value: float, tolerance: float) -> Zone | None:
    """Zone of an event value; None when the value is not finite."""
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    z = _zone(float(value), float(tolerance))
    return None if z == UNDEFINED else Zone(z)


def classify_transition(prev_value, next_value, tolerance, direction=0, phase=Phase.NORMAL):
    """Detection configuration of a step from ``prev_value`` to ``next_value``, or None."""
    cfg = _classify(float(prev_value), float(next_value), float(tolerance), int(direction), int(phase))
    return None if cfg == CFG_NONE else Config(cfg)


@dataclass
class Detection:
    event_index: int
    config: Config
    located_t: float | None = None
    located_state: np.ndarray | None = None
    value: float | None = None
    located: bool = True


@dataclass
class EventMachineState:
    phase: np.ndarray
    prev_value: np.ndarray
    counter: np.ndarray
    steps_in_zone: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))

    @classmethod
    def start(cls, values, controls) -> "EventMachineState":
        """Machine armed at the initial point; events already in their zone start leaving."""
        values = np.asarray(values, dtype=np.float64)
        _, tol, _ = controls.arrays()
        m = cls(
            phase=np.zeros(values.size, dtype=np.int8),
            prev_value=np.zeros(values.size),
            counter=np.zeros(values.size, dtype=np.int64),
        )
        _machine_start(values, tol, m.phase, m.prev_value, m.counter, m.steps_in_zone)
        return m

    def copy(self) -> "EventMachineState":
        return EventMachineState(
            self.phase.copy(), self.prev_value.copy(), self.counter.copy(), self.steps_in_zone.copy()
        )


def advance_machine(machine: EventMachineState, values, controls, t=None, state=None):
    """Feed the event values of an accepted (already located) point to the machine.

    Returns ``(machine, detections, stop)`` where ``stop`` is None,
    ``"EventStop"`` or ``"EquilibriumStop"``.  The input machine is not modified.
    """
    m = machine.copy()
    values = np.asarray(values, dtype=np.float64)
    direction, tol, stop = controls.arrays()
    cfg = np.zeros(values.size, dtype=np.int64)
    _classify_all(values, tol, direction, m.phase, m.prev_value, cfg)
    code = _commit(
        values, cfg, tol, stop, controls.max_steps_in_zone,
        m.phase, m.prev_value, m.counter, m.steps_in_zone,
    )
    detections = [
        Detection(
            event_index=e,
            config=Config(int(cfg[e])),
            located_t=t,
            located_state=None if state is None else np.array(state, dtype=np.float64),
            value=float(values[e]),
            located=abs(values[e]) <= tol[e],
        )
        for e in range(values.size)
        if cfg[e] != CFG_NONE
    ]
    stop_reason = {NO_STOP: None, EVENT_STOP: "EventStop", EQUILIBRIUM_STOP: "EquilibriumStop"}[int(code)]
    return m, detections, stop_reason


def locate_secant(defn, t: float, state, h: float, event_index: int, params=None,
                  algorithm: int = 1) -> tuple[Detection, bool]:
    """Locate event ``event_index`` inside the step ``[t, t + h]`` by re-stepping.

    The step must contain a zone-jumping sign change.  Returns the detection
    and whether the secant iteration converged.
    """
    y = np.array(state, dtype=np.float64)
    p = np.array(params if params is not None else [], dtype=np.float64)
    n, n_ev = y.size, defn.event_count
    _, tol, _ = defn.event_controls.arrays()
    k = np.empty((6, n))
    err, tmp, y_trial = np.empty(n), np.empty(n), np.empty(n)
    f_lo = np.empty(n_ev)
    defn.event_values(float(t), y, p, f_lo)
    y_out = np.empty(n)
    f_out = np.empty(n_ev)
    _step(defn.ode_rhs, algorithm, float(t), float(h), y, p, y_out, err, k, tmp)
    defn.event_values(float(t) + float(h), y_out, p, f_out)
    cfg = _classify(f_lo[event_index], f_out[event_index], tol[event_index], 0, NORMAL)
    if cfg != CFG_A:
        raise ValueError("the step does not jump over the event zone")
    theta, ok = _locate(
        defn.ode_rhs, defn.event_values, algorithm, float(t), float(h), y, p, event_index,
        f_lo[event_index], f_out[event_index], tol[event_index],
        y_out, f_out, k, err, tmp, y_trial, np.empty(n_ev),
    )
    det = Detection(
        event_index=event_index,
        config=Config.A,
        located_t=float(t) + theta,
        located_state=y_out,
        value=float(f_out[event_index]),
        located=bool(ok),
    )
    return det, bool(ok)
