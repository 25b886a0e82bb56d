"""Hook contract describing one family of ODE systems.

All hooks are numba ``@njit`` functions operating on the local (contiguous)
copies of a single system's data:

=================== ==================================================
hook                signature
=================== ==================================================
``ode_rhs``         ``(t, y, p, dy)`` - write the derivative into ``dy``
``event_values``    ``(t, y, p, f)`` - write the event functions into ``f``
``event_action``    ``(event, counter, t, y, p)`` - may modify ``y``
``ordinary_acc``    ``(t, y, p, acc)`` - may modify ``acc``
``event_acc``       ``(event, counter, t, y, p, acc)`` - may modify ``acc``
``initialize``      ``(t, td, y, p, acc)`` - may modify ``td``, ``y``, ``acc``
``finalize``        ``(t, td, y, p, acc)`` - may modify ``td``, ``y``, ``acc``
=================== ==================================================

``td`` is the two-element time domain ``[t0, t1]`` of the system.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numba as nb
import numpy as np

from .pool import BatchDims


@nb.njit
def no_events(t, y, p, f):
    pass


@nb.njit
def no_action(event, counter, t, y, p):
    pass


@nb.njit
def no_ordinary_accessory(t, y, p, acc):
    pass


@nb.njit
def no_event_accessory(event, counter, t, y, p, acc):
    pass


@nb.njit
def no_initialize(t, td, y, p, acc):
    pass


@nb.njit
def no_finalize(t, td, y, p, acc):
    pass


def _per_component(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must be a scalar or have length {n}")
    return arr


@dataclass
class OdeControls:
    """Step-size control of the adaptive solver (ignored by fixed-step RK4)."""

    rel_tol: object = 1e-10
    abs_tol: object = 1e-10
    max_step: float = 1.0e6
    min_step: float = 1.0e-12
    step_grow_limit: float = 5.0
    step_shrink_limit: float = 0.1

    def arrays(self, system_dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-component tolerances and the packed scalar controls.

        The scalars are packed as ``[max_step, min_step, grow, shrink]``.
        """
        rel = _per_component(self.rel_tol, system_dim, "rel_tol")
        abs_ = _per_component(self.abs_tol, system_dim, "abs_tol")
        scalars = np.array(
            [self.max_step, self.min_step, self.step_grow_limit, self.step_shrink_limit],
            dtype=np.float64,
        )
        return rel, abs_, scalars

    def check(self, system_dim: int) -> None:
        rel, abs_, scalars = self.arrays(system_dim)
        if not (np.all(np.isfinite(rel)) and np.all(np.isfinite(abs_)) and np.all(np.isfinite(scalars))):
            raise ValueError("ODE controls must be finite")
        if np.any(rel <= 0) or np.any(abs_ <= 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.min_step <= self.max_step:
            raise ValueError(f"need 0 < min_step <= max_step, got {self.min_step}, {self.max_step}")
        if not self.step_grow_limit > 1:
            raise ValueError("step_grow_limit must exceed 1")
        if not 0 < self.step_shrink_limit < 1:
            raise ValueError("step_shrink_limit must lie in (0, 1)")


@dataclass
class EventControls:
    """Per-event direction, zone half-width and stop count.

    ``direction`` follows the usual convention: 0 detects both crossing
    orientations, -1 only decreasing and +1 only increasing event values.
    A ``stop_condition`` of 0 never stops the integration.
    """

    direction: list = field(default_factory=list)
    tolerance: list = field(default_factory=list)
    stop_condition: list = field(default_factory=list)
    max_steps_in_zone: int = 50

    @property
    def event_count(self) -> int:
        return len(self.direction)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.asarray(self.direction, dtype=np.int64).reshape(-1),
            np.asarray(self.tolerance, dtype=np.float64).reshape(-1),
            np.asarray(self.stop_condition, dtype=np.int64).reshape(-1),
        )

    def check(self, event_count: int) -> None:
        direction, tol, stop = self.arrays()
        if not (direction.size == tol.size == stop.size == event_count):
            raise ValueError(
                f"event controls must list {event_count} entries each, got "
                f"{direction.size}/{tol.size}/{stop.size}"
            )
        if np.any(~np.isin(direction, (-1, 0, 1))):
            raise ValueError("event direction must be -1, 0 or +1")
        if not np.all(np.isfinite(tol)) or np.any(tol <= 0):
            raise ValueError("event tolerances must be finite and positive")
        if np.any(stop < 0):
            raise ValueError("stop conditions must be >= 0")
        if self.max_steps_in_zone < 1:
            raise ValueError("max_steps_in_zone must be >= 1")


@dataclass
class SystemDefinition:
    """Dimensions, controls and hooks of one ODE system family."""

    system_dim: int
    ode_rhs: Callable
    param_count: int = 0
    event_count: int = 0
    accessory_count: int = 0
    ode_controls: OdeControls = field(default_factory=OdeControls)
    event_controls: EventControls = field(default_factory=EventControls)
    event_values: Callable = no_events
    event_action: Callable = no_action
    ordinary_accessory: Callable = no_ordinary_accessory
    event_accessory: Callable = no_event_accessory
    initialize: Callable = no_initialize
    finalize: Callable = no_finalize
    name: str = "system"

    def batch_dims(self, capacity: int) -> BatchDims:
        return BatchDims(
            batch_capacity=capacity,
            system_dim=self.system_dim,
            param_count=self.param_count,
            event_count=self.event_count,
            accessory_count=self.accessory_count,
        )

    def hooks(self) -> tuple:
        return (
            self.ode_rhs,
            self.event_values,
            self.event_action,
            self.ordinary_accessory,
            self.event_accessory,
            self.initialize,
            self.finalize,
        )


class DefinitionError(ValueError):
    pass


def validate_definition(
    defn: SystemDefinition,
    state=None,
    params=None,
    t: float = 0.0,
) -> SystemDefinition:
    """Check controls and the output lengths of ``ode_rhs``/``event_values``.

    The hooks are probed once at ``(t, state, params)``; zeros are used for
    whichever of ``state``/``params`` is not given.
    """
    if defn.system_dim < 1:
        raise DefinitionError("system_dim must be >= 1")
    if min(defn.param_count, defn.event_count, defn.accessory_count) < 0:
        raise DefinitionError("counts must be >= 0")
    try:
        defn.ode_controls.check(defn.system_dim)
        defn.event_controls.check(defn.event_count)
    except ValueError as exc:
        raise DefinitionError(str(exc)) from exc

    y = np.zeros(defn.system_dim) if state is None else np.array(state, dtype=np.float64)
    p = np.zeros(defn.param_count) if params is None else np.array(params, dtype=np.float64)
    if y.shape != (defn.system_dim,):
        raise DefinitionError(f"probe state must have length {defn.system_dim}")
    if p.shape != (defn.param_count,):
        raise DefinitionError(f"probe parameters must have length {defn.param_count}")

    # one extra guard slot on each output catches writes past the declared size
    dy = np.full(defn.system_dim + 1, np.nan)
    defn.ode_rhs(float(t), y, p, dy[: defn.system_dim])
    if not np.isnan(dy[-1]):
        raise DefinitionError(f"ode_rhs writes past {defn.system_dim} components")
    if np.isnan(dy[:-1]).any():
        raise DefinitionError("ode_rhs did not fill every derivative component")

    if defn.event_count:
        f = np.full(defn.event_count + 1, np.nan)
        defn.event_values(float(t), y, p, f[: defn.event_count])
        if not np.isnan(f[-1]):
            raise DefinitionError(f"event_values writes past {defn.event_count} entries")
        if np.isnan(f[:-1]).any():
            raise DefinitionError(
                f"event_values filled fewer than the declared {defn.event_count} values"
            )
    return defn


__all__ = [
    "DefinitionError",
    "EventControls",
    "OdeControls",
    "SystemDefinition",
    "validate_definition",
]
