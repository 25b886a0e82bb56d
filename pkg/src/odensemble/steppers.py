"""Explicit Runge-Kutta single-step kernels and the step-size controller."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F

import numba as nb
import numpy as np

RK4 = 0
RKCK45 = 1

ALGORITHMS = {"RK4": RK4, "RKCK45": RKCK45}

# Cash-Karp embedded 5(4) tableau
CK_NODES = (F(0), F(1, 5), F(3, 10), F(3, 5), F(1), F(7, 8))
CK_MATRIX = (
    (),
    (F(1, 5),),
    (F(3, 40), F(9, 40)),
    (F(3, 10), F(-9, 10), F(6, 5)),
    (F(-11, 54), F(5, 2), F(-70, 27), F(35, 27)),
    (F(1631, 55296), F(175, 512), F(575, 13824), F(44275, 110592), F(253, 4096)),
)
CK_WEIGHTS5 = (F(37, 378), F(0), F(250, 621), F(125, 594), F(0), F(512, 1771))
CK_WEIGHTS4 = (
    F(2825, 27648),
    F(0),
    F(18575, 48384),
    F(13525, 55296),
    F(277, 14336),
    F(1, 4),
)

_C = np.array([float(c) for c in CK_NODES])
_A = np.zeros((6, 6))
for _i, _row in enumerate(CK_MATRIX):
    for _j, _a in enumerate(_row):
        _A[_i, _j] = float(_a)
_B5 = np.array([float(b) for b in CK_WEIGHTS5])
_DB = np.array([float(b5 - b4) for b5, b4 in zip(CK_WEIGHTS5, CK_WEIGHTS4)])


@nb.njit
def _all_finite(v):
    for i in range(v.shape[0]):
        if not np.isfinite(v[i]):
            return False
    return True


@nb.njit
def _rk4(rhs, t, h, y, p, y_out, err, k, tmp):
    """Classical RK4; ``k`` is a (>=4, n) work array. Returns True if non-finite."""
    n = y.shape[0]
    rhs(t, y, p, k[0])
    for i in range(n):
        tmp[i] = y[i] + 0.5 * h * k[0, i]
    rhs(t + 0.5 * h, tmp, p, k[1])
    for i in range(n):
        tmp[i] = y[i] + 0.5 * h * k[1, i]
    rhs(t + 0.5 * h, tmp, p, k[2])
    for i in range(n):
        tmp[i] = y[i] + h * k[2, i]
    rhs(t + h, tmp, p, k[3])
    for i in range(n):
        y_out[i] = y[i] + h * (k[0, i] + 2.0 * k[1, i] + 2.0 * k[2, i] + k[3, i]) / 6.0
        err[i] = 0.0
    return not _all_finite(y_out)


@nb.njit
def _rkck45(rhs, t, h, y, p, y_out, err, k, tmp):
    """Cash-Karp step; ``y_out`` gets the 5th-order solution, ``err`` |y5 - y4|."""
    n = y.shape[0]
    rhs(t, y, p, k[0])
    for s in range(1, 6):
        for i in range(n):
            acc = 0.0
            for j in range(s):
                acc += _A[s, j] * k[j, i]
            tmp[i] = y[i] + h * acc
        rhs(t + _C[s] * h, tmp, p, k[s])
    bad = False
    for i in range(n):
        y5 = 0.0
        e = 0.0
        for j in range(6):
            y5 += _B5[j] * k[j, i]
            e += _DB[j] * k[j, i]
        y_out[i] = y[i] + h * y5
        err[i] = abs(h * e)
        if not (np.isfinite(y_out[i]) and np.isfinite(err[i])):
            bad = True
    return bad


@nb.njit
def _step(rhs, algorithm, t, h, y, p, y_out, err, k, tmp):
    if algorithm == RK4:
        return _rk4(rhs, t, h, y, p, y_out, err, k, tmp)
    return _rkck45(rhs, t, h, y, p, y_out, err, k, tmp)


@nb.njit
def _error_ratio(err, y_old, y_new, rel_tol, abs_tol):
    ratio = 0.0
    for i in range(err.shape[0]):
        scale = abs_tol[i] + rel_tol[i] * max(abs(y_old[i]), abs(y_new[i]))
        r = err[i] / scale
        if r > ratio:
            ratio = r
    return ratio


@nb.njit
def _control_step(ratio, h, max_step, min_step, grow, shrink, nonfinite):
    """Returns ``(accepted, next_step, abort)``."""
    if nonfinite:
        if h <= min_step:
            return False, min_step, True
        return False, max(h * shrink, min_step), False
    accepted = ratio <= 1.0
    if ratio > 0.0:
        factor = 0.9 * ratio ** -0.2
    else:
        factor = grow
    factor = min(max(factor, shrink), grow)
    next_step = min(max(h * factor, min_step), max_step)
    if not accepted and h <= min_step:
        accepted = True
    return accepted, next_step, False


# ---------------------------------------------------------------------------
# Python-facing wrappers


class NonFiniteAbort(ArithmeticError):
    """Non-finite state at the minimum step size."""


@dataclass
class StepResult:
    proposed_state: np.ndarray
    embedded_error: np.ndarray
    any_nonfinite: bool


@dataclass
class StepDecision:
    accepted: bool
    next_step: float


def _single_step(algorithm, defn, t, h, state, params) -> StepResult:
    if not h > 0:
        raise ValueError("step size must be positive")
    y = np.array(state, dtype=np.float64)
    p = np.array(params if params is not None else [], dtype=np.float64)
    y_out = np.empty_like(y)
    err = np.empty_like(y)
    k = np.empty((6, y.size))
    tmp = np.empty_like(y)
    bad = _step(defn.ode_rhs, algorithm, float(t), float(h), y, p, y_out, err, k, tmp)
    return StepResult(y_out, err, bool(bad))


def rk4_step(defn, t: float, h: float, state, params=None) -> StepResult:
    """One classical fourth-order Runge-Kutta step (error estimate is zero)."""
    return _single_step(RK4, defn, t, h, state, params)


def rkck45_step(defn, t: float, h: float, state, params=None) -> StepResult:
    """One Cash-Karp step returning the 5th-order solution and |y5 - y4|."""
    return _single_step(RKCK45, defn, t, h, state, params)


def error_ratio(embedded_error, state_old, state_new, controls) -> float:
    """Max over components of error / (atol + rtol * max(|y_old|, |y_new|))."""
    e = np.asarray(embedded_error, dtype=np.float64)
    rel, abs_, _ = controls.arrays(e.size)
    return float(
        _error_ratio(
            e,
            np.asarray(state_old, dtype=np.float64),
            np.asarray(state_new, dtype=np.float64),
            rel,
            abs_,
        )
    )


def control_step(ratio: float, h: float, controls, nonfinite: bool = False) -> StepDecision:
    """Accept/reject decision and the next step size.

    Raises NonFiniteAbort when a non-finite state shows up at the minimum step.
    """
    accepted, next_step, abort = _control_step(
        float(ratio),
        float(h),
        controls.max_step,
        controls.min_step,
        controls.step_grow_limit,
        controls.step_shrink_limit,
        bool(nonfinite),
    )
    if abort:
        raise NonFiniteAbort(f"non-finite state at the minimum step {h!r}")
    return StepDecision(bool(accepted), float(next_step))
