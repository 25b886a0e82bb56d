"""Single-system integration loop and the tile kernel built on it."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numba as nb
import numpy as np

from .events import (
    CFG_A,
    CFG_NONE,
    EQUILIBRIUM_STOP,
    EVENT_STOP,
    NO_STOP,
    _classify,
    _classify_all,
    _commit,
    _locate,
    _machine_start,
    _refresh,
)
from .steppers import RK4, _control_step, _error_ratio, _step

RUNNING = -1
REACHED_END_TIME = 0
EVENT_STOPPED = 1
EQUILIBRIUM_STOPPED = 2
NONFINITE_ABORT = 3


class Reason(enum.IntEnum):
    ReachedEndTime = REACHED_END_TIME
    EventStop = EVENT_STOPPED
    EquilibriumStop = EQUILIBRIUM_STOPPED
    NonFiniteAbort = NONFINITE_ABORT


@dataclass
class SystemOutcome:
    final_t: float
    final_state: np.ndarray
    accessories: np.ndarray
    time_domain: np.ndarray
    reason: Reason
    accepted_steps: int
    rejected_steps: int
    event_counts: np.ndarray
    secant_failed: bool = False


@nb.njit
def _log_detection(slot, e, cfg, t, value, located, y, log_event, log_config,
                   log_t, log_value, log_located, log_before):
    log_event[slot] = e
    log_config[slot] = cfg
    log_t[slot] = t
    log_value[slot] = value
    log_located[slot] = located
    for i in range(y.shape[0]):
        log_before[slot, i] = y[i]


@nb.njit
def _integrate_one(
    rhs, event_fn, action, ordinary_acc, event_acc, initialize, finalize,
    algorithm, dt0, rel_tol, abs_tol, ctrl,
    ev_dir, ev_tol, ev_stop, max_in_zone,
    td, y, p, acc, counter,
    log_event, log_config, log_t, log_value, log_located, log_before, log_after,
):
    """Integrate one system in place.

    ``td``, ``y``, ``acc`` and ``counter`` are modified.  The log arrays have
    one row per stored detection (their length is the log capacity).
    Returns ``(reason, accepted, rejected, secant_failed, detections, t_end)``.
    """
    n = y.shape[0]
    n_ev = ev_dir.shape[0]
    log_cap = log_event.shape[0]
    max_step = ctrl[0]
    min_step = ctrl[1]
    grow = ctrl[2]
    shrink = ctrl[3]

    y_new = np.empty(n)
    err = np.empty(n)
    tmp = np.empty(n)
    y_trial = np.empty(n)
    k = np.empty((6, n))
    f = np.empty(n_ev)
    f_trial = np.empty(n_ev)
    cfg = np.zeros(n_ev, dtype=np.int64)
    phase = np.zeros(n_ev, dtype=np.int8)
    prev = np.empty(n_ev)
    zone_steps = np.zeros(1, dtype=np.int64)

    initialize(td[0], td, y, p, acc)
    t = td[0]
    t1 = td[1]
    h = dt0
    if algorithm != RK4:
        h = min(max(h, min_step), max_step)

    if n_ev > 0:
        event_fn(t, y, p, f)
        _machine_start(f, ev_tol, phase, prev, counter, zone_steps)

    accepted = 0
    rejected = 0
    detections = 0
    secant_failed = False
    reason = RUNNING
    if not t < t1:
        reason = REACHED_END_TIME

    while reason == RUNNING:
        last = h >= t1 - t
        h_try = t1 - t if last else h
        bad = _step(rhs, algorithm, t, h_try, y, p, y_new, err, k, tmp)

        if algorithm == RK4:
            if bad:
                reason = NONFINITE_ABORT
                break
            h_next = h
        else:
            ratio = 0.0 if bad else _error_ratio(err, y, y_new, rel_tol, abs_tol)
            ok, h_next, abort = _control_step(ratio, max(h_try, min_step), max_step,
                                              min_step, grow, shrink, bad)
            if abort:
                reason = NONFINITE_ABORT
                break
            if not ok:
                rejected += 1
                h = h_next
                continue

        t_new = t1 if last else t + h_try
        stop_code = NO_STOP
        if n_ev > 0:
            event_fn(t_new, y_new, p, f)
            best = _classify_all(f, ev_tol, ev_dir, phase, prev, cfg)
            if best >= 0 and cfg[best] == CFG_A:
                theta, ok_loc = _locate(rhs, event_fn, algorithm, t, h_try, y, p, best,
                                        prev[best], f[best], ev_tol[best],
                                        y_new, f, k, err, tmp, y_trial, f_trial)
                if not ok_loc:
                    secant_failed = True
                if theta < h_try:
                    t_new = t + theta
                    last = False
                # other events are judged at the located point, without refinement
                for e in range(n_ev):
                    if e != best:
                        cfg[e] = _classify(prev[e], f[e], ev_tol[e], ev_dir[e], phase[e])
            if best >= 0:
                first_slot = detections
                for e in range(n_ev):
                    if cfg[e] != CFG_NONE:
                        if detections < log_cap:
                            located = cfg[e] != CFG_A or e == best
                            _log_detection(detections, e, cfg[e], t_new, f[e], located, y_new,
                                           log_event, log_config, log_t, log_value,
                                           log_located, log_before)
                        detections += 1
            stop_code = _commit(f, cfg, ev_tol, ev_stop, max_in_zone, phase, prev,
                                counter, zone_steps)
            if best >= 0:
                action(best, counter[best], t_new, y_new, p)
                for e in range(n_ev):
                    if cfg[e] != CFG_NONE:
                        event_acc(e, counter[e], t_new, y_new, p, acc)
                event_fn(t_new, y_new, p, f)
                _refresh(f, ev_tol, phase, prev)
                for slot in range(first_slot, min(detections, log_cap)):
                    for i in range(n):
                        log_after[slot, i] = y_new[i]

        t = t_new
        for i in range(n):
            y[i] = y_new[i]
        accepted += 1
        h = h_next
        ordinary_acc(t, y, p, acc)

        if stop_code == EVENT_STOP:
            reason = EVENT_STOPPED
        elif stop_code == EQUILIBRIUM_STOP:
            reason = EQUILIBRIUM_STOPPED
        elif last:
            reason = REACHED_END_TIME

    finalize(t, td, y, p, acc)
    return reason, accepted, rejected, secant_failed, detections, t


@nb.njit(nogil=True)
def _integrate_tile(
    lo, hi,
    rhs, event_fn, action, ordinary_acc, event_acc, initialize, finalize,
    algorithm, dt0, rel_tol, abs_tol, ctrl, ev_dir, ev_tol, ev_stop, max_in_zone,
    time_domain, state, params, accessories,
    out_reason, out_accepted, out_rejected, out_secant, out_final_t, out_counts,
    log_count, log_event, log_config, log_t, log_value, log_located, log_before, log_after,
):
    """Integrate systems ``lo..hi-1`` of a SoA batch of width ``out_reason.size``."""
    n_t = out_reason.shape[0]
    n = state.shape[0] // n_t
    n_par = params.shape[0] // n_t
    n_acc = accessories.shape[0] // n_t
    n_ev = ev_dir.shape[0]
    td = np.empty(2)
    y = np.empty(n)
    p = np.empty(n_par)
    acc = np.empty(n_acc)
    counter = np.zeros(n_ev, dtype=np.int64)
    for s in range(lo, hi):
        td[0] = time_domain[s]
        td[1] = time_domain[s + n_t]
        for i in range(n):
            y[i] = state[s + i * n_t]
        for i in range(n_par):
            p[i] = params[s + i * n_t]
        for i in range(n_acc):
            acc[i] = accessories[s + i * n_t]
        counter[:] = 0
        reason, n_ok, n_rej, sec_fail, n_det, t_end = _integrate_one(
            rhs, event_fn, action, ordinary_acc, event_acc, initialize, finalize,
            algorithm, dt0, rel_tol, abs_tol, ctrl, ev_dir, ev_tol, ev_stop, max_in_zone,
            td, y, p, acc, counter,
            log_event[s], log_config[s], log_t[s], log_value[s], log_located[s],
            log_before[s], log_after[s],
        )
        time_domain[s] = td[0]
        time_domain[s + n_t] = td[1]
        for i in range(n):
            state[s + i * n_t] = y[i]
        for i in range(n_acc):
            accessories[s + i * n_t] = acc[i]
        for e in range(n_ev):
            out_counts[s + e * n_t] = counter[e]
        out_reason[s] = reason
        out_accepted[s] = n_ok
        out_rejected[s] = n_rej
        out_secant[s] = sec_fail
        out_final_t[s] = t_end
        log_count[s] = n_det


# ---------------------------------------------------------------------------
# Python-facing API


def _env_workers() -> int:
    import os

    raw = os.environ.get("ODENSEMBLE_WORKERS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"ODENSEMBLE_WORKERS must be an integer >= 1, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"ODENSEMBLE_WORKERS must be an integer >= 1, got {raw!r}")
    return value


@dataclass
class SolverConfig:
    """Run-time solver settings.

    ``initial_time_step`` is the first trial step of RKCK45 and the fixed
    step of RK4.  ``detection_log`` is the number of detections recorded per
    system (0 disables the log).
    """

    algorithm: str = "RKCK45"
    initial_time_step: float = 1e-2
    tile_size: int = 64
    worker_count: int | None = None
    detection_log: int = 0

    def __post_init__(self):
        from .steppers import ALGORITHMS

        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {sorted(ALGORITHMS)}")
        if not self.initial_time_step > 0:
            raise ValueError("initial_time_step must be positive")
        if self.tile_size < 1:
            raise ValueError("tile_size must be >= 1")
        if self.worker_count is None:
            self.worker_count = _env_workers()
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if self.detection_log < 0:
            raise ValueError("detection_log must be >= 0")

    @property
    def algorithm_code(self) -> int:
        from .steppers import ALGORITHMS

        return ALGORITHMS[self.algorithm]


def integrate_system(defn, t0, t1, state, params=None, accessories=None,
                     cfg: SolverConfig | None = None) -> SystemOutcome:
    """Integrate a single system over ``[t0, t1]`` (inputs are not modified)."""
    from .engine import SolverBatch, solve

    cfg = cfg or SolverConfig(worker_count=1)
    batch = SolverBatch(defn.batch_dims(1))
    batch.time_domain[:] = (t0, t1)
    batch.state[:] = np.asarray(state, dtype=np.float64)
    if defn.param_count:
        batch.parameters[:] = np.asarray(params, dtype=np.float64)
    if defn.accessory_count and accessories is not None:
        batch.accessories[:] = np.asarray(accessories, dtype=np.float64)
    solve(batch, defn, cfg)
    return batch.outcome(0)


def solve_iteratively(batch, defn, cfg: SolverConfig, iterations: int, sink=None):
    """Call ``solve`` repeatedly; endpoints become the next initial states.

    ``sink(iteration, state, accessories)`` runs after every iteration on
    the live SoA arrays.  Yields the batch after each iteration.
    """
    from .engine import solve

    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    for i in range(iterations):
        solve(batch, defn, cfg)
        if sink is not None:
            sink(i, batch.state, batch.accessories)
        yield batch
