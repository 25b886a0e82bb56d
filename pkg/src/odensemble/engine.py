"""Batch solver: runs the per-system driver over disjoint tiles of a batch."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .driver import Reason, SolverConfig, SystemOutcome, _integrate_tile
from .events import Config, Detection
from .pool import BatchDims, _SoAStorage
from .system import SystemDefinition, validate_definition


def partition(n_t: int, tile_size: int) -> list[range]:
    """Split ``range(n_t)`` into consecutive tiles of ``tile_size`` systems."""
    if tile_size < 1:
        raise ValueError("tile_size must be >= 1")
    return [range(lo, min(lo + tile_size, n_t)) for lo in range(0, n_t, tile_size)]


class SolverBatch(_SoAStorage):
    """SoA storage of ``batch_capacity`` systems plus per-system outcomes."""

    def __init__(self, dims: BatchDims):
        self.dims = dims
        n = dims.batch_capacity
        self._n = n
        self.time_domain = np.zeros(2 * n)
        self.state = np.zeros(dims.system_dim * n)
        self.parameters = np.zeros(dims.param_count * n)
        self.accessories = np.zeros(dims.accessory_count * n)
        self.reason = np.full(n, -1, dtype=np.int64)
        self.accepted_steps = np.zeros(n, dtype=np.int64)
        self.rejected_steps = np.zeros(n, dtype=np.int64)
        self.secant_failed = np.zeros(n, dtype=np.bool_)
        self.final_t = np.full(n, np.nan)
        self.event_counts = np.zeros(dims.event_count * n, dtype=np.int64)
        self._alloc_log(0)

    def _alloc_log(self, cap: int) -> None:
        n, d = self._n, self.dims.system_dim
        self.log_count = np.zeros(n, dtype=np.int64)
        self.log_event = np.zeros((n, cap), dtype=np.int64)
        self.log_config = np.zeros((n, cap), dtype=np.int64)
        self.log_t = np.zeros((n, cap))
        self.log_value = np.zeros((n, cap))
        self.log_located = np.zeros((n, cap), dtype=np.bool_)
        self.log_before = np.zeros((n, cap, d))
        self.log_after = np.zeros((n, cap, d))

    def outcome(self, idx: int) -> SystemOutcome:
        return SystemOutcome(
            final_t=float(self.final_t[idx]),
            final_state=self.get("state", idx),
            accessories=self.get("accessories", idx),
            time_domain=self.get("time_domain", idx),
            reason=Reason(int(self.reason[idx])),
            accepted_steps=int(self.accepted_steps[idx]),
            rejected_steps=int(self.rejected_steps[idx]),
            event_counts=self.event_counts.reshape(-1, self._n)[:, idx].copy(),
            secant_failed=bool(self.secant_failed[idx]),
        )

    @property
    def outcomes(self) -> list[SystemOutcome]:
        return [self.outcome(i) for i in range(self._n)]

    def detections(self, idx: int) -> list[Detection]:
        """Logged detections of system ``idx`` from the last solve (capped by the log size)."""
        stored = min(int(self.log_count[idx]), self.log_event.shape[1])
        return [
            Detection(
                event_index=int(self.log_event[idx, j]),
                config=Config(int(self.log_config[idx, j])),
                located_t=float(self.log_t[idx, j]),
                located_state=self.log_before[idx, j].copy(),
                value=float(self.log_value[idx, j]),
                located=bool(self.log_located[idx, j]),
            )
            for j in range(stored)
        ]


def _check_batch(batch: SolverBatch, defn: SystemDefinition) -> None:
    bd = batch.dims
    if (bd.system_dim, bd.param_count, bd.event_count, bd.accessory_count) != (
        defn.system_dim,
        defn.param_count,
        defn.event_count,
        defn.accessory_count,
    ):
        raise ValueError("batch dimensions do not match the system definition")
    td = batch.time_domain.reshape(2, -1)
    if np.any(td[1] < td[0]):
        raise ValueError("every system needs t1 >= t0")


def solve(batch: SolverBatch, defn: SystemDefinition, cfg: SolverConfig) -> SolverBatch:
    """Integrate every system of the batch over its own time domain, in place."""
    _check_batch(batch, defn)
    rel, abs_, ctrl = defn.ode_controls.arrays(defn.system_dim)
    ev_dir, ev_tol, ev_stop = defn.event_controls.arrays()
    if cfg.algorithm == "RKCK45":
        defn.ode_controls.check(defn.system_dim)
        if cfg.initial_time_step > defn.ode_controls.max_step:
            raise ValueError("initial_time_step exceeds max_step")
    defn.event_controls.check(defn.event_count)
    if batch.log_event.shape[1] != cfg.detection_log:
        batch._alloc_log(cfg.detection_log)

    hooks = defn.hooks()
    shared = (
        cfg.algorithm_code, float(cfg.initial_time_step), rel, abs_, ctrl,
        ev_dir, ev_tol, ev_stop, int(defn.event_controls.max_steps_in_zone),
        batch.time_domain, batch.state, batch.parameters, batch.accessories,
        batch.reason, batch.accepted_steps, batch.rejected_steps, batch.secant_failed,
        batch.final_t, batch.event_counts,
        batch.log_count, batch.log_event, batch.log_config, batch.log_t, batch.log_value,
        batch.log_located, batch.log_before, batch.log_after,
    )

    def run(tile: range) -> None:
        _integrate_tile(tile.start, tile.stop, *hooks, *shared)

    tiles = partition(batch.dims.batch_capacity, cfg.tile_size)
    if cfg.worker_count == 1 or len(tiles) == 1:
        for tile in tiles:
            run(tile)
    else:
        # tiles write disjoint slots, so completion order does not matter
        with ThreadPoolExecutor(max_workers=cfg.worker_count) as pool:
            list(pool.map(run, tiles))
    return batch


__all__ = ["SolverBatch", "partition", "solve", "validate_definition"]
