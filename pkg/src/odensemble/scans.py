"""Parameter scans producing plot-ready data files."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .driver import NONFINITE_ABORT, SolverConfig
from .engine import SolverBatch, solve
from .models.bubble import BubblePhysical, bubble_coefficients, bubble_system
from .models.duffing import (
    duffing_lyapunov_system,
    duffing_maxima_system,
    duffing_system,
    lyapunov_accumulate,
)
from .models.valve import valve_system
from .pool import CopyMode, LinearCopySpec, PoolDims, ProblemPool, linear_set

BAR = 1.0e5


@dataclass(frozen=True)
class Range:
    min: float
    max: float
    res: int = 1
    scale: str = "lin"

    def __post_init__(self):
        if self.res < 1:
            raise ValueError("resolution must be >= 1")
        if self.scale not in ("lin", "log"):
            raise ValueError("scale must be 'lin' or 'log'")
        if self.scale == "log" and not (self.min > 0 and self.max > 0):
            raise ValueError("log scale needs positive bounds")

    def values(self) -> np.ndarray:
        if self.res == 1:
            return np.array([float(self.min)])
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.res)
        return np.linspace(self.min, self.max, self.res)


SUBCOMMANDS = (
    "duffing-poincare",
    "duffing-max-acc",
    "duffing-max-event",
    "duffing-lyapunov",
    "bubble-scan",
    "valve-scan",
)

DEFAULT_RANGES = {
    "duffing": {"k": Range(0.2, 0.3, 256), "b": Range(0.3, 0.3, 1)},
    "bubble": {
        "pa1": Range(1.1, 1.1, 1),
        "pa2": Range(0.7, 0.7, 1),
        "f1": Range(20.0, 1000.0, 32, "log"),
        "f2": Range(20.0, 1000.0, 32, "log"),
    },
    "valve": {"q": Range(0.2, 10.0, 256)},
}

DEFAULTS = {
    "duffing": dict(transient=1024, save=32, tol=1e-9, ic=(0.0, 0.0)),
    "bubble": dict(transient=64, save=8, tol=1e-10, ic=(1.0, 0.0)),
    "valve": dict(transient=256, save=32, tol=1e-10, ic=None),
}


def model_of(subcommand: str) -> str:
    return subcommand.split("-")[0]


@dataclass
class ScanSpec:
    subcommand: str
    ranges: dict = field(default_factory=dict)
    transient: int | None = None
    save: int | None = None
    algorithm: str = "RKCK45"
    dt: float = 1e-2
    rel_tol: float | None = None
    abs_tol: float | None = None
    event_tol: float = 1e-6
    output: str | None = None
    workers: int | None = None
    tile_size: int = 64
    systems: int | None = None
    ic: tuple | None = None
    detection_log: int = 0

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        model = model_of(self.subcommand)
        merged = dict(DEFAULT_RANGES[model])
        unknown = set(self.ranges) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameter ranges for {model}: {sorted(unknown)}")
        merged.update(self.ranges)
        self.ranges = merged
        d = DEFAULTS[model]
        if self.transient is None:
            self.transient = d["transient"]
        if self.save is None:
            self.save = d["save"]
        if self.rel_tol is None:
            self.rel_tol = d["tol"]
        if self.abs_tol is None:
            self.abs_tol = d["tol"]
        if self.transient < 0 or self.save < 1:
            raise ValueError("need transient >= 0 and save >= 1")
        if self.systems is not None and self.systems < 1:
            raise ValueError("systems must be >= 1")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            algorithm=self.algorithm,
            initial_time_step=self.dt,
            tile_size=self.tile_size,
            worker_count=self.workers,
            detection_log=self.detection_log,
        )

    def grid(self, *names: str) -> np.ndarray:
        """Cartesian product of the named ranges, first name varying slowest."""
        axes = [self.ranges[n].values() for n in names]
        return np.array(list(itertools.product(*axes)), dtype=np.float64).reshape(-1, len(names))


@dataclass
class ScanResult:
    header: list
    rows: list
    any_abort: bool = False
    diagnostics: dict = field(default_factory=dict)

    def write(self, path) -> None:
        emit_rows(path, self.header, self.rows)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, (bool, np.bool_)):
        return str(int(value))
    return f"{float(value):.16e}"


def emit_rows(path, header, rows) -> None:
    """Write ``rows`` as comma-separated text under a ``# name,name`` header.

    Reals get 17 significant digits, which round-trips every double.
    """
    width = len(header)
    lines = ["# " + ",".join(header)]
    for row in rows:
        if len(row) != width:
            raise ValueError(f"row width {len(row)} does not match header width {width}")
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_rows(path) -> tuple[list, np.ndarray]:
    """Parse a file written by :func:`emit_rows` (inverse helper)."""
    text = Path(path).read_text(encoding="ascii").splitlines()
    header = text[0][2:].split(",") if text and text[0].startswith("# ") else []
    data = [[float(tok) for tok in line.split(",")] for line in text[1:] if line]
    return header, np.array(data, dtype=np.float64).reshape(-1, len(header))


def _chunks(n: int, size: int | None):
    size = n if size is None else min(size, n)
    for lo in range(0, n, size):
        yield lo, min(lo + size, n)


def _run_pool(pool: ProblemPool, defn, spec: ScanSpec, per_iteration, after_chunk=None):
    """Iterate every chunk of the pool ``transient + save`` times.

    ``per_iteration(batch, lo, it, saved)`` runs after each solve; ``saved``
    is False during the transient.  Returns the per-system abort flags.
    """
    cfg = spec.solver_config()
    n_p = pool.dims.problem_size
    aborted = np.zeros(n_p, dtype=bool)
    for lo, hi in _chunks(n_p, spec.systems):
        batch = SolverBatch(defn.batch_dims(hi - lo))
        linear_set(batch, pool, LinearCopySpec(0, lo, hi - lo, CopyMode.ALL))
        for it in range(spec.transient + spec.save):
            solve(batch, defn, cfg)
            aborted[lo:hi] |= batch.reason == NONFINITE_ABORT
            per_iteration(batch, lo, it, it >= spec.transient)
        if after_chunk is not None:
            after_chunk(batch, lo)
    return aborted


def _duffing_pool(spec: ScanSpec, system_dim: int, accessory_count: int = 0):
    grid = spec.grid("k", "b")
    n = grid.shape[0]
    pool = ProblemPool(PoolDims(n, system_dim, 4, accessory_count))
    period = 2.0 * math.pi
    pool.component("time_domain", 1)[:] = period
    pool.component("parameters", 0)[:] = grid[:, 0]
    pool.component("parameters", 1)[:] = grid[:, 1]
    pool.component("parameters", 2)[:] = 1.0
    pool.component("parameters", 3)[:] = 1.0
    ic = spec.ic if spec.ic is not None else DEFAULTS["duffing"]["ic"]
    for i, v in enumerate(ic[:2]):
        pool.component("state", i)[:] = v
    return grid, pool, period


def run_duffing_poincare(spec: ScanSpec) -> ScanResult:
    """Stroboscopic section at multiples of the forcing period."""
    grid, pool, _ = _duffing_pool(spec, 2)
    defn = duffing_system()
    defn.ode_controls.rel_tol, defn.ode_controls.abs_tol = spec.rel_tol, spec.abs_tol
    n = grid.shape[0]
    points = np.empty((spec.save, n, 2))

    def collect(batch, lo, it, saved):
        if saved:
            hi = lo + batch.dims.batch_capacity
            points[it - spec.transient, lo:hi, 0] = batch.component("state", 0)
            points[it - spec.transient, lo:hi, 1] = batch.component("state", 1)

    aborted = _run_pool(pool, defn, spec, collect)
    rows = [
        (grid[s, 0], grid[s, 1], points[j, s, 0], points[j, s, 1], _status(aborted[s]))
        for s in range(n)
        for j in range(spec.save)
    ]
    return ScanResult(["k", "B", "y1", "y2", "status"], rows, bool(aborted.any()),
                      {"points": points, "grid": grid})


def _status(aborted: bool, reason: int = 0) -> int:
    return NONFINITE_ABORT if aborted else int(reason)


def run_duffing_maxima(spec: ScanSpec, mode: str) -> ScanResult:
    """Per-iteration maximum of ``y1`` from an accessory or from local-maximum events."""
    grid, pool, _ = _duffing_pool(spec, 2, accessory_count=2)
    defn = duffing_maxima_system(mode, event_tol=spec.event_tol)
    defn.ode_controls.rel_tol, defn.ode_controls.abs_tol = spec.rel_tol, spec.abs_tol
    n = grid.shape[0]
    maxima = np.full((spec.save, n), np.nan)
    located = []

    def collect(batch, lo, it, saved):
        if not saved:
            return
        hi = lo + batch.dims.batch_capacity
        value = batch.component("accessories", 0).copy()
        if mode == "event":
            value[batch.component("accessories", 1) == 0] = np.nan
        maxima[it - spec.transient, lo:hi] = value
        if spec.detection_log:
            located.extend(_located_values(batch))

    aborted = _run_pool(pool, defn, spec, collect)
    rows = [
        (grid[s, 0], grid[s, 1], maxima[j, s], _status(aborted[s]))
        for s in range(n)
        for j in range(spec.save)
        if np.isfinite(maxima[j, s]) or aborted[s]
    ]
    return ScanResult(["k", "B", "y1_max", "status"], rows, bool(aborted.any()),
                      {"maxima": maxima, "grid": grid, "located_values": located})


def _located_values(batch) -> list:
    """|F| of every logged, precisely located detection of the last solve."""
    out = []
    cap = batch.log_event.shape[1]
    for s in range(batch.dims.batch_capacity):
        m = min(int(batch.log_count[s]), cap)
        sel = batch.log_located[s, :m]
        out.extend(np.abs(batch.log_value[s, :m][sel]).tolist())
    return out


def run_duffing_lyapunov(spec: ScanSpec) -> ScanResult:
    """Largest Lyapunov exponent from the polar-form linearization."""
    grid, pool, period = _duffing_pool(spec, 4)
    pool.component("state", 2)[:] = 1.0
    pool.component("state", 3)[:] = 0.0
    defn = duffing_lyapunov_system()
    defn.ode_controls.rel_tol, defn.ode_controls.abs_tol = spec.rel_tol, spec.abs_tol
    n = grid.shape[0]
    radii = np.ones((spec.save, n))
    points = np.empty((spec.save, n, 2))

    def collect(batch, lo, it, saved):
        hi = lo + batch.dims.batch_capacity
        radius = batch.component("state", 2)
        if saved:
            radii[it - spec.transient, lo:hi] = radius
            points[it - spec.transient, lo:hi, 0] = batch.component("state", 0)
            points[it - spec.transient, lo:hi, 1] = batch.component("state", 1)
        radius[:] = 1.0

    aborted = _run_pool(pool, defn, spec, collect)
    lam = np.full(n, np.nan)
    for s in range(n):
        if not aborted[s]:
            lam[s] = lyapunov_accumulate(radii[:, s], period)
    rows = [(grid[s, 0], grid[s, 1], lam[s], _status(aborted[s])) for s in range(n)]
    return ScanResult(["k", "B", "lambda_max", "status"], rows, bool(aborted.any()),
                      {"lambda": lam, "grid": grid, "points": points})


def run_bubble_scan(spec: ScanSpec) -> ScanResult:
    """Largest relative expansion over the saved collapses of each bubble."""
    grid = spec.grid("pa1", "pa2", "f1", "f2")
    n = grid.shape[0]
    pool = ProblemPool(PoolDims(n, 2, 13, 4))
    for s, (pa1, pa2, f1, f2) in enumerate(grid):
        phys = BubblePhysical(
            P_A1=pa1 * BAR, P_A2=pa2 * BAR,
            omega1=2.0 * math.pi * f1 * 1e3, omega2=2.0 * math.pi * f2 * 1e3,
        )
        pool.put("parameters", s, bubble_coefficients(phys))
    pool.component("time_domain", 0)[:] = 0.0
    pool.component("time_domain", 1)[:] = 1.0e6
    ic = spec.ic if spec.ic is not None else DEFAULTS["bubble"]["ic"]
    for i, v in enumerate(ic[:2]):
        pool.component("state", i)[:] = v

    defn = bubble_system(event_tol=spec.event_tol)
    defn.ode_controls.rel_tol, defn.ode_controls.abs_tol = spec.rel_tol, spec.abs_tol
    y_exp = np.full((spec.save, n), np.nan)
    reasons = np.zeros((spec.transient + spec.save, n), dtype=np.int64)
    start_times = np.zeros((spec.transient + spec.save + 1, n))
    end_y2 = np.zeros((spec.transient + spec.save, n))
    y1_min = np.full(n, np.inf)
    located = []

    def collect(batch, lo, it, saved):
        hi = lo + batch.dims.batch_capacity
        if it == 0:
            start_times[0, lo:hi] = 0.0
        reasons[it, lo:hi] = batch.reason
        start_times[it + 1, lo:hi] = batch.component("time_domain", 0)
        end_y2[it, lo:hi] = batch.component("state", 1)
        y1_min[lo:hi] = np.minimum(y1_min[lo:hi], batch.component("accessories", 3))
        if saved:
            y_exp[it - spec.transient, lo:hi] = batch.component("accessories", 1) - 1.0
        if spec.detection_log:
            located.extend(_located_values(batch))

    aborted = _run_pool(pool, defn, spec, collect)
    best = np.where(aborted, np.nan, np.max(y_exp, axis=0))
    last_reason = reasons[-1]
    rows = [
        (grid[s, 2], grid[s, 3], grid[s, 0], grid[s, 1], best[s], _status(aborted[s], last_reason[s]))
        for s in range(n)
    ]
    header = ["omega1_kHz", "omega2_kHz", "PA1_bar", "PA2_bar", "y_exp", "status"]
    return ScanResult(header, rows, bool(aborted.any()), {
        "y_exp": y_exp, "reasons": reasons, "start_times": start_times,
        "end_y2": end_y2, "y1_min": y1_min, "grid": grid, "located_values": located,
    })


def run_valve_scan(spec: ScanSpec) -> ScanResult:
    """Maxima (section points) and minima of the valve position per iteration."""
    q = spec.ranges["q"].values()
    n = q.size
    pool = ProblemPool(PoolDims(n, 3, 5, 2))
    kappa, delta, beta, r = 1.25, 10.0, 20.0, 0.8
    for i, v in enumerate((kappa, delta, beta)):
        pool.component("parameters", i)[:] = v
    pool.component("parameters", 3)[:] = q
    pool.component("parameters", 4)[:] = r
    pool.component("time_domain", 1)[:] = 1.0e6
    ic = spec.ic if spec.ic is not None else (0.2, 0.0, delta + 0.2)
    for i, v in enumerate(ic[:3]):
        pool.component("state", i)[:] = v

    defn = valve_system(event_tol=spec.event_tol)
    defn.ode_controls.rel_tol, defn.ode_controls.abs_tol = spec.rel_tol, spec.abs_tol
    y1_max = np.empty((spec.save, n))
    y1_min = np.empty((spec.save, n))
    reasons = np.zeros((spec.save, n), dtype=np.int64)
    impacts = []
    located = []
    overall_min = np.full(n, np.inf)

    def collect(batch, lo, it, saved):
        hi = lo + batch.dims.batch_capacity
        overall_min[lo:hi] = np.minimum(overall_min[lo:hi], batch.component("accessories", 1))
        if not saved:
            return
        j = it - spec.transient
        y1_max[j, lo:hi] = batch.component("accessories", 0)
        y1_min[j, lo:hi] = batch.component("accessories", 1)
        reasons[j, lo:hi] = batch.reason
        if spec.detection_log:
            located.extend(_located_values(batch))
            cap = batch.log_event.shape[1]
            for s in range(batch.dims.batch_capacity):
                m = min(int(batch.log_count[s]), cap)
                for e in np.flatnonzero(batch.log_event[s, :m] == 1):
                    impacts.append((lo + s, batch.log_before[s, e, 1], batch.log_after[s, e, 1]))

    aborted = _run_pool(pool, defn, spec, collect)
    rows = [
        (q[s], y1_max[j, s], y1_min[j, s], _status(aborted[s], reasons[j, s]))
        for s in range(n)
        for j in range(spec.save)
    ]
    return ScanResult(["q", "y1_max", "y1_min", "status"], rows, bool(aborted.any()), {
        "y1_max": y1_max, "y1_min": y1_min, "reasons": reasons, "q": q,
        "impacts": impacts, "located_values": located, "overall_min": overall_min,
    })


def run_scan(spec: ScanSpec) -> ScanResult:
    runners = {
        "duffing-poincare": run_duffing_poincare,
        "duffing-max-acc": lambda s: run_duffing_maxima(s, "accessory"),
        "duffing-max-event": lambda s: run_duffing_maxima(s, "event"),
        "duffing-lyapunov": run_duffing_lyapunov,
        "bubble-scan": run_bubble_scan,
        "valve-scan": run_valve_scan,
    }
    result = runners[spec.subcommand](spec)
    if spec.output:
        result.write(spec.output)
    return result
