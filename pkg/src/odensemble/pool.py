"""Structure-of-arrays storage for pools of independent ODE systems.

Every per-system property is kept in one flat float64 array in which
component ``i`` of system ``idx`` lives at ``idx + i * N`` (``N`` being the
number of systems held by the container).  The same convention is used by
the problem pool, the solver batch and every hook-facing kernel.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class CopyMode(enum.Enum):
    TIME_DOMAIN = "TimeDomain"
    ACTUAL_STATE = "ActualState"
    PARAMETER = "Parameter"
    ACCESSORIES = "Accessories"
    ALL = "All"


_PROPERTIES = {
    CopyMode.TIME_DOMAIN: ("time_domain",),
    CopyMode.ACTUAL_STATE: ("state",),
    CopyMode.PARAMETER: ("parameters",),
    CopyMode.ACCESSORIES: ("accessories",),
    CopyMode.ALL: ("time_domain", "state", "parameters", "accessories"),
}


def flat_index(idx: int, component: int, count: int, width: int | None = None) -> int:
    """Flat offset of ``component`` of system ``idx`` in an array of stride ``count``.

    ``width`` optionally bounds the component index (number of components).
    """
    if not 0 <= idx < count:
        raise IndexError(f"system index {idx} out of range for {count} systems")
    if component < 0 or (width is not None and component >= width):
        raise IndexError(f"component {component} out of range")
    return idx + component * count


@dataclass(frozen=True)
class PoolDims:
    problem_size: int
    system_dim: int
    param_count: int = 0
    accessory_count: int = 0

    def __post_init__(self):
        if self.problem_size < 1 or self.system_dim < 1:
            raise ValueError("problem_size and system_dim must be >= 1")
        if self.param_count < 0 or self.accessory_count < 0:
            raise ValueError("param_count and accessory_count must be >= 0")


@dataclass(frozen=True)
class BatchDims:
    batch_capacity: int
    system_dim: int
    param_count: int = 0
    event_count: int = 0
    accessory_count: int = 0

    def __post_init__(self):
        if self.batch_capacity < 1 or self.system_dim < 1:
            raise ValueError("batch_capacity and system_dim must be >= 1")
        if min(self.param_count, self.event_count, self.accessory_count) < 0:
            raise ValueError("counts must be >= 0")


class _SoAStorage:
    """Shared accessors of the pool and the batch."""

    time_domain: np.ndarray
    state: np.ndarray
    parameters: np.ndarray
    accessories: np.ndarray
    _n: int

    def _view(self, name: str) -> np.ndarray:
        arr = getattr(self, name)
        return arr.reshape(-1, self._n)

    def get(self, name: str, idx: int) -> np.ndarray:
        """Components of one system of property ``name`` as a new vector."""
        if not 0 <= idx < self._n:
            raise IndexError(f"system index {idx} out of range for {self._n} systems")
        return self._view(name)[:, idx].copy()

    def put(self, name: str, idx: int, values) -> None:
        if not 0 <= idx < self._n:
            raise IndexError(f"system index {idx} out of range for {self._n} systems")
        self._view(name)[:, idx] = values

    def component(self, name: str, i: int) -> np.ndarray:
        """Writable view of component ``i`` of property ``name`` over all systems."""
        return self._view(name)[i]


@dataclass
class ProblemPool(_SoAStorage):
    dims: PoolDims
    time_domain: np.ndarray = field(default=None)
    state: np.ndarray = field(default=None)
    parameters: np.ndarray = field(default=None)
    accessories: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.dims.problem_size
        self._n = n
        expected = {
            "time_domain": 2 * n,
            "state": self.dims.system_dim * n,
            "parameters": self.dims.param_count * n,
            "accessories": self.dims.accessory_count * n,
        }
        for name, size in expected.items():
            arr = getattr(self, name)
            if arr is None:
                arr = np.zeros(size)
            else:
                arr = np.ascontiguousarray(arr, dtype=np.float64).ravel()
                if arr.size != size:
                    raise ValueError(f"{name} must hold {size} values, got {arr.size}")
            setattr(self, name, arr)

    def check_time_domains(self) -> None:
        td = self._view("time_domain")
        if np.any(td[1] < td[0]):
            raise ValueError("every system needs t1 >= t0")


@dataclass(frozen=True)
class LinearCopySpec:
    start_in_batch: int
    start_in_pool: int
    element_count: int
    copy_mode: CopyMode = CopyMode.ALL


@dataclass(frozen=True)
class RandomCopySpec:
    indices_in_batch: tuple
    indices_in_pool: tuple
    copy_mode: CopyMode = CopyMode.ALL


def _check_compatible(batch, pool: ProblemPool) -> None:
    bd, pd = batch.dims, pool.dims
    if (bd.system_dim, bd.param_count, bd.accessory_count) != (
        pd.system_dim,
        pd.param_count,
        pd.accessory_count,
    ):
        raise ValueError(
            "batch and pool disagree on system_dim/param_count/accessory_count: "
            f"{(bd.system_dim, bd.param_count, bd.accessory_count)} vs "
            f"{(pd.system_dim, pd.param_count, pd.accessory_count)}"
        )


def linear_set(batch, pool: ProblemPool, spec: LinearCopySpec):
    """Copy ``element_count`` consecutive systems from the pool into the batch."""
    _check_compatible(batch, pool)
    n_t, n_p = batch.dims.batch_capacity, pool.dims.problem_size
    count = spec.element_count
    if count < 0 or spec.start_in_batch < 0 or spec.start_in_pool < 0:
        raise IndexError("negative copy bounds")
    if spec.start_in_batch + count > n_t or spec.start_in_pool + count > n_p:
        raise IndexError(
            f"copy of {count} systems exceeds batch ({n_t}) or pool ({n_p}) bounds"
        )
    b0, p0 = spec.start_in_batch, spec.start_in_pool
    for name in _PROPERTIES[spec.copy_mode]:
        dst = batch._view(name)
        src = pool._view(name)
        dst[:, b0 : b0 + count] = src[:, p0 : p0 + count]
    return batch


def random_set(batch, pool: ProblemPool, spec: RandomCopySpec):
    """Copy scattered pool systems into given batch slots (pool indices may repeat)."""
    _check_compatible(batch, pool)
    ib = np.asarray(spec.indices_in_batch, dtype=np.int64)
    ip = np.asarray(spec.indices_in_pool, dtype=np.int64)
    if ib.ndim != 1 or ib.shape != ip.shape:
        raise ValueError("index lists must be one-dimensional and of equal length")
    if np.unique(ib).size != ib.size:
        raise ValueError("duplicate batch indices")
    n_t, n_p = batch.dims.batch_capacity, pool.dims.problem_size
    if ib.size and (ib.min() < 0 or ib.max() >= n_t or ip.min() < 0 or ip.max() >= n_p):
        raise IndexError("copy index out of bounds")
    for name in _PROPERTIES[spec.copy_mode]:
        batch._view(name)[:, ib] = pool._view(name)[:, ip]
    return batch


__all__ = [
    "BatchDims",
    "CopyMode",
    "LinearCopySpec",
    "PoolDims",
    "ProblemPool",
    "RandomCopySpec",
    "flat_index",
    "linear_set",
    "random_set",
]
