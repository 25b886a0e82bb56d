"""Batch integration of large pools of independent ODE systems."""
from .driver import Reason, SolverConfig, SystemOutcome, integrate_system, solve_iteratively
from .engine import SolverBatch, partition, solve
from .events import Config, Detection, EventMachineState, advance_machine, classify_transition, locate_secant, zone_of
from .pool import (
    BatchDims,
    CopyMode,
    LinearCopySpec,
    PoolDims,
    ProblemPool,
    RandomCopySpec,
    flat_index,
    linear_set,
    random_set,
)
from .steppers import (
    NonFiniteAbort,
    StepDecision,
    StepResult,
    control_step,
    error_ratio,
    rk4_step,
    rkck45_step,
)
from .system import EventControls, OdeControls, SystemDefinition, validate_definition

__version__ = "0.1.0"
