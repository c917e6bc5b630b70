"""Cost-oblivious storage reallocation."""

from .amortized import AmortizedAllocator, FlushPlan, find_boundary_class, plan_flush
from .checkpointed import CheckpointedAllocator, CheckpointLedger, PhasedFlushPlan, run_to_completion
from .core import (
    CheckpointEvent,
    FlushEvent,
    FreeEvent,
    InvalidArgument,
    InvariantFailure,
    LayoutState,
    MoveEvent,
    NotFound,
    Residency,
    Violation,
    size_class,
    validate_layout,
)
from .deamortized import DeamortizedAllocator

MODES = {
    "amortized": AmortizedAllocator,
    "checkpointed": CheckpointedAllocator,
    "deamortized": DeamortizedAllocator,
}

__version__ = "0.1.0"
