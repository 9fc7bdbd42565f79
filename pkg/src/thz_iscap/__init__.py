"""Two-phase THz sensing and SWIPT link simulator and time/power allocation optimizer."""

__version__ = "0.1.0"

from .harvest import LinearHarvester, NonlinearHarvester
from .link import TABLE1, AllocationPoint, ChannelSnapshot, SystemParams, snapshot
from .optimizer import (
    P1,
    P2,
    OptimizationOutcome,
    SolverConfig,
    Status,
    grid_oracle,
    maximize_E_subject_R,
    maximize_R_subject_E,
)

__all__ = [
    "AllocationPoint",
    "ChannelSnapshot",
    "LinearHarvester",
    "NonlinearHarvester",
    "OptimizationOutcome",
    "P1",
    "P2",
    "SolverConfig",
    "Status",
    "SystemParams",
    "TABLE1",
    "grid_oracle",
    "maximize_E_subject_R",
    "maximize_R_subject_E",
    "snapshot",
]
