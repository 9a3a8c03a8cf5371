"""Deterministic simulator of a PTP client host under time-tampering payloads.

The package models the full discipline chain of a synchronized Linux
host at desk scale: a network master, the NIC's hardware clock kept by a
PI servo over two-step offset measurements, the system clock kept by a
second PI servo against the hardware clock, and the kernel syscall
boundary both loops call through. Fault-injection payloads installed on
that boundary reproduce host-local attacks on timekeeping (constant
bias, progressive drift, random jitter) without touching anything on the
wire.

Every run is a pure function of its configuration and seed.
"""

__version__ = "0.1.0"

from .runner import RunResult, ScenarioSummary, run_scenario, run_suite, simulate
from .scenarios import FIGURE_SUITE, ScenarioConfig, builtin_scenarios, get_builtin

__all__ = [
    "__version__",
    "FIGURE_SUITE",
    "RunResult",
    "ScenarioConfig",
    "ScenarioSummary",
    "builtin_scenarios",
    "get_builtin",
    "run_scenario",
    "run_suite",
    "simulate",
]
