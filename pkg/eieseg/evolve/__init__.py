"""Gradient-flow simulator and the bundled attraction scenarios"""
from .scenarios import DEMO_MANIFEST, Scenario, get_scenario
from .simulator import (
    InstabilityMonitor,
    evolve_step,
    initial_state,
    run_evolution,
    save_trajectory,
    stable_eta,
)

__all__ = [
    "DEMO_MANIFEST",
    "InstabilityMonitor",
    "Scenario",
    "evolve_step",
    "get_scenario",
    "initial_state",
    "run_evolution",
    "save_trajectory",
    "stable_eta",
]
