"""Discrete-event dumbbell simulator."""
from .engine import Simulator, cross_plans, load_force, offered_cross_traffic, run
from .scenario import BWD, FWD, PROTOCOLS, Scenario, ScenarioError, dumbbell_scenario
from .trace import DELIVERED, DROPPED, PENDING, SUPPRESSED, Trace
from .traffic import CBR, VBR, TrafficSource, staircase_sources

__all__ = [
    "Simulator", "run", "offered_cross_traffic", "cross_plans", "load_force",
    "Scenario", "ScenarioError", "dumbbell_scenario", "PROTOCOLS", "FWD", "BWD",
    "Trace", "PENDING", "DELIVERED", "DROPPED", "SUPPRESSED",
    "TrafficSource", "CBR", "VBR", "staircase_sources",
]
