"""Deterministic discrete-event simulation of mobile data collection.

Ground side: a BT-Mesh style network of relay, friend and low-power nodes
whose readings are collected by a mobile hub, under flooding or the MAM0/MAM1
route-selection policies. Air side: a UAV fleet patrolling points of interest
with DADCA segment coordination, plus a TSP-ferry baseline.
"""

from .des import Simulator
from .metrics import RunMetrics
from .scenario import Scenario, build, bundled, load

__all__ = ["Simulator", "RunMetrics", "Scenario", "build", "bundled", "load"]
__version__ = "0.1.0"
