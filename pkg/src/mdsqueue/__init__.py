"""Queueing laboratory for erasure-coded storage systems.

Exact simulation of the batch fork-join queue with distinct-server
constraints, plus quasi-birth-death Markov chains and a matrix-analytic
solver for the bounding policy families.
"""
from .chain import build_qbd, recurrence_stationary
from .config import Policy, SystemConfig, parse_policy
from .metrics import (degraded_read_compare, light_traffic_latency,
                      mean_latency, occupancy_ccdf, throughput_loss,
                      waiting_probability)
from .qbd import max_throughput, solve, stationary

__all__ = [
    "Policy", "SystemConfig", "parse_policy",
    "build_qbd", "recurrence_stationary",
    "solve", "stationary", "max_throughput",
    "mean_latency", "waiting_probability", "light_traffic_latency",
    "occupancy_ccdf", "throughput_loss", "degraded_read_compare",
]
__version__ = "0.1.0"
