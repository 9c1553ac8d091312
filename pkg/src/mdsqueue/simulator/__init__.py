"""Exact discrete-event simulation of the batch queueing policies."""
from .backend import BACKEND, USE_NUMBA
from .engine import (MetricsReport, measure_saturation_throughput, replicate,
                     run, run_reference)

__all__ = ["BACKEND", "USE_NUMBA", "MetricsReport", "run", "replicate",
           "run_reference", "measure_saturation_throughput"]
