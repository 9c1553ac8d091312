"""Named experiment presets pinning the reference parameter sets.

Each preset expands to the same flat key=value dictionary a config file
would produce, so `--preset name` and `--config file` go through one code
path.
"""
from __future__ import annotations

_LAT_GRID = "0.2,0.4,0.6,0.8,1.0,1.2,1.4,1.6,1.8,1.9,1.95"
_WP_GRID = "0.2,0.4,0.6,0.8,1.0,1.2,1.4,1.6,1.8"

PRESETS = {
    # mean-latency sandwich, n=10 k=5: analytic bounds + simulated exact queue
    "fig1": {
        "kind": "sweep",
        "n": "10", "k": "5", "mu": "1.0",
        "lambda": _LAT_GRID,
        "series": "reservation:1,reservation:2,reservation:3,mkmn:0,mkmn:1,mds",
        "metric": "mean_latency",
        "batches": "400000", "reps": "3", "seed": "1000",
    },
    # 99th-percentile latency tails (simulation only)
    "fig5": {
        "kind": "sweep",
        "n": "10", "k": "5", "mu": "1.0",
        "lambda": "0.5,1.0,1.5,1.9",
        "series": "reservation:3,mkmn:1,mds",
        "metric": "latency_p99",
        "batches": "400000", "reps": "3", "seed": "1000",
    },
    # capacity given up by shallow reservation depths, k=2 and k=3
    "fig7": {
        "kind": "throughput-loss",
        "k": "2,3",
        "t": "1,2",
        "n": "3,4,5,6,7,8,9,10,11,12",
        "mu": "1.0",
    },
    # occupancy tail at n=10, k=5, lambda=1.5
    "fig8": {
        "kind": "occupancy",
        "n": "10", "k": "5", "mu": "1.0", "lambda": "1.5",
        "series": "reservation:2,mkmn:1,mds",
        "batches": "400000", "reps": "1", "seed": "1000",
        "max_jobs": "40",
    },
    # probability an arriving batch waits, n=10 k=5
    "fig-waitprob": {
        "kind": "sweep",
        "n": "10", "k": "5", "mu": "1.0",
        "lambda": _WP_GRID,
        "series": "reservation:1,reservation:2,mkmn:0,mkmn:1,mds",
        "metric": "waiting_probability",
        "batches": "400000", "reps": "3", "seed": "1000",
    },
    # degraded reads: reconstruction vs repair on the surviving 5 nodes
    "fig10": {
        "kind": "degraded-reads",
        "n": "6", "k": "2", "d": "3", "mu": "1.0",
        "lambda": "0.25,0.5,0.75,1.0,1.25,1.5,1.75,2.0",
        "batches": "400000", "reps": "3", "seed": "1000",
    },
}
