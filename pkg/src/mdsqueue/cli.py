"""Experiment runner.

    mdsq <subcommand> [--config FILE] [--preset NAME] [--out PATH]
                      [--format csv|json] [--seed N]

Subcommands: solve, simulate, throughput, sweep, degraded-reads.
Configs are flat `key = value` text files (lists comma-separated); presets
expand to the same keys.  Output is a single long-format table: one row
per (configuration, metric) with full provenance columns, so reruns with
an identical spec are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .config import Policy, SystemConfig, parse_policy
from .presets import PRESETS

COLUMNS = ["experiment", "policy", "t", "n", "k", "arrival_rate",
           "service_rate", "seed", "reps", "method", "metric", "value",
           "ci_halfwidth", "note"]


class SpecError(ValueError):
    pass


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip().lower()] = value.strip()
    return out


def _floats(s: str) -> list:
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> list:
    return [int(x) for x in s.split(",") if x.strip()]


def _series(s: str) -> list:
    """'reservation:2,mkmn:0,mds' -> [(Policy, t), ...]"""
    out = []
    for item in s.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            name, t = item.split(":", 1)
            out.append((parse_policy(name), int(t)))
        else:
            out.append((parse_policy(item), 0))
    return out


def _row(spec, policy, t, lam, seed, reps, method, metric, value,
         ci=None, note=""):
    return {
        "experiment": spec["kind"],
        "policy": policy.value, "t": t,
        "n": int(spec["n"]), "k": int(spec["k"]),
        "arrival_rate": lam, "service_rate": float(spec.get("mu", "1.0")),
        "seed": seed, "reps": reps, "method": method, "metric": metric,
        "value": value, "ci_halfwidth": "" if ci is None else ci,
        "note": note,
    }


def _sim_metric(cfg: SystemConfig, metric: str, batches: int, reps: int,
                seed: int):
    """(mean across replications, 95% CI halfwidth)."""
    from .simulator import run
    values = []
    for r in range(reps):
        rep = run(cfg, batches, seed + r, keep_latencies=metric == "latency_p99")
        if metric == "mean_latency":
            values.append(rep.mean_latency)
        elif metric == "latency_p99":
            values.append(float(np.quantile(rep.latencies, 0.99)))
        elif metric == "waiting_probability":
            values.append(rep.waiting_probability)
        else:
            raise SpecError(f"unknown simulated metric {metric!r}")
    values = np.asarray(values)
    ci = 1.96 * values.std(ddof=1) / np.sqrt(reps) if reps > 1 else None
    return float(values.mean()), (float(ci) if ci is not None else None)


def _analytic_metric(cfg: SystemConfig, metric: str):
    from .metrics import mean_latency, waiting_probability
    if metric == "mean_latency":
        return mean_latency(cfg).mean
    if metric == "waiting_probability":
        return waiting_probability(cfg)
    raise SpecError(f"metric {metric!r} has no analytic method")


def run_sweep(spec: dict) -> list:
    from .qbd import UnstableChainError
    lams = _floats(spec["lambda"])
    if lams != sorted(lams) or len(set(lams)) != len(lams):
        raise SpecError("lambda grid must be strictly increasing")
    series = _series(spec["series"])
    metric = spec.get("metric", "mean_latency")
    batches = int(spec.get("batches", "200000"))
    reps = int(spec.get("reps", "3"))
    seed = int(spec.get("seed", "1"))
    mu = float(spec.get("mu", "1.0"))
    rows = []
    for policy, t in series:
        for lam in lams:
            cfg = SystemConfig(int(spec["n"]), int(spec["k"]), lam, mu, policy, t)
            if policy == Policy.MDS or metric == "latency_p99":
                if lam >= cfg.capacity:
                    rows.append(_row(spec, policy, t, lam, seed, reps,
                                     "simulated", metric, "", note="unstable"))
                    continue
                value, ci = _sim_metric(cfg, metric, batches, reps, seed)
                rows.append(_row(spec, policy, t, lam, seed, reps,
                                 "simulated", metric, value, ci))
            else:
                try:
                    value = _analytic_metric(cfg, metric)
                except UnstableChainError:
                    rows.append(_row(spec, policy, t, lam, "", "", "analytic",
                                     metric, "", note="unstable"))
                    continue
                rows.append(_row(spec, policy, t, lam, "", "", "analytic",
                                 metric, value))
    return rows


def run_solve(spec: dict) -> list:
    from .metrics import mean_latency, waiting_probability
    from .qbd import UnstableChainError, solve
    policy = parse_policy(spec["policy"])
    t = int(spec.get("t", "0"))
    rows = []
    for lam in _floats(spec["lambda"]):
        cfg = SystemConfig(int(spec["n"]), int(spec["k"]), lam,
                           float(spec.get("mu", "1.0")), policy, t)
        try:
            dist = solve(cfg)
        except UnstableChainError:
            rows.append(_row(spec, policy, t, lam, "", "", "analytic",
                             "mean_latency", "", note="unstable"))
            continue
        lat = mean_latency(cfg, dist)
        rows.append(_row(spec, policy, t, lam, "", "", "analytic",
                         "mean_latency", lat.mean))
        rows.append(_row(spec, policy, t, lam, "", "", "analytic",
                         "waiting_probability", waiting_probability(cfg, dist)))
        rows.append(_row(spec, policy, t, lam, "", "", "analytic",
                         "mean_jobs", dist.mean_jobs()))
    return rows


def run_simulate(spec: dict) -> list:
    policy = parse_policy(spec["policy"])
    t = int(spec.get("t", "0"))
    batches = int(spec.get("batches", "200000"))
    reps = int(spec.get("reps", "3"))
    seed = int(spec.get("seed", "1"))
    rows = []
    for lam in _floats(spec["lambda"]):
        cfg = SystemConfig(int(spec["n"]), int(spec["k"]), lam,
                           float(spec.get("mu", "1.0")), policy, t)
        for metric in ("mean_latency", "waiting_probability", "latency_p99"):
            value, ci = _sim_metric(cfg, metric, batches, reps, seed)
            rows.append(_row(spec, policy, t, lam, seed, reps, "simulated",
                             metric, value, ci))
    return rows


def run_throughput(spec: dict) -> list:
    from .qbd import max_throughput
    from .simulator import measure_saturation_throughput
    policy = parse_policy(spec["policy"])
    mu = float(spec.get("mu", "1.0"))
    rows = []
    for t in _ints(spec.get("t", "0")):
        for n in _ints(spec["n"]):
            cfg = SystemConfig(n, int(spec["k"]), 1.0, mu, policy, t)
            local = dict(spec, n=str(n))
            if policy == Policy.MDS:
                seed = int(spec.get("seed", "1"))
                batches = int(spec.get("batches", "200000"))
                thr = measure_saturation_throughput(cfg, batches, seed)
                rows.append(_row(local, policy, t, "", seed, 1, "simulated",
                                 "max_throughput", thr))
            else:
                rows.append(_row(local, policy, t, "", "", "", "analytic",
                                 "max_throughput", max_throughput(cfg)))
    return rows


def run_throughput_loss(spec: dict) -> list:
    from .metrics import throughput_loss
    mu = float(spec.get("mu", "1.0"))
    rows = []
    for k in _ints(spec["k"]):
        for t in _ints(spec.get("t", "1")):
            for n in _ints(spec["n"]):
                if n < max(k, 2) or n <= k:
                    continue
                cfg = SystemConfig(n, k, 1.0, mu, Policy.RESERVATION, t)
                local = dict(spec, n=str(n), k=str(k))
                rows.append(_row(local, Policy.RESERVATION, t, "", "", "",
                                 "analytic", "throughput_loss",
                                 throughput_loss(cfg)))
    return rows


def run_occupancy(spec: dict) -> list:
    from .metrics import occupancy_ccdf
    from .qbd import solve
    from .simulator import run as sim_run
    lam = float(spec["lambda"])
    mu = float(spec.get("mu", "1.0"))
    max_jobs = int(spec.get("max_jobs", "40"))
    rows = []
    for policy, t in _series(spec["series"]):
        cfg = SystemConfig(int(spec["n"]), int(spec["k"]), lam, mu, policy, t)
        if policy == Policy.MDS:
            seed = int(spec.get("seed", "1"))
            rep = sim_run(cfg, int(spec.get("batches", "200000")), seed)
            ccdf = occupancy_ccdf(rep.occupancy)
            method, seed_val = "simulated", seed
        else:
            ccdf = occupancy_ccdf(solve(cfg).occupancy())
            method, seed_val = "analytic", ""
        for x in range(max_jobs + 1):
            value = float(ccdf[x]) if x < len(ccdf) else 0.0
            rows.append(_row(spec, policy, t, lam, seed_val, "", method,
                             f"ccdf_{x}", max(value, 0.0)))
    return rows


def run_degraded_reads(spec: dict) -> list:
    from .metrics import degraded_read_compare
    n, k, d = int(spec["n"]), int(spec["k"]), int(spec["d"])
    mu = float(spec.get("mu", "1.0"))
    batches = int(spec.get("batches", "200000"))
    seed = int(spec.get("seed", "1"))
    reps = int(spec.get("reps", "1"))
    speedup = float(spec["speedup"]) if "speedup" in spec else None
    rows = []
    for lam in _floats(spec["lambda"]):
        recon, repair = [], []
        for r in range(reps):
            cmp_ = degraded_read_compare(n, k, d, lam, mu, speedup,
                                         n_batches=batches, seed=seed + r)
            recon.append(cmp_.reconstruction_latency)
            repair.append(cmp_.repair_latency)
        for name, vals in (("reconstruction_latency", np.asarray(recon)),
                           ("repair_latency", np.asarray(repair))):
            ci = (1.96 * vals.std(ddof=1) / np.sqrt(reps)) if reps > 1 else None
            rows.append(_row(spec, Policy.MDS, 0, lam, seed, reps, "simulated",
                             name, float(vals.mean()),
                             float(ci) if ci is not None else None,
                             note=f"d={d}"))
    return rows


_RUNNERS = {
    "sweep": run_sweep,
    "solve": run_solve,
    "simulate": run_simulate,
    "throughput": run_throughput,
    "throughput-loss": run_throughput_loss,
    "occupancy": run_occupancy,
    "degraded-reads": run_degraded_reads,
}


def _format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows) -> str:
    lines = [",".join(COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_value(row[c]) for c in COLUMNS))
    return "\n".join(lines) + "\n"


def rows_to_json(rows) -> str:
    return json.dumps(rows, indent=2) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mdsq",
        description="Queueing experiments for erasure-coded storage: "
                    "analytic chains and exact simulation.")
    parser.add_argument("kind", choices=["solve", "simulate", "throughput",
                                         "sweep", "degraded-reads"],
                        help="experiment type (ignored with --preset)")
    parser.add_argument("--config", help="flat key=value experiment file")
    parser.add_argument("--preset", choices=sorted(PRESETS),
                        help="named parameter set reproducing a reference figure")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--seed", type=int, help="override the base seed")
    args = parser.parse_args(argv)

    try:
        if args.preset:
            spec = dict(PRESETS[args.preset])
        elif args.config:
            with open(args.config) as fh:
                spec = parse_config_text(fh.read())
            spec.setdefault("kind", args.kind)
        else:
            raise SpecError("either --config or --preset is required")
        if args.seed is not None:
            spec["seed"] = str(args.seed)
        kind = spec["kind"]
        if kind not in _RUNNERS:
            raise SpecError(f"unknown experiment kind {kind!r}")
        rows = _RUNNERS[kind](spec)
    except (SpecError, KeyError, ValueError) as exc:
        print(f"mdsq: error: {exc}", file=sys.stderr)
        return 2

    text = rows_to_csv(rows) if args.format == "csv" else rows_to_json(rows)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
