"""Counter-based random number generation for the simulation kernel.

Variates are a pure function of (seed, stream, counter), so results are
bit-identical across the compiled and interpreted backends and across any
replay of the same run.  Stream assignment is fixed by convention:
stream s < n feeds server s's service times (consumed in that server's
assignment order) and stream n feeds the interarrival times.  Two runs
differing only in seed are independent; two runs sharing a seed share
every variate, which is what enables common-random-number pairing of
policies.

The generator is the splitmix64 finalizer applied to a per-stream affine
counter sequence; it passes standard statistical test batteries and is
trivially parallelizable.
"""
from __future__ import annotations

import numpy as np

from .backend import jit

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_S30 = U64(30)
_S27 = U64(27)
_S31 = U64(31)
_S11 = U64(11)
_ONE = U64(1)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@jit
def _mix(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@jit
def stream_seed(seed, stream):
    """Starting point of one stream; streams of one seed never overlap in
    practice because each is a distinct splitmix64 trajectory."""
    return _mix(U64(seed) + (U64(stream) + _ONE) * _GAMMA)


@jit
def uniform01(sseed, counter):
    """counter-th uniform in [0, 1) of the stream with seed sseed."""
    bits = _mix(sseed + (U64(counter) + _ONE) * _GAMMA)
    return np.float64(bits >> _S11) * _INV53


@jit
def exponential(sseed, counter, rate):
    """counter-th exponential variate of the stream; rate > 0."""
    u = uniform01(sseed, counter)
    return -np.log1p(-u) / rate
