"""Seeded random streams.

All randomness flows through numpy's ``Generator`` on the PCG64
(XSL-RR 128/64) bit generator. A 64-bit seed ``s`` maps to the raw PCG64
state without numpy's ``SeedSequence``, so the mapping is easy to
reproduce elsewhere (``g = 0x9E3779B97F4A7C15``, arithmetic mod 2**64)::

    state = splitmix64(s + 1*g) << 64 | splitmix64(s + 2*g)
    inc   = (splitmix64(s + 3*g) << 64 | splitmix64(s + 4*g)) | 1

Per-trial seeds come from :func:`derive_trial_seed`, so trial ``i`` of a
run always sees the same stream no matter how trials are scheduled.
"""
import os

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x):
    """SplitMix64 output function (a bijection on 64-bit integers)."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_trial_seed(master_seed, trial_index):
    """64-bit seed for trial ``trial_index`` of a run seeded with ``master_seed``.

    ``splitmix64((master_seed + (trial_index + 1) * 0x9E3779B97F4A7C15) mod 2**64)``.
    The gamma is odd, so the map is injective in ``trial_index`` for any
    ``trial_index < 2**64``.
    """
    return splitmix64((master_seed + (trial_index + 1) * GOLDEN_GAMMA) & MASK64)


def pcg64_state(seed):
    """Raw PCG64 state dictionary for a 64-bit seed."""
    s = int(seed) & MASK64
    w = [splitmix64((s + i * GOLDEN_GAMMA) & MASK64) for i in (1, 2, 3, 4)]
    return {
        "bit_generator": "PCG64",
        "state": {"state": (w[0] << 64) | w[1], "inc": (w[2] << 64) | w[3] | 1},
        "has_uint32": 0,
        "uinteger": 0,
    }


def make_rng(seed):
    """PCG64-backed generator for ``seed``; passes generators through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = default_seed()
    bitgen = np.random.PCG64(0)
    bitgen.state = pcg64_state(seed)
    return np.random.Generator(bitgen)


class StreamPool:
    """Reusable generators, reseeded in place for each trial.

    ``pool.get(i, seed)`` yields the same stream as ``make_rng(seed)``
    without allocating a new bit generator. Single-owner.
    """

    def __init__(self, size=4):
        self._gens = [make_rng(0) for _ in range(size)]

    def get(self, slot, seed):
        while slot >= len(self._gens):
            self._gens.append(make_rng(0))
        gen = self._gens[slot]
        gen.bit_generator.state = pcg64_state(seed)
        return gen


def default_seed():
    """Seed from ``NCF_SEED`` if set, else 0."""
    return int(os.environ.get("NCF_SEED", "0"))
