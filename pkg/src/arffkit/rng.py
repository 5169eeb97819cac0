"""Random-number streams.

All randomness flows through counter-based Philox generators (64-bit) seeded via
``numpy.random.SeedSequence`` entropy lists, so any stream is reproducible from
(seed, purpose) alone and streams never overlap.

Stream layout
-------------
A training run with seed ``s`` owns four purpose streams, one per consumer:

    batch       minibatch index draws
    proposal    Gaussian random-walk increments
    acceptance  uniform draws for the Metropolis test
    resampling  multinomial index draws

Purposes are keyed by name; the mapping from name to child index is the fixed
``PURPOSES`` tuple below. Experiment drivers derive per-run seeds with
``subseed(master, *context)`` where context is a tuple of small ints (e.g.
frequency count and realization index), so realizations can run in any order,
in any number of workers, with identical results.
"""

from __future__ import annotations

import numpy as np

PURPOSES = ("batch", "proposal", "acceptance", "resampling")


def stream(seed, purpose):
    """Return the Philox generator for one named purpose under ``seed``."""
    try:
        index = PURPOSES.index(purpose)
    except ValueError:
        raise ValueError(f"unknown stream purpose {purpose!r}, expected one of {PURPOSES}")
    ss = np.random.SeedSequence(entropy=[int(seed) & (2**64 - 1), index])
    return np.random.Generator(np.random.Philox(ss))


def streams(seed):
    """All four purpose streams for one run, as a dict keyed by purpose."""
    return {p: stream(seed, p) for p in PURPOSES}


def subseed(master_seed, *context):
    """Derive a 64-bit child seed from a master seed and integer context.

    Mixing goes through SeedSequence so nearby contexts give unrelated seeds.
    """
    entropy = [int(master_seed) & (2**64 - 1)] + [int(c) & (2**64 - 1) for c in context]
    ss = np.random.SeedSequence(entropy=entropy)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator(seed):
    """Plain Philox generator for one-off sampling (datasets, inits)."""
    ss = np.random.SeedSequence(entropy=[int(seed) & (2**64 - 1)])
    return np.random.Generator(np.random.Philox(ss))
