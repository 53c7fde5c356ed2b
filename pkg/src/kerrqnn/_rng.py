"""Deterministic RNG substreams derived from a single top-level seed.

Every random draw in the package is addressed by (seed, *labels) so that
results are reproducible regardless of evaluation order or parallelism.
"""

import hashlib

import numpy as np


def substream(seed: int, *labels) -> np.random.Generator:
    """Return a Generator for the named substream of ``seed``.

    Labels may be strings or integers; the same (seed, labels) tuple always
    yields the same stream, independent of platform and call order.
    """
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    digest = np.frombuffer(h.digest(), dtype=np.uint32)
    return np.random.default_rng(np.random.SeedSequence(entropy=digest.tolist()))
