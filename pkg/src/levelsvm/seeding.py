"""Deterministic seed derivation.

Every random choice in the pipeline draws from a generator created here, so a
single master seed reproduces an entire run.  Child seeds are derived from the
master seed plus a path of string labels via SHA-256, which makes the streams
for unrelated purposes (fold shuffling, clustering, sampling, ...) independent
of each other and of call order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def child_seed(master: int, *labels: object) -> int:
    """Derive a 63-bit child seed from ``master`` and a label path."""
    h = hashlib.sha256()
    h.update(str(int(master)).encode("ascii"))
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little") >> 1


def rng_for(master: int, *labels: object) -> np.random.Generator:
    """A fresh generator seeded by ``child_seed(master, *labels)``."""
    return np.random.default_rng(child_seed(master, *labels))
