"""Named deterministic random streams.

Every stochastic consumer (path jitter, each installed payload) draws from
its own stream, derived from the scenario seed and a stable name. Adding
or removing one consumer therefore never perturbs the numbers any other
consumer sees, which keeps paired-run comparisons meaningful.
"""

from __future__ import annotations

import hashlib
import random


def stream(seed: int, name: str) -> random.Random:
    """A generator seeded from (seed, name); stable across processes."""
    digest = hashlib.sha256(f"{seed}/{name}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))
