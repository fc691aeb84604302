"""Counter-based random streams for reproducible, order-independent sessions.

Every pulse gets its own Philox stream keyed by (session seed, lane,
index), so simulating pulses serially, in any order, or across workers
produces bit-identical results. Lanes separate the independent uses of
randomness inside one session.
"""

from __future__ import annotations

import numpy as np

LANE_PULSE = 0  # per-pulse transmission and measurement draws
LANE_DEFERRED = 1  # Eve's stored-pulse measurements after basis revelation
LANE_SESSION = 2  # session-level draws (error-estimation sampling)

_MAX_INDEX = 1 << 48


def derive_stream(seed: int, lane: int, index: int = 0) -> np.random.Generator:
    """Independent Generator for (seed, lane, index).

    The 128-bit Philox key is seed in the high word and (lane << 48) | index
    in the low word, so distinct indices and lanes can never collide.
    """
    if not 0 <= index < _MAX_INDEX:
        raise ValueError(f"index must be in [0, 2^48) (got {index})")
    if not 0 <= lane < 8:
        raise ValueError(f"lane must be in [0, 8) (got {lane})")
    key = ((seed & 0xFFFFFFFFFFFFFFFF) << 64) | (lane << 48) | index
    return np.random.Generator(np.random.Philox(key=key))
