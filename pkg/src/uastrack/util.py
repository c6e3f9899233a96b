"""Small numeric helpers shared across modules."""

from __future__ import annotations

import math


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero (sign-symmetric)."""
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def clamp(x, lo, hi):
    return max(lo, min(hi, x))
