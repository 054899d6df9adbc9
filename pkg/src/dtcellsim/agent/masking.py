"""Top-N action masks computed from a user's SINR vector."""

from __future__ import annotations

import numpy as np


def top_n_mask(sinr: np.ndarray, n: int) -> np.ndarray:
    """Boolean mask that is true at the n largest entries, ties to lower index.

    Sorting key (-value, index) makes the tie-break explicit: among equal
    SINRs the lower station index wins a mask slot.
    """
    if n < 1:
        raise ValueError("mask size must be at least 1")
    sinr = np.asarray(sinr)
    n = min(n, len(sinr))
    order = np.lexsort((np.arange(len(sinr)), -sinr))
    mask = np.zeros(len(sinr), dtype=bool)
    mask[order[:n]] = True
    return mask
