"""Two conventional placement policies used as comparators.

Both visit users in index order and draw from a shared per-file pool of
``s_max`` segments, so no file is cached beyond its encoded segments.
"""
from __future__ import annotations

import numpy as np

from .model import Instance


def popular_caching(inst: Instance) -> np.ndarray:
    """Each user fills its cache with whole ``s_rec`` blocks of its most
    requested files, truncated by the remaining cache and the file's pool.

    Files are ranked by descending ``P[f, i]``; equal probabilities keep
    index order.
    """
    x = inst.zero_placement()
    left = inst.s_max.astype(np.int64)
    for i in range(inst.U):
        room = int(inst.C[i])
        for f in np.argsort(-inst.P[:, i], kind="stable"):
            if room == 0:
                break
            k = min(int(inst.s_rec[f]), room, int(left[f]))
            x[f, i] = k
            room -= k
            left[f] -= k
    return x


def random_caching(inst: Instance, seed=None) -> np.ndarray:
    """Each user adds one segment at a time of a file drawn with probability
    proportional to ``P[f, i]``, among files it may still take.

    A file may be taken while its pool is not empty and the user holds fewer
    than ``s_rec[f]`` of it.  A user stops when its cache is full or no file
    with positive probability remains.
    """
    rng = np.random.default_rng(seed)
    x = inst.zero_placement()
    left = inst.s_max.astype(np.int64)
    for i in range(inst.U):
        for _ in range(int(inst.C[i])):
            ok = (left > 0) & (x[:, i] < inst.s_rec)
            w = np.where(ok, inst.P[:, i], 0.0)
            tot = w.sum()
            if tot <= 0:
                break
            f = rng.choice(inst.F, p=w / tot)
            x[f, i] += 1
            left[f] -= 1
    return x
