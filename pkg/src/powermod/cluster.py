"""Greedy first-fit clustering of normalized vectors into vector groups.

Vectors are scanned in input order; each joins the first existing group whose
members are all ratio-band similar to it, otherwise it founds a new group.
The membership test is evaluated against per-group coordinate minima/maxima,
which is exact for the band predicate on non-negative data: the binding
member for the lower ratio bound is the coordinate maximum and for the upper
bound the minimum, and correctly-rounded division is monotone, so the
extremes decide exactly as a full member scan would.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .core import NormalizedVector, SimilarityBounds
from .errors import EmptyDatasetError


@dataclass
class VectorGroup:
    """A cluster of mutually similar vectors, in insertion order."""

    group_id: int
    members: list[tuple[str, int]]
    indices: list[int]


def _rows(vectors: Sequence[NormalizedVector], include_power: bool) -> np.ndarray:
    mat = np.stack([v.counters for v in vectors]).astype(np.float64)
    if include_power:
        power = np.array([[v.p_dynamic] for v in vectors], dtype=np.float64)
        mat = np.hstack([power, mat])
    return np.ascontiguousarray(mat)


def cluster_vectors(
    vectors: Sequence[NormalizedVector],
    bounds: SimilarityBounds,
    include_power: bool = True,
) -> list[VectorGroup]:
    """Partition vectors into groups of pairwise-similar members.

    Deterministic for a given input order; ties between candidate groups go
    to the earliest-created one.
    """
    if not vectors:
        raise EmptyDatasetError("cannot cluster an empty vector sequence")
    rows = _rows(vectors, include_power)
    n, d = rows.shape
    gmin = np.empty((n, d), dtype=np.float64)
    gmax = np.empty((n, d), dtype=np.float64)
    groups: list[VectorGroup] = []
    a_v = bounds.a_v
    for idx in range(n):
        row = rows[idx]
        g = _kernels.first_accepting_group(gmin, gmax, len(groups), row, a_v)
        if g < 0:
            g = len(groups)
            groups.append(VectorGroup(group_id=g, members=[], indices=[]))
            gmin[g] = row
            gmax[g] = row
        else:
            np.minimum(gmin[g], row, out=gmin[g])
            np.maximum(gmax[g], row, out=gmax[g])
        groups[g].members.append(vectors[idx].ref)
        groups[g].indices.append(idx)
    return groups


def cluster_counters_only(
    vectors: Sequence[NormalizedVector], bounds: SimilarityBounds
) -> list[VectorGroup]:
    """Clustering that ignores power, for spotting power-only anomalies."""
    return cluster_vectors(vectors, bounds, include_power=False)
