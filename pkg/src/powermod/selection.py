"""Automated counter selection by partition-averaged forest importance.

The dataset is split into M subsets, one forest is fitted per subset, and
the per-subset importances are averaged; the counters with the largest
averages win. Partitioning over subsets keeps the ranking from latching onto
any single stretch of the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .errors import EmptyDatasetError
from .forest import ForestConfig, fit_forest_xy, importance
from .util import as_float_list, rng_for

DEFAULT_N_SELECT = 6  # simultaneous-counter limit of the profiling interface


@dataclass
class ImportanceReport:
    """Per-subset importance matrix plus the averaged ranking."""

    counter_names: tuple[str, ...]
    matrix: np.ndarray  # (M, n) importances, one row per subset
    averages: np.ndarray  # per-counter mean over subsets
    ranking: list[str]  # all counters, best first
    selected: list[str]  # top n_select in ranking order

    def to_json_dict(self) -> dict:
        return {
            "counters": list(self.counter_names),
            "matrix": [as_float_list(row) for row in self.matrix],
            "averages": as_float_list(self.averages),
            "ranking": list(self.ranking),
            "selected": list(self.selected),
        }


def _partitions(n: int, m: int, seed: int, randomize: bool) -> list[np.ndarray]:
    if randomize:
        perm = rng_for(seed, 901).permutation(n)
    else:
        perm = np.arange(n)
    return [np.sort(part) for part in np.array_split(perm, m)]


def select_counters(
    dataset: Dataset,
    n_select: int = DEFAULT_N_SELECT,
    cfg: ForestConfig | None = None,
    subsets: int = 4,
    random_partitions: bool = False,
) -> tuple[list[str], ImportanceReport]:
    """Rank counters by averaged forest importance and keep the top n_select.

    Subsets default to contiguous equal slices in dataset order, which keeps
    whole runs approximately together; pass ``random_partitions=True`` for a
    seeded shuffle instead. Ties in the final ranking break by schema order.
    """
    cfg = cfg or ForestConfig()
    names = dataset.schema.names
    n = len(names)
    if n_select > n:
        raise ValueError(f"n_select={n_select} exceeds the {n} counters available")
    if subsets < 1:
        raise ValueError("subsets must be >= 1")
    x = dataset.counter_matrix()
    y = dataset.power_array()
    if x.shape[0] < subsets:
        raise EmptyDatasetError(
            f"dataset has {x.shape[0]} vectors, fewer than {subsets} subsets"
        )
    matrix = np.zeros((subsets, n), dtype=np.float64)
    for i, part in enumerate(_partitions(x.shape[0], subsets, cfg.rng_seed, random_partitions)):
        sub_cfg = ForestConfig(
            ntree=cfg.ntree,
            max_depth=cfg.max_depth,
            min_samples_leaf=cfg.min_samples_leaf,
            mtry=cfg.mtry,
            bootstrap=cfg.bootstrap,
            rng_seed=int(rng_for(cfg.rng_seed, 902, i).integers(0, 2**63 - 1)),
        )
        forest = fit_forest_xy(x[part], y[part], sub_cfg)
        matrix[i] = importance(forest)
    averages = matrix.mean(axis=0)
    # stable sort on negated averages: ties keep schema order
    order = np.argsort(-averages, kind="stable")
    ranking = [names[i] for i in order]
    selected = ranking[:n_select]
    report = ImportanceReport(
        counter_names=names,
        matrix=matrix,
        averages=averages,
        ranking=ranking,
        selected=selected,
    )
    return selected, report
