"""Random-forest regression from counter rates to dynamic power.

Trees are grown with variance-reduction (summed-squared-error) splits. Each
tree draws bootstrap rows and per-node feature subsets from its own stream
seeded by (rng_seed, tree index), so growing trees in parallel or in any
order cannot change the result. Split gain ties break to the lowest feature
index; a node whose targets are exactly constant, or where no tried feature
admits a positive-gain split, becomes a leaf.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .core import Vector
from .errors import EmptyDatasetError
from .util import rng_for, thread_map


@dataclass(frozen=True)
class ForestConfig:
    ntree: int = 16
    max_depth: int | None = None
    min_samples_leaf: int = 5
    mtry: int | None = None  # default: max(n_features // 3, 1)
    bootstrap: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.ntree < 1:
            raise ValueError("ntree must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 when set")

    def resolved_mtry(self, n_features: int) -> int:
        if self.mtry is not None:
            if not (1 <= self.mtry <= n_features):
                raise ValueError(f"mtry must be in [1, {n_features}]")
            return self.mtry
        return max(n_features // 3, 1)


@dataclass
class _Tree:
    """Flat node arrays: feature < 0 marks a leaf predicting ``value``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(x.shape[0], dtype=np.float64)
        node = np.zeros(x.shape[0], dtype=np.intp)
        active = np.arange(x.shape[0], dtype=np.intp)
        while active.size:
            nd = node[active]
            leaf = self.feature[nd] < 0
            done = active[leaf]
            out[done] = self.value[nd[leaf]]
            active = active[~leaf]
            if not active.size:
                break
            nd = node[active]
            go_left = x[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
        return out


@dataclass
class RegressionForest:
    trees: list[_Tree]
    impurity_decrease: np.ndarray  # per-feature SSE decrease summed over trees
    n_features: int
    config: ForestConfig

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(np.atleast_2d(x), dtype=np.float64)
        acc = np.zeros(x.shape[0], dtype=np.float64)
        for tree in self.trees:
            acc += tree.predict(x)
        return acc / len(self.trees)


class _Builder:
    def __init__(self, x, y, cfg, rng, mtry):
        self.x = x
        self.y = y
        self.cfg = cfg
        self.rng = rng
        self.mtry = mtry
        self.n_features = x.shape[1]
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.importance = np.zeros(self.n_features, dtype=np.float64)

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def _tried_features(self) -> np.ndarray:
        if self.mtry >= self.n_features:
            return np.arange(self.n_features, dtype=np.intp)
        feats = self.rng.choice(self.n_features, size=self.mtry, replace=False)
        feats.sort()
        return feats.astype(np.intp)

    def build(self, indices: np.ndarray) -> _Tree:
        root = self._new_node()
        stack = [(root, indices, 0)]
        min_leaf = self.cfg.min_samples_leaf
        max_depth = self.cfg.max_depth
        while stack:
            node, idx, depth = stack.pop()
            y_node = self.y[idx]
            self.value[node] = float(y_node.mean())
            if (
                idx.size < 2 * min_leaf
                or (max_depth is not None and depth >= max_depth)
                or y_node.min() == y_node.max()
            ):
                continue
            best_gain = -np.inf
            best_feat = -1
            best_thr = np.nan
            for feat in self._tried_features():
                col = self.x[idx, feat]
                order = np.argsort(col, kind="stable")
                gain, thr, _ = _kernels.scan_split(
                    np.ascontiguousarray(col[order]),
                    np.ascontiguousarray(y_node[order]),
                    min_leaf,
                )
                if gain > best_gain:
                    best_gain = gain
                    best_feat = int(feat)
                    best_thr = thr
            if best_feat < 0 or best_gain <= 0.0:
                continue
            self.importance[best_feat] += best_gain
            go_left = self.x[idx, best_feat] <= best_thr
            self.feature[node] = best_feat
            self.threshold[node] = best_thr
            left = self._new_node()
            right = self._new_node()
            self.left[node] = left
            self.right[node] = right
            # push right first so the left child is processed (and draws
            # feature subsets) first: deterministic preorder
            stack.append((right, idx[~go_left], depth + 1))
            stack.append((left, idx[go_left], depth + 1))
        return _Tree(
            feature=np.array(self.feature, dtype=np.intp),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.intp),
            right=np.array(self.right, dtype=np.intp),
            value=np.array(self.value, dtype=np.float64),
        )


def fit_forest_xy(x: np.ndarray, y: np.ndarray, cfg: ForestConfig) -> RegressionForest:
    """Fit on a plain (n_samples, n_features) matrix and target vector."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise EmptyDatasetError("cannot fit a forest on an empty dataset")
    n_samples, n_features = x.shape
    mtry = cfg.resolved_mtry(n_features)

    def grow(tree_index: int) -> tuple[_Tree, np.ndarray]:
        rng = rng_for(cfg.rng_seed, tree_index)
        if cfg.bootstrap:
            rows = rng.integers(0, n_samples, size=n_samples)
        else:
            rows = np.arange(n_samples, dtype=np.intp)
        builder = _Builder(x, y, cfg, rng, mtry)
        tree = builder.build(np.asarray(rows, dtype=np.intp))
        return tree, builder.importance

    grown = thread_map(grow, list(range(cfg.ntree)))
    impurity = np.zeros(n_features, dtype=np.float64)
    trees = []
    for tree, imp in grown:
        trees.append(tree)
        impurity += imp
    return RegressionForest(
        trees=trees, impurity_decrease=impurity, n_features=n_features, config=cfg
    )


def fit_forest(vectors: Sequence[Vector], cfg: ForestConfig) -> RegressionForest:
    """Fit counter rates -> dynamic power on a sequence of vectors."""
    if not vectors:
        raise EmptyDatasetError("cannot fit a forest on an empty dataset")
    x = np.stack([v.counters for v in vectors])
    y = np.array([v.p_dynamic for v in vectors], dtype=np.float64)
    return fit_forest_xy(x, y, cfg)


def importance(forest: RegressionForest) -> np.ndarray:
    """Per-feature impurity-decrease importance, normalized to sum to 1.

    All-zero when no tree ever split (e.g. constant targets).
    """
    total = forest.impurity_decrease.sum()
    if total <= 0:
        return np.zeros(forest.n_features, dtype=np.float64)
    return forest.impurity_decrease / total
