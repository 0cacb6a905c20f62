"""Regression trees grown level by level with exact greedy split search.

Each feature column is argsorted once per training run. At every level the
per-feature orderings are regrouped by node with a stable sort, so one
cumulative sum per feature yields the left-child gradient and hessian sums
of every candidate split of every open node at once.
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .loss import split_gain

LEAF = -1
# Features evaluated together per block; bounds the (block, n_samples) scratch arrays.
FEATURE_BLOCK = 64


@dataclass(frozen=True)
class RegressionTree:
    """Flattened tree; node 0 is the root and ``feature == -1`` marks a leaf.

    Samples with ``x[feature] < threshold`` go left. ``value`` holds the
    learning-rate-scaled leaf weight; ``gain`` and ``cover`` (hessian sum)
    describe each split.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    cover: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def split_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.feature != LEAF)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while len(active):
            current = node[active]
            go_left = X[active, self.feature[current]] < self.threshold[current]
            node[active] = np.where(go_left, self.left[current], self.right[current])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> Dict[str, list]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
            "cover": self.cover.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, list]) -> "RegressionTree":
        return cls(
            feature=np.asarray(data["feature"], dtype=np.int64),
            threshold=np.asarray(data["threshold"], dtype=np.float64),
            left=np.asarray(data["left"], dtype=np.int64),
            right=np.asarray(data["right"], dtype=np.int64),
            value=np.asarray(data["value"], dtype=np.float64),
            gain=np.asarray(data["gain"], dtype=np.float64),
            cover=np.asarray(data["cover"], dtype=np.float64),
        )


def _midpoint(lo: float, hi: float) -> float:
    mid = lo * 0.5 + hi * 0.5
    # Adjacent floats can round the midpoint down onto ``lo``.
    return mid if lo < mid <= hi else hi


class TreeBuilder:
    """Grows one tree per call to :meth:`build` on fixed training data."""

    def __init__(
        self,
        X: np.ndarray,
        max_depth: int,
        learning_rate: float,
        l2_lambda: float,
        gain_gamma: float,
        min_child_weight: float,
    ):
        self.X = X
        self.Xt = np.ascontiguousarray(X.T)
        self.sorted_idx = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.l2_lambda = l2_lambda
        self.gain_gamma = gain_gamma
        self.min_child_weight = min_child_weight

    def _best_splits(
        self, node_of: np.ndarray, g: np.ndarray, h: np.ndarray, open_nodes: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Best (gain, feature, threshold) per node; gain 0 and feature -1 if none."""
        n_nodes = len(open_nodes)
        n = len(node_of)
        G = np.bincount(node_of, weights=g, minlength=n_nodes)
        H = np.bincount(node_of, weights=h, minlength=n_nodes)
        best_gain = np.zeros(n_nodes)
        best_feature = np.full(n_nodes, LEAF, dtype=np.int64)
        best_threshold = np.zeros(n_nodes)

        key_dtype = np.int16 if n_nodes < np.iinfo(np.int16).max else np.int64
        positions = np.arange(n)
        for start in range(0, self.Xt.shape[0], FEATURE_BLOCK):
            features = np.arange(start, min(start + FEATURE_BLOCK, self.Xt.shape[0]))
            order = self.sorted_idx[features]
            nodes = node_of[order]
            regroup = np.argsort(nodes.astype(key_dtype), axis=1, kind="stable")
            samples = np.take_along_axis(order, regroup, axis=1)
            nd = np.take_along_axis(nodes, regroup, axis=1)
            xs = np.take_along_axis(self.Xt[features], samples, axis=1)
            gs = g[samples]
            hs = h[samples]

            cg = np.cumsum(gs, axis=1)
            ch = np.cumsum(hs, axis=1)
            group_start = np.ones(nd.shape, dtype=bool)
            group_start[:, 1:] = nd[:, 1:] != nd[:, :-1]
            first = np.maximum.accumulate(np.where(group_start, positions, 0), axis=1)
            gl = cg - np.take_along_axis(cg - gs, first, axis=1)
            hl = ch - np.take_along_axis(ch - hs, first, axis=1)
            gr = G[nd] - gl
            hr = H[nd] - hl

            valid = np.zeros(nd.shape, dtype=bool)
            valid[:, :-1] = ~group_start[:, 1:] & (xs[:, 1:] > xs[:, :-1])
            valid &= open_nodes[nd] & (hl >= self.min_child_weight) & (hr >= self.min_child_weight)
            fi, pi = np.nonzero(valid)
            if len(fi) == 0:
                continue

            gains = split_gain(gl[fi, pi], hl[fi, pi], gr[fi, pi], hr[fi, pi], self.l2_lambda, self.gain_gamma)
            cand_nodes = nd[fi, pi]
            # per node: highest gain, then lowest feature, then lowest threshold
            ranked = np.lexsort((pi, fi, -gains, cand_nodes))
            ranked_nodes = cand_nodes[ranked]
            heads = ranked[np.r_[True, ranked_nodes[1:] != ranked_nodes[:-1]]]
            for k in heads:
                node = cand_nodes[k]
                if gains[k] > best_gain[node]:
                    f, p = fi[k], pi[k]
                    best_gain[node] = gains[k]
                    best_feature[node] = features[f]
                    best_threshold[node] = _midpoint(xs[f, p], xs[f, p + 1])
        return best_gain, best_feature, best_threshold

    def build(self, g: np.ndarray, h: np.ndarray) -> Tuple[RegressionTree, np.ndarray]:
        """Fit a tree to gradients ``g`` and hessians ``h``.

        Returns the tree and the leaf index of every training sample.
        """
        n = len(g)
        node_of = np.zeros(n, dtype=np.int64)
        feature: List[int] = [LEAF]
        threshold: List[float] = [0.0]
        left: List[int] = [LEAF]
        right: List[int] = [LEAF]
        gain: List[float] = [0.0]
        frontier = [0]

        for _ in range(self.max_depth):
            if not frontier:
                break
            open_nodes = np.zeros(len(feature), dtype=bool)
            open_nodes[frontier] = True
            best_gain, best_feature, best_threshold = self._best_splits(node_of, g, h, open_nodes)

            split = [u for u in frontier if best_feature[u] != LEAF]
            if not split:
                break
            child_left = np.full(len(feature), LEAF, dtype=np.int64)
            for u in split:
                child_left[u] = len(feature)
                feature[u] = int(best_feature[u])
                threshold[u] = float(best_threshold[u])
                gain[u] = float(best_gain[u])
                left[u], right[u] = len(feature), len(feature) + 1
                for _child in range(2):
                    feature.append(LEAF)
                    threshold.append(0.0)
                    left.append(LEAF)
                    right.append(LEAF)
                    gain.append(0.0)

            moving = np.flatnonzero(child_left[node_of] != LEAF)
            parent = node_of[moving]
            go_left = self.X[moving, best_feature[parent]] < best_threshold[parent]
            node_of[moving] = np.where(go_left, child_left[parent], child_left[parent] + 1)
            frontier = [c for u in split for c in (left[u], right[u])]

        n_nodes = len(feature)
        G = np.bincount(node_of, weights=g, minlength=n_nodes)
        H = np.bincount(node_of, weights=h, minlength=n_nodes)
        feature_arr = np.asarray(feature, dtype=np.int64)
        left_arr = np.asarray(left, dtype=np.int64)
        right_arr = np.asarray(right, dtype=np.int64)
        # children are always appended after their parent, so a reverse pass fills subtree sums
        for u in range(n_nodes - 1, -1, -1):
            if feature_arr[u] != LEAF:
                G[u] = G[left_arr[u]] + G[right_arr[u]]
                H[u] = H[left_arr[u]] + H[right_arr[u]]

        denom = H + self.l2_lambda
        safe = np.where(denom > 0, denom, 1.0)
        weights = np.where(denom > 0, -G / safe, 0.0) * self.learning_rate
        value = np.where(feature_arr == LEAF, weights, 0.0)
        tree = RegressionTree(
            feature=feature_arr,
            threshold=np.asarray(threshold, dtype=np.float64),
            left=left_arr,
            right=right_arr,
            value=value,
            gain=np.asarray(gain, dtype=np.float64),
            cover=H,
        )
        return tree, node_of
