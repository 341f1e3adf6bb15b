"""Depth-limited binary decision trees, shared by the forest and boosting
learners.

Split search is exact: every midpoint between consecutive distinct values of
a candidate feature is scored by vectorised prefix sums.  Ties are broken by
candidate order (features scanned ascending, earliest best cut kept), which
keeps training deterministic.  Thresholds are value midpoints, so predictions
are invariant under a positive rescaling applied at train and predict time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray  # int, -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for every row (vectorised level walk)."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat != _LEAF
            if not active.any():
                return node
            rows = np.nonzero(active)[0]
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[node[rows]]
            node[rows] = np.where(
                go_left, self.left[node[rows]], self.right[node[rows]]
            )

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": [int(v) for v in self.feature],
            "threshold": [float(v) for v in self.threshold],
            "left": [int(v) for v in self.left],
            "right": [int(v) for v in self.right],
            "value": [float(v) for v in self.value],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.array(d["feature"], dtype=np.int64),
            threshold=np.array(d["threshold"], dtype=np.float64),
            left=np.array(d["left"], dtype=np.int64),
            right=np.array(d["right"], dtype=np.int64),
            value=np.array(d["value"], dtype=np.float64),
        )


def _gini(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    q = pos / n
    return 2.0 * q * (1.0 - q)


def _entropy(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    q = pos / n
    out = np.zeros_like(q)
    for frac in (q, 1.0 - q):
        nz = frac > 0
        out[nz] -= frac[nz] * np.log2(frac[nz])
    return out


def _impurity(pos, n, criterion: str):
    return _gini(pos, n) if criterion == "gini" else _entropy(pos, n)


def _best_split_clf(X, y, idx, feats, criterion):
    yn = y[idx]
    n = idx.shape[0]
    total_pos = float(yn.sum())
    parent = float(_impurity(np.array([total_pos]), np.array([float(n)]), criterion)[0])
    best = None  # (gain, feature, threshold)
    for f in feats:
        v = X[idx, f]
        order = np.argsort(v, kind="mergesort")
        sv = v[order]
        cuts = np.nonzero(sv[1:] > sv[:-1])[0]
        if cuts.size == 0:
            continue
        cpos = np.cumsum(y[idx][order])
        nl = (cuts + 1).astype(np.float64)
        nr = n - nl
        pl = cpos[cuts]
        pr = total_pos - pl
        score = (nl * _impurity(pl, nl, criterion) + nr * _impurity(pr, nr, criterion)) / n
        gains = parent - score
        k = int(np.argmax(gains))
        if gains[k] > 1e-12 and (best is None or gains[k] > best[0]):
            thr = (sv[cuts[k]] + sv[cuts[k] + 1]) / 2.0
            best = (float(gains[k]), int(f), float(thr))
    return best


def _best_split_reg(X, y, idx, feats):
    yn = y[idx]
    n = idx.shape[0]
    tot = float(yn.sum())
    tot2 = float((yn**2).sum())
    parent = tot2 - tot**2 / n
    best = None
    for f in feats:
        v = X[idx, f]
        order = np.argsort(v, kind="mergesort")
        sv = v[order]
        cuts = np.nonzero(sv[1:] > sv[:-1])[0]
        if cuts.size == 0:
            continue
        sy = yn[order]
        cs = np.cumsum(sy)
        cs2 = np.cumsum(sy**2)
        nl = (cuts + 1).astype(np.float64)
        nr = n - nl
        sl = cs[cuts]
        sl2 = cs2[cuts]
        sse = (sl2 - sl**2 / nl) + ((tot2 - sl2) - (tot - sl) ** 2 / nr)
        gains = parent - sse
        k = int(np.argmax(gains))
        if gains[k] > 1e-12 and (best is None or gains[k] > best[0]):
            thr = (sv[cuts[k]] + sv[cuts[k] + 1]) / 2.0
            best = (float(gains[k]), int(f), float(thr))
    return best


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    task: str,
    criterion: str = "gini",
    max_depth: int | None = None,
    min_samples_split: int = 2,
    feature_rng: np.random.Generator | None = None,
    n_feature_subset: int | None = None,
) -> Tree:
    """Grow a tree depth-first (preorder), optionally sampling a feature
    subset per split from `feature_rng`."""
    n, p = X.shape
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def leaf_value(idx: np.ndarray) -> float:
        return float(y[idx].mean())

    def new_node() -> int:
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack: list[tuple[int, np.ndarray, int]] = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        pure = bool((yn == yn[0]).all())
        depth_stop = max_depth is not None and depth >= max_depth
        if pure or depth_stop or idx.shape[0] < min_samples_split:
            value[node] = leaf_value(idx)
            continue
        if n_feature_subset is not None and n_feature_subset < p:
            feats = np.sort(feature_rng.choice(p, n_feature_subset, replace=False))
        else:
            feats = np.arange(p)
        if task == "clf":
            best = _best_split_clf(X, y, idx, feats, criterion)
        else:
            best = _best_split_reg(X, y, idx, feats)
        if best is None:
            value[node] = leaf_value(idx)
            continue
        _, f, thr = best
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = f
        threshold[node] = thr
        lnode, rnode = new_node(), new_node()
        left[node], right[node] = lnode, rnode
        # Push right first so the left branch is processed next (preorder);
        # keeps feature_rng consumption deterministic.
        stack.append((rnode, ri, depth + 1))
        stack.append((lnode, li, depth + 1))
    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
    )
