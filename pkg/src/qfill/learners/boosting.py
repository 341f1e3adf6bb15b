"""Gradient-boosted trees for binary logistic loss.

Stagewise fit: start from the prior log-odds, fit a depth-limited regression
tree to the residual y - sigmoid(F), replace each leaf with its Newton step
sum(r) / sum(p*(1-p)), and add the tree scaled by the learning rate.
"""

from __future__ import annotations

import numpy as np

from .linear import _sigmoid
from .tree import Tree, build_tree


class BoostedTreesModel:
    def __init__(self, f0: float, learning_rate: float, trees: list[Tree]) -> None:
        self.f0 = f0
        self.learning_rate = learning_rate
        self.trees = trees

    def decision(self, X: np.ndarray) -> np.ndarray:
        f = np.full(X.shape[0], self.f0)
        for tree in self.trees:
            f += self.learning_rate * tree.predict_value(X)
        return f

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision(X))

    def to_dict(self) -> dict:
        return {
            "f0": float(self.f0),
            "learning_rate": float(self.learning_rate),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedTreesModel":
        return cls(
            f0=float(d["f0"]),
            learning_rate=float(d["learning_rate"]),
            trees=[Tree.from_dict(t) for t in d["trees"]],
        )


def fit_gbt(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int = 3,
    n_estimators: int = 100,
    learning_rate: float = 0.1,
) -> BoostedTreesModel:
    n = X.shape[0]
    pbar = float(np.clip(y.mean(), 1e-12, 1.0 - 1e-12))
    f0 = float(np.log(pbar / (1.0 - pbar)))
    f = np.full(n, f0)
    trees: list[Tree] = []
    for _ in range(n_estimators):
        prob = _sigmoid(f)
        resid = y - prob
        tree = build_tree(X, resid, task="reg", max_depth=max_depth)
        leaves = tree.apply(X)
        hess = prob * (1.0 - prob)
        for leaf in np.unique(leaves):
            sel = leaves == leaf
            denom = float(hess[sel].sum())
            tree.value[leaf] = float(resid[sel].sum()) / max(denom, 1e-12)
        f = f + learning_rate * tree.value[leaves]
        trees.append(tree)
    return BoostedTreesModel(f0=f0, learning_rate=learning_rate, trees=trees)
