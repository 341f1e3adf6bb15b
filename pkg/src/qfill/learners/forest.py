"""Random forest: bootstrap-bagged classification trees with sqrt(p) feature
subsampling per split; the score is the mean of leaf class-1 frequencies."""

from __future__ import annotations

import numpy as np

from .tree import Tree, build_tree


class ForestModel:
    def __init__(self, trees: list[Tree]) -> None:
        self.trees = trees

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict_value(X)
        return acc / len(self.trees)

    def to_dict(self) -> dict:
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(trees=[Tree.from_dict(t) for t in d["trees"]])


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    criterion: str = "gini",
    n_estimators: int = 100,
    max_depth: int | None = None,
    seed: int = 0,
) -> ForestModel:
    if criterion not in ("gini", "entropy"):
        raise ValueError(f"unknown split criterion {criterion!r}")
    n, p = X.shape
    subset = max(1, int(np.sqrt(p)))
    trees: list[Tree] = []
    for t in range(n_estimators):
        rng = np.random.default_rng([seed, t])
        idx = rng.integers(0, n, n)
        trees.append(
            build_tree(
                X[idx],
                y[idx],
                task="clf",
                criterion=criterion,
                max_depth=max_depth,
                feature_rng=rng,
                n_feature_subset=subset,
            )
        )
    return ForestModel(trees=trees)
