"""Model families (LR, GBT, RF, MLP) built from first principles, rank-sum
AUC, and deterministic grid-search cross-validation.

Every fit is a pure function of (spec, data, seed): fold and cell seeds are
derived from (master_seed, cell_index, fold_index), so identical inputs give
bit-identical model parameters.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from ..preprocess import DimensionMismatch
from .boosting import BoostedTreesModel, fit_gbt
from .forest import ForestModel, fit_forest
from .linear import LogisticModel, fit_logistic, logistic_gradient, logistic_loss
from .metrics import SingleClassEval, auc
from .mlp import ACTIVATIONS, MLPModel, SCHEDULES, dynamic_hidden_sizes, fit_mlp

FAMILIES = ("LR", "GBT", "RF", "MLP")

# Row labels used by report tables.
DISPLAY_NAMES = {"LR": "LR", "GBT": "XGB", "RF": "RF", "MLP": "NN"}


class SingleClassTraining(ValueError):
    pass


class NonFiniteFeature(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")


_MODEL_TYPES = {
    "LR": LogisticModel,
    "GBT": BoostedTreesModel,
    "RF": ForestModel,
    "MLP": MLPModel,
}


@dataclass
class TrainedModel:
    spec: ModelSpec
    model: object
    validation_auc: float | None = None
    n_features: int | None = None

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X)
        if self.n_features is not None and X.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"model was fit on {self.n_features} features, got {X.shape[1]}"
            )
        return np.clip(self.model.predict_proba(X), 0.0, 1.0)

    def to_json(self) -> str:
        payload = {
            "family": self.spec.family,
            "params": {k: self.spec.params[k] for k in sorted(self.spec.params)},
            "seed": self.spec.seed,
            "validation_auc": self.validation_auc,
            "n_features": self.n_features,
            "model": self.model.to_dict(),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        d = json.loads(text)
        params = d["params"]
        if "hidden_layer_sizes" in params and params["hidden_layer_sizes"] is not None:
            params["hidden_layer_sizes"] = tuple(params["hidden_layer_sizes"])
        spec = ModelSpec(family=d["family"], params=params, seed=d["seed"])
        model = _MODEL_TYPES[d["family"]].from_dict(d["model"])
        return cls(
            spec=spec,
            model=model,
            validation_auc=d["validation_auc"],
            n_features=d.get("n_features"),
        )

    def checksum(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _check_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    if not np.isfinite(X).all():
        raise NonFiniteFeature("feature matrix holds non-finite values")
    return X


def _check_training(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = _check_matrix(X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y lengths disagree")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be binary")
    if (y == y[0]).all():
        raise SingleClassTraining("training window holds a single class")
    return X, y


def train(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> TrainedModel:
    X, y = _check_training(X, y)
    p = spec.params
    if spec.family == "LR":
        model = fit_logistic(
            X, y, C=p.get("C", 1.0), max_iter=p.get("max_iter", 10000), tol=p.get("tol", 1e-6)
        )
    elif spec.family == "GBT":
        model = fit_gbt(
            X,
            y,
            max_depth=p.get("max_depth", 3),
            n_estimators=p.get("n_estimators", 100),
            learning_rate=p.get("learning_rate", 0.1),
        )
    elif spec.family == "RF":
        model = fit_forest(
            X,
            y,
            criterion=p.get("criterion", "gini"),
            n_estimators=p.get("n_estimators", 100),
            max_depth=p.get("max_depth"),
            seed=spec.seed,
        )
    else:
        sizes = p.get("hidden_layer_sizes")
        if sizes is not None:
            sizes = tuple(sizes)
        model = fit_mlp(
            X,
            y,
            hidden_layer_sizes=sizes,
            activation=p.get("activation", "relu"),
            learning_rate=p.get("learning_rate", "constant"),
            learning_rate_init=p.get("learning_rate_init", 0.05),
            max_iter=p.get("max_iter", 200),
            batch_size=p.get("batch_size"),
            seed=spec.seed,
        )
    return TrainedModel(spec=spec, model=model, n_features=X.shape[1])


def predict_proba(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    return model.predict_proba(X)


@dataclass(frozen=True)
class CVConfig:
    folds: int = 4
    shuffle_seed: int = 0

    def __post_init__(self) -> None:
        if self.folds < 2:
            raise ValueError("need at least two folds")


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


_REFIT_TAG = 1 << 20


def grid_search_cv(
    family: str,
    grid: Sequence[dict],
    X: np.ndarray,
    y: np.ndarray,
    cv: CVConfig | None = None,
    master_seed: int = 0,
) -> TrainedModel:
    """Exhaustive search scored by mean validation AUC over unstratified
    shuffled folds; ties keep the earliest cell; the winner is refit on the
    full window.  A one-cell grid skips fold evaluation entirely, which is
    outcome-equivalent to train-plus-refit."""
    if not grid:
        raise ValueError("empty grid")
    cv = cv or CVConfig()
    X, y = _check_training(X, y)
    refit_seed = derive_seed(master_seed, _REFIT_TAG, 0)
    if len(grid) == 1:
        spec = ModelSpec(family=family, params=dict(grid[0]), seed=refit_seed)
        return train(spec, X, y)
    rng = np.random.default_rng(cv.shuffle_seed)
    folds = np.array_split(rng.permutation(X.shape[0]), cv.folds)
    best_score = -np.inf
    best_index = 0
    for ci, cell in enumerate(grid):
        scores = []
        for fi, fold in enumerate(folds):
            mask = np.ones(X.shape[0], dtype=bool)
            mask[fold] = False
            ytr, yval = y[mask], y[fold]
            if (ytr == ytr[0]).all() or (yval == yval[0]).all():
                continue  # fold unusable; deterministic for every cell
            spec = ModelSpec(
                family=family, params=dict(cell), seed=derive_seed(master_seed, ci, fi)
            )
            fitted = train(spec, X[mask], ytr)
            scores.append(auc(fitted.predict_proba(X[fold]), yval))
        if scores:
            score = float(np.mean(scores))
            if score > best_score:
                best_score = score
                best_index = ci
    spec = ModelSpec(family=family, params=dict(grid[best_index]), seed=refit_seed)
    fitted = train(spec, X, y)
    fitted.validation_auc = None if best_score == -np.inf else best_score
    return fitted


def grid_from_table(family: str, p: int | None = None) -> list[dict]:
    """The default hyperparameter search grids, in scan order."""
    if family == "LR":
        return [
            {"C": float(10.0**e), "max_iter": 10000}
            for e in np.arange(-4.0, 4.0 + 1e-9, 0.8)
        ]
    if family == "GBT":
        return [
            {"max_depth": d, "n_estimators": m, "learning_rate": lr}
            for d, m, lr in product(
                (3, 5, 7, 9, 11), (80, 100, 120, 140, 160, 180), (0.15, 0.1, 0.05, 0.01)
            )
        ]
    if family == "RF":
        return [
            {"criterion": c, "n_estimators": m}
            for c, m in product(("gini", "entropy"), (80, 100, 120, 140, 160, 180))
        ]
    if family == "MLP":
        if p is None:
            raise ValueError("MLP grid needs the feature dimension p")
        shapes = [dynamic_hidden_sizes(p, depth) for depth in (1, 2, 3, 4)]
        return [
            {
                "hidden_layer_sizes": s,
                "activation": a,
                "learning_rate": sched,
                "max_iter": 10000,
            }
            for s, a, sched in product(shapes, ACTIVATIONS, SCHEDULES)
        ]
    raise ValueError(f"unknown model family {family!r}")
