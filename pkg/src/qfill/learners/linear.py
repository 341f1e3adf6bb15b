"""Logistic regression trained by deterministic accelerated gradient descent.

Objective: mean logistic loss + ||w||^2 / (2*C*n), intercept unpenalised.
The step size is 1/L with L from a power-iteration bound on the data Gram
matrix, and iterations stop when the full gradient norm falls below `tol`.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float) -> float:
    n = X.shape[0]
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return loss + float(w @ w) / (2.0 * C * n)


def logistic_gradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, C: float
) -> tuple[np.ndarray, float]:
    n = X.shape[0]
    r = _sigmoid(X @ w + b) - y
    gw = X.T @ r / n + w / (C * n)
    gb = float(r.mean())
    return gw, gb


def _lipschitz_bound(X: np.ndarray, C: float) -> float:
    """Largest eigenvalue of [X 1]^T [X 1] / (4n) via power iteration."""
    n, p = X.shape
    v = np.ones(p + 1)
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(30):
        xv = X @ v[:p] + v[p]
        av = np.concatenate((X.T @ xv, [xv.sum()]))
        lam = float(np.linalg.norm(av))
        if lam == 0.0:
            return 1.0 / (C * n)
        v = av / lam
    return 0.25 * lam / n + 1.0 / (C * n)


class LogisticModel:
    def __init__(self, w: np.ndarray, b: float) -> None:
        self.w = w
        self.b = b

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(X @ self.w + self.b)

    def to_dict(self) -> dict:
        return {"w": [float(v) for v in self.w], "b": float(self.b)}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(w=np.array(d["w"], dtype=np.float64), b=float(d["b"]))


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    max_iter: int = 10000,
    tol: float = 1e-6,
) -> LogisticModel:
    n, p = X.shape
    step = 1.0 / _lipschitz_bound(X, C)
    w = np.zeros(p)
    b = 0.0
    wv, bv = w, b  # Nesterov lookahead point
    t = 1.0
    for _ in range(max_iter):
        gw, gb = logistic_gradient(wv, bv, X, y, C)
        w_new = wv - step * gw
        b_new = bv - step * gb
        t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        beta = (t - 1.0) / t_new
        wv = w_new + beta * (w_new - w)
        bv = b_new + beta * (b_new - b)
        w, b, t = w_new, b_new, t_new
        gw, gb = logistic_gradient(w, b, X, y, C)
        if np.sqrt(float(gw @ gw) + gb * gb) <= tol:
            break
    return LogisticModel(w=w, b=float(b))
