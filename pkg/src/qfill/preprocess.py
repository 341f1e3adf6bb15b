"""Feature scaling and the bounded angle encoding feeding the circuit.

x_tilde = (x - mu) / w with per-feature sample statistics, then
angle = 2*pi*tanh(x_tilde / 3), which keeps every coupling strictly inside
(-2*pi, +2*pi) regardless of input magnitude.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
# Largest double strictly below 2*pi: tanh saturates to exactly 1.0 for
# |z| >~ 19 in float64, and the encoding contract is an open interval.
_TWO_PI_OPEN = np.nextafter(TWO_PI, 0.0)


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Scaler:
    """Per-feature centering/width parameters plus degenerate-width flags.

    Widths are sample standard deviations (n-1 denominator).  A zero-width
    feature is flagged and its width replaced by 1 so the transform stays
    defined.
    """

    mu: np.ndarray
    w: np.ndarray
    degenerate_features: tuple[int, ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                "mu": [repr(float(v)) for v in self.mu],
                "w": [repr(float(v)) for v in self.w],
                "degenerate_features": list(self.degenerate_features),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Scaler":
        d = json.loads(text)
        return cls(
            mu=np.array([float(v) for v in d["mu"]], dtype=np.float64),
            w=np.array([float(v) for v in d["w"]], dtype=np.float64),
            degenerate_features=tuple(int(i) for i in d["degenerate_features"]),
        )


def fit_scaler(features: np.ndarray) -> Scaler:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise DimensionMismatch("fit_scaler expects a non-empty (n, p) array")
    mu = features.mean(axis=0)
    if features.shape[0] > 1:
        w = features.std(axis=0, ddof=1)
    else:
        w = np.zeros(features.shape[1])
    degenerate = tuple(int(i) for i in np.nonzero(w == 0.0)[0])
    if degenerate:
        w = w.copy()
        w[list(degenerate)] = 1.0
    return Scaler(mu=mu, w=w, degenerate_features=degenerate)


def standardize(features: np.ndarray, scaler: Scaler) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != scaler.mu.shape[0]:
        raise DimensionMismatch(
            f"feature width {features.shape[-1]} != scaler width {scaler.mu.shape[0]}"
        )
    return (features - scaler.mu) / scaler.w


def encode_angles(features: np.ndarray, scaler: Scaler) -> np.ndarray:
    """Map raw features to coupling angles in the open interval (-2pi, 2pi)."""
    z = standardize(features, scaler)
    angles = TWO_PI * np.tanh(z / 3.0)
    # tanh can return exactly +/-1.0 in float64; pull those onto the open
    # interval so the strict bound holds for any finite input.
    return np.clip(angles, -_TWO_PI_OPEN, _TWO_PI_OPEN)
