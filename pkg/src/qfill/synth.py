"""Synthetic bond-RFQ event generator with a known planted signal.

Features follow a mean-reverting latent-factor walk (AR(1) factors, unit-norm
loadings, fresh observation noise) clipped to [-1, 1].  Labels are Bernoulli
draws from a logistic link over k signal features whose coefficient vector
rotates slowly; `signal_half_life` sets the time for the expected coefficient
overlap to halve, so model knowledge decays at a controlled rate.  The
observation-noise scale is calibrated by bisection to the target mean step
change, and the intercept by bisection to the target label rate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import MICROS_PER_DAY, EventDataset, bucket_of_day
from .learners.metrics import SingleClassEval, auc

FLOW_WINDOW_DEFAULT = 8 * 60 * 60 * 1_000_000  # 8h of event flow per 24h block


class CalibrationFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_events: int = 16000
    p: int = 216
    label_rate_target: float = 0.37
    mean_step_change_target: float = 0.05
    signal_feature_count: int = 12
    signal_half_life: float = float(MICROS_PER_DAY)  # microseconds; inf = static
    trading_day: int = FLOW_WINDOW_DEFAULT  # event-flow window per 24h block
    base_seed: int = 0
    events_per_day: int = 250
    n_factors: int = 8
    ar_phi: float = 0.99
    factor_amp: float = 0.35
    signal_strength: float = 6.0

    def __post_init__(self) -> None:
        if self.n_events < 2:
            raise ValueError("need at least two events")
        if not 0 < self.signal_feature_count <= self.p:
            raise ValueError("signal_feature_count must lie in 1..p")
        if not 0.0 < self.label_rate_target < 1.0:
            raise ValueError("label_rate_target must lie in (0, 1)")
        if self.signal_half_life <= 0:
            raise ValueError("signal_half_life must be positive (may be inf)")
        if not 0 < self.trading_day <= MICROS_PER_DAY:
            raise ValueError("trading_day must lie in (0, 24h]")


@dataclass(frozen=True)
class GroundTruth:
    """Everything needed to reconstruct per-event true fill probabilities."""

    signal_indices: np.ndarray  # (k,)
    coefficients: np.ndarray  # (n, k) unit vectors over time
    intercept: float
    signal_strength: float
    true_prob: np.ndarray  # (n,)
    signal_half_life: float

    def score(self, features: np.ndarray, coeff: np.ndarray) -> np.ndarray:
        """Logistic link evaluated with a fixed coefficient vector."""
        z = self.intercept + self.signal_strength * (
            features[:, self.signal_indices] @ coeff
        )
        return 1.0 / (1.0 + np.exp(-z))

    def to_json(self) -> str:
        return json.dumps(
            {
                "signal_indices": [int(i) for i in self.signal_indices],
                "coefficients": [[float(v) for v in row] for row in self.coefficients],
                "intercept": float(self.intercept),
                "signal_strength": float(self.signal_strength),
                "true_prob": [float(v) for v in self.true_prob],
                "signal_half_life": None
                if math.isinf(self.signal_half_life)
                else float(self.signal_half_life),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        d = json.loads(text)
        hl = d["signal_half_life"]
        return cls(
            signal_indices=np.array(d["signal_indices"], dtype=np.int64),
            coefficients=np.array(d["coefficients"], dtype=np.float64),
            intercept=float(d["intercept"]),
            signal_strength=float(d["signal_strength"]),
            true_prob=np.array(d["true_prob"], dtype=np.float64),
            signal_half_life=float("inf") if hl is None else float(hl),
        )


def _timestamps(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    n = config.n_events
    out = np.empty(n, dtype=np.int64)
    start = 0
    day = 0
    while start < n:
        count = min(config.events_per_day, n - start)
        times = rng.integers(0, config.trading_day, count)
        times.sort()
        out[start : start + count] = day * MICROS_PER_DAY + times
        start += count
        day += 1
    return out


def _factor_walk(n: int, f: int, phi: float, rng: np.random.Generator) -> np.ndarray:
    innov = rng.standard_normal((n, f))
    walk = np.empty((n, f))
    walk[0] = innov[0]
    scale = np.sqrt(1.0 - phi * phi)
    for t in range(1, n):
        walk[t] = phi * walk[t - 1] + scale * innov[t]
    return walk


def _coefficient_path(
    timestamps: np.ndarray, k: int, half_life: float, rng: np.random.Generator
) -> np.ndarray:
    n = timestamps.shape[0]
    path = np.empty((n, k))
    beta = rng.standard_normal(k)
    beta /= np.linalg.norm(beta)
    path[0] = beta
    for t in range(1, n):
        if math.isinf(half_life):
            path[t] = beta
            continue
        delta = float(timestamps[t] - timestamps[t - 1])
        rho = 0.5 ** (delta / half_life)
        zeta = rng.standard_normal(k)
        zeta /= np.linalg.norm(zeta)
        beta = rho * beta + math.sqrt(max(0.0, 1.0 - rho * rho)) * zeta
        beta /= np.linalg.norm(beta)
        path[t] = beta
    return path


def _mean_step(features: np.ndarray) -> float:
    return float(np.abs(np.diff(features, axis=0)).mean())


def generate(config: SynthConfig) -> tuple[EventDataset, GroundTruth]:
    """Build the dataset and its ground truth; deterministic in base_seed."""
    rng_time = np.random.default_rng([config.base_seed, 0])
    rng_factor = np.random.default_rng([config.base_seed, 1])
    rng_noise = np.random.default_rng([config.base_seed, 2])
    rng_signal = np.random.default_rng([config.base_seed, 3])
    rng_label = np.random.default_rng([config.base_seed, 4])

    n, p = config.n_events, config.p
    timestamps = _timestamps(config, rng_time)
    event_ids = np.arange(n, dtype=np.int64)

    factors = _factor_walk(n, config.n_factors, config.ar_phi, rng_factor)
    loadings = rng_factor.standard_normal((p, config.n_factors))
    loadings /= np.linalg.norm(loadings, axis=1, keepdims=True)
    factor_part = config.factor_amp * (factors @ loadings.T)
    eps = rng_noise.standard_normal((n, p))

    # Bisection on the observation-noise scale for the step-change target.
    target = config.mean_step_change_target
    lo, hi = 0.0, max(4.0 * target, 1e-3)
    if _mean_step(np.clip(factor_part, -1.0, 1.0)) > 1.2 * target:
        raise CalibrationFailure(
            "factor walk alone exceeds the step-change target; lower factor_amp or raise the target"
        )
    while _mean_step(np.clip(factor_part + hi * eps, -1.0, 1.0)) < target:
        hi *= 2.0
        if hi > 1e3:
            raise CalibrationFailure("step-change target unreachable by noise scaling")
    scale = 0.0
    for _ in range(20):
        mid = (lo + hi) / 2.0
        if _mean_step(np.clip(factor_part + mid * eps, -1.0, 1.0)) < target:
            lo = mid
        else:
            hi = mid
        scale = (lo + hi) / 2.0
    features = np.clip(factor_part + scale * eps, -1.0, 1.0)
    achieved = _mean_step(features)
    if abs(achieved - target) > 0.2 * target:
        raise CalibrationFailure(
            f"calibrated mean step change {achieved:.4g} misses target {target:.4g} by >20%"
        )

    signal_indices = np.sort(rng_signal.choice(p, config.signal_feature_count, replace=False))
    coefficients = _coefficient_path(
        timestamps, config.signal_feature_count, config.signal_half_life, rng_signal
    )
    raw = config.signal_strength * np.einsum(
        "nk,nk->n", features[:, signal_indices], coefficients
    )

    # Bisection on the intercept for the label-rate target.
    lo_c, hi_c = -30.0, 30.0
    c0 = 0.0
    for _ in range(20):
        c0 = (lo_c + hi_c) / 2.0
        rate = float(np.mean(1.0 / (1.0 + np.exp(-(c0 + raw)))))
        if rate < config.label_rate_target:
            lo_c = c0
        else:
            hi_c = c0
    true_prob = 1.0 / (1.0 + np.exp(-(c0 + raw)))
    labels = (rng_label.random(n) < true_prob).astype(np.int8)

    dataset = EventDataset(timestamps, event_ids, features, labels, provenance="synthetic")
    truth = GroundTruth(
        signal_indices=signal_indices,
        coefficients=coefficients,
        intercept=float(c0),
        signal_strength=config.signal_strength,
        true_prob=true_prob,
        signal_half_life=config.signal_half_life,
    )
    return dataset, truth


def plant_report(
    dataset: EventDataset,
    truth: GroundTruth,
    buckets: tuple[int, ...] = (0, 1, 2, 3, 4),
    day_us: int = MICROS_PER_DAY,
) -> dict:
    """Achievable-AUC ceiling per blinding bucket.

    For each trading-day anchor, events in bucket b (b to b+1 days past the
    anchor) are scored by the logistic link frozen at the last coefficient
    vector before the anchor: the best any model trained at the anchor could
    know.  Ceilings are mean AUC over anchors."""
    first_day = bucket_of_day(int(dataset.timestamps[0]), day_us)
    last_day = bucket_of_day(int(dataset.timestamps[-1]), day_us)
    per_bucket: dict[int, list[float]] = {b: [] for b in buckets}
    n_anchors = 0
    for day in range(first_day + 1, last_day + 1):
        t0 = day * day_us
        before = int(np.searchsorted(dataset.timestamps, t0, side="left"))
        if before == 0:
            continue
        coeff = truth.coefficients[before - 1]
        used = False
        for b in buckets:
            lo = int(np.searchsorted(dataset.timestamps, t0 + b * day_us, side="left"))
            hi = int(np.searchsorted(dataset.timestamps, t0 + (b + 1) * day_us, side="left"))
            if hi <= lo:
                continue
            rows = slice(lo, hi)
            labels = dataset.labels[rows]
            mask = labels >= 0
            if mask.sum() < 2:
                continue
            scores = truth.score(dataset.features[rows][mask], coeff)
            try:
                per_bucket[b].append(auc(scores, labels[mask]))
            except SingleClassEval:
                continue
            used = True
        if used:
            n_anchors += 1
    ceilings = {
        str(b): (float(np.mean(v)) if v else None) for b, v in per_bucket.items()
    }
    return {
        "buckets": ceilings,
        "n_anchors": n_anchors,
        "signal_half_life": None
        if math.isinf(truth.signal_half_life)
        else float(truth.signal_half_life),
    }
