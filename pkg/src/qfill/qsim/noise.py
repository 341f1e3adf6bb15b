"""Hardware-effect stand-ins: shot sampling, depolarizing insertions, readout
flips and a slow random-walk drift on expectation values.

Noise is trajectory-based: channels act on pure states by inserting random
Paulis, so channel averages are recovered by averaging trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .gates import PAULI


@dataclass(frozen=True)
class DriftConfig:
    mode: str = "none"  # "none" | "random_walk"
    step_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("none", "random_walk"):
            raise ValueError(f"unknown drift mode {self.mode!r}")
        if self.step_sigma < 0:
            raise ValueError("step_sigma must be non-negative")


@dataclass(frozen=True)
class NoiseConfig:
    p2: float = 0.0
    readout_flip: float = 0.0
    drift: DriftConfig = field(default_factory=DriftConfig)
    noise_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p2 <= 0.5:
            raise ValueError("p2 must lie in [0, 0.5]")
        if not 0.0 <= self.readout_flip <= 0.2:
            raise ValueError("readout_flip must lie in [0, 0.2]")

    @property
    def active(self) -> bool:
        return self.p2 > 0 or self.readout_flip > 0 or self.drift.mode != "none"


# The 15 non-identity two-qubit Paulis in a pinned order.
TWO_QUBIT_PAULIS: tuple[tuple[str, str], ...] = tuple(
    pair for pair in product("IXYZ", repeat=2) if pair != ("I", "I")
)


def apply_depolarizing(state, sites: tuple[int, int], p2: float, rng: np.random.Generator):
    """With probability p2 insert a uniformly random non-identity two-qubit
    Pauli on `sites`.  The primitive accepts any p2 in [0, 1]; the [0, 0.5]
    config bound is enforced by NoiseConfig."""
    if not 0.0 <= p2 <= 1.0:
        raise ValueError("p2 must lie in [0, 1]")
    if rng.random() < p2:
        a, b = TWO_QUBIT_PAULIS[int(rng.integers(len(TWO_QUBIT_PAULIS)))]
        if a != "I":
            state.apply_single(sites[0], PAULI[a])
        if b != "I":
            state.apply_single(sites[1], PAULI[b])
    return state


def sample_expectation(
    state,
    pauli,
    shots: int,
    rng: np.random.Generator,
    readout_flip: float = 0.0,
) -> float:
    """Finite-shot estimate of <P>: `shots` i.i.d. +/-1 outcomes, each flipped
    independently with probability `readout_flip`, then averaged."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    exact = state.expectation(pauli)
    p_plus = (1.0 + exact) / 2.0
    k = int(rng.binomial(shots, p_plus))
    if readout_flip > 0.0:
        k = k - int(rng.binomial(k, readout_flip)) + int(rng.binomial(shots - k, readout_flip))
    return (2.0 * k - shots) / shots


class DriftWalk:
    """Additive per-observable random walk, advanced once per processed event.

    The current offset is applied to an event's expectation vector before the
    walk advances, so the first processed event is drift-free.
    """

    def __init__(self, n_observables: int, step_sigma: float, rng: np.random.Generator) -> None:
        self.offsets = np.zeros(n_observables)
        self.step_sigma = step_sigma
        self.rng = rng

    def apply_and_advance(self, values: np.ndarray) -> np.ndarray:
        out = np.clip(values + self.offsets, -1.0, 1.0)
        self.offsets = self.offsets + self.rng.normal(0.0, self.step_sigma, self.offsets.shape)
        return out


@dataclass(frozen=True)
class DriftProbeResult:
    mean_abs_step: float
    median_shift_first_last_third: float


def drift_probe(transform, event, repeats: int, drift_config: DriftConfig) -> DriftProbeResult:
    """Run the identical event through a (stateful) transform `repeats` times.

    Returns the mean absolute feature change between consecutive runs and the
    shift of the median mean-observable between the first and last third of
    runs.  With drift disabled both are exactly zero.
    """
    if repeats < 9:
        raise ValueError("drift_probe needs repeats >= 9")
    runs = np.array([np.asarray(transform(event), dtype=np.float64) for _ in range(repeats)])
    steps = np.abs(np.diff(runs, axis=0)).mean(axis=1)
    mean_abs_step = float(steps.mean())
    per_run_mean = runs.mean(axis=1)
    third = repeats // 3
    first = float(np.median(per_run_mean[:third]))
    last = float(np.median(per_run_mean[repeats - third:]))
    return DriftProbeResult(
        mean_abs_step=mean_abs_step,
        median_shift_first_last_third=last - first,
    )


def simulate_median_shift(
    baseline: np.ndarray,
    step_sigma: float,
    repeats: int,
    n_walks: int,
    seed: int = 0,
) -> float:
    """Direct simulation of the drifted mean-observable walk, used to size
    step_sigma for a target median shift and as an independent oracle.

    Mirrors DriftWalk exactly: per-observable Gaussian walks added to the
    fixed baseline, clamped to [-1, 1], averaged over observables; returns
    the mean absolute first-third/last-third median shift over `n_walks`
    independent walks."""
    rng = np.random.default_rng(seed)
    q = baseline.shape[0]
    third = repeats // 3
    shifts = np.empty(n_walks)
    for w in range(n_walks):
        steps = rng.normal(0.0, step_sigma, (repeats, q))
        steps[0] = 0.0  # first event sees zero offset
        offsets = np.cumsum(steps, axis=0)
        means = np.clip(baseline + offsets, -1.0, 1.0).mean(axis=1)
        shifts[w] = abs(np.median(means[repeats - third:]) - np.median(means[:third]))
    return float(shifts.mean())
