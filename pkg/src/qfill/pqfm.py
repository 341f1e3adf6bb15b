"""Projected quantum feature map over a Heisenberg-interaction ansatz.

Each event's encoded angles become bond couplings of a Trotterized
nearest-neighbour evolution applied to a seeded random product state; the
transformed features are the single-qubit Pauli expectations of the final
state.  A block is two Trotter repetitions, so `blocks` B gives
M_total = 2B repetitions; the emitted pair-rotation angle for coupling a is
theta = (alpha / (2 * M_total)) * a, which makes the XX/YY/ZZ triple on a
bond equal exp(-i * (alpha / (4 * M_total)) * a * [XX+YY+ZZ]).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import EventDataset, TradeEvent
from .preprocess import DimensionMismatch, Scaler, encode_angles
from .qsim import (
    DriftWalk,
    NoiseConfig,
    PairRotation,
    PauliString,
    apply_depolarizing,
    apply_gate,
    default_observables,
    init_fiducial,
    sample_expectation,
)

_DRIFT_STREAM_TAG = 0xD21F7  # keeps the drift walk off the per-event streams


class CapacityExceeded(ValueError):
    pass


class UnknownPreset(KeyError):
    pass


@dataclass(frozen=True)
class AnsatzConfig:
    qubits: int = 16
    blocks: int = 1
    alpha: float = 1.0
    seed: int = 0
    coupling_mode: str = "scalar"  # "scalar" | "triple"
    backend: str = "mps"  # "dense" | "mps"
    max_bond: int = 64
    truncation_tol: float = 1e-12
    shots: int | None = None  # None = exact expectations
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def __post_init__(self) -> None:
        if self.qubits < 2:
            raise ValueError("need at least two qubits")
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.coupling_mode not in ("scalar", "triple"):
            raise ValueError(f"unknown coupling_mode {self.coupling_mode!r}")
        if self.backend not in ("dense", "mps"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be None or >= 1")

    @property
    def repetitions(self) -> int:
        return 2 * self.blocks


# Named circuit presets; qubit count and backend stay caller-chosen.
PRESETS: dict[str, dict[str, object]] = {
    "shorter": {"blocks": 1, "alpha": 1.0, "seed": 1},
    "longer": {"blocks": 2, "alpha": 0.1, "seed": 0},
}


def preset_config(name: str, **overrides) -> AnsatzConfig:
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    params: dict[str, object] = dict(PRESETS[name])
    params.update(overrides)
    return AnsatzConfig(**params)  # type: ignore[arg-type]


def bond_order(qubits: int) -> list[int]:
    """Bond visit order within one repetition: odd bonds, then even bonds."""
    return [j for j in range(1, qubits - 1, 2)] + [j for j in range(0, qubits - 1, 2)]


@dataclass(frozen=True)
class FeatureAssignment:
    """Which feature drives which (repetition, bond, axis) coupling slot.

    Slots are listed in circuit execution order; surplus slots carry None and
    contribute zero angles.  Scalar mode drives all three axes of a bond from
    one feature (axis None); triple mode assigns X, Y, Z axes separately.
    """

    p: int
    qubits: int
    blocks: int
    coupling_mode: str
    slots: tuple[tuple[int, int, int | None], ...]
    feature_for_slot: tuple[int | None, ...]

    @property
    def capacity(self) -> int:
        return len(self.slots)

    @property
    def repetitions(self) -> int:
        return 2 * self.blocks

    def slot_angles(self, angles: np.ndarray) -> np.ndarray:
        out = np.zeros(len(self.slots))
        for i, f in enumerate(self.feature_for_slot):
            if f is not None:
                out[i] = angles[f]
        return out


def assign_features(
    p: int, qubits: int, blocks: int, coupling_mode: str = "scalar"
) -> FeatureAssignment:
    """Round-robin fill, repetition-major, bonds in execution order."""
    if coupling_mode not in ("scalar", "triple"):
        raise ValueError(f"unknown coupling_mode {coupling_mode!r}")
    axes_per_bond = 3 if coupling_mode == "triple" else 1
    bonds = qubits - 1
    reps = 2 * blocks
    capacity = reps * bonds * axes_per_bond
    if p > capacity:
        need_n = -(-p // (reps * axes_per_bond)) + 1  # ceil division
        need_b = -(-p // (2 * bonds * axes_per_bond))
        raise CapacityExceeded(
            f"{p} features exceed capacity {capacity} "
            f"(qubits={qubits}, blocks={blocks}, {coupling_mode}); "
            f"minimal sufficient qubits={need_n} at blocks={blocks}, "
            f"or blocks={need_b} at qubits={qubits}"
        )
    slots: list[tuple[int, int, int | None]] = []
    for m in range(reps):
        for j in bond_order(qubits):
            if coupling_mode == "scalar":
                slots.append((m, j, None))
            else:
                slots.extend((m, j, a) for a in range(3))
    feature_for_slot = tuple(i if i < p else None for i in range(len(slots)))
    return FeatureAssignment(
        p=p,
        qubits=qubits,
        blocks=blocks,
        coupling_mode=coupling_mode,
        slots=tuple(slots),
        feature_for_slot=feature_for_slot,
    )


_AXES = ("X", "Y", "Z")


def build_circuit(
    angles: np.ndarray, assignment: FeatureAssignment, config: AnsatzConfig
) -> list[PairRotation]:
    """Emit the gate list in execution order.  Every bond visit yields an
    XX, YY, ZZ rotation triple; scalar mode repeats one angle across axes."""
    angles = np.asarray(angles, dtype=np.float64).reshape(-1)
    if angles.shape[0] != assignment.p:
        raise DimensionMismatch(
            f"{angles.shape[0]} angles for an assignment of {assignment.p} features"
        )
    if (config.qubits, config.blocks, config.coupling_mode) != (
        assignment.qubits,
        assignment.blocks,
        assignment.coupling_mode,
    ):
        raise DimensionMismatch("assignment does not match the ansatz config")
    scale = config.alpha / (2.0 * assignment.repetitions)
    slot_angles = assignment.slot_angles(angles)
    gates: list[PairRotation] = []
    i = 0
    while i < len(assignment.slots):
        _, j, axis = assignment.slots[i]
        sites = (j, j + 1)
        if axis is None:
            theta = scale * slot_angles[i]
            gates.extend(PairRotation(sites, a, theta) for a in _AXES)
            i += 1
        else:
            for a in range(3):
                gates.append(PairRotation(sites, _AXES[a], scale * slot_angles[i + a]))
            i += 3
    return gates


def _is_default_observables(observables: list[PauliString], qubits: int) -> bool:
    if len(observables) != 3 * qubits:
        return False
    for q in range(qubits):
        for a, letter in enumerate(_AXES):
            if observables[3 * q + a].ops != ((q, letter),):
                return False
    return True


def _event_rng(config: AnsatzConfig, event_id: int) -> np.random.Generator:
    return np.random.default_rng([config.noise.noise_seed, int(event_id) % 2**64])


def _transform_features(
    features: np.ndarray,
    event_id: int,
    scaler: Scaler,
    assignment: FeatureAssignment,
    observables: list[PauliString],
    config: AnsatzConfig,
) -> np.ndarray:
    angles = encode_angles(np.asarray(features, dtype=np.float64), scaler)
    gates = build_circuit(angles, assignment, config)
    state = init_fiducial(
        config.qubits,
        config.seed,
        backend=config.backend,
        max_bond=config.max_bond,
        truncation_tol=config.truncation_tol,
    )
    noise = config.noise
    rng = _event_rng(config, event_id) if (noise.p2 > 0 or config.shots is not None) else None
    for gate in gates:
        # A zero-angle rotation is the identity; skip the unitary but keep the
        # per-gate noise exposure, mirroring hardware execution.
        if gate.theta != 0.0:
            apply_gate(state, gate)
        if noise.p2 > 0:
            apply_depolarizing(state, gate.sites, noise.p2, rng)
    eps = noise.readout_flip
    if config.shots is None:
        if _is_default_observables(observables, config.qubits):
            vals = state.expectations_all_single().reshape(-1)
        else:
            vals = np.array([state.expectation(p) for p in observables])
        if eps > 0:
            # Exact mode applies the channel-mean attenuation directly.
            vals = (1.0 - 2.0 * eps) * vals
        return vals
    return np.array(
        [
            sample_expectation(state, p, config.shots, rng, readout_flip=eps)
            for p in observables
        ]
    )


class EventTransform:
    """Stateful event-to-features map.  Holds the drift walk, if configured,
    which advances once per processed event; labels are never read."""

    def __init__(
        self,
        scaler: Scaler,
        assignment: FeatureAssignment,
        observables: list[PauliString] | None = None,
        config: AnsatzConfig | None = None,
    ) -> None:
        self.scaler = scaler
        self.assignment = assignment
        self.config = config or AnsatzConfig(qubits=assignment.qubits, blocks=assignment.blocks)
        self.observables = (
            observables if observables is not None else default_observables(self.config.qubits)
        )
        self.walk: DriftWalk | None = None
        drift = self.config.noise.drift
        if drift.mode == "random_walk":
            rng = np.random.default_rng([self.config.noise.noise_seed, _DRIFT_STREAM_TAG])
            self.walk = DriftWalk(len(self.observables), drift.step_sigma, rng)

    def __call__(self, event: TradeEvent | np.ndarray) -> np.ndarray:
        if isinstance(event, TradeEvent):
            features, event_id = event.features, event.event_id
        else:
            features, event_id = np.asarray(event, dtype=np.float64), 0
        out = _transform_features(
            features, event_id, self.scaler, self.assignment, self.observables, self.config
        )
        if self.walk is not None:
            out = self.walk.apply_and_advance(out)
        return out


def transform_event(
    event: TradeEvent | np.ndarray,
    scaler: Scaler,
    assignment: FeatureAssignment,
    observables: list[PauliString] | None = None,
    config: AnsatzConfig | None = None,
) -> np.ndarray:
    """One-shot transform of a single event (no drift-walk state)."""
    config = config or AnsatzConfig(qubits=assignment.qubits, blocks=assignment.blocks)
    observables = observables if observables is not None else default_observables(config.qubits)
    if isinstance(event, TradeEvent):
        features, event_id = event.features, event.event_id
    else:
        features, event_id = np.asarray(event, dtype=np.float64), 0
    return _transform_features(features, event_id, scaler, assignment, observables, config)


def transform_batch(
    dataset: EventDataset,
    scaler: Scaler,
    assignment: FeatureAssignment,
    observables: list[PauliString] | None = None,
    config: AnsatzConfig | None = None,
    workers: int = 1,
) -> EventDataset:
    """Transform every event, preserving timestamps, ids and labels bit-exact.

    Events are processed in dataset order so the drift walk, when enabled,
    advances deterministically.  With drift disabled the per-event map is
    pure and may fan out over threads; results are schedule-independent.
    """
    config = config or AnsatzConfig(qubits=assignment.qubits, blocks=assignment.blocks)
    observables = observables if observables is not None else default_observables(config.qubits)
    transform = EventTransform(scaler, assignment, observables, config)
    n = len(dataset)
    if transform.walk is None and workers > 1 and n > 1:
        def one(i: int) -> np.ndarray:
            return _transform_features(
                dataset.features[i],
                int(dataset.event_ids[i]),
                scaler,
                assignment,
                observables,
                config,
            )

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(n)))
    else:
        rows = [
            transform(dataset.event(i)) for i in range(n)
        ]
    out = np.vstack(rows) if rows else np.zeros((0, len(observables)))
    provenance = "pqfm-noisy" if (config.noise.active or config.shots is not None) else "pqfm-sim"
    return dataset.with_features(out, provenance=provenance)


def noisy_variant(config: AnsatzConfig, noise: NoiseConfig) -> AnsatzConfig:
    """Convenience: same circuit, different noise model."""
    return replace(config, noise=noise)
