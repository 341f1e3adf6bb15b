"""Quantum register simulation: dense and MPS backends, gates, observables,
and trajectory-based noise channels."""

from __future__ import annotations

import numpy as np

from .dense import DenseState
from .gates import (
    PAULI,
    GateOp,
    NonAdjacentSites,
    PairRotation,
    PauliString,
    SingleQubitGate,
    default_observables,
    pair_rotation_matrix,
)
from .mps import MPSState
from .noise import (
    DriftConfig,
    DriftProbeResult,
    DriftWalk,
    NoiseConfig,
    TWO_QUBIT_PAULIS,
    apply_depolarizing,
    drift_probe,
    sample_expectation,
    simulate_median_shift,
)

QuantumState = DenseState | MPSState


def haar_qubit_states(n: int, seed: int) -> list[np.ndarray]:
    """n single-qubit states drawn as two standard complex Gaussians each,
    normalised; the stream is consumed in qubit order 0..n-1."""
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(n):
        z = rng.standard_normal((2, 2))
        v = z[:, 0] + 1j * z[:, 1]
        states.append(v / np.linalg.norm(v))
    return states


def init_fiducial(
    n: int,
    seed: int,
    backend: str = "dense",
    max_bond: int | None = 64,
    truncation_tol: float = 1e-12,
) -> QuantumState:
    """Product state of n seeded Haar-random single-qubit states."""
    states = haar_qubit_states(n, seed)
    if backend == "dense":
        return DenseState.from_product(states)
    if backend == "mps":
        return MPSState.from_product(states, max_bond=max_bond, tol=truncation_tol)
    raise ValueError(f"unknown backend {backend!r}")


def apply_gate(state: QuantumState, gate: GateOp) -> QuantumState:
    """Apply a gate in place and return the state.  Pair rotations act on
    nearest neighbours only."""
    if isinstance(gate, SingleQubitGate):
        state.apply_single(gate.site, gate.matrix)
        return state
    if isinstance(gate, PairRotation):
        j, k = gate.sites
        if k != j + 1:
            raise NonAdjacentSites(f"pair rotation on non-adjacent sites {gate.sites}")
        state.apply_two(j, pair_rotation_matrix(gate.axis, gate.theta))
        return state
    raise TypeError(f"unknown gate type {type(gate).__name__}")
