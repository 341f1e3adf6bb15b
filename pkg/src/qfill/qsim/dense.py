"""Dense statevector backend.

Amplitudes are stored as a flat complex128 vector of length 2**n with qubit 0
on the most significant axis, so `amps.reshape([2]*n)` exposes one axis per
qubit.  Practical up to roughly n=20; larger registers go through the MPS
backend.
"""

from __future__ import annotations

import numpy as np

from .gates import PAULI, PauliString


class DenseState:
    def __init__(self, amps: np.ndarray, n: int) -> None:
        self.n = n
        self.amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        if self.amps.shape[0] != 2**n:
            raise ValueError(f"amplitude vector length {self.amps.shape[0]} != 2**{n}")

    @classmethod
    def from_product(cls, qubit_states: list[np.ndarray]) -> "DenseState":
        amps = np.array([1.0], dtype=np.complex128)
        for q in qubit_states:
            amps = np.kron(amps, np.asarray(q, dtype=np.complex128))
        return cls(amps, len(qubit_states))

    def copy(self) -> "DenseState":
        return DenseState(self.amps.copy(), self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def apply_single(self, site: int, u: np.ndarray) -> None:
        psi = self.amps.reshape([2] * self.n)
        psi = np.tensordot(np.asarray(u, dtype=np.complex128), psi, axes=([1], [site]))
        self.amps = np.moveaxis(psi, 0, site).reshape(-1)

    def apply_two(self, j: int, u4: np.ndarray) -> None:
        """Apply a 4x4 unitary to the adjacent pair (j, j+1)."""
        psi = self.amps.reshape([2] * self.n)
        g = np.asarray(u4, dtype=np.complex128).reshape(2, 2, 2, 2)
        psi = np.tensordot(g, psi, axes=([2, 3], [j, j + 1]))
        self.amps = np.moveaxis(psi, [0, 1], [j, j + 1]).reshape(-1)

    def _apply_pauli_copy(self, pauli: PauliString) -> np.ndarray:
        psi = self.amps.reshape([2] * self.n)
        for site, letter in pauli.ops:
            psi = np.moveaxis(
                np.tensordot(PAULI[letter], psi, axes=([1], [site])), 0, site
            )
        return psi.reshape(-1)

    def expectation(self, pauli: PauliString) -> float:
        if pauli.max_site() >= self.n:
            raise ValueError("observable site out of range")
        val = float(np.vdot(self.amps, self._apply_pauli_copy(pauli)).real)
        return float(np.clip(val, -1.0, 1.0))

    def expectations_all_single(self) -> np.ndarray:
        """(n, 3) array of X, Y, Z expectations for every qubit."""
        out = np.empty((self.n, 3))
        for q in range(self.n):
            for a, letter in enumerate(("X", "Y", "Z")):
                out[q, a] = self.expectation(PauliString.single(q, letter))
        return out
