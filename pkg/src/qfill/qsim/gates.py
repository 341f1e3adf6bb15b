"""Gate and observable primitives shared by the dense and MPS backends.

The only two-qubit gate in the lab is the Pauli-pair rotation
R_PP(theta) = exp(-i*(theta/2)*P(x)P) for P in {X, Y, Z}; since
(P(x)P)^2 = I this is cos(theta/2)*I - i*sin(theta/2)*P(x)P.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class NonAdjacentSites(ValueError):
    """Two-qubit gates act on nearest neighbours only."""


@dataclass(frozen=True)
class SingleQubitGate:
    site: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if np.asarray(self.matrix).shape != (2, 2):
            raise ValueError("single-qubit gate needs a 2x2 matrix")


@dataclass(frozen=True)
class PairRotation:
    """R_PP(theta) on the ascending adjacent pair `sites`."""

    sites: tuple[int, int]
    axis: str
    theta: float

    def __post_init__(self) -> None:
        if self.axis not in ("X", "Y", "Z"):
            raise ValueError(f"axis must be X, Y or Z, got {self.axis!r}")
        if self.sites[1] != self.sites[0] + 1:
            raise NonAdjacentSites(f"pair rotation on non-adjacent sites {self.sites}")


GateOp = SingleQubitGate | PairRotation


def pair_rotation_matrix(axis: str, theta: float) -> np.ndarray:
    pp = np.kron(PAULI[axis], PAULI[axis])
    return np.cos(theta / 2.0) * np.eye(4, dtype=np.complex128) - 1j * np.sin(theta / 2.0) * pp


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-site Paulis; identity on unlisted sites.

    `ops` is a site-sorted tuple of (site, letter) with letters in {X, Y, Z}.
    """

    ops: tuple[tuple[int, str], ...]

    def __post_init__(self) -> None:
        sites = [s for s, _ in self.ops]
        if len(set(sites)) != len(sites):
            raise ValueError("duplicate site in Pauli string")
        if any(letter not in ("X", "Y", "Z") for _, letter in self.ops):
            raise ValueError("Pauli letters must be X, Y or Z")
        if list(sites) != sorted(sites):
            object.__setattr__(self, "ops", tuple(sorted(self.ops)))

    @classmethod
    def single(cls, site: int, letter: str) -> "PauliString":
        return cls(ops=((site, letter),))

    @property
    def weight(self) -> int:
        return len(self.ops)

    def max_site(self) -> int:
        return max(s for s, _ in self.ops)


def default_observables(n: int) -> list[PauliString]:
    """The 3n single-qubit readout set, ordered (X q0, Y q0, Z q0, X q1, ...)."""
    obs = []
    for q in range(n):
        for letter in ("X", "Y", "Z"):
            obs.append(PauliString.single(q, letter))
    return obs
