"""Matrix-product-state backend with a moving orthogonality centre.

Site tensors have shape (left_bond, 2, right_bond).  Two-qubit gates contract
the bond pair, apply the 4x4 unitary and split back by SVD; singular values
below `tol` are discarded, the bond dimension is capped at `max_bond`, and the
spectrum is renormalised so the state stays unit norm after truncation.
Single-qubit unitaries preserve left/right orthogonality, so only two-qubit
gates move the centre.
"""

from __future__ import annotations

import numpy as np

from .gates import PAULI, PauliString


class MPSState:
    def __init__(
        self,
        tensors: list[np.ndarray],
        center: int = 0,
        max_bond: int | None = 64,
        tol: float = 1e-12,
    ) -> None:
        self.tensors = tensors
        self.n = len(tensors)
        self.center = center
        self.max_bond = max_bond
        self.tol = tol

    @classmethod
    def from_product(
        cls,
        qubit_states: list[np.ndarray],
        max_bond: int | None = 64,
        tol: float = 1e-12,
    ) -> "MPSState":
        tensors = [
            np.asarray(q, dtype=np.complex128).reshape(1, 2, 1) for q in qubit_states
        ]
        return cls(tensors, center=0, max_bond=max_bond, tol=tol)

    def copy(self) -> "MPSState":
        return MPSState(
            [t.copy() for t in self.tensors],
            center=self.center,
            max_bond=self.max_bond,
            tol=self.tol,
        )

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def _left_orthogonalize(self, i: int) -> None:
        t = self.tensors[i]
        dl, _, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * 2, dr))
        k = q.shape[1]
        self.tensors[i] = q.reshape(dl, 2, k)
        self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=([1], [0]))

    def _right_orthogonalize(self, i: int) -> None:
        t = self.tensors[i]
        dl, _, dr = t.shape
        # LQ via QR of the transpose: t = L Q with Q row-orthonormal.
        q, r = np.linalg.qr(t.reshape(dl, 2 * dr).conj().T)
        k = q.shape[1]
        self.tensors[i] = q.conj().T.reshape(k, 2, dr)
        self.tensors[i - 1] = np.tensordot(
            self.tensors[i - 1], r.conj().T, axes=([2], [0])
        )

    def move_center(self, target: int) -> None:
        while self.center < target:
            self._left_orthogonalize(self.center)
            self.center += 1
        while self.center > target:
            self._right_orthogonalize(self.center)
            self.center -= 1

    def apply_single(self, site: int, u: np.ndarray) -> None:
        t = self.tensors[site]
        u = np.asarray(u, dtype=np.complex128)
        self.tensors[site] = np.tensordot(u, t, axes=([1], [1])).transpose(1, 0, 2)

    def apply_two(self, j: int, u4: np.ndarray) -> None:
        """Apply a 4x4 unitary to the adjacent pair (j, j+1)."""
        self.move_center(j)
        a, b = self.tensors[j], self.tensors[j + 1]
        dl, dr = a.shape[0], b.shape[2]
        theta = np.tensordot(a, b, axes=([2], [0]))  # (dl, 2, 2, dr)
        g = np.asarray(u4, dtype=np.complex128).reshape(2, 2, 2, 2)
        theta = np.tensordot(g, theta, axes=([2, 3], [1, 2]))  # (2, 2, dl, dr)
        theta = theta.transpose(2, 0, 1, 3).reshape(dl * 2, 2 * dr)
        u, s, vh = np.linalg.svd(theta, full_matrices=False)
        keep = int(np.sum(s > self.tol))
        keep = max(1, keep)
        if self.max_bond is not None:
            keep = min(keep, self.max_bond)
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
        s = s / np.linalg.norm(s)
        self.tensors[j] = u.reshape(dl, 2, keep)
        self.tensors[j + 1] = (s[:, None] * vh).reshape(keep, 2, dr)
        self.center = j + 1

    def _transfer(self, ops: dict[int, np.ndarray]) -> complex:
        left = np.ones((1, 1), dtype=np.complex128)
        for site, a in enumerate(self.tensors):
            op = ops.get(site)
            ket = a if op is None else np.tensordot(op, a, axes=([1], [1])).transpose(1, 0, 2)
            tmp = np.tensordot(left, ket, axes=([1], [0]))       # (bra, phys, ket')
            left = np.tensordot(a.conj(), tmp, axes=([0, 1], [0, 1]))  # (bra', ket')
        return complex(left[0, 0])

    def norm(self) -> float:
        return float(np.sqrt(self._transfer({}).real))

    def expectation(self, pauli: PauliString) -> float:
        if pauli.max_site() >= self.n:
            raise ValueError("observable site out of range")
        ops = {site: PAULI[letter] for site, letter in pauli.ops}
        val = self._transfer(ops).real
        return float(np.clip(val, -1.0, 1.0))

    def expectations_all_single(self) -> np.ndarray:
        """(n, 3) array of X, Y, Z expectations computed from cached
        left/right environments in a single sweep."""
        n = self.n
        lenv: list[np.ndarray] = [np.ones((1, 1), dtype=np.complex128)]
        for a in self.tensors[:-1]:
            tmp = np.tensordot(lenv[-1], a, axes=([1], [0]))
            lenv.append(np.tensordot(a.conj(), tmp, axes=([0, 1], [0, 1])))
        renv: list[np.ndarray] = [np.ones((1, 1), dtype=np.complex128)]
        for a in reversed(self.tensors[1:]):
            tmp = np.tensordot(a, renv[-1], axes=([2], [1]))     # (dl, phys, bra')
            renv.append(np.tensordot(tmp, a.conj(), axes=([1, 2], [1, 2])))
        renv.reverse()  # renv[s] closes the chain to the right of site s
        out = np.empty((n, 3))
        for s, a in enumerate(self.tensors):
            t1 = np.tensordot(lenv[s], a, axes=([1], [0]))       # (bra, phys_ket, ket')
            t2 = np.tensordot(t1, renv[s], axes=([2], [0]))      # (bra, phys_ket, bra')
            m = np.tensordot(a.conj(), t2, axes=([0, 2], [0, 2]))  # (phys_bra, phys_ket)
            for ai, letter in enumerate(("X", "Y", "Z")):
                val = float(np.sum(PAULI[letter] * m).real)
                out[s, ai] = np.clip(val, -1.0, 1.0)
        return out

    def amplitudes(self) -> np.ndarray:
        """Contract to a dense vector (small registers only)."""
        cur = self.tensors[0][0]  # (2, d)
        for t in self.tensors[1:]:
            cur = np.tensordot(cur, t, axes=([cur.ndim - 1], [0]))
        return cur.reshape(-1)
