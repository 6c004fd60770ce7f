"""Brute-force oracle: the pairing Hamiltonian as a dense matrix in the pair basis.

A level of charge ``C = Omega + nu`` holding ``n`` pairs carries the SU(1,1)
lowest-weight state ``|k = C/2, n>``.  The only matrix element needed is

    <n+1| b+ |n> = sqrt((n + 1) (n + C)),

from which ``b+ b |n> = n (n - 1 + C) |n>`` follows.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np

from .errors import BasisTooLargeError, DiagonalizationError, InvalidParametersError
from .model import LevelSpectrum, PairSector

DEFAULT_BASIS_CAP = 20_000


def raise_element(n, C):
    """Normalized matrix element ``<n+1| b+ |n>`` for a shell of charge ``C``."""
    n = np.asarray(n, dtype=float)
    return np.sqrt((n + 1.0) * (n + C))


def basis_dimension(L: int, M: int) -> int:
    """Number of weak compositions of ``M`` into ``L`` parts."""
    return comb(M + L - 1, L - 1)


def _compositions(M: int, L: int):
    # ascending lexicographic order in (n_0, ..., n_{L-1})
    if L == 1:
        yield (M,)
        return
    for first in range(M + 1):
        for rest in _compositions(M - first, L - 1):
            yield (first,) + rest


class PairBasis:
    """Occupancy vectors ``n`` with ``sum(n) == M``, lexicographically ordered."""

    def __init__(self, L: int, M: int, cap: int | None = DEFAULT_BASIS_CAP):
        if L < 1 or M < 0:
            raise InvalidParametersError(f"need L >= 1 and M >= 0, got L={L}, M={M}")
        dim = basis_dimension(L, M)
        if cap is not None and dim > cap:
            raise BasisTooLargeError(dim, cap)
        self.L = L
        self.M = M
        self.states = np.array(list(_compositions(M, L)), dtype=np.int64).reshape(dim, L)
        radix = M + 1
        if radix ** L < 2 ** 62:
            weights = radix ** np.arange(L - 1, -1, -1, dtype=np.int64)
            self._weights = weights
            self._keys = self.states @ weights
            self._index = None
        else:
            self._weights = None
            self._keys = None
            self._index = {tuple(s): i for i, s in enumerate(self.states.tolist())}

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dimension(self) -> int:
        return len(self)

    def index(self, states) -> np.ndarray:
        """Ordinals of the given occupancy vectors (rows)."""
        states = np.atleast_2d(np.asarray(states, dtype=np.int64))
        if self._keys is not None:
            idx = np.searchsorted(self._keys, states @ self._weights)
            if np.any(idx >= len(self)) or np.any(self._keys[np.minimum(idx, len(self) - 1)] != states @ self._weights):
                raise KeyError("occupancy vector not in basis")
            return idx
        return np.array([self._index[tuple(s)] for s in states.tolist()], dtype=np.int64)


@dataclass(frozen=True)
class DenseHamiltonian:
    matrix: np.ndarray
    basis: PairBasis
    spectrum: LevelSpectrum | None
    sector: PairSector | None
    g_eff: float

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def pairing_matrix(basis: PairBasis, eps, charges, nu, g_eff: float) -> np.ndarray:
    """Matrix of ``sum eps_a n_a - g_eff B+ B-`` on a pair basis.

    Works on raw level arrays, so repeated energies are allowed here (the
    collapsed-shell consistency test relies on that).
    """
    eps = np.asarray(eps, dtype=float)
    C = np.asarray(charges, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n = basis.states
    diag = (2 * n + nu) @ eps - g_eff * np.sum(n * (n - 1 + C), axis=1)
    H = np.diag(diag.astype(float))
    if g_eff == 0.0:
        return H
    L = basis.L
    for beta in range(L):
        src = np.nonzero(n[:, beta] > 0)[0]
        if src.size == 0:
            continue
        moved = n[src].copy()
        moved[:, beta] -= 1
        down = raise_element(moved[:, beta], C[beta])
        for alpha in range(L):
            if alpha == beta:
                continue
            up = raise_element(moved[:, alpha], C[alpha])
            tgt_states = moved.copy()
            tgt_states[:, alpha] += 1
            tgt = basis.index(tgt_states)
            H[tgt, src] += -g_eff * up * down
    return H


def build_hamiltonian(spectrum: LevelSpectrum, sector: PairSector, g_eff: float,
                      cap: int | None = DEFAULT_BASIS_CAP) -> DenseHamiltonian:
    """Dense attractive pairing Hamiltonian in the fixed-seniority sector."""
    C = sector.charges(spectrum)
    basis = PairBasis(spectrum.L, sector.M, cap=cap)
    H = pairing_matrix(basis, spectrum.epsilon, C, sector.nu_per_level, g_eff)
    return DenseHamiltonian(H, basis, spectrum, sector, g_eff)


def diagonalize(H, residual_tol: float = 1e-10):
    """Full symmetric eigendecomposition, eigenvalues ascending.

    Each eigenpair is checked against ``||H v - lambda v|| <= residual_tol * ||H||``.
    """
    A = H.matrix if isinstance(H, DenseHamiltonian) else np.asarray(H, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidParametersError("need a non-empty square matrix")
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise DiagonalizationError(f"symmetric eigensolver failed: {exc}") from exc
    scale = np.linalg.norm(A)
    res = np.linalg.norm(A @ V - V * w, axis=0)
    worst = float(np.max(res))
    if not worst <= residual_tol * max(scale, 1.0):
        raise DiagonalizationError(f"eigenpair residual {worst:.3e} above tolerance")
    return w, V


def occupations_exact(vector, basis: PairBasis, nu) -> np.ndarray:
    """Per-level boson counts ``<2 n_a + nu_a>`` in a normalized state."""
    p = np.abs(np.asarray(vector)) ** 2
    counts = 2 * basis.states + np.asarray(nu, dtype=int)
    return p @ counts


def raising_matrix(basis_from: PairBasis, basis_to: PairBasis, coeffs, charges) -> np.ndarray:
    """Matrix of ``sum_a coeffs[a] b_a+`` mapping the ``M`` sector to ``M + 1``."""
    coeffs = np.asarray(coeffs)
    C = np.asarray(charges, dtype=float)
    dtype = np.result_type(coeffs.dtype, float)
    R = np.zeros((len(basis_to), len(basis_from)), dtype=dtype)
    n = basis_from.states
    cols = np.arange(len(basis_from))
    for a in range(basis_from.L):
        tgt_states = n.copy()
        tgt_states[:, a] += 1
        rows = basis_to.index(tgt_states)
        R[rows, cols] += coeffs[a] * raise_element(n[:, a], C[a])
    return R


def level_operators(omega: int, nu: int, nmax: int):
    """``b+``, ``b`` and boson-count matrices of one shell, pairs ``0..nmax``."""
    C = omega + nu
    p = np.arange(nmax + 1)
    bplus = np.diag(raise_element(p[:-1], C), k=-1)
    count = np.diag((2 * p + nu).astype(float))
    return bplus, bplus.T.copy(), count


def dump_coo(H, path: str | Path, atol: float = 0.0) -> int:
    """Write nonzero entries as ``row col value`` lines; returns the count."""
    A = H.matrix if isinstance(H, DenseHamiltonian) else np.asarray(H)
    rows, cols = np.nonzero(np.abs(A) > atol)
    with open(path, "w") as fh:
        for r, c in zip(rows.tolist(), cols.tolist()):
            fh.write(f"{r} {c} {A[r, c]:.17g}\n")
    return len(rows)
