"""Commuting charges of the pairing model and the two-parameter family.

Pairs on level ``i`` behave like a spin with

    S_i+ = i b_i+,   S_i- = i b_i,   S_i^z = (Omega_i + N_i) / 2,

where ``N_i = 2 n_i + nu_i`` counts bosons.  The two-site product is then
``S_i.S_j = -(b_i+ b_j + b_j+ b_i)/2 + S_i^z S_j^z``, and the charges

    H_i = N_i / g + 2 sum_{l != i} S_i.S_l / (xi_i - xi_l)

commute for any distinct ``xi``.  The combination ``g sum_i eps_i H_i`` is the
two-parameter Hamiltonian; at ``xi = eps`` it equals the attractive pairing
Hamiltonian plus the constant returned by :func:`identity_offset`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParametersError
from .fock import DEFAULT_BASIS_CAP, DenseHamiltonian, PairBasis, raise_element
from .model import LevelSpectrum, PairSector


@dataclass(frozen=True)
class ChargeMatrix:
    index: int
    epsilon: np.ndarray
    xi: np.ndarray
    g_eff: float
    matrix: np.ndarray
    basis: PairBasis


def _check_xi(xi, L: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (L,):
        raise InvalidParametersError(f"need {L} inhomogeneities, got shape {xi.shape}")
    if len(np.unique(xi)) != L:
        raise InvalidParametersError("inhomogeneities xi must be pairwise distinct")
    return xi


def hopping_matrix(basis: PairBasis, i: int, j: int, charges) -> np.ndarray:
    """Matrix of ``b_i+ b_j`` (``i != j``) on a fixed-``M`` pair basis."""
    if i == j:
        raise InvalidParametersError("hopping needs two distinct levels")
    C = np.asarray(charges, dtype=float)
    n = basis.states
    H = np.zeros((len(basis), len(basis)))
    src = np.nonzero(n[:, j] > 0)[0]
    if src.size == 0:
        return H
    moved = n[src].copy()
    moved[:, j] -= 1
    amp = raise_element(moved[:, j], C[j]) * raise_element(moved[:, i], C[i])
    moved[:, i] += 1
    H[basis.index(moved), src] = amp
    return H


def _spin_z(basis: PairBasis, spectrum: LevelSpectrum, sector: PairSector) -> np.ndarray:
    # columns: S^z of each level on each basis state
    return basis.states + 0.5 * sector.charges(spectrum)[None, :]


def spin_product(basis: PairBasis, spectrum: LevelSpectrum, sector: PairSector, i: int, j: int) -> np.ndarray:
    """Matrix of ``S_i.S_j`` for ``i != j``."""
    C = sector.charges(spectrum)
    hop = hopping_matrix(basis, i, j, C)
    sz = _spin_z(basis, spectrum, sector)
    return -0.5 * (hop + hop.T) + np.diag(sz[:, i] * sz[:, j])


def _boson_counts(basis: PairBasis, sector: PairSector) -> np.ndarray:
    return 2 * basis.states + np.asarray(sector.nu_per_level, dtype=int)[None, :]


def build_charge(i: int, spectrum: LevelSpectrum, xi, g_eff: float, sector: PairSector,
                 cap: int | None = DEFAULT_BASIS_CAP, basis: PairBasis | None = None) -> ChargeMatrix:
    """Dense matrix of the ``i``-th conserved charge.

    ``g_eff = inf`` drops the ``N_i / g`` term.
    """
    xi = _check_xi(xi, spectrum.L)
    if not 0 <= i < spectrum.L:
        raise InvalidParametersError(f"charge index {i} out of range")
    if basis is None:
        basis = PairBasis(spectrum.L, sector.M, cap=cap)
    A = np.zeros((len(basis), len(basis)))
    if np.isfinite(g_eff):
        A += np.diag(_boson_counts(basis, sector)[:, i] / g_eff)
    for l in range(spectrum.L):
        if l != i:
            A += 2.0 * spin_product(basis, spectrum, sector, i, l) / (xi[i] - xi[l])
    return ChargeMatrix(i, spectrum.epsilon, xi, g_eff, A, basis)


def build_two_parameter_hamiltonian(spectrum: LevelSpectrum, xi, g_eff: float, sector: PairSector,
                                    cap: int | None = DEFAULT_BASIS_CAP) -> DenseHamiltonian:
    """``sum eps_i N_i + 2 g sum_{i<j} (eps_i - eps_j)/(xi_i - xi_j) S_i.S_j``."""
    xi = _check_xi(xi, spectrum.L)
    eps = spectrum.epsilon
    basis = PairBasis(spectrum.L, sector.M, cap=cap)
    H = np.diag(_boson_counts(basis, sector) @ eps).astype(float)
    if g_eff != 0.0:
        for i in range(spectrum.L):
            for j in range(i + 1, spectrum.L):
                w = (eps[i] - eps[j]) / (xi[i] - xi[j])
                H += 2.0 * g_eff * w * spin_product(basis, spectrum, sector, i, j)
    return DenseHamiltonian(H, basis, spectrum, sector, g_eff)


def identity_offset(spectrum: LevelSpectrum, sector: PairSector, g_eff: float) -> float:
    """Constant ``c`` with ``H_two_param(xi=eps) = H_pairing + c``.

    It collects the ``S^z S^z`` and diagonal ``b+ b`` pieces:
    ``c = g [(sum C + 2M)^2 - sum C^2] / 4 - g M``.
    """
    C = sector.charges(spectrum).astype(float)
    M = sector.M
    return g_eff * ((C.sum() + 2 * M) ** 2 - np.sum(C ** 2)) / 4.0 - g_eff * M


def commutator_norm(A, B) -> float:
    """Frobenius norm of ``AB - BA``."""
    A = getattr(A, "matrix", A)
    B = getattr(B, "matrix", B)
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidParametersError(f"shape mismatch {A.shape} vs {B.shape}")
    return float(np.linalg.norm(A @ B - B @ A))


def shared_eigenbasis_check(H, charges, degeneracy_tol: float = 1e-9) -> float:
    """Largest off-block element of each charge in the eigenbasis of ``H``.

    Eigenvalues of ``H`` closer than ``degeneracy_tol * max(1, ||H||)`` form
    one block; entries inside a block are not counted as leakage.
    """
    A = np.asarray(getattr(H, "matrix", H), dtype=float)
    w, V = np.linalg.eigh(A)
    tol = degeneracy_tol * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    block = np.concatenate([[0], np.cumsum(np.diff(w) > tol)])
    off = block[:, None] != block[None, :]
    worst = 0.0
    for Q in charges:
        Qm = np.asarray(getattr(Q, "matrix", Q), dtype=float)
        T = V.T @ Qm @ V
        if np.any(off):
            worst = max(worst, float(np.max(np.abs(T[off]))))
    return worst


def eigenvector_residual(H, vector) -> float:
    """``||H v - <v|H|v> v||`` for a normalized ``v``."""
    A = np.asarray(getattr(H, "matrix", H))
    v = np.asarray(vector)
    v = v / np.linalg.norm(v)
    Hv = A @ v
    return float(np.linalg.norm(Hv - np.vdot(v, Hv) * v))
