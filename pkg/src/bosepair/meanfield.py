"""Finite-L mean-field (Bogoliubov) treatment of the pairing model.

With a chemical potential ``mu`` and a real pairing field ``Delta`` each
level gets a quasiparticle energy ``E_i = sqrt((eps_i + mu)^2 - Delta^2)`` and

    E_MF(mu, Delta) = sum Omega_i (E_i - (eps_i + mu)) - mu N_b + Delta^2 / g,
    N(mu, Delta)    = sum Omega_i ((eps_i + mu) / E_i - 1).

The naive scheme looks for a stationary point of ``E_MF`` at fixed ``N``.
Below the critical coupling the only stationary point describes a condensate
sitting on the lowest level, which this scheme cannot represent; such points
are rejected (see :func:`solve_naive_mf`).  The modified scheme pins
``mu = Delta - eps_0`` so that the lowest level hosts the condensate.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from .errors import BeyondValidityError, ConvergenceError, DomainError
from .fock import DEFAULT_BASIS_CAP, build_hamiltonian
from .model import LevelSpectrum, PairSector

log = logging.getLogger(__name__)

# a gapped solution needs the first excited quasiparticle within this factor of the lowest one
ADMISSIBLE_RATIO = 2.0


class Status(str, enum.Enum):
    SOLVED = "Solved"
    NO_STATIONARY_POINT = "NoStationaryPoint"


@dataclass
class MeanFieldSolution:
    status: Status
    g_eff: float
    N_b: float
    mu: float = float("nan")
    delta: float = float("nan")
    energy: float = float("nan")
    phi: np.ndarray | None = None
    occupations: np.ndarray | None = None
    quasiparticle_energies: np.ndarray | None = None
    N0: float | None = None
    residuals: tuple[float, float] = (float("nan"), float("nan"))

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED


def _shifted(mu, delta, spectrum: LevelSpectrum):
    x = spectrum.epsilon + mu
    if delta < 0:
        raise DomainError("pairing field must be non-negative")
    rad = x * x - delta * delta
    if np.any(x <= 0) or np.any(rad < 0):
        raise DomainError(f"need Delta < eps_i + mu on every level (mu={mu}, Delta={delta})")
    return x, np.sqrt(rad)


def emf(mu: float, delta: float, spectrum: LevelSpectrum, N_b: float, g_eff: float) -> float:
    x, E = _shifted(mu, delta, spectrum)
    return float(spectrum.omega @ (E - x) - mu * N_b + delta * delta / g_eff)


def particle_number_mf(mu: float, delta: float, spectrum: LevelSpectrum) -> float:
    x, E = _shifted(mu, delta, spectrum)
    if np.any(E == 0):
        return float("inf")
    return float(spectrum.omega @ (x / E - 1.0))


def gradient(mu: float, delta: float, spectrum: LevelSpectrum, N_b: float, g_eff: float) -> np.ndarray:
    """``(dE/dmu, dE/dDelta)``; the first component is ``N - N_b``."""
    x, E = _shifted(mu, delta, spectrum)
    om = spectrum.omega
    return np.array([om @ (x / E - 1.0) - N_b, -delta * (om @ (1.0 / E)) + 2.0 * delta / g_eff])


def _hessian(mu, delta, spectrum):
    x, E = _shifted(mu, delta, spectrum)
    om = spectrum.omega
    E3 = E ** 3
    # d/dmu of x/E is -Delta^2/E^3, d/dDelta of x/E is x Delta/E^3
    return np.array([
        [-delta ** 2 * (om @ (1.0 / E3)), delta * (om @ (x / E3))],
        [delta * (om @ (x / E3)), -(om @ (1.0 / E)) - delta ** 2 * (om @ (1.0 / E3))],
    ])


def _delta_for_number(mu, spectrum, N_b):
    # N grows from 0 (Delta = 0) to infinity (Delta -> eps_0 + mu)
    top = spectrum.epsilon[0] + mu
    hi = top * (1.0 - 1e-15)
    while particle_number_mf(mu, hi, spectrum) < N_b:
        hi = top - 0.5 * (top - hi)
        if top - hi <= np.spacing(top):
            return hi
    return optimize.brentq(lambda d: particle_number_mf(mu, d, spectrum) - N_b, 0.0, hi,
                           xtol=1e-15 * top, rtol=4 * np.finfo(float).eps, maxiter=300)


def _gap_function(mu, spectrum, N_b, g_eff):
    d = _delta_for_number(mu, spectrum, N_b)
    x, E = _shifted(mu, d, spectrum)
    return 2.0 / g_eff - spectrum.omega @ (1.0 / E), d


def _polish(mu, delta, spectrum, N_b, g_eff, tol, maxiter=30):
    x = np.array([mu, delta])
    for _ in range(maxiter):
        r = gradient(*x, spectrum, N_b, g_eff)
        if np.max(np.abs(r)) <= tol:
            return x, r
        step = np.linalg.solve(_hessian(*x, spectrum), -r)
        lam = 1.0
        while lam > 1e-8:
            trial = x + lam * step
            try:
                rt = gradient(*trial, spectrum, N_b, g_eff)
                if np.linalg.norm(rt) < np.linalg.norm(r):
                    break
            except DomainError:
                pass
            lam *= 0.5
        else:
            return x, r
        x = trial
    return x, gradient(*x, spectrum, N_b, g_eff)


def _bogoliubov_data(mu, delta, spectrum):
    x, E = _shifted(mu, delta, spectrum)
    with np.errstate(divide="ignore"):
        phi = 0.5 * np.arctanh(-delta / x)
    occ = spectrum.omega * (x / E - 1.0)
    return phi, occ, E


def solve_naive_mf(spectrum: LevelSpectrum, N_b: float, g_eff: float, tol: float = 1e-10,
                   scan_points: int = 400, ratio: float = ADMISSIBLE_RATIO) -> MeanFieldSolution:
    """Stationary point of ``E_MF`` at fixed particle number.

    Eliminating ``Delta`` through the number equation leaves one function of
    ``mu`` whose zeros are the stationary points.  Its sign is scanned on a
    log grid of ``eps_0 + mu``; every bracketed zero is refined and polished
    by 2-D Newton.  A stationary point is accepted only inside the gapped
    wedge ``E_1 <= ratio * E_0``: outside it the lowest quasiparticle is far
    below the rest, i.e. the point describes a condensate and the scheme
    reports ``NoStationaryPoint``.  A polish that fails on an accepted bracket
    raises :class:`ConvergenceError` instead.
    """
    if g_eff == 0 or N_b == 0:
        return MeanFieldSolution(Status.SOLVED, g_eff, N_b, mu=0.0, delta=0.0, energy=0.0,
                                 phi=np.zeros(spectrum.L), occupations=np.zeros(spectrum.L),
                                 quasiparticle_energies=spectrum.epsilon.copy(), residuals=(0.0, 0.0))
    eps0 = spectrum.epsilon[0]
    top = g_eff * (N_b + spectrum.omega.sum()) + spectrum.epsilon[-1] - eps0 + 1.0
    grid = np.geomspace(1e-12 * max(top, 1.0), top * 10, scan_points)
    vals = np.array([_gap_function(s - eps0, spectrum, N_b, g_eff)[0] for s in grid])
    roots = []
    for k in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]:
        s = optimize.brentq(lambda s: _gap_function(s - eps0, spectrum, N_b, g_eff)[0], grid[k], grid[k + 1],
                            xtol=1e-15 * grid[k + 1], rtol=4 * np.finfo(float).eps)
        mu = s - eps0
        roots.append((mu, _gap_function(mu, spectrum, N_b, g_eff)[1]))
    admissible = []
    for mu, d in roots:
        _, E = _shifted(mu, d, spectrum)
        E_sorted = np.sort(E)
        if spectrum.L < 2 or E_sorted[1] <= ratio * E_sorted[0]:
            admissible.append((mu, d))
        else:
            log.debug("stationary point mu=%.6g Delta=%.6g rejected: E1/E0 = %.3g", mu, d, E_sorted[1] / E_sorted[0])
    if not admissible:
        return MeanFieldSolution(Status.NO_STATIONARY_POINT, g_eff, N_b)
    best = None
    for mu, d in admissible:
        x, r = _polish(mu, d, spectrum, N_b, g_eff, tol)
        if np.max(np.abs(r)) > tol:
            raise ConvergenceError(f"stationary point polish stalled at residual {np.max(np.abs(r)):.3e}")
        e = emf(x[0], x[1], spectrum, N_b, g_eff)
        if best is None or e < best[2]:
            best = (x[0], x[1], e, r)
    mu, d, e, r = best
    phi, occ, E = _bogoliubov_data(mu, d, spectrum)
    return MeanFieldSolution(Status.SOLVED, g_eff, N_b, mu=float(mu), delta=float(d), energy=float(e), phi=phi,
                             occupations=occ, quasiparticle_energies=E, residuals=(float(r[0]), float(r[1])))


def modified_gradient(delta: float, spectrum: LevelSpectrum, N_b: float, g_eff: float) -> float:
    """``dE_MF/dDelta`` along ``mu = Delta - eps_0``."""
    x = spectrum.epsilon - spectrum.epsilon[0]
    s = np.sqrt(x / (x + 2.0 * delta))
    return float(spectrum.omega @ (s - 1.0) - N_b + 2.0 * delta / g_eff)


def solve_modified_mf(spectrum: LevelSpectrum, N_b: float, g_eff: float, tol: float = 1e-10) -> MeanFieldSolution:
    """Condensate-aware mean field with ``mu = Delta - eps_0``.

    The stationarity condition is monotone in ``Delta`` with a root inside
    ``[g N_b / 2, g (N_b + sum Omega) / 2]``.  The lowest level carries the
    condensate ``N0 = N_b - N'`` where ``N'`` sums the excited occupations.
    """
    if not g_eff > 0:
        raise DomainError("modified mean field needs g_eff > 0")
    lo, hi = 0.5 * g_eff * N_b, 0.5 * g_eff * (N_b + spectrum.omega.sum())
    F = lambda d: modified_gradient(d, spectrum, N_b, g_eff)
    if F(lo) >= 0:
        d = lo
    else:
        d = optimize.brentq(F, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=300)
    res = F(d)
    if abs(res) > tol * max(1.0, N_b):
        raise ConvergenceError(f"modified stationarity residual {res:.3e}")
    mu = d - spectrum.epsilon[0]
    x = spectrum.epsilon + mu
    E = np.sqrt(np.maximum(x * x - d * d, 0.0))
    occ = np.empty(spectrum.L)
    occ[1:] = spectrum.omega[1:] * (x[1:] / E[1:] - 1.0)
    depleted = float(occ[1:].sum())
    if depleted >= N_b:
        raise BeyondValidityError(f"depletion {depleted:.6g} exceeds N_b = {N_b}")
    occ[0] = N_b - depleted
    with np.errstate(divide="ignore"):
        phi = 0.5 * np.arctanh(-d / x)
    energy = float(spectrum.omega @ (E - x) - mu * N_b + d * d / g_eff)
    return MeanFieldSolution(Status.SOLVED, g_eff, N_b, mu=float(mu), delta=float(d), energy=energy, phi=phi,
                             occupations=occ, quasiparticle_energies=E, N0=occ[0], residuals=(0.0, float(res)))


def bogoliubov_limit(g_bare: float, rho: float):
    """``mu = g rho / 2`` and the dispersion ``eps -> sqrt(eps (eps + g rho))``."""
    b = g_bare * rho

    def dispersion(eps):
        return np.sqrt(np.asarray(eps, dtype=float) * (np.asarray(eps, dtype=float) + b))

    return 0.5 * b, dispersion


def variational_amplitudes(mu: float, delta: float, spectrum: LevelSpectrum) -> np.ndarray:
    """Pair amplitudes ``alpha_i = tanh(phi_i)`` with ``tanh(2 phi_i) = -Delta/(eps_i + mu)``.

    A level with ``Delta = eps_i + mu`` (the condensate level) gets the limit ``-1``.
    """
    x = spectrum.epsilon + mu
    if np.any(x <= 0):
        raise DomainError("need eps_i + mu > 0")
    r = delta / x
    if np.any(r > 1.0 + 1e-14) or delta < 0:
        raise DomainError("real angles need 0 <= Delta <= eps_i + mu")
    r = np.minimum(r, 1.0)
    # tanh(phi) from tanh(2 phi) = -r, written without cancellation
    return -r / (1.0 + np.sqrt(1.0 - r * r))


def variational_energy(alpha, spectrum: LevelSpectrum, sector: PairSector, g_eff: float,
                       cap: int | None = DEFAULT_BASIS_CAP) -> float:
    """Exact energy of the product state ``exp(sum alpha_i b_i+)|nu>`` projected on ``M`` pairs.

    The amplitude of ``|n>`` is ``prod alpha_i^n_i sqrt((C_i)_n_i / n_i!)``.
    Being an expectation value it bounds the ground energy from above.
    """
    H = build_hamiltonian(spectrum, sector, g_eff, cap=cap)
    n = H.basis.states
    C = sector.charges(spectrum).astype(float)[None, :]
    alpha = np.asarray(alpha, dtype=float)
    logmag = 0.5 * np.sum(gammaln(n + C) - gammaln(C) - gammaln(n + 1.0), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logmag = logmag + np.sum(np.where(n > 0, n * np.log(np.abs(alpha))[None, :], 0.0), axis=1)
    sign = np.prod(np.where((alpha[None, :] < 0) & (n % 2 == 1), -1.0, 1.0), axis=1)
    finite = np.isfinite(logmag)
    if not np.any(finite):
        raise DomainError("trial state has no weight in this sector")
    psi = np.zeros(len(n))
    psi[finite] = sign[finite] * np.exp(logmag[finite] - np.max(logmag[finite]))
    return float(psi @ H.matrix @ psi / (psi @ psi))
