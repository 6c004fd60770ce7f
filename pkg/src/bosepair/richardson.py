"""Exact eigenstates from the Richardson (Bethe-root) equations.

For the attractive Hamiltonian ``H = sum eps n - g B+ B-`` an eigenstate with
``M`` pairs is labelled by complex roots ``t_i`` solving

    sum_a C_a / (t_i - eps_a) + sum_{j != i} 2 / (t_i - t_j) + 2 / g = 0,

and its energy is ``sum_a eps_a nu_a + 2 sum_i t_i``.  The equations are
singular at ``g = 0`` (roots collapse onto levels), so every state is reached
by continuation in ``g`` from a clustered start near the non-interacting
label ``n^(0)``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import roots_genlaguerre

from .errors import (
    ContinuationStuckError,
    ConvergenceError,
    InconsistentRootSetError,
    InitializationError,
    InvalidParametersError,
    SingularConfigurationError,
    StepRejected,
)
from .fock import PairBasis, raising_matrix
from .model import LevelSpectrum, PairSector

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-11
_SINGULAR_REL = 1e-14
_REL_FLOOR = 1e-12


@dataclass
class TrajectoryPoint:
    g_eff: float
    roots: np.ndarray
    residual: float


@dataclass
class RootSet:
    roots: np.ndarray
    g_eff: float
    label: tuple[int, ...]
    residual: float
    trajectory: list[TrajectoryPoint] = field(default_factory=list)

    @property
    def M(self) -> int:
        return len(self.roots)


def _level_data(spectrum: LevelSpectrum, sector: PairSector, levels=None):
    eps = spectrum.epsilon if levels is None else np.asarray(levels, dtype=float)
    if len(eps) != spectrum.L:
        raise InvalidParametersError("levels must match the spectrum length")
    return eps, sector.charges(spectrum).astype(float)


def _differences(t, eps):
    dl = t[:, None] - eps[None, :]
    dr = t[:, None] - t[None, :]
    # unit diagonal keeps the division finite; callers zero it afterwards
    np.fill_diagonal(dr, 1.0)
    scale = 1.0 + max(np.max(np.abs(t), initial=0.0), np.max(np.abs(eps), initial=0.0))
    if np.any(np.abs(dl) <= _SINGULAR_REL * scale) or np.any(np.abs(dr) <= _SINGULAR_REL * scale):
        raise SingularConfigurationError("coincident roots or a root on a level")
    return dl, dr


def _defects(t, eps, C, g_eff):
    dl, dr = _differences(t, eps)
    terms_l = C[None, :] / dl
    terms_r = 2.0 / dr
    np.fill_diagonal(terms_r, 0.0)
    F = terms_l.sum(axis=1) + terms_r.sum(axis=1) + 2.0 / g_eff
    scale = np.abs(terms_l).sum(axis=1) + np.abs(terms_r).sum(axis=1) + 2.0 / g_eff
    return F, scale


def richardson_residual(roots, spectrum: LevelSpectrum, sector: PairSector, g_eff: float,
                        levels=None) -> np.ndarray:
    """Per-root defects of the attractive Richardson equations.

    ``levels`` replaces the single-particle energies (the inhomogeneities of
    the two-parameter family); charges still come from the spectrum.
    """
    if not g_eff > 0:
        raise InvalidParametersError("g_eff must be positive")
    t = np.asarray(roots, dtype=complex)
    eps, C = _level_data(spectrum, sector, levels)
    return _defects(t, eps, C, g_eff)[0]


def richardson_jacobian(roots, spectrum: LevelSpectrum, sector: PairSector, levels=None) -> np.ndarray:
    t = np.asarray(roots, dtype=complex)
    eps, C = _level_data(spectrum, sector, levels)
    return _jacobian(t, eps, C)


def _jacobian(t, eps, C):
    dl, dr = _differences(t, eps)
    J = 2.0 / dr ** 2
    np.fill_diagonal(J, 0.0)
    np.fill_diagonal(J, -(C[None, :] / dl ** 2).sum(axis=1) - J.sum(axis=1))
    return J


def _cluster_defect(x, C):
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.inf)
    return (2.0 / d).sum(axis=1) + C / x - 1.0


def cluster_offsets(n: int, C: float, rng: np.random.Generator | None = None,
                    retries: int = 5, tol: float = 1e-13) -> np.ndarray:
    """Solve ``sum_{j!=k} 2/(x_k - x_j) + C/x_k = 1`` for ``n`` offsets.

    The solutions are the zeros of the generalized Laguerre polynomial
    ``L_n^(C-1)``, used as the starting guess and polished by Newton.
    """
    if n == 0:
        return np.zeros(0)
    rng = np.random.default_rng(0) if rng is None else rng
    x0 = roots_genlaguerre(n, C - 1.0)[0].astype(float)
    for attempt in range(retries + 1):
        x = x0 if attempt == 0 else x0 * (1.0 + 1e-3 * rng.standard_normal(n))
        try:
            for _ in range(60):
                F = _cluster_defect(x, C)
                d = x[:, None] - x[None, :]
                np.fill_diagonal(d, np.inf)
                J = 2.0 / d ** 2
                np.fill_diagonal(J, -C / x ** 2 - J.sum(axis=1))
                dx = np.linalg.solve(J, -F)
                x = x + dx
                if np.max(np.abs(dx)) <= tol * (1.0 + np.max(np.abs(x))):
                    break
            if np.all(np.isfinite(x)) and np.max(np.abs(_cluster_defect(x, C))) < 1e-8 and np.all(x > 0):
                return np.sort(x)
        except (np.linalg.LinAlgError, FloatingPointError):
            pass
        log.debug("cluster equation retry %d for n=%d C=%g", attempt + 1, n, C)
    raise InitializationError(f"cluster equation for n={n}, C={C} did not converge")


def ground_label(spectrum: LevelSpectrum, sector: PairSector) -> tuple[int, ...]:
    return (sector.M,) + (0,) * (spectrum.L - 1)


def all_labels(L: int, M: int):
    """Every non-interacting label ``n^(0)`` with ``sum = M``."""
    return [tuple(s) for s in PairBasis(L, M, cap=None).states.tolist()]


def initial_roots(spectrum: LevelSpectrum, sector: PairSector, occupancies=None, g0: float | None = None,
                  rng: np.random.Generator | None = None, retries: int = 5, levels=None) -> RootSet:
    """Clustered roots close to ``g = 0`` for the given label, after one Newton polish."""
    eps, C = _level_data(spectrum, sector, levels)
    occ = ground_label(spectrum, sector) if occupancies is None else tuple(int(v) for v in occupancies)
    if len(occ) != spectrum.L or sum(occ) != sector.M or min(occ, default=0) < 0:
        raise InvalidParametersError(f"label {occ} incompatible with M={sector.M}, L={spectrum.L}")
    if g0 is None:
        spacing = float(np.min(np.diff(np.sort(eps)))) if len(eps) > 1 else 1.0
        g0 = 1e-3 * spacing
    if sector.M == 0:
        return RootSet(np.zeros(0, dtype=complex), g0, occ, 0.0)
    rng = np.random.default_rng(0) if rng is None else rng
    parts = []
    for a, n in enumerate(occ):
        if n:
            x = cluster_offsets(n, C[a], rng=rng, retries=retries)
            parts.append(eps[a] - 0.5 * g0 * x)
    t = np.concatenate(parts).astype(complex)
    t = newton_step(t, spectrum, sector, g0, levels=levels)
    F, _ = _defects(t, eps, C, g0)
    scaled = float(np.max(np.abs(F))) * g0 / 2.0
    if not scaled <= 0.1:
        raise InitializationError(f"initial roots off by scaled residual {scaled:.3g}")
    return RootSet(t, g0, occ, float(np.max(np.abs(F))))


def newton_step(roots, spectrum: LevelSpectrum, sector: PairSector, g_eff: float, levels=None,
                max_halvings: int = 30, cond_cap: float = 1e14) -> np.ndarray:
    """One damped Newton update; the step is halved until the defect norm drops."""
    eps, C = _level_data(spectrum, sector, levels)
    t = np.asarray(roots, dtype=complex)
    if t.size == 0:
        return t.copy()
    try:
        F, scale = _defects(t, eps, C, g_eff)
        J = _jacobian(t, eps, C)
    except SingularConfigurationError as exc:
        raise StepRejected(str(exc)) from exc
    if t.size <= 400 and np.linalg.cond(J) > cond_cap:
        raise StepRejected("Jacobian condition number above cap")
    try:
        dt = np.linalg.solve(J, -F)
    except np.linalg.LinAlgError as exc:
        raise StepRejected(f"singular Jacobian: {exc}") from exc
    if not np.all(np.isfinite(dt)):
        raise StepRejected("non-finite Newton step")
    f0 = np.linalg.norm(F)
    # root differences lose digits when clusters are tight, so the floor is relative
    floor = _REL_FLOOR * np.linalg.norm(scale)
    lam = 1.0
    for _ in range(max_halvings + 1):
        trial = t + lam * dt
        try:
            f1 = np.linalg.norm(_defects(trial, eps, C, g_eff)[0])
        except SingularConfigurationError:
            f1 = np.inf
        if f1 < f0:
            return trial
        lam *= 0.5
    if f0 <= floor:
        # already at the rounding floor: nothing left to improve
        return t.copy()
    raise StepRejected(f"no descent after {max_halvings} halvings (|F| = {f0:.3e})")


def solve_roots(roots, spectrum: LevelSpectrum, sector: PairSector, g_eff: float, tol: float = DEFAULT_TOL,
                levels=None, maxiter: int = 40, rel: float = 0.0) -> tuple[np.ndarray, float]:
    """Newton iterations at fixed coupling until ``max |defect| <= tol``.

    With ``rel > 0`` a defect below ``rel`` times the largest term magnitude
    also counts as converged (used on intermediate continuation steps).
    """
    eps, C = _level_data(spectrum, sector, levels)
    t = np.asarray(roots, dtype=complex)
    if t.size == 0:
        return t, 0.0
    res = np.inf
    for it in range(maxiter):
        F, scale = _defects(t, eps, C, g_eff)
        res = float(np.max(np.abs(F)))
        if res <= tol or res <= rel * float(np.max(scale)):
            return t, res
        t_new = newton_step(t, spectrum, sector, g_eff, levels=levels)
        if np.array_equal(t_new, t):
            break
        t = t_new
    F, scale = _defects(t, eps, C, g_eff)
    res = float(np.max(np.abs(F)))
    if res <= tol or res <= rel * float(np.max(scale)):
        return t, res
    raise ConvergenceError(f"Newton stalled at residual {res:.3e} (tol {tol:.1e})", iterations=maxiter)


def _crossing_signature(t, eps, imag_tol):
    real = np.abs(t.imag) <= imag_tol * (1.0 + np.abs(t))
    sig = np.sign(t.real[:, None] - eps[None, :])
    return real, sig


def _tangent(t, eps, C, g):
    # d(defect)/dg = -2/g^2, so J dt/dg = 2/g^2
    J = _jacobian(t, eps, C)
    return np.linalg.solve(J, np.full(t.size, 2.0 / g ** 2, dtype=complex))


def continue_in_g(rootset: RootSet, g_target: float, spectrum: LevelSpectrum, sector: PairSector, *,
                  levels=None, tol: float = DEFAULT_TOL, initial_step: float = 0.25, max_step: float = 1.0,
                  min_step: float = 1e-10, successes_to_double: int = 3, record: bool = True) -> RootSet:
    """Follow a root set from ``rootset.g_eff`` to ``g_target`` along a geometric path.

    Steps are taken in ``log g``: halved when the corrector fails or a real root
    would cross a level, doubled after ``successes_to_double`` accepted steps.
    """
    if not g_target > 0:
        raise InvalidParametersError("target coupling must be positive")
    eps, C = _level_data(spectrum, sector, levels)
    g = float(rootset.g_eff)
    t = np.asarray(rootset.roots, dtype=complex).copy()
    traj = list(rootset.trajectory)
    if t.size == 0:
        out = replace(rootset, g_eff=g_target, residual=0.0, trajectory=traj)
        if record:
            out.trajectory.append(TrajectoryPoint(g_target, t.copy(), 0.0))
        return out
    if g == g_target:
        t, res = solve_roots(t, spectrum, sector, g, tol=tol, levels=levels)
        return replace(rootset, roots=t, residual=res, trajectory=traj)

    loose = 1e-11
    t, res = solve_roots(t, spectrum, sector, g, tol=tol, levels=levels, rel=loose)
    if record and not traj:
        traj.append(TrajectoryPoint(g, t.copy(), res))
    total = np.log(g_target / g)
    direction = np.sign(total)
    h = min(initial_step, abs(total))
    streak = 0
    while True:
        remaining = np.log(g_target / g) * direction
        if remaining <= 0:
            break
        step = min(h, remaining)
        last = step == remaining
        g_new = g_target if last else g * np.exp(direction * step)
        try:
            pred = t + _tangent(t, eps, C, g) * (g_new - g)
            t_new, res = solve_roots(pred, spectrum, sector, g_new, tol=tol, rel=0.0 if last else loose,
                                     levels=levels, maxiter=25)
            real0, sig0 = _crossing_signature(t, eps, 1e-10)
            real1, sig1 = _crossing_signature(t_new, eps, 1e-10)
            both = real0 & real1
            if np.any(sig0[both] != sig1[both]):
                raise StepRejected("a real root crossed a level")
        except (StepRejected, ConvergenceError, SingularConfigurationError, np.linalg.LinAlgError) as exc:
            h *= 0.5
            streak = 0
            log.debug("continuation step rejected at g=%.6g (%s); step -> %.3g", g, exc, h)
            if h < min_step:
                raise ContinuationStuckError("continuation step underflow", last_good_g=g) from exc
            continue
        t, g = t_new, g_new
        if record:
            traj.append(TrajectoryPoint(g, t.copy(), res))
        streak += 1
        if streak >= successes_to_double:
            h = min(2 * h, max_step)
            streak = 0
        if last:
            break
    t, res = solve_roots(t, spectrum, sector, g_target, tol=tol, levels=levels)
    return RootSet(t, g_target, rootset.label, res, traj)


def solve_state(spectrum: LevelSpectrum, sector: PairSector, g_eff: float, label=None, *, tol: float = DEFAULT_TOL,
                g0: float | None = None, seed: int = 42, retries: int = 3, levels=None,
                record: bool = False) -> RootSet:
    """Roots of one eigenstate at ``g_eff``, starting from its ``g -> 0`` label.

    On a stuck continuation the start is re-drawn with a jitter and retried.
    """
    rng = np.random.default_rng(seed)
    last_exc = None
    for attempt in range(retries + 1):
        start = initial_roots(spectrum, sector, label, g0=g0, rng=rng, levels=levels)
        if attempt:
            jitter = 1e-6 * (start.roots - np.asarray(
                [spectrum.epsilon[np.argmin(np.abs(spectrum.epsilon - r.real))] for r in start.roots]))
            start = replace(start, roots=start.roots + jitter * rng.standard_normal(start.M))
        try:
            return continue_in_g(start, g_eff, spectrum, sector, tol=tol, levels=levels, record=record)
        except ContinuationStuckError as exc:
            last_exc = exc
            log.info("continuation stuck (attempt %d): %s", attempt + 1, exc)
    raise last_exc


def energy_from_roots(rootset: RootSet, spectrum: LevelSpectrum, sector: PairSector,
                      imag_tol: float = 1e-10) -> float:
    """``sum eps_a nu_a + 2 sum Re t_i``; imaginary parts must cancel."""
    t = np.asarray(rootset.roots, dtype=complex)
    im = float(np.sum(t.imag))
    if abs(im) > imag_tol * max(1.0, float(np.sum(np.abs(t)))):
        raise InconsistentRootSetError(f"imaginary parts do not cancel (sum Im t = {im:.3e})")
    return float(spectrum.epsilon @ np.asarray(sector.nu_per_level) + 2.0 * np.sum(t.real))


def bethe_state(roots, spectrum: LevelSpectrum, sector: PairSector, levels=None) -> np.ndarray:
    """Normalized vector ``prod_i Sigma+(t_i) |nu>`` in the lexicographic pair basis.

    ``Sigma+(t) = sum_a b_a+ / (t - xi_a)`` with ``xi`` the spectrum energies
    unless ``levels`` is given.
    """
    xi, C = _level_data(spectrum, sector, levels)
    t = np.asarray(roots, dtype=complex)
    basis = PairBasis(spectrum.L, 0, cap=None)
    vec = np.ones(1, dtype=complex)
    for m, tm in enumerate(t):
        nxt = PairBasis(spectrum.L, m + 1, cap=None)
        vec = raising_matrix(basis, nxt, 1.0 / (tm - xi), C) @ vec
        basis = nxt
    # fix the global phase so the largest component is real positive
    k = int(np.argmax(np.abs(vec)))
    vec = vec * (np.abs(vec[k]) / vec[k])
    return vec / np.linalg.norm(vec)


def pair_vs_quasiparticle(spectrum: LevelSpectrum, M: int, g_eff: float, level: int, **kwargs) -> dict:
    """Excitation energies of moving one pair to ``level`` versus breaking one pair.

    The broken pair leaves one unpaired boson at level 0 and one at ``level``;
    both excitations conserve the boson number.  Only the two energies are
    reported; no equality is implied at finite size.
    """
    if not 0 < level < spectrum.L or M < 1:
        raise InvalidParametersError("need 0 < level < L and M >= 1")
    if spectrum.omega[0] != 1 or spectrum.omega[level] != 1 or np.any(spectrum.nu):
        raise InvalidParametersError("defined for non-degenerate, seniority-zero spectra")
    nu0 = (0,) * spectrum.L
    ground_sector = PairSector(M, nu0)
    e0 = energy_from_roots(solve_state(spectrum, ground_sector, g_eff, **kwargs), spectrum, ground_sector)
    label = [M - 1] + [0] * (spectrum.L - 1)
    label[level] += 1
    e_pair = energy_from_roots(solve_state(spectrum, ground_sector, g_eff, tuple(label), **kwargs),
                               spectrum, ground_sector)
    nu_q = [0] * spectrum.L
    nu_q[0] = 1
    nu_q[level] = 1
    q_sector = PairSector(M - 1, tuple(nu_q))
    e_q = energy_from_roots(solve_state(spectrum, q_sector, g_eff, **kwargs), spectrum, q_sector)
    return {"ground": e0, "pair_excitation": e_pair - e0, "quasiparticle_pair": e_q - e0}


def write_trajectory_csv(rootset: RootSet, path: str | Path) -> None:
    """Columns ``g, root_index, re_t, im_t, residual``."""
    points = rootset.trajectory or [TrajectoryPoint(rootset.g_eff, rootset.roots, rootset.residual)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["g", "root_index", "re_t", "im_t", "residual"])
        for p in points:
            for i, r in enumerate(p.roots):
                w.writerow([f"{p.g_eff:.17g}", i, f"{r.real:.17g}", f"{r.imag:.17g}", f"{p.residual:.17g}"])


def enumerate_spectrum(spectrum: LevelSpectrum, sector: PairSector, g_eff: float, **kwargs) -> np.ndarray:
    """Energies of every label in the sector, sorted; small sizes only."""
    labels = all_labels(spectrum.L, sector.M)
    energies = [energy_from_roots(solve_state(spectrum, sector, g_eff, lab, **kwargs), spectrum, sector)
                for lab in labels]
    return np.sort(np.asarray(energies))


__all__ = [
    "RootSet", "TrajectoryPoint", "richardson_residual", "richardson_jacobian", "cluster_offsets",
    "initial_roots", "newton_step", "solve_roots", "continue_in_g", "solve_state", "energy_from_roots",
    "bethe_state", "pair_vs_quasiparticle", "write_trajectory_csv", "enumerate_spectrum",
    "ground_label", "all_labels",
]

