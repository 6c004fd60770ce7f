"""Large-L limit of the attractive model with equal level spacing.

Energies are measured in units of the bandwidth, so levels fill ``[0, 1]``
with unit density, ``rho = N_b / L`` and ``g`` is the bare coupling.

Weak coupling keeps a condensate on the lowest level.  Everything is fixed by
one number ``b`` solving ``b = g (f(b) + rho)`` with

    f(b) = 1 - int_0^1 sqrt(eps / (eps + b)) d eps.

Strong coupling has no condensate.  The root density spans ``[a, b]`` with
``mu = (a + b)/2``, ``Delta = (b - a)/2`` and a finite excitation gap
``sqrt(mu^2 - Delta^2)``.  The branches meet at ``g_c = 2 / ln(1 + 2/rho)``.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError, DomainError, NoSolutionError

QUAD_TOL = 1e-12


class Branch(str, enum.Enum):
    WEAK = "Weak"
    STRONG = "Strong"


def _check_rho(rho):
    if not rho > 0:
        raise DomainError(f"density must be positive, got {rho!r}")


def _check_g(g):
    if not g > 0:
        raise DomainError(f"coupling must be positive, got {g!r}")


def f_equal_spacing(b: float) -> float:
    """Closed form ``b asinh(1/sqrt b) + 1 - sqrt(1 + b)``."""
    if b < 0:
        raise DomainError(f"f(b) needs b >= 0, got {b}")
    if b == 0:
        return 0.0
    return float(b * np.arcsinh(1.0 / np.sqrt(b)) + 1.0 - np.sqrt(1.0 + b))


def f_quadrature(b: float, points: int | None = None) -> float:
    """``1 - int_0^1 sqrt(eps/(eps+b))`` by quadrature in ``eps = u^2``.

    ``points=None`` uses adaptive QUADPACK; an integer gives a plain midpoint
    rule with that many nodes in ``u``.
    """
    if b < 0:
        raise DomainError(f"f(b) needs b >= 0, got {b}")
    if b == 0:
        return 0.0

    def integrand(u):
        return 2.0 * u * u / np.sqrt(u * u + b)

    if points is None:
        val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    else:
        u = (np.arange(points) + 0.5) / points
        val = float(np.mean(integrand(u)))
    return float(1.0 - val)


def f_general(b: float, level_density: Callable[[float], float], eps_max: float = 1.0) -> float:
    """Depletion function for a level density ``w`` on ``[0, eps_max]`` (levels per ``L``).

    ``f(b) = int w(eps) (1 - sqrt(eps / (eps + b))) d eps``; reduces to the
    equal-spacing form for ``w = 1`` on ``[0, 1]``.
    """
    if b < 0:
        raise DomainError(f"f(b) needs b >= 0, got {b}")
    if b == 0:
        return 0.0
    umax = np.sqrt(eps_max)

    def integrand(u):
        e = u * u
        return 2.0 * u * level_density(e) * (1.0 - u / np.sqrt(e + b))

    val, _ = integrate.quad(integrand, 0.0, umax, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return float(val)


def solve_b(g_bare: float, rho: float, f: Callable[[float], float] | None = None,
            tol: float = 1e-12) -> float:
    """Root of ``b = g (f(b) + rho)`` inside ``[g rho, g (rho + 1)]``.

    Brent on the bracket, then Newton polish with a numerical slope.
    """
    _check_g(g_bare)
    _check_rho(rho)
    f = f_equal_spacing if f is None else f

    def F(b):
        return b - g_bare * (f(b) + rho)

    lo, hi = g_bare * rho, g_bare * (rho + 1.0)
    flo, fhi = F(lo), F(hi)
    if flo >= 0:
        return lo
    if fhi <= 0:
        return hi
    b = optimize.brentq(F, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    for _ in range(5):
        r = F(b)
        if abs(r) <= tol * max(1.0, b):
            break
        h = 1e-7 * max(b, 1e-300)
        slope = (F(b + h) - F(b - h)) / (2 * h)
        b_new = b - r / slope
        if not lo <= b_new <= hi or abs(F(b_new)) >= abs(r):
            break
        b = b_new
    return float(b)


def phonon_energy(epsilon, b):
    """Excitation energy ``sqrt(eps (eps + b))``."""
    epsilon = np.asarray(epsilon, dtype=float)
    if np.any(epsilon < 0) or b < 0:
        raise DomainError("phonon energy needs eps >= 0 and b >= 0")
    out = np.sqrt(epsilon * (epsilon + b))
    return float(out) if out.ndim == 0 else out


def occupation_weak(epsilon, b):
    """Mean pair occupation ``(eps + b/2)/sqrt(eps (eps + b)) - 1`` of an excited level."""
    epsilon = np.asarray(epsilon, dtype=float)
    if np.any(epsilon <= 0):
        raise DomainError("occupation formula is for excited levels (eps > 0); "
                          "the lowest level is the condensate, use depletion()")
    if b < 0:
        raise DomainError("b must be non-negative")
    out = (epsilon + 0.5 * b) / np.sqrt(epsilon * (epsilon + b)) - 1.0
    return float(out) if out.ndim == 0 else out


def depletion(b: float, L: float = 1.0) -> float:
    """Bosons outside the condensate, ``L (sqrt(1 + b) - 1)``."""
    if b < 0:
        raise DomainError("b must be non-negative")
    return float(L * (np.sqrt(1.0 + b) - 1.0))


def _sqrt_integral(x0, x1, delta):
    # int_{x0}^{x1} sqrt(x^2 - delta^2) dx for delta <= x0 <= x1
    def F(x):
        s = np.sqrt(max(x * x - delta * delta, 0.0))
        if delta == 0:
            return 0.5 * x * s
        return 0.5 * (x * s - delta * delta * np.log((x + s) / delta))
    return F(x1) - F(x0)


def phonon_integral(b: float) -> float:
    """``int_0^1 sqrt(eps (eps + b)) d eps`` in closed form."""
    return float(_sqrt_integral(0.5 * b, 1.0 + 0.5 * b, 0.5 * b))


def phonon_integral_quad(b: float) -> float:
    """Quadrature twin of :func:`phonon_integral`."""
    val, _ = integrate.quad(lambda u: 2.0 * u * u * np.sqrt(u * u + b), 0.0, 1.0,
                            epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return float(val)


def weak_energy(g_bare: float, rho: float, b: float | None = None) -> float:
    """Ground-state energy per level on the condensate branch.

    ``-1/2 + int sqrt(eps(eps+b)) - (b/2)(rho + 1) + b^2 / (4 g)``; the last
    sign makes the expression stationary in ``b`` at the solution of
    :func:`solve_b`.
    """
    _check_g(g_bare)
    _check_rho(rho)
    if b is None:
        b = solve_b(g_bare, rho)
    return float(-0.5 + phonon_integral(b) - 0.5 * b * (rho + 1.0) + b * b / (4.0 * g_bare))


def critical_coupling(rho: float) -> float:
    """``2 / ln(1 + 2/rho)``."""
    _check_rho(rho)
    return float(2.0 / np.log1p(2.0 / rho))


def strong_closed_form(g_bare: float, rho: float) -> tuple[float, float, float, float]:
    """``(C, mu, delta, gap)`` of the gapped branch from the explicit formulas."""
    _check_g(g_bare)
    _check_rho(rho)
    if g_bare <= critical_coupling(rho):
        raise NoSolutionError(f"no gapped solution for g={g_bare} <= g_c={critical_coupling(rho)}")
    C = (2.0 + rho) / np.expm1(2.0 / g_bare)
    gap = (2.0 * C - rho * (rho + 2.0)) / (2.0 * (rho + 2.0))
    delta2 = C * C - 2.0 * C * gap
    mu = (C * C + delta2) / (2.0 * C)
    return float(C), float(mu), float(np.sqrt(delta2)), float(gap)


def gap_residuals(mu: float, delta: float, g_bare: float, rho: float) -> tuple[float, float]:
    """Residuals of the log (stationarity in Delta) and number equations."""
    A = np.sqrt(max(mu * mu - delta * delta, 0.0))
    B = np.sqrt(max((1.0 + mu) ** 2 - delta * delta, 0.0))
    r1 = np.log(1.0 + mu + B) - np.log(mu + A) - 2.0 / g_bare
    r2 = B - A - (rho + 1.0)
    return float(r1), float(r2)


def solve_gap_equations(g_bare: float, rho: float, tol: float = 1e-10, maxiter: int = 50,
                        seed: tuple[float, float] | None = None) -> tuple[float, float]:
    """``(mu, delta)`` of the gapped branch by damped Newton.

    Unknowns are ``mu`` and the gap ``A = sqrt(mu^2 - delta^2)``, which keeps
    the square roots real along the iteration.
    """
    _check_g(g_bare)
    _check_rho(rho)
    if g_bare <= critical_coupling(rho):
        raise NoSolutionError(f"no gapped solution for g={g_bare} <= g_c={critical_coupling(rho)}")
    if seed is None:
        _, mu, delta, A = strong_closed_form(g_bare, rho)
    else:
        mu, delta = seed
        A = np.sqrt(max(mu * mu - delta * delta, 0.0))

    def resid(mu, A):
        B = np.sqrt(1.0 + 2.0 * mu + A * A)
        return np.array([np.log(1.0 + mu + B) - np.log(mu + A) - 2.0 / g_bare, B - A - (rho + 1.0)]), B

    x = np.array([mu, A], dtype=float)
    R, B = resid(*x)
    for it in range(maxiter):
        if np.max(np.abs(R)) <= tol:
            break
        mu, A = x
        J = np.array([
            [(1.0 + 1.0 / B) / (1.0 + mu + B) - 1.0 / (mu + A), (A / B) / (1.0 + mu + B) - 1.0 / (mu + A)],
            [1.0 / B, A / B - 1.0],
        ])
        try:
            dx = np.linalg.solve(J, -R)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular gap-equation Jacobian at mu={mu}, A={A}", it) from exc
        lam = 1.0
        while lam > 1e-6:
            trial = x + lam * dx
            if trial[1] >= 0 and trial[0] >= trial[1]:
                R_t, B_t = resid(*trial)
                if np.all(np.isfinite(R_t)) and np.linalg.norm(R_t) < np.linalg.norm(R):
                    break
            lam *= 0.5
        else:
            raise ConvergenceError(f"gap equations: no descent at residual {np.max(np.abs(R)):.3e}", it)
        x, R, B = trial, R_t, B_t
    else:
        raise ConvergenceError(f"gap equations did not converge (residual {np.max(np.abs(R)):.3e})", maxiter)
    mu, A = x
    return float(mu), float(np.sqrt(mu * mu - A * A))


def strong_energy(mu: float, delta: float, g_bare: float, rho: float) -> float:
    """``-1/2 + int sqrt((eps+mu)^2 - Delta^2) - (rho+1) mu + Delta^2 / g``."""
    if mu < delta or delta < 0:
        raise DomainError("need mu >= delta >= 0")
    integral = _sqrt_integral(mu, 1.0 + mu, delta)
    return float(-0.5 + integral - (rho + 1.0) * mu + delta * delta / g_bare)


def strong_energy_quad(mu: float, delta: float, g_bare: float, rho: float) -> float:
    """Quadrature twin of :func:`strong_energy`."""
    val, _ = integrate.quad(lambda e: np.sqrt((e + mu) ** 2 - delta ** 2), 0.0, 1.0,
                            epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return float(-0.5 + val - (rho + 1.0) * mu + delta * delta / g_bare)


def classify_phase(g_bare: float, rho: float) -> Branch:
    """Strong iff ``g > g_c(rho)``; the boundary itself counts as Weak."""
    _check_g(g_bare)
    return Branch.STRONG if g_bare > critical_coupling(rho) else Branch.WEAK


def consistency_depletion_at_gc(rho: float, L: float = 1.0, points: int | None = None) -> float:
    """``|N'(b) - N_b| / N_b`` at ``g = g_c(rho)``.

    ``points=None`` uses the closed-form ``f``; an integer uses the midpoint
    rule with that many nodes (see :func:`f_quadrature`).
    """
    _check_rho(rho)
    gc = critical_coupling(rho)
    f = None if points is None else (lambda b: f_quadrature(b, points))
    b = solve_b(gc, rho, f=f)
    return abs(depletion(b, L) - rho * L) / (rho * L)


@dataclass
class ContinuumSolution:
    branch: Branch
    g_bare: float
    rho: float
    b: float
    mu: float
    delta: float
    gap: float
    energy_per_level: float
    depletion_fraction: float
    condensate_fraction: float
    finite_size_suspect: bool = False


def solve_continuum(g_bare: float, rho: float, L: int | None = None) -> ContinuumSolution:
    """Both-branch driver.

    On the weak branch ``mu = delta = b/2``; on the strong branch ``b`` reports
    the upper endpoint ``mu + delta`` of the root density.  With ``L`` given,
    weak results with ``b < 10 / L`` are flagged as finite-size suspect.
    """
    branch = classify_phase(g_bare, rho)
    if branch is Branch.WEAK:
        b = solve_b(g_bare, rho)
        dep = min(depletion(b) / rho, 1.0)
        return ContinuumSolution(branch, g_bare, rho, b, 0.5 * b, 0.5 * b, 0.0, weak_energy(g_bare, rho, b),
                                 dep, 1.0 - dep, bool(L is not None and b < 10.0 / L))
    mu, delta = solve_gap_equations(g_bare, rho)
    gap = float(np.sqrt(max(mu * mu - delta * delta, 0.0)))
    return ContinuumSolution(branch, g_bare, rho, mu + delta, mu, delta, gap,
                             strong_energy(mu, delta, g_bare, rho), 1.0, 0.0)


SWEEP_COLUMNS = ["g_bare", "rho", "branch", "b", "mu", "delta", "gap", "energy_per_level",
                 "depletion_fraction", "condensate_fraction"]


def write_sweep_csv(solutions, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for s in solutions:
            row = asdict(s)
            w.writerow([s.branch.value if c == "branch" else f"{row[c]:.17g}" for c in SWEEP_COLUMNS])
