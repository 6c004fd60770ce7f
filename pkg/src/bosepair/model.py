"""Level spectra, pair sectors and coupling conventions.

Sign convention used throughout the package: the Hamiltonian is

    H = sum_a eps_a n_a - g_eff B+ B-,     g_eff = g_bare / L > 0,

so a positive coupling always means attraction.  Solvers that work with the
rational (Richardson) equations map this to ``-2/g_eff`` on the right-hand
side; nothing else in the package needs to know about the repulsive form.

Energies are in units where the equal-spacing bandwidth is one (``L * eps_1 = 1``).
General spectra are accepted as given, with no implicit rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidSectorError, InvalidSpectrumError


@dataclass(frozen=True)
class Level:
    epsilon: float
    omega: int = 1
    nu: int = 0
    # momentum-type labels; the energy never depends on them
    sigma: int = 1

    @property
    def charge(self) -> int:
        return self.omega + self.nu


def charge(level: Level) -> int:
    """Return the SU(1,1) charge ``C = Omega + nu`` of a level."""
    return level.omega + level.nu


def _check_level(lv: Level) -> None:
    if int(lv.omega) != lv.omega or lv.omega < 1:
        raise InvalidSpectrumError(f"degeneracy must be a positive integer, got {lv.omega!r}")
    if int(lv.nu) != lv.nu or lv.nu < 0:
        raise InvalidSpectrumError(f"seniority must be a non-negative integer, got {lv.nu!r}")
    if lv.omega == 1 and lv.nu > 1:
        raise InvalidSpectrumError(
            f"non-degenerate level at eps={lv.epsilon} can carry nu in {{0, 1}} only, got {lv.nu}"
        )
    if not np.isfinite(lv.epsilon):
        raise InvalidSpectrumError("level energies must be finite")


@dataclass(frozen=True)
class LevelSpectrum:
    """Ordered single-particle levels; degenerate shells are collapsed into one entry."""

    levels: tuple[Level, ...]

    def __post_init__(self):
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 1:
            raise InvalidSpectrumError("spectrum needs at least one level")
        for lv in levels:
            _check_level(lv)
        eps = [lv.epsilon for lv in levels]
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise InvalidSpectrumError("level energies must be strictly increasing")

    @classmethod
    def from_arrays(cls, epsilon: Sequence[float], omega: Sequence[int] | None = None,
                    nu: Sequence[int] | None = None) -> "LevelSpectrum":
        n = len(epsilon)
        omega = [1] * n if omega is None else list(omega)
        nu = [0] * n if nu is None else list(nu)
        if not (len(omega) == len(nu) == n):
            raise InvalidSpectrumError("epsilon, omega and nu must have equal length")
        return cls(tuple(Level(float(e), int(o), int(v)) for e, o, v in zip(epsilon, omega, nu)))

    @property
    def L(self) -> int:
        return len(self.levels)

    @property
    def epsilon(self) -> np.ndarray:
        return np.array([lv.epsilon for lv in self.levels], dtype=float)

    @property
    def omega(self) -> np.ndarray:
        return np.array([lv.omega for lv in self.levels], dtype=int)

    @property
    def nu(self) -> np.ndarray:
        return np.array([lv.nu for lv in self.levels], dtype=int)

    @property
    def charges(self) -> np.ndarray:
        return self.omega + self.nu

    @property
    def min_spacing(self) -> float:
        if self.L < 2:
            return 1.0
        return float(np.min(np.diff(self.epsilon)))


def equal_spacing_spectrum(L: int) -> LevelSpectrum:
    """Non-degenerate levels ``eps_a = a / L`` for ``a = 0 .. L-1``."""
    if int(L) != L or L < 2:
        raise InvalidSpectrumError(f"equal-spacing spectrum needs L >= 2, got {L!r}")
    return LevelSpectrum.from_arrays(np.arange(L) / L)


@dataclass(frozen=True)
class Coupling:
    g_bare: float
    L: int

    def __post_init__(self):
        if not self.g_bare > 0:
            raise ValueError("g_bare must be positive (attraction)")
        if self.L < 1:
            raise ValueError("L must be positive")

    @property
    def g_eff(self) -> float:
        return self.g_bare / self.L


@dataclass(frozen=True)
class PairSector:
    """Fixed number of pairs ``M`` on top of frozen unpaired bosons ``nu``."""

    M: int
    nu_per_level: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "nu_per_level", tuple(int(v) for v in self.nu_per_level))
        if int(self.M) != self.M or self.M < 0:
            raise InvalidSectorError(f"number of pairs must be a non-negative integer, got {self.M!r}")
        if any(v < 0 for v in self.nu_per_level):
            raise InvalidSectorError("seniorities must be non-negative")

    @classmethod
    def for_spectrum(cls, spectrum: LevelSpectrum, M: int,
                     nu: Iterable[int] | None = None) -> "PairSector":
        sector = cls(M, tuple(spectrum.nu) if nu is None else tuple(nu))
        sector.validate(spectrum)
        return sector

    @property
    def N_b(self) -> int:
        return sum(self.nu_per_level) + 2 * self.M

    def validate(self, spectrum: LevelSpectrum) -> None:
        if len(self.nu_per_level) != spectrum.L:
            raise InvalidSectorError(
                f"sector has {len(self.nu_per_level)} seniorities for {spectrum.L} levels")
        for lv, v in zip(spectrum.levels, self.nu_per_level):
            if lv.omega == 1 and v > 1:
                raise InvalidSectorError("non-degenerate level can carry nu in {0, 1} only")

    def charges(self, spectrum: LevelSpectrum) -> np.ndarray:
        self.validate(spectrum)
        return spectrum.omega + np.asarray(self.nu_per_level, dtype=int)


def density(spectrum: LevelSpectrum, sector: PairSector) -> float:
    """Particle density ``rho = N_b / L``."""
    return sector.N_b / spectrum.L


def read_spectrum(path: str | Path) -> LevelSpectrum:
    """Parse ``epsilon omega nu`` lines; ``#`` starts a comment line."""
    eps, omega, nu = [], [], []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidSpectrumError(f"cannot read spectrum file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InvalidSpectrumError(f"{path}:{lineno}: expected 'epsilon omega nu', got {raw!r}")
        try:
            e = float(parts[0])
            o, v = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise InvalidSpectrumError(f"{path}:{lineno}: {exc}") from exc
        eps.append(e)
        omega.append(o)
        nu.append(v)
    if not eps:
        raise InvalidSpectrumError(f"{path}: no levels found")
    return LevelSpectrum.from_arrays(eps, omega, nu)


def write_spectrum(spectrum: LevelSpectrum, path: str | Path) -> None:
    lines = ["# epsilon omega nu"]
    lines += [f"{lv.epsilon:.17g} {lv.omega} {lv.nu}" for lv in spectrum.levels]
    Path(path).write_text("\n".join(lines) + "\n")
