"""Exact, continuum and mean-field solvers for attractive bosonic pairing."""

from .continuum import (
    Branch,
    ContinuumSolution,
    classify_phase,
    critical_coupling,
    solve_b,
    solve_continuum,
    solve_gap_equations,
    strong_closed_form,
    weak_energy,
)
from .errors import BosePairError
from .fock import PairBasis, build_hamiltonian, diagonalize
from .integrability import build_charge, build_two_parameter_hamiltonian, commutator_norm
from .meanfield import MeanFieldSolution, Status, solve_modified_mf, solve_naive_mf
from .model import Coupling, Level, LevelSpectrum, PairSector, equal_spacing_spectrum
from .richardson import RootSet, energy_from_roots, solve_state

__version__ = "0.1.0"
