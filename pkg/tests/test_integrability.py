import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosepair.errors import InvalidParametersError
from bosepair.fock import build_hamiltonian
from bosepair.integrability import (
    build_charge,
    build_two_parameter_hamiltonian,
    commutator_norm,
    eigenvector_residual,
    identity_offset,
    shared_eigenbasis_check,
    spin_product,
)
from bosepair.fock import PairBasis
from bosepair.model import LevelSpectrum, PairSector
from bosepair.richardson import bethe_state, solve_state

from conftest import equal


def test_two_level_charges_commute():
    sp, sec = equal(2, 3)
    xi = [0.0, 0.7]
    for g in (0.1, 1.0, 7.0):
        Q = [build_charge(i, sp, xi, g, sec) for i in range(2)]
        assert commutator_norm(Q[0], Q[1]) <= 1e-12


def test_infinite_coupling_drops_number_term():
    sp, sec = equal(3, 2)
    xi = [0.0, 0.4, 1.1]
    inf = build_charge(1, sp, xi, np.inf, sec).matrix
    big = build_charge(1, sp, xi, 1e12, sec).matrix
    np.testing.assert_allclose(inf, big, atol=1e-10)


def test_duplicate_inhomogeneities_rejected():
    sp, sec = equal(3, 2)
    with pytest.raises(InvalidParametersError):
        build_charge(0, sp, [0.0, 0.5, 0.5], 1.0, sec)
    with pytest.raises(InvalidParametersError):
        build_two_parameter_hamiltonian(sp, [0.1, 0.1, 0.3], 1.0, sec)


def test_spin_product_matches_explicit_two_level_form():
    # (S_i.S_j) = -(b_i+ b_j + h.c.)/2 + (1 + N_i)(1 + N_j)/4 for non-degenerate levels
    sp, sec = equal(2, 2)
    basis = PairBasis(2, 2)
    S = spin_product(basis, sp, sec, 0, 1)
    N = 2 * basis.states
    # states (0,2), (1,1), (2,0); hopping amplitudes sqrt((n_i+1)(n_i+C)) sqrt(n_j (n_j-1+C))
    ref = np.diag(0.25 * (1 + N[:, 0]) * (1 + N[:, 1]))
    ref[0, 1] = ref[1, 0] = ref[1, 2] = ref[2, 1] = -0.5 * 2.0
    np.testing.assert_allclose(S, ref, atol=1e-14)


def test_commutator_norm_trivial_cases():
    A = np.random.default_rng(0).normal(size=(5, 5))
    assert commutator_norm(A, A) == 0.0
    assert commutator_norm(np.diag([1.0, 2, 3]), np.diag([4.0, 5, 6])) == 0.0
    with pytest.raises(InvalidParametersError):
        commutator_norm(np.eye(2), np.eye(3))


@given(L=st.integers(3, 4), seed=st.integers(0, 10_000), g=st.floats(0.05, 5.0))
@settings(max_examples=12, deadline=None)
def test_charges_commute_pairwise(L, seed, g):
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-1, 2, L)
    if np.min(np.abs(np.subtract.outer(xi, xi)) + np.eye(L)) < 1e-3:
        xi = np.arange(L) + 0.1 * rng.uniform(size=L)
    sp, sec = equal(L, 2)
    Q = [build_charge(i, sp, xi, g, sec).matrix for i in range(L)]
    for i in range(L):
        for j in range(L):
            assert commutator_norm(Q[i], Q[j]) <= 1e-10 * np.linalg.norm(Q[i]) * np.linalg.norm(Q[j])


def test_charges_commute_with_degenerate_shells():
    sp = LevelSpectrum.from_arrays([0.0, 0.3, 1.0], [2, 1, 3], [1, 1, 2])
    sec = PairSector.for_spectrum(sp, 2)
    Q = [build_charge(i, sp, [0.2, -0.4, 0.9], 0.7, sec).matrix for i in range(3)]
    assert max(commutator_norm(Q[i], Q[j]) for i in range(3) for j in range(3)) <= 1e-12


def test_two_parameter_hamiltonian_is_linear_combination_of_charges():
    sp, sec = equal(4, 2)
    xi = [0.1, -0.3, 0.8, 1.3]
    g = 0.6
    H = build_two_parameter_hamiltonian(sp, xi, g, sec).matrix
    combo = g * sum(e * build_charge(i, sp, xi, g, sec).matrix for i, e in enumerate(sp.epsilon))
    np.testing.assert_allclose(H, H.T, atol=0)
    np.testing.assert_allclose(H, combo, atol=1e-12)


def test_equal_parameters_reproduce_pairing_hamiltonian():
    sp, sec = equal(3, 2)
    g = 0.7
    Hx = build_two_parameter_hamiltonian(sp, sp.epsilon, g, sec)
    H = build_hamiltonian(sp, sec, g)
    assert commutator_norm(Hx, H) <= 1e-10
    np.testing.assert_allclose(Hx.matrix - H.matrix, identity_offset(sp, sec, g) * np.eye(len(H.matrix)),
                               atol=1e-12)


def test_equal_parameter_identity_with_seniority():
    sp = LevelSpectrum.from_arrays([0.0, 0.3, 1.0], [1, 2, 3], [1, 1, 2])
    sec = PairSector.for_spectrum(sp, 2)
    g = 0.45
    Hx = build_two_parameter_hamiltonian(sp, sp.epsilon, g, sec).matrix
    H = build_hamiltonian(sp, sec, g).matrix
    np.testing.assert_allclose(Hx - H, identity_offset(sp, sec, g) * np.eye(len(H)), atol=1e-12)


def test_free_two_parameter_hamiltonian_is_diagonal():
    sp, sec = equal(3, 2)
    H = build_two_parameter_hamiltonian(sp, [0.0, 2.0, 5.0], 0.0, sec).matrix
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0


def test_trap_like_inhomogeneities_give_symmetric_matrix():
    sp, sec = equal(4, 2)
    H = build_two_parameter_hamiltonian(sp, (sp.epsilon + 0.1) ** 2, 0.5, sec).matrix
    np.testing.assert_array_equal(H, H.T)


def test_shared_eigenbasis_small_case():
    sp, sec = equal(2, 1)
    H = build_two_parameter_hamiltonian(sp, sp.epsilon, 1.0, sec)
    Q = [build_charge(i, sp, sp.epsilon, 1.0, sec) for i in range(2)]
    assert shared_eigenbasis_check(H, Q) <= 1e-10


def test_shared_eigenbasis_free_limit_is_exact():
    sp, sec = equal(3, 2)
    D = build_two_parameter_hamiltonian(sp, [0.0, 1.0, 3.0], 0.0, sec).matrix
    assert shared_eigenbasis_check(D, [np.diag(np.arange(len(D), dtype=float))]) == 0.0


def test_shared_eigenbasis_detects_broken_commutation():
    sp, sec = equal(3, 2)
    xi = [0.0, 0.45, 1.2]
    Q = [build_charge(i, sp, xi, 0.8, sec).matrix for i in range(3)]
    H = Q[0] + 0.5 * Q[1]
    rng = np.random.default_rng(3)
    P = rng.normal(size=Q[1].shape)
    bad = Q[1] + 1e-3 * (P + P.T)
    assert shared_eigenbasis_check(H, Q) <= 1e-10
    assert shared_eigenbasis_check(H, [bad]) > 1e-5


def test_bethe_states_built_on_inhomogeneities_diagonalize_family():
    sp, sec = equal(4, 2)
    xi = np.array([-0.2, 0.15, 0.6, 1.4])
    g = 0.5
    H = build_two_parameter_hamiltonian(sp, xi, g, sec)
    for label in [(2, 0, 0, 0), (1, 1, 0, 0), (0, 0, 1, 1)]:
        rs = solve_state(sp, sec, g, label, levels=xi)
        v = bethe_state(rs.roots, sp, sec, levels=xi)
        assert eigenvector_residual(H, v) <= 1e-9
