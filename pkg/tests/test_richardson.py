import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosepair.errors import (
    ContinuationStuckError,
    InconsistentRootSetError,
    InvalidParametersError,
    SingularConfigurationError,
    StepRejected,
)
from bosepair import richardson
from bosepair.fock import build_hamiltonian, diagonalize
from bosepair.model import LevelSpectrum, PairSector, equal_spacing_spectrum
from bosepair.richardson import (
    RootSet,
    all_labels,
    bethe_state,
    cluster_offsets,
    continue_in_g,
    energy_from_roots,
    enumerate_spectrum,
    initial_roots,
    newton_step,
    pair_vs_quasiparticle,
    richardson_jacobian,
    richardson_residual,
    solve_state,
    write_trajectory_csv,
)

from conftest import equal


def test_two_level_single_pair_closed_form(two_level):
    sp, sec = two_level
    rs = solve_state(sp, sec, 1.0)
    assert energy_from_roots(rs, sp, sec) == pytest.approx(-np.sqrt(2), abs=1e-10)
    # one root: 1/t + 1/(t - 1) + 2 = 0 gives 2 t^2 = 1
    assert rs.roots[0].real == pytest.approx(-1 / np.sqrt(2), abs=1e-12)


def test_residual_vanishes_at_known_root(two_level):
    sp, sec = two_level
    t = np.array([-1 / np.sqrt(2)])
    assert abs(richardson_residual(t, sp, sec, 1.0)[0]) < 1e-14


def test_jacobian_matches_finite_differences(rng):
    sp, sec = equal(5, 3)
    t = np.array([-0.31 + 0.05j, 0.12 - 0.2j, 0.93 + 0.01j])
    g = 0.37
    J = richardson_jacobian(t, sp, sec)
    h = 1e-6
    for j in range(3):
        dt = np.zeros(3, complex)
        dt[j] = h
        col = (richardson_residual(t + dt, sp, sec, g) - richardson_residual(t - dt, sp, sec, g)) / (2 * h)
        np.testing.assert_allclose(J[:, j], col, rtol=1e-7, atol=1e-7)


def test_singular_configurations():
    sp, sec = equal(3, 2)
    with pytest.raises(SingularConfigurationError):
        richardson_residual([0.2, 0.2], sp, sec, 1.0)
    with pytest.raises(SingularConfigurationError):
        richardson_residual([0.0, -0.5], sp, sec, 1.0)


def test_cluster_offsets_are_laguerre_zeros():
    np.testing.assert_allclose(cluster_offsets(2, 1.0), [2 - np.sqrt(2), 2 + np.sqrt(2)], rtol=1e-13)
    x = cluster_offsets(5, 3.0)
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.inf)
    np.testing.assert_allclose((2 / d).sum(axis=1) + 3.0 / x, 1.0, atol=1e-10)


def test_initial_roots_scaled_residual():
    sp, sec = equal(6, 4)
    start = initial_roots(sp, sec, (2, 0, 1, 0, 1, 0))
    assert start.residual * start.g_eff / 2 <= 0.1
    assert len(start.roots) == 4


def test_initial_roots_rejects_bad_label():
    sp, sec = equal(3, 2)
    with pytest.raises(InvalidParametersError):
        initial_roots(sp, sec, (1, 0, 0))


def test_newton_step_keeps_exact_roots(two_level):
    sp, sec = two_level
    t = np.array([-1 / np.sqrt(2)], complex)
    assert np.max(np.abs(newton_step(t, sp, sec, 1.0) - t)) < 1e-14


def test_zero_length_continuation_is_identity():
    sp, sec = equal(4, 2)
    rs = solve_state(sp, sec, 0.2)
    again = continue_in_g(rs, 0.2, sp, sec)
    np.testing.assert_allclose(again.roots, rs.roots, atol=1e-14)


def test_continuation_downwards_returns_to_same_state():
    sp, sec = equal(4, 2)
    up = solve_state(sp, sec, 0.5)
    down = continue_in_g(up, 0.1, sp, sec)
    direct = solve_state(sp, sec, 0.1)
    assert energy_from_roots(down, sp, sec) == pytest.approx(energy_from_roots(direct, sp, sec), abs=1e-10)


def test_empty_sector():
    sp = LevelSpectrum.from_arrays([0.0, 0.5, 1.0], nu=[1, 0, 1])
    sec = PairSector.for_spectrum(sp, 0)
    rs = solve_state(sp, sec, 0.3)
    assert rs.M == 0
    assert energy_from_roots(rs, sp, sec) == pytest.approx(1.0)


def test_all_labels_reproduce_oracle_spectrum():
    sp, sec = equal(3, 2)
    g = 0.8
    e_r = enumerate_spectrum(sp, sec, g)
    e_o = diagonalize(build_hamiltonian(sp, sec, g))[0]
    np.testing.assert_allclose(e_r, e_o, atol=1e-9)
    assert len(all_labels(3, 2)) == 6


def test_excited_cluster_between_levels():
    sp, sec = equal(4, 3)
    rs = solve_state(sp, sec, 0.6, (0, 3, 0, 0))
    # every charge repels the roots, so they stay on the real axis
    assert np.max(np.abs(rs.roots.imag)) < 1e-10
    e_o = diagonalize(build_hamiltonian(sp, sec, 0.6))[0]
    assert np.min(np.abs(e_o - energy_from_roots(rs, sp, sec))) < 1e-9


def test_unbalanced_imaginary_parts_rejected(two_level):
    sp, sec = two_level
    bad = RootSet(np.array([0.1 + 0.3j]), 1.0, (1, 0), 0.0)
    with pytest.raises(InconsistentRootSetError):
        energy_from_roots(bad, sp, sec)


def test_bethe_vector_is_ground_eigenvector():
    sp, sec = equal(5, 3)
    g = 0.35
    rs = solve_state(sp, sec, g)
    v = bethe_state(rs.roots, sp, sec)
    w, V = diagonalize(build_hamiltonian(sp, sec, g))
    assert abs(abs(np.vdot(V[:, 0], v)) - 1) < 1e-10


def test_degenerate_shell_with_seniority_matches_oracle():
    sp = LevelSpectrum.from_arrays([0.0, 0.3, 1.0], [2, 1, 3], [1, 0, 2])
    sec = PairSector.for_spectrum(sp, 3)
    for g in (0.05, 0.4, 1.5):
        e_r = energy_from_roots(solve_state(sp, sec, g), sp, sec)
        e_o = diagonalize(build_hamiltonian(sp, sec, g))[0][0]
        assert e_r == pytest.approx(e_o, abs=1e-9)


@given(L=st.integers(2, 5), M=st.integers(1, 4), g=st.floats(0.05, 3.0), seed=st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_ground_energy_matches_oracle_on_random_spectra(L, M, g, seed):
    rng = np.random.default_rng(seed)
    eps = np.sort(rng.uniform(0, 1, L))
    if np.min(np.diff(eps)) < 1e-2:
        eps = np.linspace(0, 1, L) + 0.01 * rng.uniform(size=L)
    sp = LevelSpectrum.from_arrays(eps, rng.integers(1, 3, L), [0] * L)
    sec = PairSector.for_spectrum(sp, M)
    e_r = energy_from_roots(solve_state(sp, sec, g), sp, sec)
    e_o = diagonalize(build_hamiltonian(sp, sec, g))[0][0]
    assert e_r == pytest.approx(e_o, abs=1e-8 * max(1.0, abs(e_o)))


def test_ground_roots_stay_real_and_below_lowest_level():
    sp, sec = equal(8, 4)
    rs = solve_state(sp, sec, 1.0 / 8, record=True)
    for point in rs.trajectory:
        assert np.all(np.abs(point.roots.imag) < 1e-10)
        assert np.all(point.roots.real < sp.epsilon[0])
    gs = [p.g_eff for p in rs.trajectory]
    assert gs == sorted(gs)
    assert rs.residual <= 1e-11


def test_trajectory_csv(tmp_path):
    sp, sec = equal(3, 2)
    rs = solve_state(sp, sec, 0.5, record=True)
    write_trajectory_csv(rs, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "g,root_index,re_t,im_t,residual"
    assert len(lines) == 1 + 2 * len(rs.trajectory)


def test_stuck_continuation_reports_last_good_coupling(two_level, monkeypatch):
    sp, sec = two_level
    start = initial_roots(sp, sec)

    def refuse(*args, **kwargs):
        raise StepRejected("forced")

    monkeypatch.setattr(richardson, "_tangent", refuse)
    with pytest.raises(ContinuationStuckError) as info:
        continue_in_g(start, 1.0, sp, sec)
    assert info.value.last_good_g == pytest.approx(start.g_eff)


def test_pair_vs_quasiparticle_energies_against_oracle():
    sp = equal_spacing_spectrum(4)
    g = 0.3
    out = pair_vs_quasiparticle(sp, 2, g, level=1)
    e_pair = diagonalize(build_hamiltonian(sp, PairSector(2, (0, 0, 0, 0)), g))[0]
    e_q = diagonalize(build_hamiltonian(sp, PairSector(1, (1, 1, 0, 0)), g))[0][0]
    assert out["ground"] == pytest.approx(e_pair[0], abs=1e-9)
    assert np.min(np.abs(e_pair - out["ground"] - out["pair_excitation"])) < 1e-9
    assert out["quasiparticle_pair"] == pytest.approx(e_q - e_pair[0], abs=1e-9)
