import numpy as np
import pytest

from kerrqnn import fock
from kerrqnn.fock import (
    build_basis,
    cat_norm_constant,
    cat_state,
    coherent_amplitudes,
    coherent_state,
    expectation,
    mode_annihilation,
    mode_creation,
    mode_number,
    partial_trace,
    vacuum_state,
)


def test_basis_single_mode_dimension():
    assert build_basis([4]).dim == 4


def test_basis_product_dimension():
    assert build_basis([3, 3]).dim == 9


def test_basis_total_cap_dimension():
    # all bit-vectors over 4 modes with at most two ones: 1 + 4 + 6
    assert build_basis([2, 2, 2, 2], total_cap=2).dim == 11


def test_basis_cap_enumeration_matches_bruteforce():
    basis = build_basis([3, 4, 2], total_cap=4)
    brute = [
        (a, b, c)
        for a in range(3)
        for b in range(4)
        for c in range(2)
        if a + b + c <= 4
    ]
    assert basis.dim == len(brute)
    assert sorted(map(tuple, basis.states.tolist())) == sorted(brute)


def test_basis_roundtrip_index_map():
    basis = build_basis([3, 2, 4], total_cap=5)
    for i in range(basis.dim):
        assert basis.flat_index(basis.occupations_of(i)) == i


def test_basis_lexicographic_order():
    basis = build_basis([2, 3])
    expected = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
    assert [tuple(s) for s in basis.states] == expected


def test_basis_rejects_bad_input():
    with pytest.raises(ValueError):
        build_basis([])
    with pytest.raises(ValueError):
        build_basis([3, 0])


def test_annihilation_single_mode():
    basis = build_basis([3])
    a = mode_annihilation(basis, 0).dense()
    two = np.zeros(3)
    two[2] = 1.0
    assert np.allclose(a @ two, np.sqrt(2) * np.eye(3)[1])
    vac = np.eye(3)[0]
    assert np.allclose(a @ vac, 0.0)


def test_annihilation_matches_kronecker_oracle():
    # a on mode 1 of dims [2, 3] must equal kron(I_2, a_3) under lex ordering
    basis = build_basis([2, 3])
    a1 = mode_annihilation(basis, 1).dense()
    a3 = np.diag(np.sqrt(np.arange(1, 3)), k=1)
    assert np.allclose(a1, np.kron(np.eye(2), a3))
    a0 = mode_annihilation(basis, 0).dense()
    a2 = np.diag(np.sqrt(np.arange(1, 2)), k=1)
    assert np.allclose(a0, np.kron(a2, np.eye(3)))


def test_annihilation_mode_out_of_range():
    with pytest.raises(ValueError):
        mode_annihilation(build_basis([2]), 1)


def test_number_operator_diagonal():
    basis = build_basis([3, 2], total_cap=3)
    for m in range(2):
        n_direct = mode_number(basis, m).dense()
        a = mode_annihilation(basis, m)
        assert np.allclose(n_direct, (a.dagger() @ a).dense())
        assert np.allclose(np.diag(n_direct).real, basis.states[:, m])


def test_commutator_identity_on_safe_subspace():
    basis = build_basis([3, 4])
    for i in range(2):
        for j in range(2):
            a_i = mode_annihilation(basis, i).dense()
            adj_j = mode_creation(basis, j).dense()
            comm = a_i @ adj_j - adj_j @ a_i
            keep = np.flatnonzero(basis.states[:, i] < basis.mode_dims[i] - 1)
            expected = np.eye(basis.dim)[np.ix_(keep, keep)] if i == j else 0.0
            assert np.allclose(comm[np.ix_(keep, keep)], expected, atol=1e-14)


def test_coherent_vacuum_limit():
    basis = build_basis([5])
    state = coherent_state(basis, [0.0])
    assert np.allclose(state.amplitudes, vacuum_state(basis).amplitudes)


def test_coherent_mean_occupation():
    basis = build_basis([20])
    state = coherent_state(basis, [1.0])
    n = expectation(state.density(), mode_number(basis, 0))
    assert abs(n.real - 1.0) < 1e-6
    assert abs(state.norm() - 1.0) < 1e-12


def test_coherent_overlap_analytic():
    basis = build_basis([20])
    plus = coherent_state(basis, [1.0])
    minus = coherent_state(basis, [-1.0])
    assert abs(plus.overlap(minus) - np.exp(-2.0)) < 1e-6


def test_coherent_truncation_warning():
    basis = build_basis([4])
    with pytest.warns(RuntimeWarning, match="lost weight"):
        coherent_state(basis, [2.0])


def test_cat_norm_matches_analytic():
    amps = coherent_amplitudes(1.0, 30) + coherent_amplitudes(-1.0, 30)
    assert abs(np.linalg.norm(amps) - cat_norm_constant(1.0, 0)) < 1e-12
    assert abs(cat_norm_constant(1.0, 0) - 1.50688) < 1e-5


def test_cat_even_has_no_odd_amplitudes():
    state = cat_state(1.0, 0, 30)
    assert np.max(np.abs(state.amplitudes[1::2])) == 0.0
    assert abs(state.norm() - 1.0) < 1e-12


def test_cat_odd_small_beta_is_single_photon():
    state = cat_state(0.1, 1, 20)
    assert abs(state.amplitudes[1]) ** 2 > 0.99


def test_cat_degenerate_norm_raises():
    with pytest.raises(ValueError, match="near-zero norm"):
        cat_state(0.0, 1, 10)


def test_cat_insufficient_cutoff_raises():
    with pytest.raises(ValueError, match="increase dim"):
        cat_state(3.0, 0, 6)


def test_partial_trace_product_state():
    b1 = build_basis([3])
    b2 = build_basis([4])
    rho1 = coherent_state(b1, [0.3]).density()
    rho2 = coherent_state(b2, [0.5]).density()
    joint = build_basis([3, 4])
    entries = np.kron(rho1.entries, rho2.entries)
    rho = fock.DensityMatrix(joint, entries)
    reduced = partial_trace(rho, keep=[0])
    assert np.allclose(reduced.entries, rho1.entries, atol=1e-12)
    assert abs(reduced.trace() - rho.trace()) < 1e-12


def test_partial_trace_bell_like():
    basis = build_basis([2, 2])
    amps = np.zeros(4, dtype=complex)
    amps[basis.flat_index((0, 1))] = 1 / np.sqrt(2)
    amps[basis.flat_index((1, 0))] = 1 / np.sqrt(2)
    rho = fock.StateVector(basis, amps).density()
    reduced = partial_trace(rho, keep=[0])
    assert np.allclose(reduced.entries, np.diag([0.5, 0.5]), atol=1e-14)


def test_partial_trace_capped_basis_zero_pads():
    basis = build_basis([3, 3], total_cap=2)
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.flat_index((2, 0))] = 1.0
    rho = fock.StateVector(basis, amps).density()
    reduced = partial_trace(rho, keep=[1])
    assert np.allclose(reduced.entries, np.diag([1.0, 0.0, 0.0]))


def test_partial_trace_pure_product_rank_one():
    basis = build_basis([3, 3, 3])
    rho = coherent_state(basis, [0.4, 0.2, 0.1j]).density()
    reduced = partial_trace(rho, keep=[2])
    eigs = np.linalg.eigvalsh(reduced.entries)
    assert abs(eigs[-1] - 1.0) < 1e-10


def test_partial_trace_invalid_modes():
    rho = coherent_state(build_basis([2, 2]), [0.0, 0.0]).density()
    with pytest.raises(ValueError):
        partial_trace(rho, keep=[])
    with pytest.raises(ValueError):
        partial_trace(rho, keep=[2])


def test_expectation_examples():
    basis = build_basis([3])
    n = mode_number(basis, 0)
    assert expectation(vacuum_state(basis).density(), n) == 0
    two = fock.basis_state(basis, [2]).density()
    assert abs(expectation(two, n) - 2.0) < 1e-14


def test_expectation_basis_mismatch():
    rho = vacuum_state(build_basis([3])).density()
    op = mode_number(build_basis([4]), 0)
    with pytest.raises(ValueError, match="do not match"):
        expectation(rho, op)


def test_density_matrix_validate_detects_bad_trace():
    basis = build_basis([2])
    rho = fock.DensityMatrix(basis, np.diag([0.7, 0.7]))
    with pytest.raises(fock.NumericalHealthError, match="trace"):
        rho.validate()
