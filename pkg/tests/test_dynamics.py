import math

import numpy as np
import pytest

import kerrqnn as k
from kerrqnn import fock
from kerrqnn.dynamics import stable_dt
from kerrqnn.fock import NumericalHealthError


def single_mode_params(E=0.0, alpha=0.0, gamma=1.0, P=0.0, tau=1.0):
    return k.NetworkParams(
        n_modes=1, E=E, alpha=alpha, gamma=gamma,
        J=np.zeros((1, 1)), P=np.array([P], dtype=complex), tau=tau,
    )


def test_hamiltonian_single_mode_diagonal():
    basis = k.build_basis([4])
    params = single_mode_params(E=1.0, alpha=0.5)
    h = k.build_hamiltonian(params, basis).dense()
    # n=2: E n + alpha n(n-1) = 2 + 1
    assert abs(h[2, 2] - 3.0) < 1e-14
    assert abs(h[3, 3] - (3.0 + 0.5 * 6)) < 1e-14


def test_hamiltonian_hermitian_random_params():
    rng = np.random.default_rng(1)
    J = np.zeros((3, 3))
    J[0, 1] = J[1, 0] = rng.uniform()
    J[1, 2] = J[2, 1] = rng.uniform()
    params = k.NetworkParams(
        n_modes=3, E=rng.uniform(), alpha=rng.uniform(), gamma=1.0, J=J,
        P=rng.normal(size=3) + 1j * rng.normal(size=3), tau=1.0,
    )
    basis = k.build_basis([3, 3, 3], total_cap=4)
    h = k.build_hamiltonian(params, basis).dense()
    assert np.max(np.abs(h - h.conj().T)) < 1e-12


def test_hamiltonian_single_excitation_block_eigenvalues():
    J = np.array([[0.0, 0.7], [0.7, 0.0]])
    params = k.NetworkParams(n_modes=2, E=1.3, alpha=0.0, gamma=1.0, J=J,
                             P=np.zeros(2, dtype=complex), tau=1.0)
    basis = k.build_basis([2, 2])
    h = k.build_hamiltonian(params, basis).dense()
    idx = [basis.flat_index((0, 1)), basis.flat_index((1, 0))]
    eigs = np.linalg.eigvalsh(h[np.ix_(idx, idx)])
    assert np.allclose(sorted(eigs), [1.3 - 0.7, 1.3 + 0.7], atol=1e-12)


def test_hamiltonian_infinite_kerr_requires_two_levels():
    params = single_mode_params(alpha=math.inf)
    with pytest.raises(ValueError, match="hard-core"):
        k.build_hamiltonian(params, k.build_basis([4]))
    h = k.build_hamiltonian(params, k.build_basis([2])).dense()
    assert np.allclose(h, np.diag([0.0, 0.0]))  # E=0, alpha term dropped


def test_hamiltonian_pump_optional():
    params = single_mode_params(P=0.5)
    basis = k.build_basis([3])
    with_pump = k.build_hamiltonian(params, basis, include_pump=True).dense()
    without = k.build_hamiltonian(params, basis, include_pump=False).dense()
    assert abs(with_pump[1, 0] - 0.5) < 1e-14
    assert np.allclose(without, 0.0)


def test_lindblad_vacuum_dark_state():
    basis = k.build_basis([3])
    params = single_mode_params(E=0.8)
    rho = k.vacuum_state(basis).density()
    h = k.build_hamiltonian(params, basis)
    drho = k.lindblad_derivative(rho, h, params)
    assert np.max(np.abs(drho)) < 1e-14


def test_lindblad_trace_free_random_state():
    rng = np.random.default_rng(5)
    basis = k.build_basis([4, 3])
    J = np.zeros((2, 2)); J[0, 1] = J[1, 0] = 0.4
    params = k.NetworkParams(n_modes=2, E=0.3, alpha=0.2, gamma=0.9, J=J,
                             P=np.array([0.1, 0.2j]), tau=1.0)
    m = rng.normal(size=(basis.dim, basis.dim)) + 1j * rng.normal(size=(basis.dim, basis.dim))
    rho = fock.DensityMatrix(basis, (m @ m.conj().T) / np.trace(m @ m.conj().T).real)
    drho = k.lindblad_derivative(rho, k.build_hamiltonian(params, basis), params)
    assert abs(np.trace(drho)) < 1e-12


def test_lindblad_coherent_occupation_decay_rate():
    basis = k.build_basis([20])
    params = single_mode_params(gamma=1.0)
    rho = k.coherent_state(basis, [1.0]).density()
    h = k.build_hamiltonian(params, basis)
    drho = k.lindblad_derivative(rho, h, params)
    n_op = k.mode_number(basis, 0).dense()
    dn = np.trace(n_op @ drho).real
    assert abs(dn - (-1.0)) < 1e-6  # d<n>/dt = -gamma <n>


def test_evolution_decay_law():
    basis = k.build_basis([4])
    params = single_mode_params(E=0.5, tau=1.0)
    rho0 = fock.basis_state(basis, [1]).density()
    res = k.evolve_master_equation(rho0, params, k.EvolutionConfig(dt=1e-3))
    n = k.expectation(res.final, k.mode_number(basis, 0)).real
    assert abs(n - math.exp(-1.0)) / math.exp(-1.0) < 1e-6


def test_evolution_zero_hamiltonian_keeps_vacuum():
    basis = k.build_basis([3])
    params = single_mode_params()
    rho0 = k.vacuum_state(basis).density()
    res = k.evolve_master_equation(rho0, params, k.EvolutionConfig(dt=1e-2))
    assert np.allclose(res.final.entries, rho0.entries, atol=1e-14)


def test_evolution_rk4_order():
    basis = k.build_basis([4])
    params = single_mode_params(tau=1.0)
    rho0 = fock.basis_state(basis, [1]).density()

    def error(dt):
        res = k.evolve_master_equation(rho0, params, k.EvolutionConfig(dt=dt))
        n = k.expectation(res.final, k.mode_number(basis, 0)).real
        return abs(n - math.exp(-1.0))

    ratio = error(0.1) / error(0.05)
    assert 16 * 0.7 < ratio < 16 * 1.3


def test_evolution_record_times():
    basis = k.build_basis([4])
    params = single_mode_params(tau=2.0)
    rho0 = fock.basis_state(basis, [1]).density()
    times = [0.5, 1.0, 1.5, 2.0]
    res = k.evolve_master_equation(rho0, params, k.EvolutionConfig(dt=1e-3, record_times=times))
    assert [t for t, _ in res.samples] == pytest.approx(times)
    for t, dm in res.samples:
        n = k.expectation(dm, k.mode_number(basis, 0)).real
        assert abs(n - math.exp(-t)) < 1e-8


def test_evolution_kerr_cat_oracle():
    alpha = 0.5
    dim = 20
    basis = k.build_basis([dim])
    params = single_mode_params(alpha=alpha, gamma=0.0, tau=math.pi / (2 * alpha))
    psi0 = k.coherent_state(basis, [1.0])
    res = k.evolve_master_equation(psi0.density(), params, k.EvolutionConfig(dt=1e-3))
    ns = np.arange(dim)
    oracle = np.exp(-1j * alpha * params.tau * ns * (ns - 1)) * psi0.amplitudes
    fidelity = np.real(oracle.conj() @ res.final.entries @ oracle)
    assert fidelity > 0.999
    # the oracle state is the equal-weight superposition of |+i b> and |-i b>
    basis_states = np.stack(
        [fock.coherent_amplitudes(1j, dim), fock.coherent_amplitudes(-1j, dim)], axis=1
    )
    coef, res_, *_ = np.linalg.lstsq(basis_states, oracle, rcond=None)
    assert np.allclose(np.abs(coef), 1 / np.sqrt(2), atol=1e-10)


def test_evolution_trace_and_hermiticity_health():
    rng = np.random.default_rng(2)
    J = np.zeros((2, 2)); J[0, 1] = J[1, 0] = 0.6
    params = k.NetworkParams(n_modes=2, E=0.4, alpha=0.3, gamma=1.0, J=J,
                             P=np.array([0.4, 0.0]), tau=1.0)
    basis = k.build_basis([4, 4])
    rho0 = k.coherent_state(basis, [0.5, 0.0]).density()
    res = k.evolve_master_equation(rho0, params, k.EvolutionConfig(dt=1e-3, record_times=[0.25, 0.5, 1.0]))
    for _, dm in res.samples:
        assert abs(dm.trace() - 1.0) < 1e-8
        assert dm.hermiticity_defect() < 1e-10
    assert res.final.min_eigenvalue() > -1e-6


def test_evolution_unstable_step_raises():
    basis = k.build_basis([6])
    params = single_mode_params(E=200.0, P=50.0, tau=2.0)
    rho0 = k.vacuum_state(basis).density()
    with pytest.raises(NumericalHealthError, match="reduce dt"):
        k.evolve_master_equation(rho0, params, k.EvolutionConfig(dt=0.05))


def test_evolution_adaptive_matches_fixed():
    basis = k.build_basis([4])
    params = single_mode_params(E=0.3, P=0.2, tau=1.0)
    rho0 = k.vacuum_state(basis).density()
    fixed = k.evolve_master_equation(rho0, params, k.EvolutionConfig(dt=1e-3))
    adaptive = k.evolve_master_equation(
        rho0, params, k.EvolutionConfig(dt=0.05, method="adaptive", atol=1e-10)
    )
    assert np.max(np.abs(fixed.final.entries - adaptive.final.entries)) < 1e-7


def test_mean_field_zero_fixed_point():
    params = single_mode_params(E=0.7)
    res = k.evolve_mean_field(k.MeanFieldState(np.zeros(1)), params, k.EvolutionConfig(dt=1e-3))
    assert np.allclose(res.psi, 0.0)


def test_mean_field_linear_steady_state():
    params = single_mode_params(E=0.8, P=0.5, tau=40.0)
    res = k.evolve_mean_field(k.MeanFieldState(np.zeros(1)), params, k.EvolutionConfig(dt=2e-3))
    expected = -params.P[0] / (params.E - 0.5j * params.gamma)
    assert abs(res.psi[0] - expected) < 1e-8


def test_mean_field_decay_law():
    params = single_mode_params(E=1.1, tau=2.0)
    res = k.evolve_mean_field(k.MeanFieldState(np.ones(1)), params, k.EvolutionConfig(dt=1e-3))
    assert abs(abs(res.psi[0]) ** 2 - math.exp(-2.0)) < 1e-8


def test_linear_regime_quantum_equals_mean_field():
    J = k.chain_coupling(3, 0.9, seed=11)
    params = k.NetworkParams(n_modes=3, E=0.6, alpha=0.0, gamma=1.0, J=J,
                             P=np.array([0.3, 0.1 + 0.05j, 0.0]), tau=2.0)
    basis = k.build_basis([7, 7, 7])
    amps = np.array([0.4, -0.2 + 0.1j, 0.25j])
    rho0 = k.coherent_state(basis, amps).density()
    times = np.linspace(0.2, 2.0, 10)
    res = k.evolve_master_equation(
        rho0, params, k.EvolutionConfig(dt=1e-3, record_times=list(times))
    )
    ann = [k.mode_annihilation(basis, i) for i in range(3)]
    for t, dm in res.samples:
        psi = k.evolve_mean_field(
            k.MeanFieldState(amps), params.with_updates(tau=t), k.EvolutionConfig(dt=1e-3)
        ).psi
        quantum = np.array([k.expectation(dm, a) for a in ann])
        assert np.max(np.abs(quantum - psi)) < 1e-6


def test_mean_field_rejects_infinite_kerr():
    params = single_mode_params()
    params.alpha = math.inf
    with pytest.raises(ValueError, match="hard-core"):
        k.evolve_mean_field(k.MeanFieldState(np.zeros(1)), params)


def test_network_params_validation():
    with pytest.raises(ValueError, match="symmetric"):
        k.NetworkParams(n_modes=2, E=0.0, alpha=0.0, gamma=1.0,
                        J=np.array([[0.0, 1.0], [0.5, 0.0]]), P=np.zeros(2), tau=1.0)
    with pytest.raises(ValueError, match="tau"):
        single_mode_params(tau=0.0)


def test_stable_dt_is_stable():
    J = k.chain_coupling(4, 1.5, seed=184)
    params = k.NetworkParams(n_modes=4, E=1.5, alpha=8.0, gamma=1.0, J=J,
                             P=np.zeros(4, dtype=complex), tau=1.0)
    basis = k.build_basis([4] * 4)
    dt = stable_dt(params, basis)
    rho0 = k.coherent_state(basis, [1.0, 1.0, 0.0, 0.0]).density()
    res = k.evolve_master_equation(rho0, params, k.EvolutionConfig(dt=dt))
    assert abs(res.final.trace() - 1.0) < 1e-8
