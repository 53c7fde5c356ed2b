import numpy as np
import pytest

import kerrqnn
from kerrqnn import _kernels
from kerrqnn.dynamics import NetworkParams, _build_rhs, build_hamiltonian
from kerrqnn.fock import build_basis, mode_annihilation


def _random_params(n_modes, alpha=0.4, gamma=1.3):
    rng = np.random.default_rng(42)
    J = np.zeros((n_modes, n_modes))
    for i in range(n_modes - 1):
        J[i, i + 1] = J[i + 1, i] = rng.uniform(0.2, 1.0)
    P = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    return NetworkParams(n_modes=n_modes, E=1.1, alpha=alpha, gamma=gamma, J=J, P=P, tau=1.0)


def _random_rho(dim, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return np.ascontiguousarray(rho / np.trace(rho))


def _dense_rhs_oracle(h, ann_ops, gamma, rho):
    out = -1j * (h @ rho - rho @ h)
    for a in ann_ops:
        out += gamma * (a @ rho @ a.conj().T - 0.5 * (a.conj().T @ a @ rho + rho @ a.conj().T @ a))
    return out


@pytest.mark.parametrize("backend", _kernels.available_backends())
@pytest.mark.parametrize("cap", [None, 3])
def test_kernel_matches_dense_oracle(backend, cap):
    basis = build_basis([3, 3], total_cap=cap)
    params = _random_params(2)
    h = build_hamiltonian(params, basis)
    rhs = _build_rhs(h, params, backend)
    rho = _random_rho(basis.dim)
    out = np.empty_like(rho)
    rhs(rho, out)
    expected = _dense_rhs_oracle(
        h.dense(), [mode_annihilation(basis, m).dense() for m in range(2)], params.gamma, rho
    )
    assert np.max(np.abs(out - expected)) < 1e-12


def test_backends_agree_exactly():
    if len(_kernels.available_backends()) < 2:
        pytest.skip("compiled backend not built")
    basis = build_basis([4, 3, 2], total_cap=5)
    params = _random_params(3)
    h = build_hamiltonian(params, basis)
    rho = _random_rho(basis.dim, seed=3)
    outs = {}
    for backend in ("cython", "numpy"):
        out = np.empty_like(rho)
        _build_rhs(h, params, backend)(rho, out)
        outs[backend] = out
    assert np.max(np.abs(outs["cython"] - outs["numpy"])) < 1e-13


@pytest.mark.parametrize("backend", _kernels.available_backends())
def test_kernel_traceless_and_hermiticity_preserving(backend):
    basis = build_basis([4])
    params = _random_params(1)
    h = build_hamiltonian(params, basis)
    rhs = _build_rhs(h, params, backend)
    rho = _random_rho(basis.dim, seed=7)
    out = np.empty_like(rho)
    rhs(rho, out)
    assert abs(np.trace(out)) < 1e-12
    assert np.max(np.abs(out - out.conj().T)) < 1e-12


def test_backend_selection_env_override(monkeypatch):
    monkeypatch.setenv("KERRQNN_BACKEND", "numpy")
    assert _kernels.default_backend() == "numpy"
    monkeypatch.setenv("KERRQNN_BACKEND", "bogus")
    with pytest.raises(ValueError):
        _kernels.default_backend()


def test_benchmark_reports_throughput():
    basis = build_basis([3, 3])
    params = _random_params(2)
    report = kerrqnn.liouvillian_apply_count_benchmark(params, basis, steps=1)
    assert report["applies_per_second"] > 0
    assert report["dim"] == basis.dim


def test_benchmark_scales_with_steps():
    basis = build_basis([6, 6])
    params = _random_params(2)
    base = kerrqnn.liouvillian_apply_count_benchmark(params, basis, steps=60)
    double = kerrqnn.liouvillian_apply_count_benchmark(params, basis, steps=120)
    ratio = double["elapsed_s"] / base["elapsed_s"]
    assert 1.0 < ratio < 3.0
