"""Network Hamiltonian, master-equation integration, and mean-field dynamics.

Units: hbar = 1, all energies and rates are in units of the decay rate and
time is in units of its inverse.  The Hamiltonian combines a uniform onsite
energy, a uniform Kerr term, nearest-neighbour hopping, and optionally a
coherent pump; dissipation is single-photon loss on every mode.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from ._rng import substream
from .fock import (
    Basis,
    DensityMatrix,
    NumericalHealthError,
    Operator,
    mode_annihilation,
)

INFINITE_KERR = math.inf

_TRACE_DRIFT_TOL = 1e-8


@dataclass
class NetworkParams:
    """Physical parameters of the driven-dissipative bosonic network.

    J is a real symmetric coupling matrix (zero diagonal); P a complex pump
    amplitude per mode; alpha may be math.inf for the hard-core limit, in
    which case every mode must be truncated to two levels.
    """

    n_modes: int
    E: float
    alpha: float
    gamma: float
    J: np.ndarray
    P: np.ndarray
    tau: float

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        self.P = np.atleast_1d(np.asarray(self.P, dtype=complex))
        if self.J.shape != (self.n_modes, self.n_modes):
            raise ValueError(f"J must be {self.n_modes}x{self.n_modes}")
        if not np.allclose(self.J, self.J.T, atol=1e-12):
            raise ValueError("J must be symmetric")
        if np.any(np.abs(np.diag(self.J)) > 0):
            raise ValueError("J must have zero diagonal")
        if self.P.shape != (self.n_modes,):
            raise ValueError(f"P must have one amplitude per mode")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.alpha != INFINITE_KERR and self.alpha < 0:
            raise ValueError("alpha must be >= 0 or math.inf")

    def with_updates(self, **kwargs) -> "NetworkParams":
        fields = dict(
            n_modes=self.n_modes, E=self.E, alpha=self.alpha, gamma=self.gamma,
            J=self.J.copy(), P=self.P.copy(), tau=self.tau,
        )
        fields.update(kwargs)
        return NetworkParams(**fields)


def chain_coupling(n_modes: int, j_max: float, seed: int) -> np.ndarray:
    """Random nearest-neighbour couplings on an open chain, uniform in [0, j_max]."""
    rng = substream(seed, "chain-coupling")
    J = np.zeros((n_modes, n_modes))
    for i in range(n_modes - 1):
        J[i, i + 1] = J[i + 1, i] = rng.uniform(0.0, j_max)
    return J


@dataclass
class EvolutionConfig:
    """Integrator settings; dt defaults to tau / 10^4."""

    dt: float | None = None
    method: str = "rk4"
    atol: float = 1e-8
    record_times: list | None = None

    def resolve_dt(self, tau: float) -> float:
        dt = tau * 1e-4 if self.dt is None else float(self.dt)
        if not 0 < dt <= tau:
            raise ValueError(f"dt must satisfy 0 < dt <= tau, got dt={dt}, tau={tau}")
        return dt


@dataclass
class MeanFieldState:
    """Classical amplitude per mode."""

    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.atleast_1d(np.asarray(self.psi, dtype=complex))
        if not np.all(np.isfinite(self.psi)):
            raise ValueError("mean-field amplitudes must be finite")


@dataclass
class EvolutionResult:
    final: DensityMatrix
    samples: list = field(default_factory=list)  # (time, DensityMatrix) pairs


def _effective_kerr(params: NetworkParams, basis: Basis) -> float:
    if params.alpha == INFINITE_KERR:
        if any(d > 2 for d in basis.mode_dims):
            raise ValueError("infinite Kerr (hard-core) requires every mode dimension <= 2")
        return 0.0
    return params.alpha


def build_hamiltonian(params: NetworkParams, basis: Basis, include_pump: bool = True) -> Operator:
    """Assemble the network Hamiltonian on the given basis.

    Onsite and Kerr terms are diagonal in the number basis; each
    nearest-neighbour pair (i, j) contributes J_ij (a_i^+ a_j + a_j^+ a_i)
    once; the pump adds P_i a_i^+ + P_i^* a_i when requested.
    """
    if basis.n_modes != params.n_modes:
        raise ValueError(
            f"basis has {basis.n_modes} modes but params expect {params.n_modes}"
        )
    alpha = _effective_kerr(params, basis)
    occ = basis.states
    diag = params.E * occ.sum(axis=1) + alpha * np.sum(occ * (occ - 1), axis=1)
    h = sp.diags(diag.astype(complex), format="csr")

    ann = [mode_annihilation(basis, m).entries for m in range(basis.n_modes)]
    for i in range(params.n_modes):
        for j in range(i + 1, params.n_modes):
            if params.J[i, j] != 0.0:
                hop = ann[i].conj().T @ ann[j]
                h = h + params.J[i, j] * (hop + hop.conj().T)
    if include_pump:
        for i in range(params.n_modes):
            if params.P[i] != 0.0:
                h = h + params.P[i] * ann[i].conj().T + np.conj(params.P[i]) * ann[i]

    h = h.tocsr()
    defect = abs(h - h.conj().T).max()
    if defect > 1e-12:
        raise AssertionError(f"Hamiltonian assembly lost Hermiticity ({defect:.3e})")
    return Operator(basis, h)


def _jump_maps(basis: Basis):
    """Per-mode (source, target, sqrt(n)) index triples for the loss channels."""
    maps = []
    for m in range(basis.n_modes):
        src, dst, w = [], [], []
        for i, occ in enumerate(basis.states):
            n = occ[m]
            if n == 0:
                continue
            tgt = list(occ)
            tgt[m] = n - 1
            src.append(i)
            dst.append(basis.index_of[tuple(tgt)])
            w.append(math.sqrt(n))
        maps.append((
            np.asarray(src, dtype=np.int32),
            np.asarray(dst, dtype=np.int32),
            np.asarray(w, dtype=np.float64),
        ))
    return maps


def _build_rhs(h: Operator, params: NetworkParams, backend: str | None = None):
    basis = h.basis
    ndiag = basis.states.sum(axis=1).astype(np.float64)
    return _kernels.build_lindblad_rhs(h.entries, _jump_maps(basis), ndiag, params.gamma, backend)


def lindblad_derivative(rho: DensityMatrix, H: Operator, params: NetworkParams) -> np.ndarray:
    """drho/dt = -i[H, rho] + (g/2) sum_i (2 a_i rho a_i^+ - a_i^+ a_i rho - rho a_i^+ a_i)."""
    if rho.basis != H.basis:
        raise ValueError("density matrix and Hamiltonian live on different bases")
    rhs = _build_rhs(H, params)
    out = np.empty_like(rho.entries)
    return rhs(np.ascontiguousarray(rho.entries), out).copy()


def _rk4_step(rhs, rho, dt, k1, k2, k3, k4, stage):
    rhs(rho, k1)
    np.multiply(k1, 0.5 * dt, out=stage)
    stage += rho
    rhs(stage, k2)
    np.multiply(k2, 0.5 * dt, out=stage)
    stage += rho
    rhs(stage, k3)
    np.multiply(k3, dt, out=stage)
    stage += rho
    rhs(stage, k4)
    k2 += k3
    k1 += k4
    k1 += 2.0 * k2
    k1 *= dt / 6.0
    rho += k1
    return rho


def _hermitize(rho: np.ndarray) -> None:
    np.add(rho, rho.conj().T, out=rho)
    rho *= 0.5


def evolve_master_equation(
    rho0: DensityMatrix, params: NetworkParams, cfg: EvolutionConfig | None = None,
    backend: str | None = None,
) -> EvolutionResult:
    """Integrate the master equation to tau with fixed-step RK4.

    The state is re-Hermitized each step and the trace monitored; drift
    beyond tolerance aborts with advice to reduce dt.  ``record_times``
    snap to the nearest step boundary.
    """
    cfg = cfg or EvolutionConfig()
    if rho0.basis.n_modes != params.n_modes:
        raise ValueError("initial state mode count does not match params")
    if cfg.method == "adaptive":
        return _evolve_adaptive(rho0, params, cfg, backend)
    if cfg.method != "rk4":
        raise ValueError(f"unknown method {cfg.method!r}")

    dt_req = cfg.resolve_dt(params.tau)
    n_steps = max(1, int(round(params.tau / dt_req)))
    dt = params.tau / n_steps

    record = _resolve_record_steps(cfg.record_times, params.tau, n_steps)

    h = build_hamiltonian(params, rho0.basis, include_pump=True)
    rhs = _build_rhs(h, params, backend)

    rho = np.ascontiguousarray(rho0.entries.copy())
    k1, k2, k3, k4, stage = (np.empty_like(rho) for _ in range(5))
    trace0 = float(np.real(np.trace(rho)))

    samples = []
    if 0 in record:
        samples.append((0.0, DensityMatrix(rho0.basis, rho.copy())))
    for step in range(1, n_steps + 1):
        _rk4_step(rhs, rho, dt, k1, k2, k3, k4, stage)
        _hermitize(rho)
        drift = abs(float(np.real(np.trace(rho))) - trace0)
        if drift > _TRACE_DRIFT_TOL:
            raise NumericalHealthError(
                f"trace drift {drift:.3e} after step {step}; reduce dt "
                f"(current dt={dt:.3e})"
            )
        if step in record:
            samples.append((step * dt, DensityMatrix(rho0.basis, rho.copy())))
    return EvolutionResult(DensityMatrix(rho0.basis, rho), samples)


def _resolve_record_steps(record_times, tau, n_steps):
    if not record_times:
        return frozenset()
    steps = set()
    for t in record_times:
        if not 0 <= t <= tau * (1 + 1e-12):
            raise ValueError(f"record time {t} outside [0, tau]")
        steps.add(int(round(t / tau * n_steps)))
    return frozenset(steps)


def _evolve_adaptive(rho0, params, cfg, backend):
    """Step-doubling RK4: accept when one full step and two half steps agree."""
    if cfg.record_times:
        raise ValueError("record_times requires the fixed-step method")
    h = build_hamiltonian(params, rho0.basis, include_pump=True)
    rhs = _build_rhs(h, params, backend)
    rho = np.ascontiguousarray(rho0.entries.copy())
    bufs = [np.empty_like(rho) for _ in range(5)]
    dt = cfg.resolve_dt(params.tau)
    t = 0.0
    trace0 = float(np.real(np.trace(rho)))
    while t < params.tau * (1 - 1e-12):
        dt = min(dt, params.tau - t)
        full = rho.copy()
        _rk4_step(rhs, full, dt, *bufs)
        half = rho.copy()
        _rk4_step(rhs, half, 0.5 * dt, *bufs)
        _rk4_step(rhs, half, 0.5 * dt, *bufs)
        err = float(np.max(np.abs(full - half)))
        if err > cfg.atol and dt > 1e-12 * params.tau:
            dt *= 0.5
            continue
        rho = half
        _hermitize(rho)
        t += dt
        if err < cfg.atol / 32:
            dt *= 2.0
        drift = abs(float(np.real(np.trace(rho))) - trace0)
        if drift > _TRACE_DRIFT_TOL:
            raise NumericalHealthError(f"trace drift {drift:.3e} at t={t:.3e}")
    return EvolutionResult(DensityMatrix(rho0.basis, rho), [])


def _mean_field_rhs(psi, params):
    kerr = 2.0 * params.alpha * np.abs(psi) ** 2 * psi
    return -1j * ((params.E - 0.5j * params.gamma) * psi + kerr + params.J @ psi + params.P)


def evolve_mean_field(
    psi0: MeanFieldState, params: NetworkParams, cfg: EvolutionConfig | None = None
) -> MeanFieldState:
    """Integrate the classical amplitude equations to tau with fixed-step RK4.

    The equation replaces each mode operator by its amplitude, with the
    standard cubic factorization of the Kerr term and -i g/2 decay.
    """
    if params.alpha == INFINITE_KERR:
        raise ValueError("mean-field dynamics is undefined in the hard-core limit")
    cfg = cfg or EvolutionConfig()
    if psi0.psi.shape != (params.n_modes,):
        raise ValueError("mean-field state size does not match params")
    dt_req = cfg.resolve_dt(params.tau)
    n_steps = max(1, int(round(params.tau / dt_req)))
    dt = params.tau / n_steps
    psi = psi0.psi.copy()
    for _ in range(n_steps):
        k1 = _mean_field_rhs(psi, params)
        k2 = _mean_field_rhs(psi + 0.5 * dt * k1, params)
        k3 = _mean_field_rhs(psi + 0.5 * dt * k2, params)
        k4 = _mean_field_rhs(psi + dt * k3, params)
        psi = psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.max(np.abs(psi)) > 1e8:
            raise NumericalHealthError("mean-field amplitudes diverged; reduce dt or couplings")
    return MeanFieldState(psi)


def liouvillian_apply_count_benchmark(
    params: NetworkParams, basis: Basis, steps: int, backend: str | None = None, seed: int = 0
) -> dict:
    """Time repeated applications of the master-equation derivative kernel."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = build_hamiltonian(params, basis, include_pump=True)
    rhs = _build_rhs(h, params, backend)
    rng = substream(seed, "benchmark-state")
    m = rng.normal(size=(basis.dim, basis.dim)) + 1j * rng.normal(size=(basis.dim, basis.dim))
    rho = np.ascontiguousarray(m @ m.conj().T)
    rho /= np.trace(rho)
    out = np.empty_like(rho)
    rhs(rho, out)  # warm up
    t0 = time.perf_counter()
    for _ in range(steps):
        rhs(rho, out)
    elapsed = time.perf_counter() - t0
    return {
        "backend": rhs.name,
        "dim": basis.dim,
        "steps": steps,
        "elapsed_s": elapsed,
        "applies_per_second": steps / elapsed if elapsed > 0 else float("inf"),
    }
