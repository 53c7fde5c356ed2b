"""Truncated bosonic Fock-space algebra.

Bases enumerate multimode number states with per-mode cutoffs and an
optional cap on the total excitation number.  Mode operators are sparse
matrices on a basis; states carry their basis so dimension mismatches are
caught early.  Mode indices are 0-based throughout.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

TRUNCATION_WARN_WEIGHT = 1e-6


class NumericalHealthError(RuntimeError):
    """A state or evolution violated a numerical health bound."""


@dataclass(frozen=True)
class Basis:
    """Enumeration of truncated multimode Fock states.

    States are ordered lexicographically in (n_1, ..., n_N) with mode 0
    slowest, which makes serialization and tests deterministic.
    """

    mode_dims: tuple
    total_cap: int | None
    states: np.ndarray = field(repr=False, compare=False)  # (dim, n_modes) int array
    index_of: dict = field(repr=False, compare=False)      # multi-index tuple -> flat index

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def flat_index(self, occupations) -> int:
        key = tuple(int(n) for n in occupations)
        if key not in self.index_of:
            raise ValueError(f"state {key} not in basis")
        return self.index_of[key]

    def occupations_of(self, index: int) -> tuple:
        return tuple(int(n) for n in self.states[index])

    def __eq__(self, other):
        return (
            isinstance(other, Basis)
            and self.mode_dims == other.mode_dims
            and self.total_cap == other.total_cap
        )

    def __hash__(self):
        return hash((self.mode_dims, self.total_cap))


def build_basis(mode_dims, total_cap: int | None = None) -> Basis:
    """Enumerate all admissible multi-indices for the given truncation.

    Every state satisfies n_i < d_i, and sum(n_i) <= total_cap when the cap
    is set.  Raises on an empty mode list or a non-positive dimension.
    """
    dims = tuple(int(d) for d in mode_dims)
    if len(dims) == 0:
        raise ValueError("mode_dims must be non-empty")
    if any(d < 1 for d in dims):
        raise ValueError(f"all mode dimensions must be >= 1, got {dims}")
    if total_cap is not None and total_cap < 0:
        raise ValueError("total_cap must be non-negative")

    states = []
    occ = [0] * len(dims)

    def recurse(mode, total):
        if mode == len(dims):
            states.append(tuple(occ))
            return
        for n in range(dims[mode]):
            if total_cap is not None and total + n > total_cap:
                break
            occ[mode] = n
            recurse(mode + 1, total + n)
        occ[mode] = 0

    recurse(0, 0)
    arr = np.array(states, dtype=np.int64)
    index_of = {s: i for i, s in enumerate(states)}
    return Basis(mode_dims=dims, total_cap=total_cap, states=arr, index_of=index_of)


@dataclass
class Operator:
    """Sparse complex operator attached to a basis."""

    basis: Basis
    entries: sp.csr_matrix

    def __post_init__(self):
        if self.entries.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"operator shape {self.entries.shape} does not match basis dim {self.basis.dim}"
            )

    def dagger(self) -> "Operator":
        return Operator(self.basis, self.entries.conj().T.tocsr())

    def dense(self) -> np.ndarray:
        return self.entries.toarray()

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_basis(self.basis, other.basis)
        return Operator(self.basis, (self.entries @ other.entries).tocsr())


@dataclass
class StateVector:
    """Pure state on a basis; unit norm."""

    basis: Basis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise ValueError("amplitude vector does not match basis dimension")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "StateVector") -> complex:
        _check_same_basis(self.basis, other.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass
class DensityMatrix:
    """Dense complex density matrix attached to a basis."""

    basis: Basis
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.ascontiguousarray(self.entries, dtype=complex)
        if self.entries.shape != (self.basis.dim, self.basis.dim):
            raise ValueError("density matrix shape does not match basis dimension")

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T))[0])

    def validate(self, trace_tol=1e-8, herm_tol=1e-10, psd_tol=1e-8) -> None:
        """Raise NumericalHealthError if trace/Hermiticity/positivity bounds fail."""
        if abs(self.trace() - 1.0) > trace_tol:
            raise NumericalHealthError(f"trace deviates from 1 by {abs(self.trace() - 1.0):.3e}")
        defect = self.hermiticity_defect()
        if defect > herm_tol:
            raise NumericalHealthError(f"Hermiticity defect {defect:.3e}")
        lam = self.min_eigenvalue()
        if lam < -psd_tol:
            raise NumericalHealthError(f"minimum eigenvalue {lam:.3e}")


def _check_same_basis(a: Basis, b: Basis) -> None:
    if a != b:
        raise ValueError("bases do not match")


def mode_annihilation(basis: Basis, mode: int) -> Operator:
    """Annihilation operator for one mode: <..,n-1,..|a|..,n,..> = sqrt(n)."""
    if not 0 <= mode < basis.n_modes:
        raise ValueError(f"mode {mode} out of range for {basis.n_modes} modes")
    rows, cols, vals = [], [], []
    for i, occ in enumerate(basis.states):
        n = occ[mode]
        if n == 0:
            continue
        target = list(occ)
        target[mode] = n - 1
        rows.append(basis.index_of[tuple(target)])
        cols.append(i)
        vals.append(math.sqrt(n))
    entries = sp.csr_matrix(
        (np.array(vals, dtype=complex), (rows, cols)), shape=(basis.dim, basis.dim)
    )
    return Operator(basis, entries)


def mode_creation(basis: Basis, mode: int) -> Operator:
    return mode_annihilation(basis, mode).dagger()


def mode_number(basis: Basis, mode: int) -> Operator:
    """Number operator n_i = a_i^dag a_i; diagonal with entries n_i."""
    if not 0 <= mode < basis.n_modes:
        raise ValueError(f"mode {mode} out of range for {basis.n_modes} modes")
    diag = basis.states[:, mode].astype(complex)
    return Operator(basis, sp.diags(diag, format="csr"))


def total_number(basis: Basis) -> Operator:
    diag = basis.states.sum(axis=1).astype(complex)
    return Operator(basis, sp.diags(diag, format="csr"))


def identity(basis: Basis) -> Operator:
    return Operator(basis, sp.identity(basis.dim, dtype=complex, format="csr"))


def vacuum_state(basis: Basis) -> StateVector:
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.flat_index((0,) * basis.n_modes)] = 1.0
    return StateVector(basis, amps)


def basis_state(basis: Basis, occupations) -> StateVector:
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.flat_index(occupations)] = 1.0
    return StateVector(basis, amps)


def coherent_amplitudes(beta: complex, dim: int) -> np.ndarray:
    """Truncated coherent expansion c_n = e^{-|b|^2/2} b^n / sqrt(n!), not renormalized.

    Evaluated by recurrence (c_n = c_{n-1} * b / sqrt(n)) so large cutoffs
    stay free of factorial overflow.
    """
    c = np.zeros(dim, dtype=complex)
    c[0] = math.exp(-0.5 * abs(beta) ** 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * beta / math.sqrt(n)
    return c


def product_state(basis: Basis, mode_vectors, full_weight: float | None = None) -> StateVector:
    """Product of per-mode single-mode vectors, restricted to the basis.

    ``full_weight`` is the squared norm the product would have without any
    truncation (1 for unit-norm physical states); the pre-renormalization
    lost weight against it is reported with a warning when it exceeds
    TRUNCATION_WARN_WEIGHT.
    """
    if len(mode_vectors) != basis.n_modes:
        raise ValueError("need one single-mode vector per mode")
    vectors = [np.asarray(v, dtype=complex) for v in mode_vectors]
    for m, v in enumerate(vectors):
        if v.shape != (basis.mode_dims[m],):
            raise ValueError(f"mode {m} vector length {v.shape} != dim {basis.mode_dims[m]}")
    if full_weight is None:
        full_weight = float(np.prod([np.sum(np.abs(v) ** 2) for v in vectors]))
    amps = np.ones(basis.dim, dtype=complex)
    for m, v in enumerate(vectors):
        amps *= v[basis.states[:, m]]
    kept = float(np.sum(np.abs(amps) ** 2))
    lost = full_weight - kept
    if lost > TRUNCATION_WARN_WEIGHT:
        warnings.warn(
            f"product state lost weight {lost:.3e} to basis truncation", RuntimeWarning
        )
    norm = math.sqrt(kept)
    if norm < 1e-12:
        raise ValueError("product state has no support inside the basis")
    return StateVector(basis, amps / norm)


def coherent_state(basis: Basis, amplitudes) -> StateVector:
    """Product coherent state |b_1> x ... x |b_N>, renormalized after truncation.

    Warns when the truncated weight before renormalization exceeds
    TRUNCATION_WARN_WEIGHT (cutoffs too small for the requested amplitudes).
    """
    amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=complex))
    if amplitudes.shape != (basis.n_modes,):
        raise ValueError("need one coherent amplitude per mode")
    if not np.all(np.isfinite(amplitudes)):
        raise ValueError("coherent amplitudes must be finite")
    vectors = [coherent_amplitudes(b, d) for b, d in zip(amplitudes, basis.mode_dims)]
    return product_state(basis, vectors, full_weight=1.0)


def cat_norm_constant(beta: complex, k: int) -> float:
    """Normalization sqrt(2[1 + (-1)^k e^{-2|beta|^2}]) of the two-component superposition."""
    return math.sqrt(2.0 * (1.0 + (-1) ** k * math.exp(-2.0 * abs(beta) ** 2)))


def cat_state(beta: complex, k: int, dim: int) -> StateVector:
    """Normalized (|beta> + (-1)^k |-beta>) in a single-mode truncated basis.

    k = 0 gives the even superposition (only even Fock levels), k = 1 the
    odd one.  Requires enough levels that the truncated weight is < 1e-8.
    """
    if k not in (0, 1):
        raise ValueError("k must be 0 or 1")
    basis = build_basis([dim])
    plus = coherent_amplitudes(beta, dim)
    minus = coherent_amplitudes(-beta, dim)
    lost = 1.0 - float(np.sum(np.abs(plus) ** 2))
    if lost > 1e-8:
        raise ValueError(
            f"cutoff {dim} keeps too little coherent weight (lost {lost:.3e}); increase dim"
        )
    amps = plus + (-1) ** k * minus
    norm = float(np.linalg.norm(amps))
    if norm < 1e-12:
        raise ValueError("cat superposition has near-zero norm; k=1 with beta ~ 0")
    return StateVector(basis, amps / norm)


def _embed_in_product_basis(rho: DensityMatrix):
    """Zero-pad a capped-basis state into the full product basis."""
    basis = rho.basis
    full = build_basis(basis.mode_dims, total_cap=None)
    idx = np.array([full.index_of[tuple(s)] for s in basis.states], dtype=np.intp)
    out = np.zeros((full.dim, full.dim), dtype=complex)
    out[np.ix_(idx, idx)] = rho.entries
    return DensityMatrix(full, out)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced state on the kept modes (0-based), tracing out the rest.

    Total-cap bases are zero-padded to the product basis first; the result
    lives on an uncapped basis over the kept modes, in their given order.
    """
    keep = [int(m) for m in keep]
    basis = rho.basis
    if len(keep) == 0:
        raise ValueError("keep must be non-empty")
    if len(set(keep)) != len(keep) or any(not 0 <= m < basis.n_modes for m in keep):
        raise ValueError(f"invalid mode indices {keep}")
    if basis.total_cap is not None:
        rho = _embed_in_product_basis(rho)
        basis = rho.basis
    dims = basis.mode_dims
    n = basis.n_modes
    tensor = rho.entries.reshape(dims + dims)
    traced = [m for m in range(n) if m not in keep]
    for m in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=m, axis2=m + tensor.ndim // 2)
    # remaining axes follow the original mode order; permute to the keep order
    remaining = [m for m in range(n) if m in keep]
    perm = [remaining.index(m) for m in keep]
    k = len(keep)
    tensor = tensor.transpose(perm + [p + k for p in perm])
    out_basis = build_basis([dims[m] for m in keep])
    out_dim = out_basis.dim
    return DensityMatrix(out_basis, tensor.reshape(out_dim, out_dim))


def expectation(rho: DensityMatrix, op: Operator) -> complex:
    """Tr{op . rho}."""
    _check_same_basis(rho.basis, op.basis)
    return complex((op.entries @ rho.entries).trace())
