"""Classical and quantum readout of the network state.

Classical side: mode occupations, multiplicative measurement noise and
affine readout maps.  Quantum side: photon-number-conserving mixing
unitaries on the Fock space and vacuum conditioning of all but one output
mode.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ._rng import substream
from .fock import (
    Basis,
    DensityMatrix,
    NumericalHealthError,
    Operator,
    build_basis,
    mode_annihilation,
)

_UNITARITY_TOL = 1e-10
_PROBABILITY_FLOOR = 1e-12


@dataclass
class NoiseModel:
    """Uniform multiplicative measurement error, addressed by (seed, draw_index)."""

    fraction_range: tuple = (0.0, 0.8)
    seed: int = 0
    samples: int = 100

    def __post_init__(self):
        low, high = self.fraction_range
        if not 0 <= low <= high:
            raise ValueError(f"fraction range must satisfy 0 <= low <= high, got {self.fraction_range}")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


def occupations(rho: DensityMatrix) -> np.ndarray:
    """Per-mode occupation <n_i> = Tr{a_i^+ a_i rho}; tiny negatives are clamped."""
    diag = np.real(np.diag(rho.entries))
    n = rho.basis.states.T @ diag
    if np.min(n) < -1e-8:
        raise NumericalHealthError(
            f"occupation {np.min(n):.3e} below tolerance; integrator output unhealthy"
        )
    return np.clip(n, 0.0, None)


def apply_measurement_noise(n: np.ndarray, model: NoiseModel, draw_index: int) -> np.ndarray:
    """out_i = n_i (1 + u_i) with u_i uniform over the model range.

    Deterministic for a fixed (seed, draw_index); distinct draw indices give
    independent realizations.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("occupations must be non-negative")
    rng = substream(model.seed, "measurement-noise", draw_index)
    low, high = model.fraction_range
    u = rng.uniform(low, high, size=n.shape)
    return n * (1.0 + u)


def linear_readout(features: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map weights @ features + bias; features may be a batch (rows)."""
    features = np.asarray(features, dtype=float)
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    bias = np.atleast_1d(np.asarray(bias, dtype=float))
    if weights.shape[1] != features.shape[-1]:
        raise ValueError(
            f"weights expect {weights.shape[1]} features, got {features.shape[-1]}"
        )
    if bias.shape != (weights.shape[0],):
        raise ValueError("bias length must match the number of readout channels")
    return features @ weights.T + bias


@dataclass
class MixingMatrix:
    """Unitary single-particle mixing W = exp(-i h) with Hermitian generator h."""

    W: np.ndarray
    generator: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=complex)
        self.generator = np.asarray(self.generator, dtype=complex)
        n = self.W.shape[0]
        if self.W.shape != (n, n) or self.generator.shape != (n, n):
            raise ValueError("W and generator must be square and of equal size")
        defect = np.max(np.abs(self.W.conj().T @ self.W - np.eye(n)))
        if defect > _UNITARITY_TOL:
            raise ValueError(f"W is not unitary (defect {defect:.3e})")

    @property
    def n_modes(self) -> int:
        return self.W.shape[0]

    @classmethod
    def from_generator(cls, h: np.ndarray) -> "MixingMatrix":
        h = np.asarray(h, dtype=complex)
        h = 0.5 * (h + h.conj().T)
        return cls(W=scipy.linalg.expm(-1j * h), generator=h)

    @classmethod
    def from_unitary(cls, W: np.ndarray) -> "MixingMatrix":
        """Recover the Hermitian generator as i log W (principal branch)."""
        W = np.asarray(W, dtype=complex)
        h = 1j * scipy.linalg.logm(W)
        h = 0.5 * (h + h.conj().T)
        return cls(W=W, generator=h)

    @classmethod
    def identity(cls, n: int) -> "MixingMatrix":
        return cls(W=np.eye(n, dtype=complex), generator=np.zeros((n, n), dtype=complex))


@dataclass
class ConditionedOutput:
    """Single-mode state after vacuum conditioning, with its Born probability."""

    rho_out: DensityMatrix
    probability: float


def _number_sectors(basis: Basis):
    totals = basis.states.sum(axis=1)
    return [np.flatnonzero(totals == n) for n in range(int(totals.max()) + 1)]


def _check_mixing_basis(W: MixingMatrix, basis: Basis) -> None:
    if basis.n_modes != W.n_modes:
        raise ValueError(f"W mixes {W.n_modes} modes but basis has {basis.n_modes}")
    if basis.total_cap is None and len(set(basis.mode_dims)) > 1:
        raise ValueError("mixing requires equal per-mode dimensions or a total-excitation cap")


def mixing_unitary(W: MixingMatrix, basis: Basis) -> Operator:
    """Fock-space unitary U = exp(-i sum_ij h_ij a_i^+ a_j) realizing c = W b.

    The generator conserves total photon number, so U is assembled sector by
    sector; on total-excitation-capped bases this is exact.
    """
    _check_mixing_basis(W, basis)
    ann = [mode_annihilation(basis, m).entries for m in range(basis.n_modes)]
    gen = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    h = W.generator
    for i in range(basis.n_modes):
        for j in range(basis.n_modes):
            if h[i, j] != 0.0:
                gen = gen + h[i, j] * (ann[i].conj().T @ ann[j])
    gen = gen.tocsc()
    u = sp.lil_matrix((basis.dim, basis.dim), dtype=complex)
    for idx in _number_sectors(basis):
        block = gen[np.ix_(idx, idx)].toarray()
        u[np.ix_(idx, idx)] = scipy.linalg.expm(-1j * block)
    return Operator(basis, u.tocsr())


def _output_ladder_indices(basis: Basis, output_mode: int) -> np.ndarray:
    """Flat indices of the states with n quanta in the output mode, vacuum elsewhere."""
    d_eff = basis.mode_dims[output_mode]
    if basis.total_cap is not None:
        d_eff = min(d_eff, basis.total_cap + 1)
    indices = []
    for n in range(d_eff):
        occ = [0] * basis.n_modes
        occ[output_mode] = n
        indices.append(basis.flat_index(occ))
    return np.asarray(indices, dtype=np.intp)


def condition_on_vacuum(rho: DensityMatrix, W: MixingMatrix, output_mode: int) -> ConditionedOutput:
    """Mix, then project every mode except ``output_mode`` onto vacuum.

    Returns the renormalized single-mode block of U rho U^+ together with
    the conditional measurement probability (its trace).
    """
    basis = rho.basis
    if not 0 <= output_mode < basis.n_modes:
        raise ValueError(f"output mode {output_mode} out of range")
    u = mixing_unitary(W, basis)
    sel = _output_ladder_indices(basis, output_mode)
    rows = u.entries[sel].toarray()
    block = rows @ rho.entries @ rows.conj().T
    block = 0.5 * (block + block.conj().T)
    probability = float(np.real(np.trace(block)))
    if probability < _PROBABILITY_FLOOR:
        raise NumericalHealthError(
            f"vacuum condition almost never satisfied (probability {probability:.3e})"
        )
    out_basis = build_basis([len(sel)])
    return ConditionedOutput(
        rho_out=DensityMatrix(out_basis, block / probability),
        probability=probability,
    )
