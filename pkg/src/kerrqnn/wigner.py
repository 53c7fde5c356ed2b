"""Wigner functions on phase-space grids and the normalized distance metric.

Convention: x = (a + a^+)/sqrt(2), p = (a - a^+)/(i sqrt(2)), and the
Wigner function integrates to the state trace over dx dp.  Fock-basis
evaluation uses the Clenshaw-summed Laguerre series, which is stable for
cutoffs well past 40 (no factorials are formed).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import DensityMatrix, cat_state

CONVENTION = "x=(a+adag)/sqrt2, hbar=1, integral W dx dp = 1"


@dataclass(frozen=True)
class GridSpec:
    """Rectangular phase-space grid geometry."""

    x_min: float = -6.0
    x_max: float = 6.0
    p_min: float = -6.0
    p_max: float = 6.0
    nx: int = 201
    np: int = 201

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.p_min < self.p_max):
            raise ValueError("grid bounds must be strictly increasing")
        if self.nx < 2 or self.np < 2:
            raise ValueError("grid needs at least 2 points per axis")

    def x_axis(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def p_axis(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.np)

    def cell_area(self) -> float:
        dx = (self.x_max - self.x_min) / (self.nx - 1)
        dp = (self.p_max - self.p_min) / (self.np - 1)
        return dx * dp


@dataclass
class WignerGrid:
    """Sampled W(x, p); values[i, j] = W(x_i, p_j)."""

    spec: GridSpec
    values: np.ndarray
    convention: str = CONVENTION

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.spec.nx, self.spec.np):
            raise ValueError("values shape does not match grid geometry")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Wigner values must be finite")

    def integral(self) -> float:
        return float(np.sum(self.values) * self.spec.cell_area())


def _laguerre_clenshaw(order: int, x: np.ndarray, coeffs: np.ndarray):
    """Clenshaw evaluation of sum_n c_n (-1)^n sqrt(n! order!/(n+order)!) L_n^order(x)."""
    if len(coeffs) == 1:
        y0, y1 = coeffs[0], 0.0
    elif len(coeffs) == 2:
        y0, y1 = coeffs[0], coeffs[1]
    else:
        k = len(coeffs)
        y0, y1 = coeffs[-2], coeffs[-1]
        for i in range(3, len(coeffs) + 1):
            k -= 1
            y0, y1 = (
                coeffs[-i] - y1 * math.sqrt(((k - 1.0) * (order + k - 1.0)) / ((order + k) * k)),
                y0 - y1 * ((order + 2.0 * k - 1.0) - x) / math.sqrt((order + k) * k),
            )
    return y0 - y1 * ((order + 1.0) - x) / math.sqrt(order + 1.0)


def wigner_of_state(rho: DensityMatrix, spec: GridSpec | None = None) -> WignerGrid:
    """Wigner function of a single-mode state on the given grid."""
    spec = spec or GridSpec()
    if rho.basis.n_modes != 1:
        raise ValueError("wigner_of_state expects a single-mode density matrix")
    defect = rho.hermiticity_defect()
    if defect > 1e-10:
        raise ValueError(f"density matrix is not Hermitian (defect {defect:.3e})")
    m = np.asarray(rho.entries, dtype=complex)
    dim = m.shape[0]

    g = math.sqrt(2.0)
    a2 = g * (spec.x_axis()[:, None] + 1j * spec.p_axis()[None, :])
    b = np.abs(a2) ** 2

    # double the off-diagonals so only upper diagonals need summing
    scaled = m * (2.0 - np.eye(dim))
    w = np.full(a2.shape, scaled[0, dim - 1], dtype=complex)
    for off in range(dim - 2, -1, -1):
        diag = np.diagonal(scaled, offset=off)
        w = _laguerre_clenshaw(off, b, diag) + w * a2 / math.sqrt(off + 1.0)

    values = np.real(w) * np.exp(-0.5 * b) * (g * g * 0.5 / math.pi)
    return WignerGrid(spec=spec, values=values)


def _cat_cutoff(beta: complex) -> int:
    dim = max(10, int(math.ceil(abs(beta) ** 2 + 8.0 * abs(beta) + 10.0)))
    return dim


def target_cat_wigner(beta: complex, k: int, spec: GridSpec | None = None) -> WignerGrid:
    """Wigner function of the target two-component superposition state."""
    spec = spec or GridSpec()
    reach = math.sqrt(2.0) * abs(beta) + 4.0
    coverage = min(-spec.x_min, spec.x_max, -spec.p_min, spec.p_max)
    if coverage < reach:
        raise ValueError(
            f"grid extends to {coverage:.2f} but the state needs {reach:.2f}; enlarge the grid"
        )
    state = cat_state(beta, k, _cat_cutoff(beta))
    return wigner_of_state(state.density(), spec)


def wigner_error(w_obtained: WignerGrid, w_target: WignerGrid) -> float:
    """Normalized squared distance: int (WO - WT)^2 / int (WO + WT)^2."""
    if w_obtained.spec != w_target.spec:
        raise ValueError("Wigner grids have different geometry")
    diff = w_obtained.values - w_target.values
    summ = w_obtained.values + w_target.values
    denominator = float(np.sum(summ**2))
    if denominator <= 0.0:
        raise ValueError("both Wigner functions vanish on the grid")
    return float(np.sum(diff**2) / denominator)


def wigner_to_csv(grid: WignerGrid, path) -> None:
    """Write (x, p, W) triples, one grid point per row."""
    x = grid.spec.x_axis()
    p = grid.spec.p_axis()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "p", "w"])
        for i in range(grid.spec.nx):
            for j in range(grid.spec.np):
                writer.writerow([repr(float(x[i])), repr(float(p[j])), repr(float(grid.values[i, j]))])


def wigner_to_json(grid: WignerGrid, path) -> None:
    """Write geometry plus row-major values."""
    payload = {
        "x_min": grid.spec.x_min,
        "x_max": grid.spec.x_max,
        "p_min": grid.spec.p_min,
        "p_max": grid.spec.p_max,
        "nx": grid.spec.nx,
        "np": grid.spec.np,
        "convention": grid.convention,
        "values": [float(v) for v in grid.values.ravel()],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")
