"""Pure numpy/scipy evaluation of the Lindblad right-hand side.

Fallback backend; mirrors the compiled kernel exactly (same inputs, same
output) so the two can be swapped and benchmarked against each other.
"""

import numpy as np
import scipy.sparse as sp


class LindbladRHS:
    """Callable computing drho/dt = -i[H, rho] + (g/2) sum_i (2 a_i rho a_i^+ - {n_i, rho})."""

    name = "numpy"

    def __init__(self, h_csr: sp.csr_matrix, jump_maps, ndiag: np.ndarray, gamma: float):
        self.h = h_csr.tocsr()
        self.ht = h_csr.T.tocsr()
        self.gamma = float(gamma)
        # decay prefactor -(g/2)(N_r + N_c) as a dense elementwise mask
        nd = np.asarray(ndiag, dtype=float)
        self.decay = -0.5 * self.gamma * (nd[:, None] + nd[None, :])
        self.jumps = [
            (np.asarray(src, dtype=np.intp), np.asarray(dst, dtype=np.intp),
             self.gamma * np.outer(w, w))
            for src, dst, w in jump_maps
        ]

    def __call__(self, rho: np.ndarray, out: np.ndarray) -> np.ndarray:
        np.multiply(self.decay, rho, out=out)
        out += -1j * (self.h @ rho)
        out += 1j * (self.ht @ rho.T.copy()).T
        if self.gamma != 0.0:
            for src, dst, w in self.jumps:
                out[np.ix_(dst, dst)] += w * rho[np.ix_(src, src)]
        return out
