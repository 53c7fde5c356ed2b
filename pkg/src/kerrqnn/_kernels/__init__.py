"""Backend selection for the Lindblad integrator hot loop.

The compiled Cython kernel is preferred when the extension built; the
numpy/scipy implementation is the fallback.  Set KERRQNN_BACKEND=numpy or
KERRQNN_BACKEND=cython to force a choice (importing a missing compiled
backend raises).
"""

import os

import numpy as np
import scipy.sparse as sp

from ._lindblad_np import LindbladRHS as _NumpyRHS

try:
    from . import _lindblad_cy as _cy
except ImportError:  # extension not built; numpy fallback only
    _cy = None

_ENV_VAR = "KERRQNN_BACKEND"


def available_backends() -> tuple:
    return ("cython", "numpy") if _cy is not None else ("numpy",)


def default_backend() -> str:
    forced = os.environ.get(_ENV_VAR)
    if forced:
        if forced not in ("cython", "numpy"):
            raise ValueError(f"{_ENV_VAR} must be 'cython' or 'numpy', got {forced!r}")
        if forced == "cython" and _cy is None:
            raise ImportError("compiled kernel requested but kerrqnn._kernels._lindblad_cy is not built")
        return forced
    return "cython" if _cy is not None else "numpy"


class _CythonRHS:
    name = "cython"

    def __init__(self, h_csr, jump_maps, ndiag, gamma):
        h = h_csr.tocsr()
        h.sort_indices()
        self._h_data = np.ascontiguousarray(h.data, dtype=complex)
        self._h_indices = np.ascontiguousarray(h.indices, dtype=np.int32)
        self._h_indptr = np.ascontiguousarray(h.indptr, dtype=np.int32)
        srcs, dsts, ws, ptr = [], [], [], [0]
        for src, dst, w in jump_maps:
            srcs.append(np.asarray(src))
            dsts.append(np.asarray(dst))
            ws.append(np.asarray(w))
            ptr.append(ptr[-1] + len(src))
        cat = lambda parts, dt: (
            np.ascontiguousarray(np.concatenate(parts) if parts else [], dtype=dt)
        )
        self._src = cat(srcs, np.int32)
        self._dst = cat(dsts, np.int32)
        self._w = cat(ws, np.float64)
        self._ptr = np.asarray(ptr, dtype=np.int32)
        self._ndiag = np.ascontiguousarray(ndiag, dtype=np.float64)
        self._gamma = float(gamma)

    def __call__(self, rho, out):
        return _cy.lindblad_rhs_kernel(
            rho, out,
            self._h_data, self._h_indices, self._h_indptr,
            self._src, self._dst, self._w, self._ptr,
            self._ndiag, self._gamma,
        )


def build_lindblad_rhs(h_csr: sp.spmatrix, jump_maps, ndiag, gamma: float, backend: str | None = None):
    """Return a callable rhs(rho, out) for the master-equation derivative.

    ``jump_maps`` holds one (src, dst, weight) index triple per mode; the
    mode operator acts as |dst[j]> w[j] <src[j]|.  ``ndiag`` is the total
    occupation of each basis state (the diagonal of sum_i n_i).
    """
    backend = backend or default_backend()
    if backend == "numpy":
        return _NumpyRHS(h_csr, jump_maps, ndiag, gamma)
    if backend == "cython":
        if _cy is None:
            raise ImportError("compiled kernel not available; rebuild or use backend='numpy'")
        return _CythonRHS(h_csr, jump_maps, ndiag, gamma)
    raise ValueError(f"unknown backend {backend!r}")
