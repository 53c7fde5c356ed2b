# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled Lindblad right-hand-side kernel.

Fuses the commutator, the per-mode quantum jumps and the anticommutator
decay into a single pass over the density matrix, with the Hamiltonian in
CSR form.  All jump operators lower one mode, so each maps a basis state
to at most one other state; the jump term then reduces to a weighted
gather/scatter addressed by precomputed index arrays.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


def lindblad_rhs_kernel(
    cplx[:, ::1] rho,
    cplx[:, ::1] out,
    cplx[::1] h_data,
    int[::1] h_indices,
    int[::1] h_indptr,
    int[::1] jump_src,
    int[::1] jump_dst,
    double[::1] jump_w,
    int[::1] jump_ptr,
    double[::1] ndiag,
    double gamma,
):
    cdef Py_ssize_t dim = rho.shape[0]
    cdef Py_ssize_t n_modes = jump_ptr.shape[0] - 1
    cdef Py_ssize_t r, c, k, idx, m, j, kk, rj, sj
    cdef cplx v, rv, acc
    cdef cplx neg_i = -1j
    cdef cplx pos_i = 1j
    cdef double wj, half_g = 0.5 * gamma

    with nogil:
        # decay term: out = -(g/2)(N_r + N_c) rho
        for r in range(dim):
            for c in range(dim):
                out[r, c] = -half_g * (ndiag[r] + ndiag[c]) * rho[r, c]

        # -i H rho : row r of out accumulates -i H[r,k] * row k of rho
        for r in range(dim):
            for idx in range(h_indptr[r], h_indptr[r + 1]):
                k = h_indices[idx]
                v = neg_i * h_data[idx]
                for c in range(dim):
                    out[r, c] += v * rho[k, c]

        # +i rho H : for each nonzero H[k,c], out[r,c] += i H[k,c] rho[r,k]
        for r in range(dim):
            for k in range(dim):
                rv = pos_i * rho[r, k]
                for idx in range(h_indptr[k], h_indptr[k + 1]):
                    out[r, h_indices[idx]] += h_data[idx] * rv

        # jump term: g * a_i rho a_i^+, one gather/scatter per mode
        if gamma != 0.0:
            for m in range(n_modes):
                for j in range(jump_ptr[m], jump_ptr[m + 1]):
                    rj = jump_dst[j]
                    sj = jump_src[j]
                    wj = gamma * jump_w[j]
                    for kk in range(jump_ptr[m], jump_ptr[m + 1]):
                        out[rj, jump_dst[kk]] += (wj * jump_w[kk]) * rho[sj, jump_src[kk]]

    return np.asarray(out)
