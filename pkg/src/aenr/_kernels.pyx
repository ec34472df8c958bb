# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-frame adaptive-filter kernels.

Drop-in twin of ``_kernels_np``: fuses the per-bin gain/covariance math into
single passes over the (partitions, bins) arrays, avoiding the temporary
allocations of the vectorized fallback.
"""

import numpy as np


def predict_spectrum(const double complex[:, ::1] coeffs,
                     const double complex[:, ::1] history,
                     out=None):
    """Per-bin sum over partitions of coeffs * far-end history."""
    cdef Py_ssize_t partitions = coeffs.shape[0]
    cdef Py_ssize_t bins = coeffs.shape[1]
    result = np.zeros(bins, dtype=np.complex128) if out is None else out
    cdef double complex[::1] acc = result
    cdef Py_ssize_t p, k
    for p in range(partitions):
        for k in range(bins):
            acc[k] = acc[k] + coeffs[p, k] * history[p, k]
    return result


def gain_update(double[:, ::1] cov,
                const double complex[:, ::1] history,
                const double complex[::1] error_spec,
                const double[::1] obs_noise,
                const double[:, ::1] proc_noise,
                double a2,
                double reg):
    """One diagonalized Kalman gain/covariance step; see _kernels_np.gain_update."""
    cdef Py_ssize_t partitions = cov.shape[0]
    cdef Py_ssize_t bins = cov.shape[1]
    delta_arr = np.empty((partitions, bins), dtype=np.complex128)
    cdef double complex[:, ::1] delta = delta_arr
    innov_arr = np.empty(bins)
    cdef double[::1] innov = innov_arr
    cdef Py_ssize_t p, k
    cdef double x_pow, mu
    cdef double obs_scale = 2.0 / partitions
    cdef double complex x

    for k in range(bins):
        innov[k] = obs_scale * obs_noise[k] + reg
    for p in range(partitions):
        for k in range(bins):
            x = history[p, k]
            innov[k] += cov[p, k] * (x.real * x.real + x.imag * x.imag)
    for p in range(partitions):
        for k in range(bins):
            x = history[p, k]
            x_pow = x.real * x.real + x.imag * x.imag
            mu = cov[p, k] / innov[k]
            delta[p, k] = mu * x.conjugate() * error_spec[k]
            cov[p, k] = a2 * (1.0 - 0.5 * mu * x_pow) * cov[p, k] + proc_noise[p, k]
    return delta_arr
