"""Pure-numpy implementations of the per-frame adaptive-filter hot kernels.

Same signatures as the compiled extension in ``_kernels.pyx``; the backend
module picks whichever is importable.  Arrays are complex128/float64 and
shaped (partitions, bins) unless noted.
"""

import numpy as np


def predict_spectrum(coeffs, history, out=None):
    """Per-bin sum over partitions of coeffs * far-end history."""
    return np.einsum("pk,pk->k", coeffs, history, out=out)


def gain_update(cov, history, error_spec, obs_noise, proc_noise, a2, reg):
    """One diagonalized Kalman gain/covariance step.

    Updates ``cov`` in place and returns the unconstrained coefficient
    increment gain * error (partitions, bins).  The innovation power per bin
    is the covariance-weighted far-end power summed over partitions plus the
    observation-noise share.
    """
    partitions = cov.shape[0]
    x_pow = history.real**2 + history.imag**2
    innov = np.einsum("pk,pk->k", cov, x_pow) + (2.0 / partitions) * obs_noise + reg
    mu = cov / innov
    delta = (mu * history.conj()) * error_spec
    cov *= a2 * (1.0 - 0.5 * mu * x_pow)
    cov += proc_noise
    return delta
