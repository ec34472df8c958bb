"""Diagonalized partitioned-block frequency-domain adaptive Kalman filter.

First processing stage: predicts the echo from the far-end history with P
frequency-domain filter partitions, subtracts it from the microphone signal
and adapts the partitions with a per-bin Kalman gain.  Covariances are kept
diagonal per bin and per partition.  Blocks are hop-sized (fft_order/2) and
filtering uses overlap-save, so each partition models hop new echo-path taps.
"""

import numpy as np
from numpy.fft import rfft, irfft

from dataclasses import dataclass

from . import backend


@dataclass(frozen=True)
class KalmanConfig:
    partitions: int = 10
    smoothing: float = 0.8          # retention of the error-power recursion
    fft_order: int = 512
    hop: int = 256
    regularization: float = 1e-10
    forgetting: float = 0.999       # coefficient leak; couples into process noise
    constrain: bool = True          # project circular-convolution artifacts every frame
    initial_covariance: float = 1e2

    def __post_init__(self):
        if self.partitions < 1:
            raise ValueError(f"partitions must be >= 1, got {self.partitions}")
        if not 0.0 < self.smoothing < 1.0:
            raise ValueError(f"smoothing must be in (0, 1), got {self.smoothing}")
        if self.regularization <= 0.0:
            raise ValueError("regularization must be positive")
        if not 0.0 < self.forgetting <= 1.0:
            raise ValueError(f"forgetting must be in (0, 1], got {self.forgetting}")
        if self.fft_order != 2 * self.hop:
            raise ValueError("overlap-save realization requires fft_order == 2 * hop")

    @property
    def bins(self):
        return self.fft_order // 2 + 1

    @property
    def modeled_taps(self):
        """Echo-path length covered by the filter, in samples."""
        return self.partitions * (self.fft_order - self.hop)


def compute_error(mic_block, echo_block):
    """Error signal: microphone minus echo estimate, pointwise."""
    mic_block = np.asarray(mic_block, dtype=np.float64)
    echo_block = np.asarray(echo_block, dtype=np.float64)
    if mic_block.shape != echo_block.shape:
        raise ValueError(
            f"length mismatch: mic {mic_block.shape} vs echo {echo_block.shape}"
        )
    return mic_block - echo_block


class PartitionedKalmanFilter:
    """Streaming echo canceller over hop-sized blocks.

    Call order per block is fixed: ``process_block`` runs
    predict -> error -> noise-PSD updates -> coefficient update.  The pieces
    are public for tests and diagnostics.  ``diagnostics``, when given, is a
    writable text stream receiving one CSV row per frame:
    frame,erle_db,coef_energy.
    """

    def __init__(self, cfg: KalmanConfig = KalmanConfig(), kernels=None, diagnostics=None):
        self.cfg = cfg
        self.kernels = kernels if kernels is not None else backend.get_kernels()
        self.diagnostics = diagnostics
        self._a = cfg.forgetting
        self._a2 = cfg.forgetting**2
        self.reset()

    def reset(self):
        cfg = self.cfg
        shape = (cfg.partitions, cfg.bins)
        self.coefficients = np.zeros(shape, dtype=np.complex128)
        self.state_covariance = np.full(shape, cfg.initial_covariance)
        self.obs_noise_psd = np.zeros(cfg.bins)
        self.proc_noise_psd = np.zeros(shape)
        self.farend_history = np.zeros(shape, dtype=np.complex128)
        self._farend_buf = np.zeros(cfg.fft_order)
        self.frame_index = -1

    # -- per-block pieces -------------------------------------------------

    def push_farend(self, block):
        """Shift hop new far-end samples in and refresh the partition history."""
        hop = self.cfg.hop
        block = np.asarray(block, dtype=np.float64)
        if block.shape != (hop,):
            raise ValueError(f"expected block of {hop} samples, got shape {block.shape}")
        self._farend_buf[:-hop] = self._farend_buf[hop:]
        self._farend_buf[-hop:] = block
        self.farend_history[1:] = self.farend_history[:-1]
        self.farend_history[0] = rfft(self._farend_buf)
        self.frame_index += 1

    def predict_echo(self):
        """Echo estimate for the current block: (spectrum, time-domain block).

        The spectrum is the partition sum over the far-end history; the block
        is its overlap-save projection (second half of the inverse transform),
        which discards circular-convolution artifacts.
        """
        spec = self.kernels.predict_spectrum(self.coefficients, self.farend_history)
        echo_block = irfft(spec, n=self.cfg.fft_order)[self.cfg.hop :]
        return spec, echo_block

    def error_spectrum(self, error_block):
        """Transform of the zero-padded error block (overlap-save convention)."""
        buf = np.zeros(self.cfg.fft_order)
        buf[self.cfg.hop :] = error_block
        return rfft(buf)

    def update_observation_noise(self, error_spec):
        s = self.cfg.smoothing
        power = error_spec.real**2 + error_spec.imag**2
        self.obs_noise_psd *= s
        self.obs_noise_psd += (1.0 - s) * power

    def update_process_noise(self):
        np.multiply(
            1.0 - self._a2,
            self.coefficients.real**2 + self.coefficients.imag**2,
            out=self.proc_noise_psd,
        )

    def update(self, error_spec):
        """Kalman gain, coefficient and covariance update for one frame."""
        delta = self.kernels.gain_update(
            self.state_covariance,
            self.farend_history,
            error_spec,
            self.obs_noise_psd,
            self.proc_noise_psd,
            self._a2,
            self.cfg.regularization,
        )
        if self.cfg.constrain:
            tails = irfft(delta, n=self.cfg.fft_order, axis=1)
            tails[:, self.cfg.hop :] = 0.0
            delta = rfft(tails, axis=1)
        self.coefficients += delta
        self.coefficients *= self._a

    # -- streaming entry point --------------------------------------------

    def process_block(self, farend_block, mic_block):
        """Advance one block; returns (error_block, echo_block)."""
        self.push_farend(farend_block)
        _, echo_block = self.predict_echo()
        error_block = compute_error(mic_block, echo_block)
        error_spec = self.error_spectrum(error_block)
        self.update_observation_noise(error_spec)
        self.update_process_noise()
        self.update(error_spec)
        if self.diagnostics is not None:
            self._dump_diagnostics(mic_block, error_block)
        return error_block, echo_block

    def process(self, farend, mic):
        """Run over whole signals (truncated to a block multiple); returns (error, echo)."""
        hop = self.cfg.hop
        n = min(len(farend), len(mic)) // hop * hop
        error = np.zeros(n)
        echo = np.zeros(n)
        for start in range(0, n, hop):
            stop = start + hop
            error[start:stop], echo[start:stop] = self.process_block(
                farend[start:stop], mic[start:stop]
            )
        return error, echo

    def coefficient_energy(self):
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def _dump_diagnostics(self, mic_block, error_block):
        mic_pow = float(np.mean(mic_block**2))
        err_pow = float(np.mean(error_block**2))
        erle = 10.0 * np.log10(max(mic_pow, 1e-12) / max(err_pow, 1e-12))
        self.diagnostics.write(
            f"{self.frame_index},{erle:.3f},{self.coefficient_energy():.6e}\n"
        )
