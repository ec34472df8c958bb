"""Complex-ratio-mask math and the pluggable mask-estimator seam.

A mask is a per-bin magnitude gain plus additive phase correction applied to
the compressed error frame: out_mag = z_mag * m_mag, out_phase wrapped into
(-pi, pi].  Estimators consume the reoriented feature block each frame and
emit one mask; the per-frame context carries the raw spectra so non-neural
estimators (oracle, Wiener baseline) can reach them.

Estimator contract: ``reset()`` restores a deterministic initial state;
``step(block, ctx)`` is strictly causal and returns a ComplexMask.
"""

from dataclasses import dataclass

import numpy as np

from .stft import CompressedFrame

MASK_CEILING = 2.0
GAIN_FLOOR = 0.05


@dataclass
class ComplexMask:
    magnitude: np.ndarray
    phase: np.ndarray

    def __len__(self):
        return len(self.magnitude)


@dataclass
class FrameContext:
    """Per-frame spectra handed to estimators alongside the feature block."""

    z_spec: np.ndarray
    echo_spec: np.ndarray
    far_spec: np.ndarray
    z_frame: CompressedFrame
    frame_index: int


def wrap_phase(phase):
    """Wrap radians into (-pi, pi]."""
    wrapped = np.mod(np.asarray(phase, dtype=np.float64), 2.0 * np.pi)
    return np.where(wrapped > np.pi, wrapped - 2.0 * np.pi, wrapped)


def apply_mask(z_frame, mask):
    """Mask the compressed error frame: magnitudes multiply, phases add."""
    if len(z_frame) != len(mask):
        raise ValueError(f"length mismatch: frame {len(z_frame)} vs mask {len(mask)}")
    return CompressedFrame(
        z_frame.magnitude * mask.magnitude,
        wrap_phase(z_frame.phase + mask.phase),
    )


def oracle_mask(clean_spec, error_spec, alpha, ceiling=MASK_CEILING, zero_floor=1e-12):
    """Ideal mask mapping the error spectrum onto the clean one (test oracle).

    Compressed-domain magnitude ratio capped at `ceiling`; bins where the
    error magnitude is below `zero_floor` get magnitude 0.
    """
    clean_spec = np.asarray(clean_spec)
    error_spec = np.asarray(error_spec)
    z_mag = np.abs(error_spec)
    live = z_mag > zero_floor
    ratio = np.zeros_like(z_mag)
    np.divide(np.abs(clean_spec) ** alpha, z_mag**alpha, out=ratio, where=live)
    magnitude = np.minimum(ratio, ceiling)
    phase = wrap_phase(np.angle(clean_spec) - np.angle(error_spec))
    return ComplexMask(magnitude, np.where(live, phase, 0.0))


def wiener_mask(error_spec, noise_psd, echo_psd, gain_floor=GAIN_FLOOR):
    """Magnitude-only Wiener gain from interference PSD estimates.

    Non-neural baseline: speech PSD is the spectral-subtraction remainder of
    the error power, and the gain is floored rather than zeroed.
    """
    error_spec = np.asarray(error_spec)
    z_pow = error_spec.real**2 + error_spec.imag**2
    interference = np.asarray(noise_psd) + np.asarray(echo_psd)
    speech_psd = np.maximum(0.0, z_pow - interference)
    gain = speech_psd / np.maximum(speech_psd + interference, 1e-30)
    return ComplexMask(np.maximum(gain, gain_floor), np.zeros_like(gain))


class ConstantMaskEstimator:
    """Fixed magnitude gain, zero phase; gain 1 makes the post-filter transparent."""

    def __init__(self, bins, gain=1.0):
        self.bins = bins
        self.gain = float(gain)

    def reset(self):
        pass

    def step(self, block, ctx):
        return ComplexMask(np.full(self.bins, self.gain), np.zeros(self.bins))


class IdentityMaskEstimator(ConstantMaskEstimator):
    def __init__(self, bins):
        super().__init__(bins, gain=1.0)


def _smooth_over_bins(values, half_width):
    if half_width <= 0:
        return values
    kernel = np.hanning(2 * half_width + 1)
    return np.convolve(values, kernel / kernel.sum(), mode="same")


class WienerMaskEstimator:
    """Wiener post-filter with tracked interference PSDs.

    Noise PSD follows a sliding minimum of the smoothed error periodogram
    (bias-compensated); the residual-echo PSD is a fixed leakage fraction of
    the smoothed echo-estimate power.  The gain follows the Wiener rule of
    :func:`wiener_mask` with a decision-directed speech-PSD estimate to tame
    musical noise.  Emitted magnitudes are compressed-domain masks: a linear
    gain g scales the error spectrum by g exactly when the mask is g**alpha.
    """

    def __init__(
        self,
        bins,
        alpha=1.0,
        gain_floor=GAIN_FLOOR,
        smoothing=0.85,
        min_window=256,
        min_bias=1.5,
        echo_leak=0.1,
        dd_weight=0.9,
        bin_smoothing=6,
    ):
        self.bins = bins
        self.alpha = alpha
        self.gain_floor = gain_floor
        self.smoothing = smoothing
        self.min_window = min_window
        self.min_bias = min_bias
        self.echo_leak = echo_leak
        self.dd_weight = dd_weight
        self.bin_smoothing = bin_smoothing
        self.reset()

    def reset(self):
        self._z_psd = None
        self._echo_psd = np.zeros(self.bins)
        self._minima = []
        self._speech_psd = None

    def _track_interference(self, ctx):
        z_pow = ctx.z_spec.real**2 + ctx.z_spec.imag**2
        e_pow = ctx.echo_spec.real**2 + ctx.echo_spec.imag**2
        if self._z_psd is None:
            self._z_psd = z_pow.copy()
        else:
            s = self.smoothing
            self._z_psd = s * self._z_psd + (1.0 - s) * z_pow
        self._minima.append(self._z_psd.copy())
        if len(self._minima) > self.min_window:
            self._minima.pop(0)
        noise_psd = self.min_bias * np.min(self._minima, axis=0)
        self._echo_psd = 0.8 * self._echo_psd + 0.2 * self.echo_leak * e_pow
        return z_pow, noise_psd, self._echo_psd

    def step(self, block, ctx):
        z_pow, noise_psd, echo_psd = self._track_interference(ctx)
        interference = noise_psd + echo_psd + 1e-30
        z_smooth = _smooth_over_bins(z_pow, self.bin_smoothing)
        posterior = np.maximum(z_smooth / interference - 1.0, 0.0)
        if self._speech_psd is None:
            prior = posterior
        else:
            w = self.dd_weight
            prior = w * self._speech_psd / interference + (1.0 - w) * posterior
        gain = np.maximum(prior / (1.0 + prior), self.gain_floor)
        self._speech_psd = (gain**2) * z_smooth
        return ComplexMask(gain**self.alpha, np.zeros(self.bins))


class OracleMaskEstimator:
    """Upper-bound estimator with access to the aligned clean near-end signal.

    Runs its own analyzer over the clean signal so its frames line up with the
    pipeline's error frames; simulation/test plumbing only.
    """

    def __init__(self, clean, stft_cfg, alpha, ceiling=MASK_CEILING):
        from .stft import StftAnalyzer  # local import to avoid cycle at module load

        self._analyzer = StftAnalyzer(stft_cfg)
        self._clean = np.asarray(clean, dtype=np.float64)
        self._hop = stft_cfg.hop
        self.alpha = alpha
        self.ceiling = ceiling
        self.reset()

    def reset(self):
        self._analyzer.reset()
        self._pos = 0

    def step(self, block, ctx):
        chunk = self._clean[self._pos : self._pos + self._hop]
        if len(chunk) < self._hop:
            chunk = np.pad(chunk, (0, self._hop - len(chunk)))
        self._pos += self._hop
        clean_spec = self._analyzer.push(chunk)
        return oracle_mask(clean_spec, ctx.z_spec, self.alpha, self.ceiling)
