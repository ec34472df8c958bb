"""End-to-end streaming pipeline: Kalman canceller -> feature frontend ->
mask estimator -> masked synthesis.

Blocks are hop-sized; the output lags the microphone input by exactly one hop
(`EchoNoiseReducer.latency` samples) due to the analysis/synthesis overlap.
"""

from dataclasses import dataclass

import numpy as np

from .config import ConfigError
from .features import frontend_frame, make_layout
from .kalman import KalmanConfig, PartitionedKalmanFilter
from .masking import (
    ComplexMask,
    FrameContext,
    IdentityMaskEstimator,
    OracleMaskEstimator,
    WienerMaskEstimator,
    apply_mask,
)
from .stft import StftAnalyzer, StftConfig, StftSynthesizer, decompress

ESTIMATOR_NAMES = ("identity", "wiener", "oracle")


@dataclass(frozen=True)
class PipelineConfig:
    """Full pipeline configuration; defaults reproduce the reference setup:
    512-point FFT at 16 kHz (257 bins), hop 256, compression 0.3, bands of
    48 bins at 0.33 overlap (8 bands), 10 filter partitions, smoothing 0.8."""

    stft: StftConfig = StftConfig()
    kalman: KalmanConfig = KalmanConfig()
    alpha: float = 0.3
    band_len: int = 48
    band_overlap: float = 0.33
    estimator: str = "wiener"
    mask_ceiling: float = 2.0
    gain_floor: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.mask_ceiling <= 0.0:
            raise ValueError("mask_ceiling must be positive")
        if not 0.0 <= self.gain_floor < 1.0:
            raise ValueError(f"gain_floor must be in [0, 1), got {self.gain_floor}")
        if (self.kalman.fft_order, self.kalman.hop) != (self.stft.fft_order, self.stft.hop):
            raise ValueError("kalman and stft transform geometry must agree")
        self.layout()  # validates band parameters

    def layout(self):
        return make_layout(self.stft.bins, self.band_len, self.band_overlap)

    @property
    def feature_geometry(self):
        """(channels, band_len, bins) triple a mask net must match."""
        layout = self.layout()
        return (3 * layout.band_count, layout.band_len, self.stft.bins)


def make_estimator(selector, cfg, clean=None):
    """Estimator from its selector string: identity | wiener | oracle | neural:<path>.

    The oracle needs the aligned clean near-end signal (simulation only).
    """
    bins = cfg.stft.bins
    if selector == "identity":
        return IdentityMaskEstimator(bins)
    if selector == "wiener":
        return WienerMaskEstimator(bins, alpha=cfg.alpha, gain_floor=cfg.gain_floor)
    if selector == "oracle":
        if clean is None:
            raise ConfigError("oracle estimator requires scenario ground truth")
        return OracleMaskEstimator(clean, cfg.stft, cfg.alpha, cfg.mask_ceiling)
    if selector.startswith("neural:"):
        from .neural import RecurrentMaskNet

        path = selector.split(":", 1)[1]
        if not path:
            raise ConfigError("neural estimator needs a weights path (neural:<path>)")
        try:
            return RecurrentMaskNet.load(path, expect_geometry=cfg.feature_geometry)
        except FileNotFoundError:
            raise ConfigError(f"estimator weights not found: {path}") from None
    raise ConfigError(
        f"unknown estimator {selector!r}; expected one of "
        f"{', '.join(ESTIMATOR_NAMES)} or neural:<path>"
    )


class EchoNoiseReducer:
    """Streaming near-end speech estimator over (mic, far-end) block pairs.

    `estimator` may be a ready estimator object; otherwise it is built from
    cfg.estimator.  With keep_internals=True the canceller's error and echo
    streams are retained for diagnostics/metrics.
    """

    def __init__(self, cfg=PipelineConfig(), estimator=None, kernels=None,
                 keep_internals=False):
        self.cfg = cfg
        self.layout = cfg.layout()
        self.kf = PartitionedKalmanFilter(cfg.kalman, kernels=kernels)
        self.estimator = estimator if estimator is not None else make_estimator(
            cfg.estimator, cfg
        )
        self._za = StftAnalyzer(cfg.stft)
        self._ea = StftAnalyzer(cfg.stft)
        self._ya = StftAnalyzer(cfg.stft)
        self._synth = StftSynthesizer(cfg.stft)
        self.keep_internals = keep_internals
        self._error_blocks = []
        self._echo_blocks = []

    @property
    def latency(self):
        """Algorithmic latency of the output relative to the mic input, samples."""
        return self.cfg.stft.fft_order - self.cfg.stft.hop

    def reset(self):
        self.kf.reset()
        self.estimator.reset()
        for stage in (self._za, self._ea, self._ya, self._synth):
            stage.reset()
        self._error_blocks = []
        self._echo_blocks = []

    def process_block(self, mic_block, farend_block):
        """Advance one hop: returns the synthesized near-end estimate block."""
        error_block, echo_block = self.kf.process_block(farend_block, mic_block)
        if self.keep_internals:
            self._error_blocks.append(error_block)
            self._echo_blocks.append(echo_block)
        z_spec = self._za.push(error_block)
        e_spec = self._ea.push(echo_block)
        y_spec = self._ya.push(farend_block)
        block, z_frame = frontend_frame(z_spec, e_spec, y_spec, self.cfg.alpha, self.layout)
        ctx = FrameContext(z_spec, e_spec, y_spec, z_frame, self._za.frame_index)
        mask = self.estimator.step(block, ctx)
        magnitude = np.minimum(np.asarray(mask.magnitude), self.cfg.mask_ceiling)
        masked = apply_mask(z_frame, ComplexMask(magnitude, np.asarray(mask.phase)))
        return self._synth.push(decompress(masked, self.cfg.alpha))

    def process(self, mic, farend):
        """Process whole signals from a fresh state; output has len(mic) samples.

        The shorter input is zero-padded to the longer one.  Output sample n
        is the estimate for mic sample n - latency.
        """
        self.reset()
        mic = np.asarray(mic, dtype=np.float64)
        farend = np.asarray(farend, dtype=np.float64)
        hop = self.cfg.stft.hop
        n = max(len(mic), len(farend))
        padded = -(-n // hop) * hop
        mic_p = np.zeros(padded)
        mic_p[: len(mic)] = mic
        far_p = np.zeros(padded)
        far_p[: len(farend)] = farend
        out = np.zeros(padded)
        for start in range(0, padded, hop):
            stop = start + hop
            out[start:stop] = self.process_block(mic_p[start:stop], far_p[start:stop])
        return out[: len(mic)]

    @property
    def error_signal(self):
        if not self.keep_internals:
            raise RuntimeError("construct with keep_internals=True to record the error signal")
        return np.concatenate(self._error_blocks) if self._error_blocks else np.zeros(0)

    @property
    def echo_signal(self):
        if not self.keep_internals:
            raise RuntimeError("construct with keep_internals=True to record the echo signal")
        return np.concatenate(self._echo_blocks) if self._echo_blocks else np.zeros(0)
