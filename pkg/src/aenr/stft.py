"""Frame-based STFT analysis/synthesis and power-law magnitude compression.

A "spectrum" throughout the package is a complex vector of K = fft_order/2 + 1
bins as returned by a real FFT.  Streams are processed hop-sized block by
hop-sized block; the analyzer keeps one frame of look-back and the synthesizer
overlap-adds, so an analyze->synthesize chain has exactly one hop of latency.
"""

from dataclasses import dataclass

import numpy as np

WINDOW_NAMES = ("sqrt_hann", "hann", "rect")


def _window(name, n):
    # periodic (DFT-even) windows so the overlap-add sum is flat
    if name == "rect":
        return np.ones(n)
    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    if name == "hann":
        return hann
    if name == "sqrt_hann":
        return np.sqrt(hann)
    raise ValueError(f"unknown window {name!r}, expected one of {WINDOW_NAMES}")


def _overlap_profile(window, hop):
    """Sum of analysis*synthesis window products across overlapping frames.

    Evaluated over one hop period in steady state.  Flat profile means the
    constant-overlap-add condition holds and reconstruction is exact up to
    the returned scale.
    """
    wsq = window * window
    n = len(window)
    profile = np.zeros(hop)
    for start in range(0, n, hop):
        seg = wsq[start : start + hop]
        profile[: len(seg)] += seg
    return profile


@dataclass(frozen=True)
class StftConfig:
    """Transform geometry; defaults follow the reference pipeline setup."""

    fft_order: int = 512
    hop: int = 256
    window: str = "sqrt_hann"
    sample_rate: int = 16000

    def __post_init__(self):
        n = self.fft_order
        if n <= 0 or (n & (n - 1)) != 0:
            raise ValueError(f"fft_order must be a power of two, got {n}")
        if not 0 < self.hop <= n:
            raise ValueError(f"hop must be in (0, fft_order], got {self.hop}")
        if n % self.hop != 0:
            raise ValueError("hop must divide fft_order for streaming operation")
        profile = _overlap_profile(_window(self.window, n), self.hop)
        if profile.max() - profile.min() > 1e-9 * profile.max():
            raise ValueError(
                f"window {self.window!r} at hop {self.hop} violates the "
                "constant-overlap-add condition"
            )

    @property
    def bins(self):
        return self.fft_order // 2 + 1

    @property
    def cola_scale(self):
        """Constant the window overlap-add sums to; synthesis divides by it."""
        return float(_overlap_profile(_window(self.window, self.fft_order), self.hop).mean())

    def make_window(self):
        return _window(self.window, self.fft_order)


def analyze(frame, cfg):
    """Windowed real FFT of one fft_order-sample frame -> K complex bins."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (cfg.fft_order,):
        raise ValueError(f"expected frame of {cfg.fft_order} samples, got shape {frame.shape}")
    return np.fft.rfft(cfg.make_window() * frame)


def synthesize_frame(spectrum, cfg):
    """Inverse transform of one spectrum, synthesis-windowed, before overlap-add."""
    spectrum = np.asarray(spectrum)
    if spectrum.shape != (cfg.bins,):
        raise ValueError(f"expected {cfg.bins} bins, got shape {spectrum.shape}")
    return np.fft.irfft(spectrum, n=cfg.fft_order) * cfg.make_window() / cfg.cola_scale


class StftAnalyzer:
    """Sliding-window analyzer fed hop-sized blocks of samples."""

    def __init__(self, cfg: StftConfig):
        self.cfg = cfg
        self._win = cfg.make_window()
        self.reset()

    def reset(self):
        self._buf = np.zeros(self.cfg.fft_order)
        self.frame_index = -1

    def push(self, block):
        """Consume hop new samples, return the spectrum of the current window."""
        block = np.asarray(block, dtype=np.float64)
        hop = self.cfg.hop
        if block.shape != (hop,):
            raise ValueError(f"expected block of {hop} samples, got shape {block.shape}")
        self._buf[:-hop] = self._buf[hop:]
        self._buf[-hop:] = block
        self.frame_index += 1
        return np.fft.rfft(self._win * self._buf)


class StftSynthesizer:
    """Overlap-add synthesizer emitting hop samples per pushed spectrum."""

    def __init__(self, cfg: StftConfig):
        self.cfg = cfg
        self._win = cfg.make_window() / cfg.cola_scale
        self.reset()

    def reset(self):
        self._ola = np.zeros(self.cfg.fft_order)

    def push(self, spectrum):
        spectrum = np.asarray(spectrum)
        if spectrum.shape != (self.cfg.bins,):
            raise ValueError(f"expected {self.cfg.bins} bins, got shape {spectrum.shape}")
        hop = self.cfg.hop
        self._ola += np.fft.irfft(spectrum, n=self.cfg.fft_order) * self._win
        out = self._ola[:hop].copy()
        self._ola[:-hop] = self._ola[hop:]
        self._ola[-hop:] = 0.0
        return out


@dataclass
class CompressedFrame:
    """Power-law compressed magnitudes plus untouched phases of one spectrum."""

    magnitude: np.ndarray
    phase: np.ndarray

    def __len__(self):
        return len(self.magnitude)


def _check_alpha(alpha):
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"compression factor must be in (0, 1], got {alpha}")


def compress(spectrum, alpha):
    """|X|^alpha and arg(X) per bin; the phase of a zero bin is 0."""
    _check_alpha(alpha)
    spectrum = np.asarray(spectrum)
    return CompressedFrame(np.abs(spectrum) ** alpha, np.angle(spectrum))


def decompress(frame, alpha):
    """Invert :func:`compress`: magnitude^(1/alpha) * exp(i*phase)."""
    _check_alpha(alpha)
    return frame.magnitude ** (1.0 / alpha) * np.exp(1j * frame.phase)
