"""16 kHz mono WAV I/O on top of scipy; float64 in [-1, 1] inside the package."""

import numpy as np
from scipy.io import wavfile

from .config import ConfigError


def read_wav(path, expect_rate=None):
    """Read a mono PCM16 or float32 WAV into float64 samples."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: not a readable WAV file ({exc})") from None
    if data.ndim != 1:
        raise ConfigError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if expect_rate is not None and rate != expect_rate:
        raise ConfigError(f"{path}: sample rate {rate} Hz, expected {expect_rate} Hz")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype == np.int32:
        return data.astype(np.float64) / 2147483648.0
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise ConfigError(f"{path}: unsupported sample format {data.dtype}")


def write_wav(path, data, rate=16000, fmt="float32"):
    """Write samples as float32 (default, lossless for metrics) or pcm16."""
    data = np.asarray(data, dtype=np.float64)
    if fmt == "float32":
        wavfile.write(path, rate, data.astype(np.float32))
    elif fmt == "pcm16":
        clipped = np.clip(data, -1.0, 32767.0 / 32768.0)
        wavfile.write(path, rate, np.round(clipped * 32768.0).astype(np.int16))
    else:
        raise ValueError(f"unknown WAV format {fmt!r}")
