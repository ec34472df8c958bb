"""Scenario generator: echo paths, NST/FST/DT mixing with exact ground truth.

Every generated scenario satisfies mic = near + echo + noise sample-exactly,
with echo and noise gains solved so the requested signal-to-echo and
signal-to-noise ratios hold over active segments (frames above an energy
threshold of -40 dB relative to the peak frame, so silences do not bias the
scaling).  Generation is deterministic per (spec, seed).
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

SCENARIO_KINDS = ("NST", "FST", "DT")
ACTIVE_THRESHOLD_DB = -40.0
DEFAULT_RATE = 16000


@dataclass(frozen=True)
class ScenarioSpec:
    """Declarative mixing recipe; `kind` is NST, FST or DT."""

    kind: str = "DT"
    ser_db: float = 0.0
    snr_db: float = 20.0
    duration_s: float = 8.0
    seed: int = 0
    sample_rate: int = DEFAULT_RATE
    near_source: str = "speech"
    far_source: str = "speech"
    noise_source: str = "white"
    echo_taps: int = 1024
    echo_decay_ms: float = 60.0
    echo_delay: int = 0             # bulk delay in samples
    clip_level: float = 0.0         # far-end hard clip; 0 disables
    name: str = ""

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"kind must be one of {SCENARIO_KINDS}, got {self.kind!r}")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.echo_delay < 0:
            raise ValueError("echo_delay must be >= 0")
        if self.echo_taps < 1:
            raise ValueError("echo_taps must be >= 1")

    @property
    def samples(self):
        return int(round(self.duration_s * self.sample_rate))


@dataclass
class ScenarioTruth:
    """Aligned component streams; mic == near + echo + noise pointwise."""

    mic: np.ndarray
    near: np.ndarray
    echo: np.ndarray
    noise: np.ndarray
    farend: np.ndarray
    sample_rate: int = DEFAULT_RATE
    spec: ScenarioSpec | None = None

    def components(self):
        return {
            "mic": self.mic, "near": self.near, "echo": self.echo,
            "noise": self.noise, "farend": self.farend,
        }


# -- sources -----------------------------------------------------------------

def white_source(n, rng):
    return rng.standard_normal(n)


def _syllabic_envelope(n, rng, rate, active_fraction=0.6, segment_s=0.25):
    """On/off gating at syllabic rate, edges smoothed over ~30 ms."""
    seg = int(segment_s * rate)
    gates = rng.random(n // seg + 1) < active_fraction
    env = np.repeat(gates.astype(np.float64), seg)[:n]
    smooth = int(0.030 * rate)
    kernel = np.hanning(2 * smooth + 1)
    return np.convolve(env, kernel / kernel.sum(), mode="same")


def speech_shaped_source(n, rng, rate=DEFAULT_RATE, modulated=True):
    """Synthetic speech stand-in: drifting-pitch harmonic complex with a
    -6 dB/octave power tilt, a low breath-noise floor, and syllabic bursts.

    Spectrally sparse within bursts (harmonic lines) and sparse in time,
    which is what mask-based enhancement exploits in real speech.
    """
    from scipy.signal import lfilter

    drift = lfilter([1.0], [1.0, -0.999], rng.standard_normal(n)) * 0.02
    f0 = np.clip(180.0 + 60.0 * drift, 110.0, 280.0)
    phase = 2.0 * np.pi * np.cumsum(f0) / rate
    voiced = np.zeros(n)
    for k in range(1, 24):
        if k * 110.0 > 4000.0:
            break
        voiced += np.sin(k * phase + rng.uniform(0.0, 2.0 * np.pi)) / k
    a = float(np.exp(-2.0 * np.pi * 300.0 / rate))
    breath = lfilter([1.0 - a], [1.0, -a], rng.standard_normal(n))
    breath *= 10.0 ** (-30.0 / 20.0) * np.sqrt(np.mean(voiced**2) / np.mean(breath**2))
    shaped = voiced + breath
    if modulated:
        shaped = shaped * _syllabic_envelope(n, rng, rate)
    rms = np.sqrt(np.mean(shaped**2))
    return shaped / max(rms, 1e-12)


def pink_source(n, rng, rate=DEFAULT_RATE):
    """1/f-power noise (-3 dB/octave), shaped in the frequency domain."""
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / rate)
    freqs[0] = freqs[1]
    spectrum /= np.sqrt(freqs / freqs[1])
    out = np.fft.irfft(spectrum, n=n)
    return out / np.sqrt(np.mean(out**2))


def tonal_source(n, rng, rate=DEFAULT_RATE, f0=None, harmonics=5):
    """Harmonic complex with randomized fundamental and phases."""
    if f0 is None:
        f0 = float(rng.uniform(110.0, 220.0))
    t = np.arange(n) / rate
    out = np.zeros(n)
    for k in range(1, harmonics + 1):
        out += np.sin(2.0 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
    return out / np.sqrt(np.mean(out**2))


def make_source(name, n, rng, rate=DEFAULT_RATE):
    """Source by name: white | pink | speech | tones | wav:<path> | silence."""
    if name == "white":
        return white_source(n, rng)
    if name == "pink":
        return pink_source(n, rng, rate=rate)
    if name == "speech":
        return speech_shaped_source(n, rng, rate=rate)
    if name == "tones":
        return tonal_source(n, rng, rate=rate)
    if name == "silence":
        return np.zeros(n)
    if name.startswith("wav:"):
        from .wavio import read_wav

        data = read_wav(name[4:], expect_rate=rate)
        if len(data) < n:
            reps = -(-n // len(data))
            data = np.tile(data, reps)
        return data[:n].copy()
    raise ValueError(f"unknown source {name!r}")


# -- echo path ----------------------------------------------------------------

def random_echo_path(rng, taps, decay_ms=60.0, rate=DEFAULT_RATE):
    """Exponentially decaying random FIR, unit energy, direct-path spike first."""
    t = np.arange(taps) / rate
    h = rng.standard_normal(taps) * np.exp(-t / (decay_ms * 1e-3))
    h[0] = 1.0
    return h / np.linalg.norm(h)


def render_echo(farend, taps, delay=0, clip_level=None):
    """Echo = FIR * (optionally hard-clipped far end), shifted by the bulk delay."""
    farend = np.asarray(farend, dtype=np.float64)
    taps = np.atleast_1d(np.asarray(taps, dtype=np.float64))
    if taps.size == 0:
        raise ValueError("echo path must have at least one tap")
    driven = farend
    if clip_level is not None and clip_level > 0:
        driven = np.clip(farend, -clip_level, clip_level)
    echo = fftconvolve(driven, taps)[: len(farend)]
    if delay > 0:
        echo = np.concatenate([np.zeros(delay), echo[: len(farend) - delay]])
    return echo


# -- mixing ---------------------------------------------------------------------

def active_power(x, threshold_db=ACTIVE_THRESHOLD_DB, frame=160):
    """Mean power over frames within threshold_db of the loudest frame."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x) // frame * frame
    if n == 0:
        return float(np.mean(x**2)) if len(x) else 0.0
    frames = x[:n].reshape(-1, frame)
    powers = np.mean(frames**2, axis=1)
    peak = powers.max()
    if peak <= 0.0:
        return 0.0
    active = powers >= peak * 10.0 ** (threshold_db / 10.0)
    return float(powers[active].mean())


def _scale_for_ratio(reference_power, interferer, ratio_db, what):
    p = active_power(interferer)
    if p <= 0.0:
        raise ValueError(f"cannot scale silent {what} signal to a target ratio")
    return np.sqrt(reference_power / (p * 10.0 ** (ratio_db / 10.0)))


def mix(spec, near, noise, farend, echo_path=None):
    """Assemble a ScenarioTruth from raw sources per the scenario recipe.

    Echo is rendered from the far end and scaled to the requested SER against
    the near-end active power; noise is scaled to the requested SNR (against
    echo power for FST, where there is no near end).  `echo_path` overrides
    the spec-seeded random FIR with explicit taps.
    """
    n = spec.samples
    for name, src in (("near", near), ("noise", noise), ("farend", farend)):
        if len(src) < n:
            raise ValueError(f"{name} source shorter than scenario duration")
    near = np.asarray(near, dtype=np.float64)[:n].copy()
    noise = np.asarray(noise, dtype=np.float64)[:n].copy()
    farend = np.asarray(farend, dtype=np.float64)[:n].copy()

    if echo_path is None:
        rng = np.random.default_rng(spec.seed + 0x5EED)
        path = random_echo_path(rng, spec.echo_taps, spec.echo_decay_ms, spec.sample_rate)
    else:
        path = np.asarray(echo_path, dtype=np.float64)

    if spec.kind == "NST":
        farend = np.zeros(n)
        echo = np.zeros(n)
    else:
        clip = spec.clip_level if spec.clip_level > 0 else None
        echo = render_echo(farend, path, spec.echo_delay, clip)

    if spec.kind == "FST":
        near = np.zeros(n)

    if spec.kind == "DT":
        p_near = active_power(near)
        if p_near <= 0.0:
            raise ValueError("cannot scale echo against a silent near end")
        echo *= _scale_for_ratio(p_near, echo, spec.ser_db, "echo")

    if spec.kind == "FST":
        snr_reference = active_power(echo)
    else:
        snr_reference = active_power(near)
    noise *= _scale_for_ratio(snr_reference, noise, spec.snr_db, "noise")

    mic = near + echo + noise
    return ScenarioTruth(mic, near, echo, noise, farend, spec.sample_rate, spec)


def build_scenario(spec):
    """Deterministically generate sources and mix them per the spec."""
    rng = np.random.default_rng(spec.seed)
    n = spec.samples
    near = make_source(spec.near_source, n, rng, spec.sample_rate)
    farend = make_source(spec.far_source, n, rng, spec.sample_rate)
    noise = make_source(spec.noise_source, n, rng, spec.sample_rate)
    return mix(spec, near, noise, farend)
