import numpy as np
import pytest
from scipy.signal import welch

from aenr.simulate import (
    ScenarioSpec,
    active_power,
    build_scenario,
    make_source,
    mix,
    pink_source,
    random_echo_path,
    render_echo,
    speech_shaped_source,
    tonal_source,
    white_source,
)

RATE = 16000


def measured_db(num, den):
    return 10.0 * np.log10(active_power(num) / active_power(den))


def test_render_echo_unit_impulse_passthrough():
    rng = np.random.default_rng(0)
    far = rng.standard_normal(4000)
    echo = render_echo(far, np.array([1.0]))
    assert np.allclose(echo, far, atol=1e-12)


def test_render_echo_zero_path():
    far = np.random.default_rng(1).standard_normal(1000)
    assert np.all(render_echo(far, np.zeros(16)) == 0)


def test_render_echo_empty_path_rejected():
    with pytest.raises(ValueError):
        render_echo(np.zeros(100), np.array([]))


def test_render_echo_matches_direct_convolution():
    rng = np.random.default_rng(2)
    far = rng.standard_normal(6000)
    taps = rng.standard_normal(512) * 0.05
    echo = render_echo(far, taps)
    direct = np.convolve(far, taps)[: len(far)]
    assert np.max(np.abs(echo - direct)) < 1e-9


def test_render_echo_applies_delay_and_clip():
    far = np.ones(100)
    echo = render_echo(far, np.array([1.0]), delay=10)
    assert np.all(echo[:10] == 0) and np.all(echo[10:] == 1.0)
    clipped = render_echo(4.0 * far, np.array([1.0]), clip_level=2.0)
    assert np.all(clipped == 2.0)


def test_mix_identity_holds_exactly():
    truth = build_scenario(ScenarioSpec(kind="DT", duration_s=2.0, seed=3))
    assert np.array_equal(truth.mic, truth.near + truth.echo + truth.noise)


def test_nst_structure():
    truth = build_scenario(ScenarioSpec(kind="NST", duration_s=2.0, seed=4))
    assert np.all(truth.echo == 0)
    assert np.all(truth.farend == 0)
    assert np.array_equal(truth.mic, truth.near + truth.noise)


def test_fst_structure():
    truth = build_scenario(ScenarioSpec(kind="FST", duration_s=2.0, seed=5))
    assert np.all(truth.near == 0)
    assert np.array_equal(truth.mic, truth.echo + truth.noise)
    assert np.any(truth.echo != 0)


@pytest.mark.parametrize("ser", [-20.0, -5.0, 0.0, 7.5, 20.0])
def test_requested_ser_measured_within_tenth_db(ser):
    truth = build_scenario(ScenarioSpec(kind="DT", ser_db=ser, snr_db=15.0,
                                        duration_s=4.0, seed=6))
    assert measured_db(truth.near, truth.echo) == pytest.approx(ser, abs=0.1)


@pytest.mark.parametrize("snr", [-5.0, 0.0, 12.0, 30.0])
def test_requested_snr_measured_within_tenth_db(snr):
    truth = build_scenario(ScenarioSpec(kind="DT", ser_db=0.0, snr_db=snr,
                                        duration_s=4.0, seed=7))
    assert measured_db(truth.near, truth.noise) == pytest.approx(snr, abs=0.1)


def test_fst_snr_references_echo_power():
    truth = build_scenario(ScenarioSpec(kind="FST", snr_db=10.0, duration_s=4.0, seed=8))
    assert measured_db(truth.echo, truth.noise) == pytest.approx(10.0, abs=0.1)


def test_mix_rejects_silent_sources_for_scaling():
    spec = ScenarioSpec(kind="DT", duration_s=1.0, seed=9)
    n = spec.samples
    silent = np.zeros(n)
    live = np.random.default_rng(9).standard_normal(n)
    with pytest.raises(ValueError):
        mix(spec, silent, live, live)  # silent near end
    with pytest.raises(ValueError):
        mix(spec, live, silent, live)  # silent noise
    with pytest.raises(ValueError):
        mix(spec, live, live, silent)  # silent far end -> silent echo


def test_scenario_determinism():
    spec = ScenarioSpec(kind="DT", ser_db=3.0, snr_db=18.0, duration_s=2.0, seed=10)
    a = build_scenario(spec)
    b = build_scenario(spec)
    for key, stream in a.components().items():
        assert np.array_equal(stream, b.components()[key]), key


def test_sources_deterministic_per_seed():
    for name in ("white", "pink", "speech", "tones"):
        a = make_source(name, 8000, np.random.default_rng(11))
        b = make_source(name, 8000, np.random.default_rng(11))
        assert np.array_equal(a, b), name


def test_unknown_source_rejected():
    with pytest.raises(ValueError):
        make_source("brown", 100, np.random.default_rng(0))


def octave_band_levels(signal, bands):
    freqs, psd = welch(signal, fs=RATE, nperseg=8192)
    return [10.0 * np.log10(psd[(freqs >= lo) & (freqs < hi)].mean()) for lo, hi in bands]


def test_white_source_flat_within_1db_per_octave():
    signal = white_source(10 * RATE, np.random.default_rng(12))
    bands = [(250, 500), (500, 1000), (1000, 2000), (2000, 4000), (4000, 8000)]
    levels = octave_band_levels(signal, bands)
    slopes = np.diff(levels)
    assert np.max(np.abs(slopes)) <= 1.0, slopes


def test_speech_source_follows_declared_tilt():
    # declared: about -6 dB per octave between 500 Hz and 4 kHz
    signal = speech_shaped_source(10 * RATE, np.random.default_rng(13))
    levels = octave_band_levels(signal, [(500, 1000), (1000, 2000), (2000, 4000)])
    slopes = np.diff(levels)
    assert np.max(np.abs(np.array(slopes) + 6.0)) <= 2.0, slopes


def test_pink_source_tilt():
    signal = pink_source(10 * RATE, np.random.default_rng(14))
    levels = octave_band_levels(signal, [(250, 500), (500, 1000), (1000, 2000), (2000, 4000)])
    slopes = np.diff(levels)
    assert np.max(np.abs(np.array(slopes) + 3.0)) <= 1.0, slopes


def test_tonal_source_is_harmonic():
    signal = tonal_source(4 * RATE, np.random.default_rng(15), f0=200.0)
    freqs, psd = welch(signal, fs=RATE, nperseg=8192)
    peak = freqs[np.argmax(psd)]
    assert abs(peak - 200.0) < 5.0


def test_random_echo_path_properties():
    path = random_echo_path(np.random.default_rng(16), 512, decay_ms=20.0)
    assert len(path) == 512
    assert np.linalg.norm(path) == pytest.approx(1.0)
    head = np.sum(path[:128] ** 2)
    tail = np.sum(path[384:] ** 2)
    assert head > 10.0 * tail  # decays


def test_active_power_ignores_silence():
    rng = np.random.default_rng(17)
    burst = rng.standard_normal(8000)
    padded = np.concatenate([np.zeros(8000), burst, np.zeros(8000)])
    assert active_power(padded) == pytest.approx(active_power(burst), rel=0.05)


def test_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(kind="XYZ")
    with pytest.raises(ValueError):
        ScenarioSpec(duration_s=0.0)
    with pytest.raises(ValueError):
        ScenarioSpec(echo_delay=-1)
