import numpy as np
import pytest

from aenr.config import ConfigError
from aenr.masking import ConstantMaskEstimator
from aenr.metrics import si_sdr
from aenr.pipeline import EchoNoiseReducer, PipelineConfig, make_estimator
from aenr.simulate import ScenarioSpec, build_scenario
from aenr.stft import StftAnalyzer, StftSynthesizer

RATE = 16000
CFG = PipelineConfig()


def dt_truth(seed=7, duration_s=6.0, ser_db=0.0, snr_db=10.0):
    return build_scenario(ScenarioSpec(kind="DT", ser_db=ser_db, snr_db=snr_db,
                                       duration_s=duration_s, seed=seed))


def test_default_geometry():
    assert CFG.feature_geometry == (24, 48, 257)
    reducer = EchoNoiseReducer(CFG, estimator=ConstantMaskEstimator(257))
    assert reducer.latency == 256


def test_output_matches_input_length():
    truth = dt_truth(duration_s=1.3)
    reducer = EchoNoiseReducer(CFG, estimator=ConstantMaskEstimator(257))
    out = reducer.process(truth.mic, truth.farend)
    assert len(out) == len(truth.mic)


def test_identity_estimator_is_transparent_post_filter():
    # with a unit mask the post-filter must reproduce the canceller's error
    # signal through the analysis/synthesis chain
    from aenr.kalman import PartitionedKalmanFilter

    truth = dt_truth(duration_s=2.0)
    reducer = EchoNoiseReducer(CFG, estimator=make_estimator("identity", CFG),
                               keep_internals=True)
    out = reducer.process(truth.mic, truth.farend)

    kf = PartitionedKalmanFilter(CFG.kalman)
    error, _ = kf.process(truth.farend, truth.mic)
    analyzer, synth = StftAnalyzer(CFG.stft), StftSynthesizer(CFG.stft)
    expected = np.zeros(len(error))
    for start in range(0, len(error), CFG.stft.hop):
        block = error[start : start + CFG.stft.hop]
        expected[start : start + CFG.stft.hop] = synth.push(analyzer.push(block))
    assert np.allclose(out[: len(expected)], expected, atol=1e-9)


def test_zero_estimator_fully_suppresses():
    truth = dt_truth(duration_s=2.0)
    reducer = EchoNoiseReducer(CFG, estimator=ConstantMaskEstimator(257, gain=0.0))
    out = reducer.process(truth.mic, truth.farend)
    assert np.sum(out**2) <= 1e-6 * np.sum(truth.mic**2)


def test_oracle_estimator_recovers_near_end():
    truth = dt_truth(seed=7, duration_s=8.0)
    estimator = make_estimator("oracle", CFG, clean=truth.near)
    reducer = EchoNoiseReducer(CFG, estimator=estimator)
    out = reducer.process(truth.mic, truth.farend)
    latency = reducer.latency
    settle = RATE
    value = si_sdr(out[latency:][settle:], truth.near[: len(out) - latency][settle:])
    assert value >= 15.0, f"oracle SI-SDR {value:.1f} dB"


def test_error_decomposition_matches_echo_residual():
    truth = dt_truth(seed=9, duration_s=3.0)
    reducer = EchoNoiseReducer(CFG, estimator=ConstantMaskEstimator(257),
                               keep_internals=True)
    reducer.process(truth.mic, truth.farend)
    n = len(truth.mic) // CFG.stft.hop * CFG.stft.hop
    z = reducer.error_signal[:n]
    echo_est = reducer.echo_signal[:n]
    lhs = z - (truth.near[:n] + truth.noise[:n])
    rhs = truth.echo[:n] - echo_est
    scale = np.max(np.abs(truth.mic))
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * scale


def test_causality_truncation_equivalence():
    truth = dt_truth(seed=11, duration_s=2.0)
    reducer = EchoNoiseReducer(CFG, estimator=ConstantMaskEstimator(257, gain=0.7))
    full = reducer.process(truth.mic, truth.farend)
    half = len(truth.mic) // 2 // CFG.stft.hop * CFG.stft.hop
    prefix = reducer.process(truth.mic[:half], truth.farend[:half])
    assert np.array_equal(full[:half], prefix)


def test_mask_ceiling_enforced_on_estimator_output():
    class HotEstimator:
        def reset(self):
            pass

        def step(self, block, ctx):
            from aenr.masking import ComplexMask

            return ComplexMask(np.full(257, 50.0), np.zeros(257))

    truth = dt_truth(duration_s=1.0)
    reducer = EchoNoiseReducer(CFG, estimator=HotEstimator(), keep_internals=True)
    out = reducer.process(truth.mic, truth.farend)
    # ceiling 2.0 in the compressed domain = 2**(1/alpha) linear amplitude
    max_gain = 2.0 ** (1.0 / CFG.alpha)
    assert np.sqrt(np.sum(out**2) / np.sum(reducer.error_signal**2)) <= max_gain + 1e-6


def test_make_estimator_errors():
    with pytest.raises(ConfigError):
        make_estimator("oracle", CFG)  # no ground truth
    with pytest.raises(ConfigError):
        make_estimator("nonsense", CFG)
    with pytest.raises(ConfigError):
        make_estimator("neural:", CFG)
    with pytest.raises(ConfigError):
        make_estimator("neural:/no/such/file.net", CFG)


def test_neural_estimator_runs_in_pipeline(tmp_path):
    from aenr.neural import RecurrentMaskNet

    net = RecurrentMaskNet.random(*CFG.feature_geometry, hidden=32,
                                  conv1_out=8, conv2_out=6, seed=0)
    path = tmp_path / "weights.net"
    net.save(path)
    estimator = make_estimator(f"neural:{path}", CFG)
    truth = dt_truth(duration_s=1.0)
    reducer = EchoNoiseReducer(CFG, estimator=estimator)
    out = reducer.process(truth.mic, truth.farend)
    assert np.all(np.isfinite(out))


def test_config_cross_validation():
    from aenr.kalman import KalmanConfig
    from aenr.stft import StftConfig

    with pytest.raises(ValueError):
        PipelineConfig(stft=StftConfig(fft_order=256, hop=128),
                       kalman=KalmanConfig(fft_order=512, hop=256))
    with pytest.raises(ValueError):
        PipelineConfig(alpha=0.0)
    with pytest.raises(ValueError):
        PipelineConfig(gain_floor=1.5)
