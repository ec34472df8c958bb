"""Compare the compiled kernel backend against the pure-numpy fallback.

Times the per-frame adaptive-filter kernels in isolation, then the full
pipeline (canceller + frontend + neural estimator + synthesis) end to end,
reporting microseconds per frame and the real-time factor for each backend.

Usage: python benchmarks/bench_backends.py [--seconds 20] [--frames 5000]
"""

import argparse
import time

import numpy as np

from aenr import backend
from aenr.neural import RecurrentMaskNet
from aenr.pipeline import EchoNoiseReducer, PipelineConfig
from aenr.simulate import ScenarioSpec, build_scenario


def bench_kernels(kernels, frames):
    rng = np.random.default_rng(0)
    partitions, bins = 10, 257
    coeffs = rng.standard_normal((partitions, bins)) + 1j * rng.standard_normal((partitions, bins))
    history = rng.standard_normal((partitions, bins)) + 1j * rng.standard_normal((partitions, bins))
    error = rng.standard_normal(bins) + 1j * rng.standard_normal(bins)
    obs = np.abs(rng.standard_normal(bins))
    proc = np.abs(rng.standard_normal((partitions, bins))) * 1e-3
    cov = np.abs(rng.standard_normal((partitions, bins))) + 0.1
    a2 = 0.999**2

    for _ in range(100):  # warm-up
        kernels.predict_spectrum(coeffs, history)
        kernels.gain_update(cov, history, error, obs, proc, a2, 1e-10)
    start = time.perf_counter()
    for _ in range(frames):
        kernels.predict_spectrum(coeffs, history)
        kernels.gain_update(cov, history, error, obs, proc, a2, 1e-10)
    return (time.perf_counter() - start) / frames * 1e6


def bench_pipeline(name, seconds):
    spec = ScenarioSpec(kind="DT", ser_db=0.0, snr_db=10.0, duration_s=seconds, seed=1)
    truth = build_scenario(spec)
    cfg = PipelineConfig()
    net = RecurrentMaskNet.random(*cfg.feature_geometry, seed=0)
    reducer = EchoNoiseReducer(cfg, estimator=net, kernels=backend.get_kernels(name))
    reducer.process(truth.mic[:16000], truth.farend[:16000])  # warm-up
    start = time.perf_counter()
    reducer.process(truth.mic, truth.farend)
    return (time.perf_counter() - start) / spec.duration_s


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, default=20.0, help="pipeline audio length")
    parser.add_argument("--frames", type=int, default=5000, help="kernel benchmark frames")
    args = parser.parse_args()

    names = backend.available_backends()
    if "cython" not in names:
        print("note: compiled extension not built; run `python setup.py build_ext --inplace`")
    print(f"{'backend':<10} {'kernels us/frame':>18} {'pipeline rtf':>14}")
    for name in names:
        kernel_us = bench_kernels(backend.get_kernels(name), args.frames)
        pipeline_rtf = bench_pipeline(name, args.seconds)
        print(f"{name:<10} {kernel_us:>18.1f} {pipeline_rtf:>14.4f}")


if __name__ == "__main__":
    main()
