"""Command-line entry points: process WAV pairs, simulate scenarios, run evals.

Exit codes: 0 ok, 2 configuration error, 3 I/O error.
"""

import argparse
import pathlib
import sys
import time

import numpy as np

from .config import ConfigError, load_pipeline_config, load_scenario_spec
from .metrics import MetricsReport, erle, seg_snr, si_sdr, write_report_csv
from .neural import GeometryError, WeightsFormatError
from .pipeline import EchoNoiseReducer, make_estimator
from .simulate import build_scenario
from .wavio import read_wav, write_wav


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aenr",
        description="Hybrid acoustic echo and noise reduction pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="run the pipeline over a mic/far-end WAV pair")
    p.add_argument("--mic", required=True, help="microphone WAV (16 kHz mono)")
    p.add_argument("--farend", required=True, help="far-end/loudspeaker WAV (16 kHz mono)")
    p.add_argument("--out", required=True, help="output WAV for the near-end estimate")
    p.add_argument("--config", default=None, help="pipeline config file (default: $AENR_CONFIG)")
    p.add_argument("--estimator", default=None,
                   help="identity | wiener | neural:<weights> (default from config)")
    p.add_argument("--metrics", default=None, help="optional CSV to write run metrics to")
    p.add_argument("--out-format", choices=("float32", "pcm16"), default="float32")
    p.add_argument("-v", "--verbose", action="store_true",
                   help="per-second pipeline stats on stderr")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("simulate", help="generate a scenario WAV set with ground truth")
    p.add_argument("--spec", required=True, help="scenario spec file")
    p.add_argument("--out-dir", required=True, help="directory for the WAV set + manifest")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="run estimators over scenarios, write a metrics CSV")
    p.add_argument("--scenarios", nargs="+", required=True,
                   help="scenario spec files and/or directories of *.cfg files")
    p.add_argument("--estimators", required=True,
                   help="comma-separated: identity,wiener,oracle,neural:<weights>")
    p.add_argument("--report", required=True, help="output CSV path")
    p.add_argument("--config", default=None, help="pipeline config file")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, WeightsFormatError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def _load_equal_length(mic_path, farend_path, rate):
    mic = read_wav(mic_path, expect_rate=rate)
    farend = read_wav(farend_path, expect_rate=rate)
    if len(mic) == 0 or len(farend) == 0:
        raise ConfigError("input WAV is empty")
    if len(mic) != len(farend):
        print(
            f"warning: length mismatch ({len(mic)} vs {len(farend)} samples); "
            "zero-padding the shorter input",
            file=sys.stderr,
        )
        n = max(len(mic), len(farend))
        mic = np.pad(mic, (0, n - len(mic)))
        farend = np.pad(farend, (0, n - len(farend)))
    return mic, farend


def cmd_process(args):
    overrides = {"estimator": args.estimator} if args.estimator else None
    cfg = load_pipeline_config(args.config, overrides)
    mic, farend = _load_equal_length(args.mic, args.farend, cfg.stft.sample_rate)
    if cfg.estimator == "oracle":
        raise ConfigError("oracle estimator needs simulation ground truth; use `aenr eval`")

    reducer = EchoNoiseReducer(cfg, keep_internals=True)
    print(
        f"processing {len(mic)} samples; algorithmic latency "
        f"{reducer.latency} samples ({1000.0 * reducer.latency / cfg.stft.sample_rate:.1f} ms)",
        file=sys.stderr,
    )
    start = time.perf_counter()
    out = reducer.process(mic, farend)
    elapsed = time.perf_counter() - start
    write_wav(args.out, out, cfg.stft.sample_rate, args.out_format)

    duration = len(mic) / cfg.stft.sample_rate
    error = reducer.error_signal[: len(mic)]
    erle_series = erle(mic, error, block_s=1.0, rate=cfg.stft.sample_rate)
    if args.verbose:
        for second, value in enumerate(erle_series):
            print(f"t={second:4d}s erle={value:7.2f} dB "
                  f"coef_energy={reducer.kf.coefficient_energy():.3e}", file=sys.stderr)
    print(f"done in {elapsed:.2f}s (rtf {elapsed / duration:.4f})", file=sys.stderr)

    if args.metrics:
        report = MetricsReport(
            scenario=pathlib.Path(args.mic).stem,
            estimator=cfg.estimator,
            erle_db=float(np.mean(erle_series)),
            rtf=elapsed / duration,
            erle_series=erle_series,
        )
        write_report_csv(args.metrics, [report])
    return 0


def cmd_simulate(args):
    spec = load_scenario_spec(args.spec)
    truth = build_scenario(spec)
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # write the float32 casts and rebuild mic from them so the additive
    # identity holds bit-exactly on the files
    comp32 = {k: v.astype(np.float32) for k, v in truth.components().items()}
    comp32["mic"] = comp32["near"] + comp32["echo"] + comp32["noise"]
    for name, data in comp32.items():
        write_wav(out_dir / f"{name}.wav", data.astype(np.float64), spec.sample_rate)

    from .simulate import active_power

    manifest = [
        f"name = {spec.name or pathlib.Path(args.spec).stem}",
        f"kind = {spec.kind}",
        f"ser_db = {spec.ser_db}",
        f"snr_db = {spec.snr_db}",
        f"duration_s = {spec.duration_s}",
        f"seed = {spec.seed}",
        f"sample_rate = {spec.sample_rate}",
        f"echo.taps = {spec.echo_taps}",
        f"echo.delay = {spec.echo_delay}",
    ]
    p_near = active_power(truth.near)
    p_echo = active_power(truth.echo)
    p_noise = active_power(truth.noise)
    if p_echo > 0 and p_near > 0:
        manifest.append(f"measured_ser_db = {10.0 * np.log10(p_near / p_echo):.4f}")
    reference = p_near if p_near > 0 else p_echo
    if p_noise > 0 and reference > 0:
        manifest.append(f"measured_snr_db = {10.0 * np.log10(reference / p_noise):.4f}")
    (out_dir / "manifest.cfg").write_text("\n".join(manifest) + "\n")
    print(f"wrote {spec.kind} scenario to {out_dir}", file=sys.stderr)
    return 0


def _collect_scenarios(paths):
    files = []
    for raw in paths:
        path = pathlib.Path(raw)
        if path.is_dir():
            files.extend(sorted(path.glob("*.cfg")))
        elif path.exists():
            files.append(path)
        else:
            raise ConfigError(f"scenario path not found: {path}")
    return files


def _aligned(out, reference, latency, rate, settle_s=1.0):
    """Latency-compensated (estimate, reference) pair, initial settle excluded."""
    est = out[latency:]
    ref = reference[: len(out) - latency]
    start = min(int(settle_s * rate), max(len(est) - 1, 0))
    return est[start:], ref[start:]


def cmd_eval(args):
    cfg = load_pipeline_config(args.config)
    scenario_files = _collect_scenarios(args.scenarios)
    estimators = [name.strip() for name in args.estimators.split(",") if name.strip()]
    if not estimators:
        raise ConfigError("no estimators given")

    reports = []
    for path in scenario_files:
        spec = load_scenario_spec(path)
        truth = build_scenario(spec)
        duration = len(truth.mic) / spec.sample_rate
        for selector in estimators:
            estimator = make_estimator(selector, cfg, clean=truth.near)
            reducer = EchoNoiseReducer(cfg, estimator=estimator, keep_internals=True)
            start = time.perf_counter()
            out = reducer.process(truth.mic, truth.farend)
            elapsed = time.perf_counter() - start

            error = reducer.error_signal[: len(truth.mic)]
            report = MetricsReport(
                scenario=spec.name or path.stem,
                estimator=selector,
                rtf=elapsed / duration,
                erle_series=erle(truth.mic, error, rate=spec.sample_rate),
            )
            report.erle_db = float(np.mean(report.erle_series))
            est, ref = _aligned(out, truth.near, reducer.latency, spec.sample_rate)
            if np.any(ref != 0.0):
                report.si_sdr_db = si_sdr(est, ref)
                try:
                    report.seg_snr_db = seg_snr(est, ref, rate=spec.sample_rate)
                except ValueError:
                    pass
            reports.append(report)
            print(f"{report.csv_row()}", file=sys.stderr)

    write_report_csv(args.report, reports)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
