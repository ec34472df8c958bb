import numpy as np
from scipy.signal import fftconvolve

from aenr.cli import main
from aenr.metrics import erle
from aenr.simulate import speech_shaped_source
from aenr.wavio import read_wav, write_wav

RATE = 16000


def write_scenario_cfg(path, kind="DT", seed=5, duration=4.0, extra=""):
    path.write_text(
        f"kind = {kind}\nser_db = 0\nsnr_db = 15\nduration_s = {duration}\n"
        f"seed = {seed}\n{extra}"
    )


def test_process_known_echo_path_identity_estimator(tmp_path, capsys):
    rng = np.random.default_rng(0)
    n = 10 * RATE
    farend = rng.standard_normal(n) * 0.1
    path = np.zeros(400)
    path[8] = 0.9
    path[100:110] = rng.standard_normal(10) * 0.05
    mic = fftconvolve(farend, path)[:n]
    mic_path, far_path, out_path = (tmp_path / f"{k}.wav" for k in ("mic", "far", "out"))
    write_wav(mic_path, mic, RATE)
    write_wav(far_path, farend, RATE)
    metrics_path = tmp_path / "metrics.csv"

    code = main([
        "process", "--mic", str(mic_path), "--farend", str(far_path),
        "--out", str(out_path), "--estimator", "identity",
        "--metrics", str(metrics_path),
    ])
    assert code == 0
    out = read_wav(out_path, expect_rate=RATE)
    assert len(out) == n
    # output lags the mic by one hop; steady-state ERLE over the last seconds
    aligned_mic = mic[: n - 256]
    aligned_out = out[256:]
    series = erle(aligned_mic, aligned_out, block_s=1.0, rate=RATE)
    assert series[-1] >= 20.0, f"steady-state ERLE {series[-1]:.1f} dB"
    assert metrics_path.exists()
    header, row = metrics_path.read_text().strip().splitlines()
    assert header.startswith("scenario,estimator")
    assert row.startswith("mic,identity,")


def test_process_silent_farend_keeps_kalman_idle(tmp_path):
    rng = np.random.default_rng(1)
    n = 4 * RATE
    near = speech_shaped_source(n, rng)
    noise = 0.3 * rng.standard_normal(n)
    mic_path, far_path, out_path = (tmp_path / f"{k}.wav" for k in ("mic", "far", "out"))
    write_wav(mic_path, near + noise, RATE)
    write_wav(far_path, np.zeros(n), RATE)
    code = main([
        "process", "--mic", str(mic_path), "--farend", str(far_path),
        "--out", str(out_path), "--estimator", "wiener",
    ])
    assert code == 0
    out = read_wav(out_path)
    assert np.all(np.isfinite(out))
    assert 0 < np.sum(out**2) < np.sum((near + noise) ** 2)


def test_process_pads_shorter_input_with_warning(tmp_path, capsys):
    rng = np.random.default_rng(2)
    mic_path, far_path, out_path = (tmp_path / f"{k}.wav" for k in ("mic", "far", "out"))
    write_wav(mic_path, rng.standard_normal(RATE), RATE)
    write_wav(far_path, rng.standard_normal(RATE // 2), RATE)
    code = main(["process", "--mic", str(mic_path), "--farend", str(far_path),
                 "--out", str(out_path)])
    assert code == 0
    assert "zero-padding" in capsys.readouterr().err


def test_process_empty_input_fails_with_config_error(tmp_path):
    mic_path, far_path = tmp_path / "mic.wav", tmp_path / "far.wav"
    write_wav(mic_path, np.zeros(0), RATE)
    write_wav(far_path, np.zeros(100), RATE)
    code = main(["process", "--mic", str(mic_path), "--farend", str(far_path),
                 "--out", str(tmp_path / "out.wav")])
    assert code == 2


def test_process_missing_file_is_io_error(tmp_path):
    far_path = tmp_path / "far.wav"
    write_wav(far_path, np.zeros(100), RATE)
    code = main(["process", "--mic", str(tmp_path / "missing.wav"),
                 "--farend", str(far_path), "--out", str(tmp_path / "out.wav")])
    assert code == 3


def test_process_wrong_sample_rate_is_config_error(tmp_path):
    mic_path, far_path = tmp_path / "mic.wav", tmp_path / "far.wav"
    write_wav(mic_path, np.zeros(1000), 8000)
    write_wav(far_path, np.zeros(1000), RATE)
    code = main(["process", "--mic", str(mic_path), "--farend", str(far_path),
                 "--out", str(tmp_path / "out.wav")])
    assert code == 2


def test_simulate_writes_consistent_deterministic_set(tmp_path):
    spec_path = tmp_path / "dt.cfg"
    write_scenario_cfg(spec_path, seed=7)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--spec", str(spec_path), "--out-dir", str(out_a)]) == 0
    assert main(["simulate", "--spec", str(spec_path), "--out-dir", str(out_b)]) == 0

    names = ["mic", "near", "echo", "noise", "farend"]
    for name in names:
        assert (out_a / f"{name}.wav").read_bytes() == (out_b / f"{name}.wav").read_bytes()

    parts = {name: read_wav(out_a / f"{name}.wav") for name in names}
    total = (parts["near"].astype(np.float32)
             + parts["echo"].astype(np.float32)
             + parts["noise"].astype(np.float32))
    assert np.array_equal(parts["mic"].astype(np.float32), total)

    manifest = (out_a / "manifest.cfg").read_text()
    assert "measured_ser_db" in manifest
    measured = float([l for l in manifest.splitlines() if "measured_ser_db" in l][0].split("=")[1])
    assert abs(measured - 0.0) <= 0.1


def test_simulate_nst_has_silent_echo(tmp_path):
    spec_path = tmp_path / "nst.cfg"
    write_scenario_cfg(spec_path, kind="NST")
    out_dir = tmp_path / "out"
    assert main(["simulate", "--spec", str(spec_path), "--out-dir", str(out_dir)]) == 0
    assert np.all(read_wav(out_dir / "echo.wav") == 0)


def test_simulate_invalid_spec_is_config_error(tmp_path):
    spec_path = tmp_path / "bad.cfg"
    spec_path.write_text("kind = BOGUS\n")
    assert main(["simulate", "--spec", str(spec_path), "--out-dir", str(tmp_path / "o")]) == 2


def test_eval_orders_estimators_and_is_deterministic(tmp_path):
    scen_dir = tmp_path / "scenarios"
    scen_dir.mkdir()
    write_scenario_cfg(scen_dir / "dt_a.cfg", seed=3, duration=3.0)
    write_scenario_cfg(scen_dir / "dt_b.cfg", seed=4, duration=3.0)
    report_a = tmp_path / "report_a.csv"
    report_b = tmp_path / "report_b.csv"
    args = ["eval", "--scenarios", str(scen_dir), "--estimators", "identity,oracle",
            "--report"]
    assert main(args + [str(report_a)]) == 0
    assert main(args + [str(report_b)]) == 0

    def strip_rtf(text):
        return [",".join(line.split(",")[:-1]) for line in text.strip().splitlines()]

    assert strip_rtf(report_a.read_text()) == strip_rtf(report_b.read_text())

    rows = report_a.read_text().strip().splitlines()[1:]
    by_key = {(r.split(",")[0], r.split(",")[1]): r.split(",") for r in rows}
    for scenario in ("dt_a", "dt_b"):
        ident = float(by_key[(scenario, "identity")][3])
        oracle = float(by_key[(scenario, "oracle")][3])
        assert oracle > ident


def test_eval_empty_scenario_dir_writes_header_only(tmp_path):
    scen_dir = tmp_path / "none"
    scen_dir.mkdir()
    report = tmp_path / "report.csv"
    code = main(["eval", "--scenarios", str(scen_dir), "--estimators", "identity",
                 "--report", str(report)])
    assert code == 0
    assert report.read_text().strip() == "scenario,estimator,erle_db,si_sdr_db,seg_snr_db,rtf"


def test_eval_missing_weights_is_config_error(tmp_path):
    scen_dir = tmp_path / "scenarios"
    scen_dir.mkdir()
    write_scenario_cfg(scen_dir / "dt.cfg", duration=2.0)
    code = main(["eval", "--scenarios", str(scen_dir),
                 "--estimators", "neural:/missing/weights.net",
                 "--report", str(tmp_path / "r.csv")])
    assert code == 2


def test_eval_unknown_scenario_path_is_config_error(tmp_path):
    code = main(["eval", "--scenarios", str(tmp_path / "ghost"),
                 "--estimators", "identity", "--report", str(tmp_path / "r.csv")])
    assert code == 2
