"""Evaluation metrics: ERLE, SI-SDR, segmental SNR, real-time factor."""

import time
from dataclasses import dataclass, field

import numpy as np

ERLE_POWER_FLOOR = 1e-12
SI_SDR_CAP_DB = 100.0


def erle(mic, error, block_s=1.0, rate=16000, floor=ERLE_POWER_FLOOR):
    """Echo return loss enhancement per block, in dB.

    Meaningful on far-end-only segments; each block contributes
    10*log10(P_mic / P_error) with the error power floored.
    """
    mic = np.asarray(mic, dtype=np.float64)
    error = np.asarray(error, dtype=np.float64)
    if mic.shape != error.shape:
        raise ValueError(f"length mismatch: mic {mic.shape} vs error {error.shape}")
    block = max(1, int(round(block_s * rate)))
    count = len(mic) // block
    if count == 0:
        block, count = len(mic), 1
    series = np.zeros(count)
    for i in range(count):
        sl = slice(i * block, (i + 1) * block)
        p_mic = max(float(np.mean(mic[sl] ** 2)), floor)
        p_err = max(float(np.mean(error[sl] ** 2)), floor)
        series[i] = 10.0 * np.log10(p_mic / p_err)
    return series


def si_sdr(estimate, reference, cap_db=SI_SDR_CAP_DB):
    """Scale-invariant signal-to-distortion ratio of estimate vs reference, dB.

    The estimate is projected onto the reference; the ratio of projected power
    to residual power is capped at +cap_db (reached for any exact rescaling).
    """
    estimate = np.asarray(estimate, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if estimate.shape != reference.shape:
        raise ValueError(
            f"length mismatch: estimate {estimate.shape} vs reference {reference.shape}"
        )
    ref_energy = float(np.dot(reference, reference))
    if ref_energy <= 0.0:
        raise ValueError("reference signal is all zero")
    scale = float(np.dot(estimate, reference)) / ref_energy
    target = scale * reference
    residual = estimate - target
    num = float(np.dot(target, target))
    den = float(np.dot(residual, residual))
    if den <= num * 10.0 ** (-cap_db / 10.0):
        return cap_db
    return 10.0 * np.log10(num / den)


def seg_snr(estimate, reference, rate=16000, block_s=0.030, clamp=(-10.0, 35.0)):
    """Segmental SNR: per-block SNR clamped to `clamp` dB, then averaged.

    Blocks where the reference is silent are skipped.
    """
    estimate = np.asarray(estimate, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if estimate.shape != reference.shape:
        raise ValueError("length mismatch between estimate and reference")
    block = max(1, int(round(block_s * rate)))
    values = []
    for start in range(0, len(reference) - block + 1, block):
        sl = slice(start, start + block)
        p_ref = float(np.sum(reference[sl] ** 2))
        if p_ref <= ERLE_POWER_FLOOR:
            continue
        p_err = max(float(np.sum((estimate[sl] - reference[sl]) ** 2)), 1e-30)
        values.append(np.clip(10.0 * np.log10(p_ref / p_err), *clamp))
    if not values:
        raise ValueError("reference has no active blocks")
    return float(np.mean(values))


def rtf(process_fn, audio_duration_s, runs=5):
    """Real-time factor: median wall-clock time of `process_fn` over runs,
    divided by the audio duration.  One warm-up run is discarded."""
    if audio_duration_s <= 0:
        raise ValueError("audio duration must be positive")
    process_fn()  # warm-up
    times = []
    for _ in range(max(1, runs)):
        start = time.perf_counter()
        process_fn()
        times.append(time.perf_counter() - start)
    return float(np.median(times)) / audio_duration_s


@dataclass
class MetricsReport:
    """Metrics for one (scenario, estimator) run; NaN marks inapplicable fields."""

    scenario: str
    estimator: str
    erle_db: float = float("nan")
    si_sdr_db: float = float("nan")
    seg_snr_db: float = float("nan")
    rtf: float = float("nan")
    erle_series: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    CSV_HEADER = "scenario,estimator,erle_db,si_sdr_db,seg_snr_db,rtf"

    def csv_row(self, include_rtf=True):
        def fmt(v, digits=3):
            return "" if np.isnan(v) else f"{v:.{digits}f}"

        rtf_cell = fmt(self.rtf, 5) if include_rtf else ""
        return (
            f"{self.scenario},{self.estimator},{fmt(self.erle_db)},"
            f"{fmt(self.si_sdr_db)},{fmt(self.seg_snr_db)},{rtf_cell}"
        )


def write_report_csv(path, reports):
    with open(path, "w") as fh:
        fh.write(MetricsReport.CSV_HEADER + "\n")
        for report in reports:
            fh.write(report.csv_row() + "\n")
