"""Key-value config files: `key = value` lines, `#` comments, dotted keys.

Every field is optional and defaults to the reference pipeline configuration.
Validation errors carry file and line locations.
"""

import os

ENV_CONFIG = "AENR_CONFIG"


class ConfigError(Exception):
    """Invalid configuration, scenario spec, or user-supplied file."""


def _parse_bool(text):
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_CASTS = {int: int, float: float, str: str, bool: _parse_bool}


def parse_kv_text(text, source="<config>"):
    """Parse `key = value` lines into {key: (value_string, line_number)}."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    return entries


def parse_kv_file(path):
    with open(path) as fh:
        return parse_kv_text(fh.read(), source=str(path))


def _typed(entries, schema, source):
    values = {}
    for key, (raw, lineno) in entries.items():
        if key not in schema:
            known = ", ".join(sorted(schema))
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} (known: {known})")
        try:
            values[key] = _CASTS[schema[key]](raw)
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: key {key!r} expects {schema[key].__name__}, got {raw!r}"
            ) from None
    return values


PIPELINE_SCHEMA = {
    "sample_rate": int,
    "stft.fft_order": int,
    "stft.hop": int,
    "stft.window": str,
    "alpha": float,
    "features.band_len": int,
    "features.band_overlap": float,
    "kalman.partitions": int,
    "kalman.smoothing": float,
    "kalman.forgetting": float,
    "kalman.regularization": float,
    "kalman.constrain": bool,
    "kalman.initial_covariance": float,
    "mask.ceiling": float,
    "mask.gain_floor": float,
    "estimator": str,
}

SCENARIO_SCHEMA = {
    "name": str,
    "kind": str,
    "ser_db": float,
    "snr_db": float,
    "duration_s": float,
    "seed": int,
    "sample_rate": int,
    "near.source": str,
    "far.source": str,
    "noise.source": str,
    "echo.taps": int,
    "echo.decay_ms": float,
    "echo.delay": int,
    "echo.clip_level": float,
}


def load_pipeline_config(path=None, overrides=None):
    """PipelineConfig from a config file (or defaults), plus overrides.

    With path=None the AENR_CONFIG environment variable is consulted; if that
    is unset too, the reference defaults apply.
    """
    from .kalman import KalmanConfig
    from .pipeline import PipelineConfig
    from .stft import StftConfig

    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    source = str(path) if path else "<defaults>"
    try:
        entries = parse_kv_file(path) if path else {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = _typed(entries, PIPELINE_SCHEMA, source)
    if overrides:
        values.update(overrides)

    def get(key, default):
        return values.get(key, default)

    try:
        stft = StftConfig(
            fft_order=get("stft.fft_order", 512),
            hop=get("stft.hop", 256),
            window=get("stft.window", "sqrt_hann"),
            sample_rate=get("sample_rate", 16000),
        )
        kalman = KalmanConfig(
            partitions=get("kalman.partitions", 10),
            smoothing=get("kalman.smoothing", 0.8),
            fft_order=stft.fft_order,
            hop=stft.hop,
            regularization=get("kalman.regularization", 1e-10),
            forgetting=get("kalman.forgetting", 0.999),
            constrain=get("kalman.constrain", True),
            initial_covariance=get("kalman.initial_covariance", 1e2),
        )
        return PipelineConfig(
            stft=stft,
            kalman=kalman,
            alpha=get("alpha", 0.3),
            band_len=get("features.band_len", 48),
            band_overlap=get("features.band_overlap", 0.33),
            estimator=get("estimator", "wiener"),
            mask_ceiling=get("mask.ceiling", 2.0),
            gain_floor=get("mask.gain_floor", 0.05),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_scenario_spec(path):
    """ScenarioSpec from a scenario config file."""
    import pathlib

    from .simulate import ScenarioSpec

    try:
        entries = parse_kv_file(path)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    values = _typed(entries, SCENARIO_SCHEMA, str(path))
    name = values.get("name") or pathlib.Path(path).stem
    try:
        return ScenarioSpec(
            kind=values.get("kind", "DT"),
            ser_db=values.get("ser_db", 0.0),
            snr_db=values.get("snr_db", 20.0),
            duration_s=values.get("duration_s", 8.0),
            seed=values.get("seed", 0),
            sample_rate=values.get("sample_rate", 16000),
            near_source=values.get("near.source", "speech"),
            far_source=values.get("far.source", "speech"),
            noise_source=values.get("noise.source", "white"),
            echo_taps=values.get("echo.taps", 1024),
            echo_decay_ms=values.get("echo.decay_ms", 60.0),
            echo_delay=values.get("echo.delay", 0),
            clip_level=values.get("echo.clip_level", 0.0),
            name=name,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
