"""Streaming hybrid acoustic echo and noise reduction.

Two-stage design: a partitioned-block frequency-domain Kalman filter cancels
the linear echo, and an STFT-domain complex-ratio-mask post-filter suppresses
residual echo and noise.  A scenario simulator and a metrics harness verify
the pipeline end to end.
"""

from .stft import StftConfig, StftAnalyzer, StftSynthesizer, analyze, compress, decompress
from .kalman import KalmanConfig, PartitionedKalmanFilter
from .features import SubbandLayout, make_layout, reorient, frontend_frame
from .masking import ComplexMask, apply_mask, oracle_mask, wiener_mask

__version__ = "0.1.0"

__all__ = [
    "StftConfig",
    "StftAnalyzer",
    "StftSynthesizer",
    "analyze",
    "compress",
    "decompress",
    "KalmanConfig",
    "PartitionedKalmanFilter",
    "SubbandLayout",
    "make_layout",
    "reorient",
    "frontend_frame",
    "ComplexMask",
    "apply_mask",
    "oracle_mask",
    "wiener_mask",
    "PipelineConfig",
    "EchoNoiseReducer",
    "__version__",
]


def __getattr__(name):
    # pipeline pulls in most of the package; import it lazily
    if name in ("PipelineConfig", "EchoNoiseReducer"):
        from . import pipeline

        return getattr(pipeline, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
