"""Post-filter input frontend: sub-band split and channel-interleaved stacking.

The compressed magnitudes of the error, echo-estimate and far-end spectra are
each split into B overlapping sub-bands of band_len bins and interleaved band
by band into a (3*B, band_len) block, the fixed input geometry of any mask
estimator.  Bins past the last valid frequency are zero-padded so the block
shape never depends on the signal.
"""

from dataclasses import dataclass

import numpy as np

from .stft import CompressedFrame, compress


@dataclass(frozen=True)
class SubbandLayout:
    bins: int
    band_len: int
    overlap: float
    hop_bins: int
    band_count: int
    padded_len: int

    @property
    def band_starts(self):
        return np.arange(self.band_count) * self.hop_bins

    @property
    def block_shape(self):
        return (3 * self.band_count, self.band_len)


def make_layout(bins, band_len, overlap):
    """Band geometry covering `bins` frequencies with the given overlap fraction.

    hop_bins rounds band_len*(1-overlap) to the nearest integer; band_count is
    the smallest B whose bands cover every bin.
    """
    if not 0.0 <= overlap < 1.0:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    if not 1 <= band_len <= bins:
        raise ValueError(f"band_len must be in [1, bins], got {band_len} for {bins} bins")
    hop_bins = int(np.floor(band_len * (1.0 - overlap) + 0.5))
    if hop_bins < 1:
        raise ValueError(f"overlap {overlap} leaves no band advance for band_len {band_len}")
    band_count = max(1, -(-(bins - band_len) // hop_bins) + 1)
    padded_len = (band_count - 1) * hop_bins + band_len
    return SubbandLayout(bins, band_len, overlap, hop_bins, band_count, padded_len)


def reorient(z_mag, e_mag, y_mag, layout):
    """Interleave the three magnitude vectors into the (3*B, band_len) block.

    Row order per band b: error, echo estimate, far-end (rows 3b, 3b+1, 3b+2).
    """
    stacked = np.zeros((3, layout.padded_len))
    for row, mag in enumerate((z_mag, e_mag, y_mag)):
        mag = np.asarray(mag)
        if mag.shape != (layout.bins,):
            raise ValueError(f"expected {layout.bins} bins, got shape {mag.shape}")
        stacked[row, : layout.bins] = mag
    gather = layout.band_starts[:, None] + np.arange(layout.band_len)[None, :]
    bands = stacked[:, gather]                      # (3, B, band_len)
    return bands.transpose(1, 0, 2).reshape(layout.block_shape)


def frontend_frame(z_spec, e_spec, y_spec, alpha, layout):
    """Compress all three spectra and reorient their magnitudes.

    Returns the feature block plus the compressed error frame, whose phase is
    passed through to the mask-application stage untouched.
    """
    z = compress(z_spec, alpha)
    e = compress(e_spec, alpha)
    y = compress(y_spec, alpha)
    block = reorient(z.magnitude, e.magnitude, y.magnitude, layout)
    return block, CompressedFrame(z.magnitude, z.phase)
