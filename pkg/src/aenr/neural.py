"""Minimal causal recurrent mask estimator with a binary weights container.

Topology (fixed by this repo, versioned in the weights header): two strided
1-D convolutions over the band axis of the (3B, band_len) feature block, a GRU
cell, and per-bin magnitude (sigmoid) and phase (pi*tanh) heads.  Inference is
plain numpy and bit-deterministic for fixed weights and inputs.

Weights file layout (little-endian):

    bytes 0..7    magic  b"AENRNET\\0"
    uint32        version (currently 1)
    uint32 x 6    geometry: channels (3B), band_len, bins (K),
                  conv1_out, conv2_out, hidden
    float32 ...   tensors, row-major, in order:
                  conv1_w (conv1_out, channels, 3),  conv1_b (conv1_out,)
                  conv2_w (conv2_out, conv1_out, 3), conv2_b (conv2_out,)
                  gru_wx (3*hidden, flat), gru_wh (3*hidden, hidden),
                  gru_b (3*hidden,)        [gate order: reset, update, candidate]
                  mag_w (bins, hidden),    mag_b (bins,)
                  phase_w (bins, hidden),  phase_b (bins,)

`flat` is conv2_out * ceil(ceil(band_len/2)/2).  The file must end exactly
after the last tensor.
"""

import struct

import numpy as np

from .masking import ComplexMask

MAGIC = b"AENRNET\x00"
VERSION = 1


class WeightsFormatError(Exception):
    """Malformed weights container (bad magic, truncation, trailing bytes)."""


class GeometryError(Exception):
    """Weights geometry does not match the pipeline feature geometry."""


def _conv_out_len(n):
    # kernel 3, stride 2, pad 1
    return (n - 1) // 2 + 1


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _conv_forward(x, w, b):
    """Strided conv over the last axis: x (C, L) -> (C_out, ceil(L/2))."""
    out_len = _conv_out_len(x.shape[1])
    xp = np.pad(x, ((0, 0), (1, 1)))
    out = np.repeat(b[:, None], out_len, axis=1)
    for t in range(3):
        cols = xp[:, t : t + 2 * out_len - 1 : 2]
        out += w[:, :, t] @ cols
    return out, xp


def _conv_backward(d_out, xp, w):
    """Gradients of _conv_forward: returns (d_x, d_w, d_b)."""
    out_len = d_out.shape[1]
    d_w = np.zeros_like(w)
    d_xp = np.zeros_like(xp)
    for t in range(3):
        cols = xp[:, t : t + 2 * out_len - 1 : 2]
        d_w[:, :, t] = d_out @ cols.T
        d_xp[:, t : t + 2 * out_len - 1 : 2] += w[:, :, t].T @ d_out
    return d_xp[:, 1:-1], d_w, d_out.sum(axis=1)


class RecurrentMaskNet:
    """Conv + GRU + heads mask estimator over reoriented feature blocks."""

    TENSORS = (
        "conv1_w", "conv1_b", "conv2_w", "conv2_b",
        "gru_wx", "gru_wh", "gru_b",
        "mag_w", "mag_b", "phase_w", "phase_b",
    )

    def __init__(self, weights, channels, band_len, bins):
        self.channels = channels
        self.band_len = band_len
        self.bins = bins
        self.conv1_out = weights["conv1_w"].shape[0]
        self.conv2_out = weights["conv2_w"].shape[0]
        self.hidden = weights["gru_wh"].shape[1]
        self.flat = self.conv2_out * _conv_out_len(_conv_out_len(band_len))
        self.weights = {k: np.asarray(weights[k], dtype=np.float64) for k in self.TENSORS}
        self._check_shapes()
        self.reset()

    def _expected_shapes(self):
        return {
            "conv1_w": (self.conv1_out, self.channels, 3),
            "conv1_b": (self.conv1_out,),
            "conv2_w": (self.conv2_out, self.conv1_out, 3),
            "conv2_b": (self.conv2_out,),
            "gru_wx": (3 * self.hidden, self.flat),
            "gru_wh": (3 * self.hidden, self.hidden),
            "gru_b": (3 * self.hidden,),
            "mag_w": (self.bins, self.hidden),
            "mag_b": (self.bins,),
            "phase_w": (self.bins, self.hidden),
            "phase_b": (self.bins,),
        }

    def _check_shapes(self):
        for name, shape in self._expected_shapes().items():
            if self.weights[name].shape != shape:
                raise GeometryError(
                    f"tensor {name} has shape {self.weights[name].shape}, expected {shape}"
                )

    # -- construction -------------------------------------------------------

    @classmethod
    def random(cls, channels, band_len, bins, hidden=96, conv1_out=32, conv2_out=16, seed=0):
        """Randomly initialized net (scaled normal weights), for tests and benchmarks."""
        rng = np.random.default_rng(seed)
        flat = conv2_out * _conv_out_len(_conv_out_len(band_len))
        shapes = {
            "conv1_w": (conv1_out, channels, 3), "conv1_b": (conv1_out,),
            "conv2_w": (conv2_out, conv1_out, 3), "conv2_b": (conv2_out,),
            "gru_wx": (3 * hidden, flat), "gru_wh": (3 * hidden, hidden),
            "gru_b": (3 * hidden,),
            "mag_w": (bins, hidden), "mag_b": (bins,),
            "phase_w": (bins, hidden), "phase_b": (bins,),
        }
        weights = {
            name: rng.standard_normal(shape) / np.sqrt(max(1, np.prod(shape[1:])))
            for name, shape in shapes.items()
        }
        return cls(weights, channels, band_len, bins)

    @classmethod
    def zeros(cls, channels, band_len, bins, hidden=96, conv1_out=32, conv2_out=16):
        net = cls.random(channels, band_len, bins, hidden, conv1_out, conv2_out)
        for v in net.weights.values():
            v[:] = 0.0
        return net

    # -- weights container ----------------------------------------------------

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack(
                "<7I", VERSION, self.channels, self.band_len, self.bins,
                self.conv1_out, self.conv2_out, self.hidden,
            ))
            for name in self.TENSORS:
                fh.write(self.weights[name].astype("<f4").tobytes())

    @classmethod
    def load(cls, path, expect_geometry=None):
        """Read a weights container; expect_geometry is (channels, band_len, bins)."""
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) < len(MAGIC) + 28 or raw[: len(MAGIC)] != MAGIC:
            raise WeightsFormatError(f"{path}: not a mask-net weights file")
        header = struct.unpack_from("<7I", raw, len(MAGIC))
        version, channels, band_len, bins, conv1_out, conv2_out, hidden = header
        if version != VERSION:
            raise WeightsFormatError(f"{path}: unsupported version {version}")
        if expect_geometry is not None and (channels, band_len, bins) != tuple(expect_geometry):
            raise GeometryError(
                f"{path}: weights geometry {(channels, band_len, bins)} does not match "
                f"pipeline geometry {tuple(expect_geometry)}"
            )
        flat = conv2_out * _conv_out_len(_conv_out_len(band_len))
        shapes = {
            "conv1_w": (conv1_out, channels, 3), "conv1_b": (conv1_out,),
            "conv2_w": (conv2_out, conv1_out, 3), "conv2_b": (conv2_out,),
            "gru_wx": (3 * hidden, flat), "gru_wh": (3 * hidden, hidden),
            "gru_b": (3 * hidden,),
            "mag_w": (bins, hidden), "mag_b": (bins,),
            "phase_w": (bins, hidden), "phase_b": (bins,),
        }
        offset = len(MAGIC) + 28
        weights = {}
        for name in cls.TENSORS:
            shape = shapes[name]
            count = int(np.prod(shape))
            end = offset + 4 * count
            if end > len(raw):
                raise WeightsFormatError(f"{path}: truncated at tensor {name}")
            weights[name] = np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(shape)
            offset = end
        if offset != len(raw):
            raise WeightsFormatError(f"{path}: {len(raw) - offset} trailing bytes")
        return cls(weights, channels, band_len, bins)

    # -- inference ------------------------------------------------------------

    def reset(self):
        self.state = np.zeros(self.hidden)

    def step(self, block, ctx=None):
        """One causal frame: feature block (3B, band_len) -> ComplexMask."""
        mag, phase, self.state, _ = self._forward(np.asarray(block, dtype=np.float64), self.state)
        return ComplexMask(mag, phase)

    def _forward(self, block, h_prev):
        if block.shape != (self.channels, self.band_len):
            raise GeometryError(
                f"feature block shape {block.shape}, expected {(self.channels, self.band_len)}"
            )
        w = self.weights
        c1_pre, c1_xp = _conv_forward(block, w["conv1_w"], w["conv1_b"])
        c1 = np.maximum(c1_pre, 0.0)
        c2_pre, c2_xp = _conv_forward(c1, w["conv2_w"], w["conv2_b"])
        c2 = np.maximum(c2_pre, 0.0)
        x = c2.reshape(-1)

        h = self.hidden
        gates_x = w["gru_wx"] @ x + w["gru_b"]
        gates_h = w["gru_wh"] @ h_prev
        reset = _sigmoid(gates_x[:h] + gates_h[:h])
        update = _sigmoid(gates_x[h : 2 * h] + gates_h[h : 2 * h])
        cand_pre = gates_x[2 * h :] + reset * gates_h[2 * h :]
        cand = np.tanh(cand_pre)
        h_new = (1.0 - update) * cand + update * h_prev

        mag_logits = w["mag_w"] @ h_new + w["mag_b"]
        mag = _sigmoid(mag_logits)
        phase = np.pi * np.tanh(w["phase_w"] @ h_new + w["phase_b"])
        cache = (block, c1_pre, c1_xp, c1, c2_pre, c2_xp, x, h_prev,
                 gates_h, reset, update, cand, h_new, mag)
        return mag, phase, h_new, cache

    # -- gradient self-test ----------------------------------------------------

    def mag_sum_with_gradients(self, block, h_prev=None):
        """Loss L = sum of mask magnitudes for one frame, plus dL/dw per tensor.

        Analytic backprop used only by the finite-difference self-test; the
        phase head does not enter L, so its gradients are identically zero.
        """
        if h_prev is None:
            h_prev = np.zeros(self.hidden)
        block = np.asarray(block, dtype=np.float64)
        mag, _, _, cache = self._forward(block, h_prev)
        (blk, c1_pre, c1_xp, c1, c2_pre, c2_xp, x, h_prev,
         gates_h, reset, update, cand, h_new, mag) = cache
        w = self.weights
        h = self.hidden
        grads = {name: np.zeros_like(w[name]) for name in self.TENSORS}

        d_logits = mag * (1.0 - mag)                      # dL/d(mag logits)
        grads["mag_w"] = np.outer(d_logits, h_new)
        grads["mag_b"] = d_logits
        d_h = w["mag_w"].T @ d_logits

        d_cand = d_h * (1.0 - update)
        d_update = d_h * (h_prev - cand)
        d_cand_pre = d_cand * (1.0 - cand**2)
        d_reset = d_cand_pre * gates_h[2 * h :]
        d_gh_cand = d_cand_pre * reset
        d_update_pre = d_update * update * (1.0 - update)
        d_reset_pre = d_reset * reset * (1.0 - reset)

        d_gates_x = np.concatenate([d_reset_pre, d_update_pre, d_cand_pre])
        d_gates_h = np.concatenate([d_reset_pre, d_update_pre, d_gh_cand])
        grads["gru_wx"] = np.outer(d_gates_x, x)
        grads["gru_b"] = d_gates_x
        grads["gru_wh"] = np.outer(d_gates_h, h_prev)
        d_x = w["gru_wx"].T @ d_gates_x

        d_c2 = d_x.reshape(self.conv2_out, -1) * (c2_pre > 0.0)
        d_c1, grads["conv2_w"], grads["conv2_b"] = _conv_backward(d_c2, c2_xp, w["conv2_w"])
        d_c1 *= c1_pre > 0.0
        _, grads["conv1_w"], grads["conv1_b"] = _conv_backward(d_c1, c1_xp, w["conv1_w"])

        return float(mag.sum()), grads
