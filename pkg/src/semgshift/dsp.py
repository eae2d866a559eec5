"""Preprocessing chain: band-stop filter, standardization, segmentation.

The band-stop design is an analog Butterworth prototype taken through the
low-pass-to-band-stop transform and the bilinear transform with frequency
prewarping. The notch's transmission zero is pinned at the arithmetic center
of the stop band, (f_low + f_high) / 2, so a 50 Hz mains component is nulled
by a 45-55 Hz design rather than landing next to the geometric-mean zero.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import sosfilt

from .core import LabeledWindow, ParameterError, Recording


@dataclass(frozen=True, eq=False)
class BiquadCascade:
    """Second-order sections (b0, b1, b2, a1, a2 with a0 = 1) plus design metadata."""

    sos: np.ndarray  # (n_sections, 6) in (b0, b1, b2, a0=1, a1, a2) layout
    fs: float
    f_low: float
    f_high: float
    order: int

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    def poles(self) -> np.ndarray:
        ps = []
        for row in self.sos:
            ps.extend(np.roots([1.0, row[4], row[5]]))
        return np.asarray(ps)

    def freq_response(self, freqs_hz) -> np.ndarray:
        """Complex H(e^{j 2 pi f / fs}) evaluated per frequency."""
        f = np.atleast_1d(np.asarray(freqs_hz, dtype=float))
        z = np.exp(2j * np.pi * f / self.fs)
        zi1 = 1.0 / z
        zi2 = zi1 * zi1
        h = np.ones_like(z)
        for b0, b1, b2, _, a1, a2 in self.sos:
            h *= (b0 + b1 * zi1 + b2 * zi2) / (1.0 + a1 * zi1 + a2 * zi2)
        return h


def _prewarp(f_hz: float, fs: float) -> float:
    return 2.0 * fs * math.tan(math.pi * f_hz / fs)


def design_bandstop(fs: float, f_low: float, f_high: float, order: int = 2) -> BiquadCascade:
    """Butterworth band-stop of the given prototype order (order N gives 2N poles).

    Guarantees unit gain at DC and Nyquist and an exact transmission zero at
    (f_low + f_high) / 2.
    """
    if not (0 < f_low < f_high < fs / 2):
        raise ParameterError(
            f"band edges must satisfy 0 < f_low < f_high < fs/2, got ({f_low}, {f_high})"
        )
    if order < 2 or order % 2 != 0:
        raise ParameterError("order must be an even integer >= 2")

    w0 = _prewarp((f_low + f_high) / 2.0, fs)
    bw = _prewarp(f_high, fs) - _prewarp(f_low, fs)
    fs2 = 2.0 * fs

    # Upper-half-plane prototype poles; each yields two band-stop poles whose
    # conjugates come from the mirrored prototype pole, i.e. two biquads.
    proto = [
        cmath.exp(1j * math.pi * (2 * k + order - 1) / (2 * order))
        for k in range(1, order // 2 + 1)
    ]

    analog_poles = []
    for p in proto:
        q = (bw / 2.0) / p
        s = cmath.sqrt(q * q - w0 * w0)
        analog_poles.extend([q + s, q - s])

    # Bilinear images; all analog zeros sit at +/- j*w0.
    z_zero = (fs2 + 1j * w0) / (fs2 - 1j * w0)
    digital_poles = [(fs2 + r) / (fs2 - r) for r in analog_poles]

    # Overall gain of the bilinear map (analog gain is 1 by construction).
    num = (fs2 * fs2 + w0 * w0) ** order
    den = 1.0 + 0.0j
    for r in analog_poles:
        den *= (fs2 - r) * (fs2 - r.conjugate())
    gain = num / den.real

    # One section per pole-conjugate pair; poles nearest the unit circle last.
    digital_poles.sort(key=lambda r: (abs(r), r.real))
    zb1, zb2 = -2.0 * z_zero.real, abs(z_zero) ** 2
    sections = []
    for i, r in enumerate(digital_poles):
        b = np.array([1.0, zb1, zb2])
        if i == 0:
            b = gain * b
        sections.append([b[0], b[1], b[2], 1.0, -2.0 * r.real, abs(r) ** 2])

    sos = np.asarray(sections, dtype=np.float64)
    cascade = BiquadCascade(sos=sos, fs=fs, f_low=f_low, f_high=f_high, order=order)
    if np.any(np.abs(cascade.poles()) >= 1.0 - 1e-9):
        raise ParameterError("designed filter is not stable")  # unreachable for valid bands
    return cascade


def filter_apply(data, cascade: BiquadCascade):
    """Causal forward filtering along the sample axis, zero initial state.

    Accepts a Recording (returns a filtered Recording) or a plain array whose
    last axis is time.
    """
    if isinstance(data, Recording):
        return data.with_samples(filter_apply(data.samples, cascade))
    x = np.asarray(data, dtype=np.float64)
    return sosfilt(cascade.sos, x, axis=-1)


@dataclass(frozen=True, eq=False)
class ChannelStats:
    """Per-channel mean and population standard deviation of training data."""

    mean: np.ndarray
    std: np.ndarray


def _channel_blocks(data):
    """Yield (Ch, n) float blocks from recordings, windows, or arrays."""
    if isinstance(data, np.ndarray):
        if data.ndim == 2:
            yield data
        elif data.ndim == 3:
            for block in data:
                yield block
        else:
            raise ParameterError("array input must be (Ch, L) or (N, Ch, T)")
        return
    for item in data:
        if isinstance(item, Recording):
            yield item.samples
        elif isinstance(item, LabeledWindow):
            yield item.samples
        elif isinstance(item, np.ndarray) and item.ndim == 2:
            yield item
        else:
            raise ParameterError(f"cannot extract channels from {type(item).__name__}")


def fit_channel_stats(data) -> ChannelStats:
    """Pooled per-channel mean and population std over all provided samples.

    Fit this on training data only; the degenerate-channel rule replaces a
    zero standard deviation with 1.
    """
    blocks = list(_channel_blocks(data))
    if not blocks:
        raise ParameterError("cannot fit channel stats on empty input")
    ch = blocks[0].shape[0]
    total = 0
    acc = np.zeros(ch, dtype=np.float64)
    for b in blocks:
        if b.shape[0] != ch:
            raise ParameterError("inconsistent channel counts")
        acc += b.sum(axis=1, dtype=np.float64)
        total += b.shape[1]
    if total < 2:
        raise ParameterError("need at least 2 samples per channel")
    mean = acc / total

    sq = np.zeros(ch, dtype=np.float64)
    for b in blocks:
        d = b.astype(np.float64) - mean[:, None]
        sq += np.einsum("ij,ij->i", d, d)
    std = np.sqrt(sq / total)
    std = np.where(std == 0.0, 1.0, std)
    return ChannelStats(mean=mean, std=std)


def apply_standardization(data, stats: ChannelStats):
    """(x - mean) / std per channel; accepts Recording or (…, Ch, n) arrays."""
    if isinstance(data, Recording):
        return data.with_samples(apply_standardization(data.samples, stats))
    x = np.asarray(data, dtype=np.float64)
    ch = stats.mean.shape[0]
    if x.ndim == 2:
        if x.shape[0] != ch:
            raise ParameterError(f"expected {ch} channels, got {x.shape[0]}")
        return (x - stats.mean[:, None]) / stats.std[:, None]
    if x.ndim == 3:
        if x.shape[1] != ch:
            raise ParameterError(f"expected {ch} channels, got {x.shape[1]}")
        return (x - stats.mean[None, :, None]) / stats.std[None, :, None]
    raise ParameterError("data must be 2-D or 3-D")


def central_segment(recording: Recording, duration_s: float) -> np.ndarray:
    """The centered slice of length duration_s * fs; start = floor((L - n) / 2)."""
    n = int(round(duration_s * recording.fs))
    length = recording.n_samples
    if length < n:
        raise ParameterError(
            f"recording has {length} samples, need at least {n} for {duration_s} s"
        )
    start = (length - n) // 2
    return recording.samples[:, start : start + n]


def slide_windows(segment: np.ndarray, window: int, stride: int) -> list:
    """Windows of the segment starting at i * stride, i = 0 .. floor((L - T) / s) - 1.

    This count deliberately omits the final fenced window of the usual
    floor((L - T) / s) + 1 convention; the benchmark's instance counts are
    only reproduced without it.
    """
    if stride < 1:
        raise ParameterError("stride must be at least 1")
    length = segment.shape[-1]
    if length < window:
        raise ParameterError(f"segment length {length} shorter than window {window}")
    count = (length - window) // stride
    return [segment[..., i * stride : i * stride + window] for i in range(count)]


def window_count(length: int, window: int, stride: int) -> int:
    """Number of windows slide_windows yields for a segment of this length."""
    if length < window:
        raise ParameterError(f"segment length {length} shorter than window {window}")
    return (length - window) // stride
