"""Canonical dataset IO and the synthetic HD-sEMG generator.

Canonical format: a ``manifest.json`` document next to one ``.f32`` file per
recording. Data files are raw little-endian IEEE-754 float32, channel-major
(all samples of channel 0, then channel 1, ...), no header. Manifest keys:

    format_version, fs_hz,
    grid{rows, cols, module_width, pitch_mm},
    recordings[{path, subject, session, gesture, repetition, sample_count}]
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .core import (
    CAPGMYO_GRID,
    DataFormatError,
    GridLayout,
    ParameterError,
    Recording,
    rng_for,
)

FORMAT_VERSION = 1

# Sub-stream tags for rng_for; fixed so streams never collide.
_STREAM_CENTERS = 1
_STREAM_SOURCES = 2
_STREAM_SENSOR = 3
_STREAM_GAIN = 4

# Synthetic source band in Hz; roughly the physiological sEMG band.
_SOURCE_BAND = (20.0, 450.0)

# Source centers are drawn on a 1/64-cell lattice so that an integer row
# shift is exact in float arithmetic and shifted recordings match unshifted
# ones bit for bit on overlapping rows.
_CENTER_QUANTUM = 64


def _recording_filename(rec: Recording) -> str:
    return (
        f"s{rec.subject:03d}_e{rec.session:02d}"
        f"_g{rec.gesture:03d}_r{rec.repetition:03d}.f32"
    )


def write_canonical(recordings, root) -> str:
    """Write recordings plus ``manifest.json`` under ``root``; returns the manifest path.

    All recordings must share layout and sampling rate. Sample values are
    stored as float32; pass float32 arrays for a bit-exact round trip.
    """
    recordings = list(recordings)
    if recordings:
        layout = recordings[0].layout
        fs = recordings[0].fs
        for r in recordings:
            if r.layout != layout or r.fs != fs:
                raise ParameterError("recordings must share layout and fs")
    else:
        layout, fs = CAPGMYO_GRID, 1000.0

    os.makedirs(root, exist_ok=True)
    entries = []
    for rec in recordings:
        name = _recording_filename(rec)
        data = np.ascontiguousarray(rec.samples, dtype="<f4")
        data.tofile(os.path.join(root, name))
        entries.append(
            {
                "path": name,
                "subject": rec.subject,
                "session": rec.session,
                "gesture": rec.gesture,
                "repetition": rec.repetition,
                "sample_count": rec.n_samples,
            }
        )

    manifest = {
        "format_version": FORMAT_VERSION,
        "fs_hz": fs,
        "grid": {
            "rows": layout.rows,
            "cols": layout.cols,
            "module_width": layout.module_width,
            "pitch_mm": layout.pitch_mm,
        },
        "recordings": entries,
    }
    manifest_path = os.path.join(root, "manifest.json")
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    return manifest_path


def load_manifest(root) -> dict:
    """Read and structurally validate manifest.json under the given root."""
    manifest_path = os.path.join(root, "manifest.json")
    if not os.path.isfile(manifest_path):
        raise DataFormatError(f"no manifest.json under {root}")
    try:
        with open(manifest_path) as f:
            manifest = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DataFormatError(f"unreadable manifest: {e}") from e
    for key in ("format_version", "fs_hz", "grid", "recordings"):
        if key not in manifest:
            raise DataFormatError(f"manifest missing key {key!r}")
    if manifest["format_version"] != FORMAT_VERSION:
        raise DataFormatError(
            f"unsupported format_version {manifest['format_version']!r}"
        )
    return manifest


def _layout_from_manifest(manifest) -> GridLayout:
    g = manifest["grid"]
    try:
        return GridLayout(
            rows=int(g["rows"]),
            cols=int(g["cols"]),
            module_width=int(g["module_width"]),
            pitch_mm=float(g["pitch_mm"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"bad grid block in manifest: {e}") from e


def read_canonical(root) -> list:
    """Read a canonical dataset back into Recording objects (float32 samples)."""
    manifest = load_manifest(root)
    layout = _layout_from_manifest(manifest)
    fs = float(manifest["fs_hz"])
    ch = layout.channels

    recordings = []
    for entry in manifest["recordings"]:
        path = os.path.join(root, entry["path"])
        n = int(entry["sample_count"])
        if not os.path.isfile(path):
            raise DataFormatError(f"listed data file missing: {entry['path']}")
        expected = n * ch * 4
        actual = os.path.getsize(path)
        if actual != expected:
            raise DataFormatError(
                f"{entry['path']}: expected {expected} bytes "
                f"({n} samples x {ch} channels), found {actual}"
            )
        flat = np.fromfile(path, dtype="<f4")
        samples = flat.reshape(ch, n)
        recordings.append(
            Recording(
                subject=int(entry["subject"]),
                session=int(entry["session"]),
                gesture=int(entry["gesture"]),
                repetition=int(entry["repetition"]),
                fs=fs,
                samples=samples,
                layout=layout,
            )
        )
    return recordings


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic HD-sEMG generator.

    Each gesture is a fixed set of ``sources_per_gesture`` spatial activation
    bumps on the grid; session 2 translates the bumps ``session_row_shift``
    rows (saturating at the grid edge) and perturbs per-channel gains, which
    is the physical situation the shift augmentation targets.
    """

    layout: GridLayout = CAPGMYO_GRID
    G: int = 8
    reps: int = 10
    duration_s: float = 1.2
    sources_per_gesture: int = 3
    spatial_sigma: float = 1.5
    snr_db: float = 20.0
    session_row_shift: int = 2
    amplitude_jitter: float = 0.1
    subjects: int = 1
    fs: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.G < 1 or self.reps < 1 or self.subjects < 1:
            raise ParameterError("G, reps, and subjects must be at least 1")
        if self.sources_per_gesture < 1:
            raise ParameterError("sources_per_gesture must be at least 1")
        if not self.spatial_sigma > 0:
            raise ParameterError("spatial_sigma must be positive")
        if not self.fs > 0:
            raise ParameterError("fs must be positive")
        if self.duration_s * self.fs < 256:
            raise ParameterError("duration_s x fs must cover at least one 256-sample window")
        if abs(self.session_row_shift) >= self.layout.rows:
            raise ParameterError("|session_row_shift| must be smaller than rows")
        if self.amplitude_jitter < 0 or self.amplitude_jitter >= 1:
            raise ParameterError("amplitude_jitter must lie in [0, 1)")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.fs))


def _draw_centers(spec: SyntheticSpec, subject: int, gesture: int):
    """Source centers (rows, cols) for one gesture; rows on the 1/64 lattice."""
    rng = rng_for(spec.seed, subject, _STREAM_CENTERS, gesture)
    k = spec.sources_per_gesture
    rows = spec.layout.rows
    cols = spec.layout.cols
    row_ticks = rng.integers(0, (rows - 1) * _CENTER_QUANTUM + 1, size=k)
    src_rows = row_ticks.astype(np.float64) / _CENTER_QUANTUM
    src_cols = rng.uniform(0.0, cols, size=k)
    return src_rows, src_cols


def _band_limited_sources(spec: SyntheticSpec, subject: int, gesture: int, rep: int):
    """K unit-variance source signals, brick-wall limited to the sEMG band."""
    rng = rng_for(spec.seed, subject, _STREAM_SOURCES, gesture, rep)
    n = spec.n_samples
    k = spec.sources_per_gesture
    white = rng.standard_normal((k, n))
    spectrum = np.fft.rfft(white, axis=1)
    freqs = np.fft.rfftfreq(n, d=1.0 / spec.fs)
    lo, hi = _SOURCE_BAND
    keep = (freqs >= min(lo, spec.fs / 2)) & (freqs <= hi)
    spectrum[:, ~keep] = 0.0
    sources = np.fft.irfft(spectrum, n=n, axis=1)
    std = sources.std(axis=1, keepdims=True)
    std[std == 0] = 1.0
    return sources / std


def _bump_weights(spec: SyntheticSpec, src_rows, src_cols):
    """(K, Ch) Gaussian pickup weights; columns wrap around the circumference."""
    layout = spec.layout
    grid_rows = np.arange(layout.rows, dtype=np.float64)
    grid_cols = np.arange(layout.cols, dtype=np.float64)
    dr = grid_rows[None, :] - src_rows[:, None]
    dc = np.abs(grid_cols[None, :] - src_cols[:, None])
    dc = np.minimum(dc, layout.cols - dc)
    d2 = (
        dr[:, :, None] ** 2 + dc[:, None, :] ** 2
    )  # (K, rows, cols)
    w = np.exp(-d2 / (2.0 * spec.spatial_sigma**2))
    return w.reshape(spec.sources_per_gesture, layout.channels)


def _session_gains(spec: SyntheticSpec, subject: int, session: int):
    """Per-channel gain for one electrode placement; session 1 is unperturbed."""
    if session == 1 or spec.amplitude_jitter == 0:
        return np.ones(spec.layout.channels)
    rng = rng_for(spec.seed, subject, _STREAM_GAIN, session)
    j = spec.amplitude_jitter
    return rng.uniform(1.0 - j, 1.0 + j, size=spec.layout.channels)


def generate_synthetic(spec: SyntheticSpec, sessions=(1, 2)) -> list:
    """Generate recordings for the requested sessions of every subject.

    Pure function of (spec, sessions): source placements and signals are
    sub-seeded per (subject, gesture, repetition) and shared across sessions,
    so sessions differ only by the row shift and the gain perturbation.
    Returns float32 recordings ordered by (subject, session, gesture, rep).
    """
    for s in sessions:
        if s not in (1, 2):
            raise ParameterError(f"unknown session {s!r}; sessions are 1 and 2")

    layout = spec.layout
    rows_max = float(layout.rows - 1)
    recordings = []
    for subject in range(1, spec.subjects + 1):
        gains = {s: _session_gains(spec, subject, s) for s in sessions}
        for session in sessions:
            shift = float(spec.session_row_shift) if session == 2 else 0.0
            for gesture in range(1, spec.G + 1):
                src_rows, src_cols = _draw_centers(spec, subject, gesture)
                eff_rows = np.clip(src_rows + shift, 0.0, rows_max)
                weights = _bump_weights(spec, eff_rows, src_cols)
                for rep in range(1, spec.reps + 1):
                    sources = _band_limited_sources(spec, subject, gesture, rep)
                    clean = weights.T @ sources  # (Ch, L)
                    if math.isinf(spec.snr_db):
                        noisy = clean
                    else:
                        power = float(np.mean(clean**2))
                        noise_std = math.sqrt(
                            power / 10.0 ** (spec.snr_db / 10.0)
                        )
                        sensor = rng_for(
                            spec.seed, subject, _STREAM_SENSOR, gesture, rep
                        ).standard_normal(clean.shape)
                        noisy = clean + noise_std * sensor
                    samples = (gains[session][:, None] * noisy).astype(np.float32)
                    recordings.append(
                        Recording(
                            subject=subject,
                            session=session,
                            gesture=gesture,
                            repetition=rep,
                            fs=spec.fs,
                            samples=samples,
                            layout=layout,
                        )
                    )
    return recordings
