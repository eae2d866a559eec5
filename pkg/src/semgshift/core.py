"""Shared domain types for HD-sEMG grid recordings, windows, and datasets.

Channel indexing is row-major over the electrode grid: channel = row * cols + col,
with the row axis running along the forearm (proximal-distal) and the column axis
around the circumference. Row 0 is taken as the distal end; this is a convention,
not a measured fact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


class ProtocolError(RuntimeError):
    """A dataset does not satisfy the experimental protocol."""


class DataFormatError(RuntimeError):
    """Canonical dataset files are missing, corrupt, or version-incompatible."""


@dataclass(frozen=True)
class GridLayout:
    """Geometry of an HD-sEMG electrode grid.

    rows x cols electrodes; every ``module_width`` adjacent columns belong to one
    acquisition module; ``pitch_mm`` is the spacing between adjacent rows.
    """

    rows: int
    cols: int
    module_width: int
    pitch_mm: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.module_width < 1:
            raise ParameterError("grid dimensions must be at least 1")
        if self.cols % self.module_width != 0:
            raise ParameterError(
                f"cols ({self.cols}) must be a multiple of module_width ({self.module_width})"
            )
        if not self.pitch_mm > 0:
            raise ParameterError("pitch_mm must be positive")

    @property
    def channels(self) -> int:
        return self.rows * self.cols

    @property
    def modules(self) -> int:
        return self.cols // self.module_width


#: 8x16 grid, two columns per acquisition module, 8 mm row pitch.
CAPGMYO_GRID = GridLayout(rows=8, cols=16, module_width=2, pitch_mm=8.0)


def channel_at(layout: GridLayout, row: int, col: int) -> int:
    """Row-major channel index of grid position (row, col)."""
    if not (0 <= row < layout.rows):
        raise ParameterError(f"row {row} out of range [0, {layout.rows})")
    if not (0 <= col < layout.cols):
        raise ParameterError(f"col {col} out of range [0, {layout.cols})")
    return row * layout.cols + col


def channel_rowcol(layout: GridLayout, channel: int) -> tuple[int, int]:
    """Inverse of channel_at."""
    if not (0 <= channel < layout.channels):
        raise ParameterError(f"channel {channel} out of range [0, {layout.channels})")
    return divmod(channel, layout.cols)


@dataclass(frozen=True, eq=False)
class Recording:
    """One gesture repetition: a Ch x L sample matrix plus its metadata."""

    subject: int
    session: int
    gesture: int
    repetition: int
    fs: float
    samples: np.ndarray
    layout: GridLayout

    def __post_init__(self):
        s = self.samples
        if s.ndim != 2:
            raise ParameterError("samples must be a 2-D channels x samples array")
        if s.shape[0] != self.layout.channels:
            raise ParameterError(
                f"expected {self.layout.channels} channels, got {s.shape[0]}"
            )
        if s.shape[1] < 1:
            raise ParameterError("recording must contain at least one sample")
        if not self.fs > 0:
            raise ParameterError("fs must be positive")
        if self.gesture < 1:
            raise ParameterError("gesture labels are 1-based")
        if self.repetition < 1:
            raise ParameterError("repetition indices are 1-based")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def with_samples(self, samples: np.ndarray) -> "Recording":
        """Copy of this recording with the sample matrix replaced."""
        return Recording(
            subject=self.subject,
            session=self.session,
            gesture=self.gesture,
            repetition=self.repetition,
            fs=self.fs,
            samples=samples,
            layout=self.layout,
        )


@dataclass(frozen=True)
class Provenance:
    """Where a window came from. subset_row None means the full grid."""

    subject: int
    session: int
    repetition: int
    start_sample: int
    subset_row: Optional[int] = None


@dataclass(frozen=True, eq=False)
class LabeledWindow:
    """A Ch' x T sample window with its gesture label and provenance."""

    samples: np.ndarray
    gesture: int
    provenance: Provenance

    def __post_init__(self):
        if self.samples.ndim != 2:
            raise ParameterError("window samples must be 2-D")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered, shape-consistent collection of labeled windows.

    Construction never reorders windows; iteration order is the list order.
    """

    windows: tuple
    G: int

    def __init__(self, windows, G: int):
        windows = tuple(windows)
        if G < 1:
            raise ParameterError("G must be at least 1")
        if windows:
            ch, t = windows[0].samples.shape
            for w in windows:
                if w.samples.shape != (ch, t):
                    raise ParameterError("all windows in a dataset must share shape")
                if not (1 <= w.gesture <= G):
                    raise ParameterError(
                        f"gesture label {w.gesture} outside 1..{G}"
                    )
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "G", G)

    @property
    def N(self) -> int:
        return len(self.windows)

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def labels(self) -> np.ndarray:
        return np.array([w.gesture for w in self.windows], dtype=np.int64)

    def stacked(self) -> np.ndarray:
        """All window samples as one (N, Ch', T) array."""
        if not self.windows:
            return np.empty((0, 0, 0), dtype=np.float32)
        return np.stack([w.samples for w in self.windows])


def rng_for(seed: int, *path: int) -> np.random.Generator:
    """Deterministic child generator for an integer seed and sub-stream path.

    Identical (seed, path) always yields the same stream, independent of any
    other stream, so recordings can be generated in any order or in parallel.
    """
    if seed < 0:
        raise ParameterError("seed must be a non-negative integer")
    parts = [int(seed)]
    for p in path:
        p = int(p)
        if p < 0:
            raise ParameterError("sub-seed path entries must be non-negative")
        parts.append(p)
    return np.random.default_rng(np.random.SeedSequence(parts))
