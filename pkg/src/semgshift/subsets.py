"""Channel-subset enumeration and electrode-shift augmentation.

A subset is one channel per acquisition module, all at the same grid row,
emulating a sparse armband at that row. Training on every valid subset
exposes the classifier to all proximal-distal electrode positions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Dataset, GridLayout, LabeledWindow, ParameterError, Provenance, channel_at


@dataclass(frozen=True)
class ChannelSubset:
    row: int
    channels: tuple
    label: str


def enumerate_subsets(layout: GridLayout, column_offset: int = 0) -> list:
    """One subset per grid row; subset r takes column_offset within each module."""
    if not (0 <= column_offset < layout.module_width):
        raise ParameterError(
            f"column_offset {column_offset} out of range [0, {layout.module_width})"
        )
    subsets = []
    for row in range(layout.rows):
        channels = tuple(
            channel_at(layout, row, m * layout.module_width + column_offset)
            for m in range(layout.modules)
        )
        subsets.append(ChannelSubset(row=row, channels=channels, label=f"subset-{row}"))
    return subsets


def central_subset(layout: GridLayout, column_offset: int = 0) -> ChannelSubset:
    """The subset at row floor((rows - 1) / 2).

    On an 8-row grid this is row 3: three rows to one side and four to the
    other, the maximal-shift asymmetry the augmentation is built around.
    """
    row = (layout.rows - 1) // 2
    return enumerate_subsets(layout, column_offset)[row]


def select_subset(window: LabeledWindow, subset: ChannelSubset) -> LabeledWindow:
    """Extract the subset's channels (in subset order) from a full-grid window."""
    if window.provenance.subset_row is not None:
        raise ParameterError("window was already reduced to a subset")
    n_ch = window.n_channels
    if max(subset.channels) >= n_ch:
        raise ParameterError(
            f"subset expects a grid with more than {max(subset.channels)} channels, "
            f"window has {n_ch}"
        )
    prov = window.provenance
    return LabeledWindow(
        samples=window.samples[list(subset.channels), :],
        gesture=window.gesture,
        provenance=Provenance(
            subject=prov.subject,
            session=prov.session,
            repetition=prov.repetition,
            start_sample=prov.start_sample,
            subset_row=subset.row,
        ),
    )


def augment_avs(dataset: Dataset, layout: GridLayout, column_offset: int = 0) -> Dataset:
    """Expand every full-grid window into one instance per valid subset.

    Output order is window-major, subset row ascending, so results are
    deterministic regardless of any parallel fan-out.
    """
    subsets = enumerate_subsets(layout, column_offset)
    out = []
    for w in dataset:
        for s in subsets:
            out.append(select_subset(w, s))
    return Dataset(out, dataset.G)
