"""Electrode-shift-robust sEMG gesture recognition on high-density grids.

The library covers the full benchmark pipeline: canonical dataset IO and a
synthetic generator (ingest), band-stop filtering / standardization /
windowing (dsp), channel-subset shift augmentation (subsets), four classical
feature sets (features), PCA + regularized LDA (learn), the statistical test
battery (stats), and the intrasession / intersession experiment harness
(experiments) with a CLI front end (cli).
"""

__version__ = "0.1.0"

from .core import (
    CAPGMYO_GRID,
    DataFormatError,
    Dataset,
    GridLayout,
    LabeledWindow,
    ParameterError,
    ProtocolError,
    Provenance,
    Recording,
    channel_at,
    channel_rowcol,
    rng_for,
)

__all__ = [
    "CAPGMYO_GRID",
    "DataFormatError",
    "Dataset",
    "GridLayout",
    "LabeledWindow",
    "ParameterError",
    "ProtocolError",
    "Provenance",
    "Recording",
    "channel_at",
    "channel_rowcol",
    "rng_for",
    "__version__",
]
