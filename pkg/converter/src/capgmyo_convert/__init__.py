"""One-shot converter from vendor Capgmyo .mat archives to manifest+f32 datasets."""

from .convert import (
    ConvertResult,
    DataFormatError,
    ParameterError,
    VendorFile,
    convert,
    load_channel_map,
    load_vendor_matrix,
    scan_vendor_dir,
    vendor_identity,
)

__version__ = "0.1.0"

__all__ = [
    "ConvertResult",
    "DataFormatError",
    "ParameterError",
    "VendorFile",
    "convert",
    "load_channel_map",
    "load_vendor_matrix",
    "scan_vendor_dir",
    "vendor_identity",
]
