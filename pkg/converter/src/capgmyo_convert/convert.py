"""Vendor .mat to canonical manifest+f32 conversion.

Vendor recordings are named SSS-GGG-TTT.mat (recording id, gesture, trial)
and carry a ``data`` matrix with 128 channels, stored either channels-major
(128 x samples) or samples-major (samples x 128; the common vendor layout).
A square matrix is taken as channels-major.

Output is the dataset layout the benchmark harness reads: ``manifest.json``
plus one raw little-endian float32 channel-major file per recording, and a
``checksums.txt`` with one sha256 line per written file. Vendor channel order
is remapped through the 128-entry table in ``channel_map.json`` committed
next to this module, so a grid-orientation correction is a data edit, not a
code change.

Recording-id mapping: database "a" has one session, subject = id. Database
"b" interleaves two sessions per subject: subject = (id + 1) // 2, session 1
for odd ids and 2 for even ids.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.io import loadmat

N_CHANNELS = 128
FS_HZ = 1000.0
GRID = {"rows": 8, "cols": 16, "module_width": 2, "pitch_mm": 8.0}
FORMAT_VERSION = 1

_VENDOR_NAME = re.compile(r"^(\d{3})-(\d{3})-(\d{3})\.mat$")


class ParameterError(ValueError):
    """Bad arguments or an input that violates the recording protocol."""


class DataFormatError(RuntimeError):
    """Unreadable or structurally malformed input."""


@dataclass(frozen=True)
class VendorFile:
    path: str
    recording_id: int
    gesture: int
    trial: int


@dataclass(frozen=True)
class ConvertResult:
    manifest_path: str
    converted: int
    skipped: tuple  # (path, reason) pairs


def vendor_identity(db: str, recording_id: int):
    """Map a vendor recording id to (subject, session) for the given database."""
    if db == "a":
        return recording_id, 1
    if db == "b":
        return (recording_id + 1) // 2, ((recording_id - 1) % 2) + 1
    raise ParameterError(f"unknown database {db!r}; expected 'a' or 'b'")


def load_channel_map() -> np.ndarray:
    """canonical_from_vendor: entry c is the vendor channel feeding canonical channel c."""
    text = resources.files("capgmyo_convert").joinpath("channel_map.json").read_text()
    table = np.asarray(json.loads(text)["canonical_from_vendor"], dtype=np.int64)
    if table.shape != (N_CHANNELS,) or sorted(table.tolist()) != list(range(N_CHANNELS)):
        raise DataFormatError(
            f"channel_map.json must hold a permutation of 0..{N_CHANNELS - 1}"
        )
    return table


def scan_vendor_dir(in_dir):
    """All .mat entries under in_dir: (parsed VendorFiles, misnamed paths)."""
    if not os.path.isdir(in_dir):
        raise DataFormatError(f"input directory not found: {in_dir}")
    named, misnamed = [], []
    for entry in sorted(os.listdir(in_dir)):
        if not entry.endswith(".mat"):
            continue
        path = os.path.join(in_dir, entry)
        m = _VENDOR_NAME.match(entry)
        if m is None:
            misnamed.append(path)
            continue
        named.append(
            VendorFile(path, int(m.group(1)), int(m.group(2)), int(m.group(3)))
        )
    return named, misnamed


def load_vendor_matrix(path) -> np.ndarray:
    """The recording as channels x samples float64, still in vendor channel order.

    Raises DataFormatError when the file cannot be parsed (skippable) and
    ParameterError when it parses but does not carry 128 channels (hard stop).
    """
    try:
        mat = loadmat(path)
    except Exception as e:  # scipy raises several types for broken archives
        raise DataFormatError(f"cannot parse {path}: {e}") from e
    if "data" not in mat:
        raise DataFormatError(f"{path} has no 'data' matrix")
    data = np.asarray(mat["data"])
    if data.ndim != 2:
        raise DataFormatError(f"{path}: 'data' must be a 2-d matrix")
    if data.shape[0] != N_CHANNELS and data.shape[1] == N_CHANNELS:
        data = data.T
    if data.shape[0] != N_CHANNELS:
        raise ParameterError(
            f"{path}: expected {N_CHANNELS} channels, got matrix of shape {data.shape}"
        )
    return np.asarray(data, dtype=np.float64)


def convert(in_dir, out_root, db: str) -> ConvertResult:
    """Convert every parseable vendor recording under in_dir into out_root.

    Unparseable files are collected in the result's ``skipped`` list; a
    parseable file with the wrong channel count aborts the whole run.
    Output is deterministic, so re-running over the same input is
    byte-identical.
    """
    if db not in ("a", "b"):
        raise ParameterError(f"unknown database {db!r}; expected 'a' or 'b'")
    table = load_channel_map()
    named, misnamed = scan_vendor_dir(in_dir)
    skipped = [(p, "filename does not match SSS-GGG-TTT.mat") for p in misnamed]

    records = []
    for vf in named:
        try:
            matrix = load_vendor_matrix(vf.path)
        except DataFormatError as e:
            skipped.append((vf.path, str(e)))
            continue
        subject, session = vendor_identity(db, vf.recording_id)
        records.append((subject, session, vf.gesture, vf.trial, matrix))
    if not records:
        raise ParameterError(f"no convertible vendor recordings in {in_dir}")

    records.sort(key=lambda r: r[:4])
    os.makedirs(out_root, exist_ok=True)
    entries = []
    checksums = []
    for subject, session, gesture, trial, matrix in records:
        canonical = np.ascontiguousarray(matrix[table, :], dtype="<f4")
        name = f"s{subject:03d}_e{session:02d}_g{gesture:03d}_r{trial:03d}.f32"
        payload = canonical.tobytes()
        with open(os.path.join(out_root, name), "wb") as f:
            f.write(payload)
        checksums.append((name, hashlib.sha256(payload).hexdigest()))
        entries.append(
            {
                "path": name,
                "subject": subject,
                "session": session,
                "gesture": gesture,
                "repetition": trial,
                "sample_count": canonical.shape[1],
            }
        )

    manifest = {
        "format_version": FORMAT_VERSION,
        "fs_hz": FS_HZ,
        "grid": dict(GRID),
        "recordings": entries,
    }
    manifest_text = json.dumps(manifest, indent=1, sort_keys=True) + "\n"
    manifest_path = os.path.join(out_root, "manifest.json")
    with open(manifest_path, "w") as f:
        f.write(manifest_text)
    checksums.append(("manifest.json", hashlib.sha256(manifest_text.encode()).hexdigest()))

    # sha256sum -c compatible: "<digest>  <name>", sorted by name
    with open(os.path.join(out_root, "checksums.txt"), "w") as f:
        for name, digest in sorted(checksums):
            f.write(f"{digest}  {name}\n")

    return ConvertResult(manifest_path, len(entries), tuple(skipped))
