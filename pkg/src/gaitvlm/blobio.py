"""Tensor blob directories: raw little-endian arrays plus a JSON manifest.

A blob directory holds one ``tensors.bin`` file with all arrays concatenated
and a ``manifest.json`` listing (name, shape, dtype, file, offset) per tensor.
Weights use float32; video clips use uint8. The same format backs frozen
encoder weights, checkpoints, and synthetic video storage.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MANIFEST_NAME = "manifest.json"
DATA_NAME = "tensors.bin"

_DTYPES = {
    "float32": np.dtype("<f4"),
    "float64": np.dtype("<f8"),
    "int64": np.dtype("<i8"),
    "uint8": np.dtype("u1"),
}


class BlobFormatError(ValueError):
    """Raised for missing manifests, unknown tensors, or shape mismatches."""


def save_tensors(directory: str | Path, tensors: dict[str, np.ndarray]) -> None:
    """Write arrays to a blob directory, creating it if needed."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    with (directory / DATA_NAME).open("wb") as fh:
        for name in sorted(tensors):
            arr = np.ascontiguousarray(tensors[name])
            dtype_name = arr.dtype.name
            if dtype_name not in _DTYPES:
                arr = arr.astype(np.float32)
                dtype_name = "float32"
            arr = arr.astype(_DTYPES[dtype_name], copy=False)
            raw = arr.tobytes()
            entries.append(
                {
                    "name": name,
                    "shape": list(arr.shape),
                    "dtype": dtype_name,
                    "file": DATA_NAME,
                    "offset": offset,
                }
            )
            fh.write(raw)
            offset += len(raw)
    (directory / MANIFEST_NAME).write_text(json.dumps(entries, indent=1))


def load_manifest(directory: str | Path) -> list[dict]:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise BlobFormatError(f"missing manifest: {manifest_path}")
    return json.loads(manifest_path.read_text())


def load_tensors(directory: str | Path, names: list[str] | None = None) -> dict[str, np.ndarray]:
    """Read arrays back from a blob directory.

    With ``names`` given, unknown names raise; otherwise everything in the
    manifest is returned.
    """
    directory = Path(directory)
    entries = load_manifest(directory)
    by_name = {e["name"]: e for e in entries}
    if names is None:
        names = [e["name"] for e in entries]
    missing = [n for n in names if n not in by_name]
    if missing:
        raise BlobFormatError(f"missing tensors in {directory}: {missing}")
    out: dict[str, np.ndarray] = {}
    data_cache: dict[str, bytes] = {}
    for name in names:
        entry = by_name[name]
        file_name = entry["file"]
        if file_name not in data_cache:
            data_path = directory / file_name
            if not data_path.exists():
                raise BlobFormatError(f"missing data file: {data_path}")
            data_cache[file_name] = data_path.read_bytes()
        dtype = _DTYPES[entry["dtype"]]
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(
            data_cache[file_name], dtype=dtype, count=count, offset=entry["offset"]
        )
        out[name] = arr.reshape(shape).copy()
    return out
