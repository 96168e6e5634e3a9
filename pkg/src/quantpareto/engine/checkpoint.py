"""
Checkpoint format.

A checkpoint named ``<name>`` is two files in one directory:

``<name>.manifest.json``
    ``{"version": 1, "metadata": {...}, "entries": [{"name", "shape", "dtype",
    "offset", "nbytes"}, ...]}``. ``dtype`` is a numpy type string with explicit
    little-endian byte order (``"<f4"``, ``"<i8"``); ``offset`` and ``nbytes``
    locate the array inside the blob.

``<name>.bin``
    The arrays' raw little-endian bytes in C order, concatenated in manifest
    order with no padding.

Loading restores every array bit-exactly.
"""

from pathlib import Path
from typing import Any, Mapping

import numpy as np
from pydantic import BaseModel, Field

from quantpareto.core.errors import QuantParetoError

CHECKPOINT_VERSION = 1


class CheckpointEntry(BaseModel):
    name: str
    shape: list[int]
    dtype: str
    offset: int = Field(ge=0)
    nbytes: int = Field(ge=0)


class CheckpointManifest(BaseModel):
    version: int = CHECKPOINT_VERSION
    metadata: dict[str, Any] = Field(default_factory=dict)
    entries: list[CheckpointEntry] = Field(default_factory=list)


def checkpoint_paths(directory: Path, name: str) -> tuple[Path, Path]:
    return directory / f"{name}.manifest.json", directory / f"{name}.bin"


def save_checkpoint(
    directory: Path,
    name: str,
    arrays: Mapping[str, np.ndarray],
    metadata: dict[str, Any] | None = None,
) -> Path:
    """Write ``arrays`` under ``directory``; returns the manifest path"""
    manifest_path, blob_path = checkpoint_paths(directory, name)
    directory.mkdir(parents=True, exist_ok=True)

    manifest = CheckpointManifest(metadata=metadata or {})
    offset = 0
    with open(blob_path, "wb") as blob:
        for key, array in arrays.items():
            arr = np.ascontiguousarray(array)
            little = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
            payload = little.tobytes(order="C")
            blob.write(payload)
            manifest.entries.append(
                CheckpointEntry(
                    name=key,
                    shape=list(arr.shape),
                    dtype=little.dtype.str,
                    offset=offset,
                    nbytes=len(payload),
                )
            )
            offset += len(payload)

    manifest_path.write_text(manifest.model_dump_json(indent=2))
    return manifest_path


def load_checkpoint(
    directory: Path, name: str
) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Read a checkpoint back as (arrays, metadata)"""
    manifest_path, blob_path = checkpoint_paths(directory, name)
    try:
        manifest = CheckpointManifest.model_validate_json(manifest_path.read_text())
        blob = blob_path.read_bytes()
    except (OSError, ValueError) as e:
        raise QuantParetoError(f"Failed to read checkpoint {manifest_path}: {e}") from e

    if manifest.version != CHECKPOINT_VERSION:
        raise QuantParetoError(f"Unsupported checkpoint version {manifest.version}")

    arrays: dict[str, np.ndarray] = {}
    for entry in manifest.entries:
        if entry.offset + entry.nbytes > len(blob):
            raise QuantParetoError(f"Checkpoint blob truncated at entry {entry.name}")
        dtype = np.dtype(entry.dtype)
        count = int(np.prod(entry.shape, dtype=np.int64))
        flat = np.frombuffer(blob, dtype=dtype, count=count, offset=entry.offset)
        arrays[entry.name] = flat.reshape(entry.shape).astype(dtype.newbyteorder("="))
    return arrays, manifest.metadata
