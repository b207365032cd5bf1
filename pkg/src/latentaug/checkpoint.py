"""Versioned binary checkpoint container.

Byte layout, all integers little-endian:

    offset  size        field
    0       8           magic b"LAUGCKPT"
    8       4           format version (uint32), currently 1
    12      8           header length L in bytes (uint64)
    20      L           header: canonical JSON (sorted keys, no spaces), UTF-8
    20+L    ...         tensor payload, raw bytes

The header object holds "meta" (arbitrary JSON the caller supplied) and
"tensors", a list of {"name", "dtype", "shape", "offset", "nbytes"} in
payload order; "offset" is relative to the payload start. Tensors are
stored C-order, forced little-endian, so files are portable and the format
depends on no serialization library.

Writes go to a temp file in the target directory followed by an atomic
rename, so a crashed run never leaves a partial checkpoint behind.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"LAUGCKPT"
VERSION = 1


def _little_endian(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    dt = arr.dtype
    if dt.byteorder == ">" or (dt.byteorder == "=" and not np.little_endian):
        arr = arr.astype(dt.newbyteorder("<"))
    return arr


def save_checkpoint(path, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    path = Path(path)
    entries = []
    blobs = []
    offset = 0
    for name, raw in tensors.items():
        arr = _little_endian(np.asarray(raw))
        blob = arr.tobytes()
        entries.append({
            "name": name,
            "dtype": arr.dtype.str.lstrip("=<"),
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps({"meta": meta or {}, "tensors": entries},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")

    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(np.uint32(VERSION).tobytes())
            fh.write(np.uint64(len(header)).tobytes())
            fh.write(header)
            for blob in blobs:
                fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < 20 or raw[:8] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    version = int(np.frombuffer(raw[8:12], dtype="<u4")[0])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    header_len = int(np.frombuffer(raw[12:20], dtype="<u8")[0])
    if 20 + header_len > len(raw):
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[20:20 + header_len].decode("utf-8"))
        entries = header["tensors"]
        meta = header["meta"]
    except (ValueError, KeyError) as exc:
        raise CheckpointError(f"{path}: malformed header") from exc

    payload = raw[20 + header_len:]
    tensors: dict[str, np.ndarray] = {}
    for e in entries:
        try:
            start, nbytes = e["offset"], e["nbytes"]
            dtype = np.dtype("<" + e["dtype"])
            shape = tuple(e["shape"])
        except (KeyError, TypeError) as exc:
            raise CheckpointError(f"{path}: malformed tensor entry") from exc
        if start + nbytes > len(payload):
            raise CheckpointError(f"{path}: truncated payload for tensor {e.get('name')}")
        arr = np.frombuffer(payload[start:start + nbytes], dtype=dtype).reshape(shape)
        tensors[e["name"]] = arr.copy()  # writable, detached from the file buffer
    return tensors, meta


def checksum_tensors(tensors: dict[str, np.ndarray]) -> str:
    """Order-independent sha256 over names, dtypes, shapes, and raw values."""
    digest = hashlib.sha256()
    for name in sorted(tensors):
        arr = _little_endian(np.asarray(tensors[name]))
        digest.update(name.encode("utf-8"))
        digest.update(arr.dtype.str.encode("ascii"))
        digest.update(repr(arr.shape).encode("ascii"))
        digest.update(arr.tobytes())
    return digest.hexdigest()
