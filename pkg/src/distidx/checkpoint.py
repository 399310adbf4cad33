"""Versioned binary container for parameter checkpoints.

Layout: magic ``DIDX``, u32 version, 32-byte sha256 of the manifest (the
"spec hash"), u64 manifest length + manifest JSON, u32 tensor count, then per
tensor: u16 name length + name, u8 dtype code, u8 ndim, u64 dims, raw
little-endian payload.  Tensors appear in declaration order.
"""
from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

MAGIC = b"DIDX"
VERSION = 1

_DTYPES = {0: "<f4", 1: "<f8", 2: "<i4", 3: "<i8", 4: "|u1", 5: "<u2"}
_CODES = {np.dtype(v): k for k, v in _DTYPES.items()}


class CheckpointError(ValueError):
    pass


def _canon_manifest(manifest: dict) -> bytes:
    return json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")


def serialize(tensors: list[tuple[str, np.ndarray]], manifest: dict) -> bytes:
    mbytes = _canon_manifest(manifest)
    parts = [MAGIC, struct.pack("<I", VERSION), hashlib.sha256(mbytes).digest(),
             struct.pack("<Q", len(mbytes)), mbytes, struct.pack("<I", len(tensors))]
    for name, arr in tensors:
        arr = np.asarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        code = _CODES.get(np.dtype(le.dtype.str))
        if code is None:
            raise CheckpointError(f"unsupported dtype {arr.dtype} for tensor {name!r}")
        nb = name.encode("utf-8")
        parts.append(struct.pack("<H", len(nb)))
        parts.append(nb)
        parts.append(struct.pack("<BB", code, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(np.ascontiguousarray(le).tobytes())
    return b"".join(parts)


def deserialize(blob: bytes) -> tuple[list[tuple[str, np.ndarray]], dict]:
    view = memoryview(blob)
    if bytes(view[:4]) != MAGIC:
        raise CheckpointError("bad magic; not a checkpoint file")
    (version,) = struct.unpack_from("<I", view, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    digest = bytes(view[8:40])
    (mlen,) = struct.unpack_from("<Q", view, 40)
    off = 48
    mbytes = bytes(view[off:off + mlen])
    if hashlib.sha256(mbytes).digest() != digest:
        raise CheckpointError("manifest hash mismatch; file corrupted")
    manifest = json.loads(mbytes.decode("utf-8"))
    off += mlen
    (count,) = struct.unpack_from("<I", view, off)
    off += 4
    tensors: list[tuple[str, np.ndarray]] = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", view, off)
        off += 2
        name = bytes(view[off:off + nlen]).decode("utf-8")
        off += nlen
        code, ndim = struct.unpack_from("<BB", view, off)
        off += 2
        shape = struct.unpack_from(f"<{ndim}Q", view, off)
        off += 8 * ndim
        dtype = np.dtype(_DTYPES[code])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if ndim else dtype.itemsize
        arr = np.frombuffer(view[off:off + nbytes], dtype=dtype).reshape(shape).copy()
        off += nbytes
        tensors.append((name, arr))
    return tensors, manifest


def save(path, tensors: list[tuple[str, np.ndarray]], manifest: dict) -> int:
    blob = serialize(tensors, manifest)
    with open(path, "wb") as fh:
        fh.write(blob)
    return len(blob)


def load(path) -> tuple[list[tuple[str, np.ndarray]], dict]:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
