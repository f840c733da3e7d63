"""The SEDAE1 tensor container.

Layout (all integers little-endian)::

    b"SEDAE1"  magic
    u8         format version
    u32        tensor count
    per tensor: u16 name length, name (utf-8), u8 ndim, u64 * ndim shape, u64 byte offset
    raw float64 data, offsets relative to the start of this block
"""

import hashlib
import struct

import numpy as np

from ..errors import ContractViolation

MAGIC = b"SEDAE1"
VERSION = 1


def _encode(tensors):
    header = [MAGIC, struct.pack("<BI", VERSION, len(tensors))]
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        header.append(struct.pack("<H", len(raw)) + raw)
        header.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        header.append(struct.pack("<Q", offset))
        blob = arr.tobytes()
        blobs.append(blob)
        offset += len(blob)
    return b"".join(header) + b"".join(blobs)


def save_tensors(path, tensors):
    with open(path, "wb") as fh:
        fh.write(_encode(tensors))


def load_tensors(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:6] != MAGIC:
        raise ContractViolation(f"{path}: not a SEDAE1 checkpoint")
    version, count = struct.unpack_from("<BI", buf, 6)
    if version != VERSION:
        raise ContractViolation(f"{path}: unsupported version {version}")
    pos = 11
    entries = []
    for _ in range(count):
        (n,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        name = buf[pos:pos + n].decode("utf-8")
        pos += n
        (ndim,) = struct.unpack_from("<B", buf, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}Q", buf, pos)
        pos += 8 * ndim
        (offset,) = struct.unpack_from("<Q", buf, pos)
        pos += 8
        entries.append((name, shape, offset))
    out = {}
    for name, shape, offset in entries:
        size = int(np.prod(shape, dtype=np.int64))
        start = pos + offset
        out[name] = np.frombuffer(buf, dtype="<f8", count=size, offset=start).reshape(shape).copy()
    return out


def tensors_digest(tensors):
    """SHA-256 over the serialized container; equal digests mean bit-identical tensors."""
    return hashlib.sha256(_encode(tensors)).hexdigest()
