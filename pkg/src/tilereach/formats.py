"""Binary tensor and embedding file codecs.

All integers are little-endian. Writers go through a temp file plus an
atomic rename so a crashed run never leaves a partial file behind.

RTEN tensor file:
    magic `RTEN1`, u8 dtype (0 = f32, 1 = f64), u8 ndim, ndim x u32 dims,
    payload row-major. Optional sidecar `<path>.idx`: one `x,y` text line
    per row of the first dimension.

REMB embedding file:
    magic `REMB1`, u32 d (embedding width), u64 count, then per row:
    u32 x, u32 y, d x f32.
"""

from __future__ import annotations

import os
import struct
import tempfile
from typing import Sequence

import numpy as np

from .errors import FormatError

RTEN_MAGIC = b"RTEN1"
REMB_MAGIC = b"REMB1"

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_NAMES = {"f32": 0, "f64": 1}


def atomic_write(path: str, payload: bytes) -> None:
    """Write bytes to path via a temp file and atomic replace."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class _Reader:
    """Cursor over a byte string that raises FormatError on truncation."""

    def __init__(self, data: bytes, what: str):
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise FormatError(f"truncated {self.what} file", offset=self.pos)
        out = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return out

    def take_bytes(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated {self.what} file", offset=self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def expect_magic(self, magic: bytes) -> None:
        got = self.take_bytes(len(magic))
        if got != magic:
            raise FormatError(
                f"bad magic {got!r} for {self.what} file (expected {magic!r})", offset=0
            )

    def done(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(
                f"{len(self.data) - self.pos} trailing bytes in {self.what} file",
                offset=self.pos,
            )


def write_rten(path: str, tensor: np.ndarray, dtype: str = "f64") -> None:
    """Write a tensor in the RTEN layout."""
    if dtype not in _DTYPE_NAMES:
        raise FormatError(f"unknown RTEN dtype {dtype!r}")
    code = _DTYPE_NAMES[dtype]
    arr = np.ascontiguousarray(tensor, dtype=_DTYPE_CODES[code])
    if arr.ndim < 1 or arr.ndim > 255:
        raise FormatError(f"RTEN supports 1..255 dims, got {arr.ndim}")
    head = RTEN_MAGIC + struct.pack("<BB", code, arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    atomic_write(path, head + arr.tobytes(order="C"))


def read_rten(path: str) -> np.ndarray:
    """Read an RTEN file back into an array (f4 or f8, C-order)."""
    with open(path, "rb") as f:
        data = f.read()
    r = _Reader(data, "RTEN")
    r.expect_magic(RTEN_MAGIC)
    code, ndim = r.take("<BB")
    if code not in _DTYPE_CODES:
        raise FormatError(f"unknown RTEN dtype code {code}", offset=5)
    dims = r.take(f"<{ndim}I")
    dt = _DTYPE_CODES[code]
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 0
    payload = r.take_bytes(count * dt.itemsize)
    r.done()
    return np.frombuffer(payload, dtype=dt).reshape(dims).copy()


def write_index_sidecar(path: str, nodes: Sequence[tuple[int, int]]) -> None:
    """Write the `.idx` sidecar: one `x,y` line per tensor row."""
    text = "".join(f"{x},{y}\n" for x, y in nodes)
    atomic_write(path, text.encode("ascii"))


def read_index_sidecar(path: str) -> list[tuple[int, int]]:
    with open(path, "r", encoding="ascii") as f:
        out = []
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                xs, ys = line.split(",")
                out.append((int(xs), int(ys)))
            except ValueError:
                raise FormatError(f"bad index sidecar line {lineno}: {line!r}")
    return out


def write_remb(path: str, nodes: Sequence[tuple[int, int]], vectors: np.ndarray) -> None:
    """Write per-tile embedding vectors in the REMB layout."""
    vec = np.ascontiguousarray(vectors, dtype="<f4")
    if vec.ndim != 2:
        raise FormatError(f"REMB vectors must be 2-D, got shape {vec.shape}")
    if len(nodes) != vec.shape[0]:
        raise FormatError(f"{len(nodes)} nodes vs {vec.shape[0]} vectors")
    d = vec.shape[1]
    parts = [REMB_MAGIC, struct.pack("<IQ", d, vec.shape[0])]
    row_fmt = struct.Struct("<II")
    for (x, y), row in zip(nodes, vec):
        parts.append(row_fmt.pack(x, y))
        parts.append(row.tobytes())
    atomic_write(path, b"".join(parts))


def read_remb(path: str) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Read a REMB file: ([(x, y), ...], float32 array of shape (count, d))."""
    with open(path, "rb") as f:
        data = f.read()
    r = _Reader(data, "REMB")
    r.expect_magic(REMB_MAGIC)
    d, count = r.take("<IQ")
    nodes = []
    vectors = np.empty((count, d), np.float32)
    for i in range(count):
        x, y = r.take("<II")
        nodes.append((x, y))
        vectors[i] = np.frombuffer(r.take_bytes(4 * d), dtype="<f4")
    r.done()
    return nodes, vectors
