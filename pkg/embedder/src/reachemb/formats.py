"""Binary interchange codecs.

The trainer talks to the summary pipeline exclusively through files:
RTEN dense tensors (with a `.idx` tile sidecar) in, REMB embedding
tables out. Layouts are little-endian throughout and writes are atomic
so a crashed run never leaves a torn file behind.

RTEN: magic `RTEN1`, u8 dtype (0 = f32, 1 = f64), u8 ndim,
ndim x u32 dims, then the row-major payload.
REMB: magic `REMB1`, u32 dimension, u64 row count, then per row
u32 x, u32 y and dimension x f32 components.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .errors import FormatError

RTEN_MAGIC = b"RTEN1"
REMB_MAGIC = b"REMB1"
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_CODES = {"f32": 0, "f64": 1}


def atomic_write(path: str, payload: bytes) -> None:
    """Write via a temp file + rename so readers never see partial data."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise FormatError("truncated file", offset=self.pos)
        out = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return out

    def take_bytes(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated file", offset=self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def expect_magic(self, magic: bytes) -> None:
        got = self.take_bytes(len(magic))
        if got != magic:
            raise FormatError(f"bad magic {got!r}, expected {magic!r}", offset=0)

    def done(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(
                f"{len(self.data) - self.pos} trailing bytes", offset=self.pos
            )


def write_rten(path: str, tensor: np.ndarray, dtype: str = "f64") -> None:
    if dtype not in _DTYPE_CODES:
        raise FormatError(f"dtype must be f32 or f64, got {dtype!r}")
    code = _DTYPE_CODES[dtype]
    arr = np.ascontiguousarray(tensor, dtype=_DTYPES[code])
    head = RTEN_MAGIC + struct.pack("<BB", code, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    atomic_write(path, head + dims + arr.tobytes())


def read_rten(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    r.expect_magic(RTEN_MAGIC)
    code, ndim = r.take("<BB")
    if code not in _DTYPES:
        raise FormatError(f"unknown dtype code {code}", offset=5)
    dims = r.take(f"<{ndim}I")
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    payload = r.take_bytes(count * _DTYPES[code].itemsize)
    r.done()
    return np.frombuffer(payload, dtype=_DTYPES[code]).reshape(dims).copy()


def read_index_sidecar(path: str) -> list[tuple[int, int]]:
    """One `x,y` tile per line, aligned with the tensor's first axis."""
    nodes = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FormatError(f"bad index line {lineno}: {line!r}")
            try:
                nodes.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise FormatError(f"bad index line {lineno}: {line!r}")
    return nodes


def write_remb(path: str, nodes: list[tuple[int, int]], vectors: np.ndarray) -> None:
    vecs = np.ascontiguousarray(vectors, dtype="<f4")
    if vecs.ndim != 2 or vecs.shape[0] != len(nodes):
        raise FormatError(
            f"need one vector per node: {vecs.shape} vs {len(nodes)} nodes"
        )
    d = vecs.shape[1]
    parts = [REMB_MAGIC, struct.pack("<IQ", d, len(nodes))]
    for (x, y), vec in zip(nodes, vecs):
        parts.append(struct.pack("<II", x, y))
        parts.append(vec.tobytes())
    atomic_write(path, b"".join(parts))


def read_remb(path: str) -> tuple[list[tuple[int, int]], np.ndarray]:
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
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
