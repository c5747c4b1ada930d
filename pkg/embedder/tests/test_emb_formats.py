"""Codec roundtrips and corruption handling."""

import os
import struct

import numpy as np
import pytest

from reachemb import read_index_sidecar, read_remb, read_rten, write_remb, write_rten
from reachemb.errors import FormatError
from reachemb.formats import REMB_MAGIC, RTEN_MAGIC, atomic_write


def test_rten_roundtrip_f64(tmp_path):
    path = str(tmp_path / "t.rten")
    tensor = np.arange(2 * 3 * 3 * 2, dtype=np.float64).reshape(2, 3, 3, 2)
    write_rten(path, tensor)
    back = read_rten(path)
    assert back.dtype == np.float64
    assert np.array_equal(back, tensor)


def test_rten_roundtrip_f32(tmp_path):
    path = str(tmp_path / "t.rten")
    tensor = np.linspace(0, 1, 24, dtype=np.float32).reshape(4, 3, 2)
    write_rten(path, tensor, dtype="f32")
    back = read_rten(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, tensor)


def test_rten_write_read_write_identical_bytes(tmp_path):
    a = str(tmp_path / "a.rten")
    b = str(tmp_path / "b.rten")
    rng = np.random.default_rng(3)
    tensor = rng.random((5, 7, 7, 2))
    write_rten(a, tensor)
    write_rten(b, read_rten(a))
    assert open(a, "rb").read() == open(b, "rb").read()


def test_rten_bad_dtype_name(tmp_path):
    with pytest.raises(FormatError):
        write_rten(str(tmp_path / "t.rten"), np.zeros(3), dtype="f16")


def test_rten_bad_magic(tmp_path):
    path = str(tmp_path / "t.rten")
    write_rten(path, np.zeros((2, 2)))
    blob = bytearray(open(path, "rb").read())
    blob[0] ^= 0xFF
    open(path, "wb").write(bytes(blob))
    with pytest.raises(FormatError):
        read_rten(path)


def test_rten_truncated(tmp_path):
    path = str(tmp_path / "t.rten")
    write_rten(path, np.ones((4, 4)))
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:-3])
    with pytest.raises(FormatError) as err:
        read_rten(path)
    assert "truncated" in str(err.value)


def test_rten_trailing_bytes(tmp_path):
    path = str(tmp_path / "t.rten")
    write_rten(path, np.ones((4, 4)))
    with open(path, "ab") as fh:
        fh.write(b"xx")
    with pytest.raises(FormatError) as err:
        read_rten(path)
    assert "trailing" in str(err.value)


def test_rten_unknown_dtype_code(tmp_path):
    path = str(tmp_path / "t.rten")
    payload = RTEN_MAGIC + struct.pack("<BB", 9, 1) + struct.pack("<I", 0)
    open(path, "wb").write(payload)
    with pytest.raises(FormatError) as err:
        read_rten(path)
    assert "dtype" in str(err.value)


def test_index_sidecar(tmp_path):
    path = tmp_path / "t.rten.idx"
    path.write_text("3,4\n10,20\n\n7,8\n")
    assert read_index_sidecar(str(path)) == [(3, 4), (10, 20), (7, 8)]


def test_index_sidecar_bad_line(tmp_path):
    path = tmp_path / "t.rten.idx"
    path.write_text("3,4\nnope\n")
    with pytest.raises(FormatError) as err:
        read_index_sidecar(str(path))
    assert "line 2" in str(err.value)


def test_index_sidecar_wrong_arity(tmp_path):
    path = tmp_path / "t.rten.idx"
    path.write_text("3,4,5\n")
    with pytest.raises(FormatError):
        read_index_sidecar(str(path))


def test_remb_roundtrip(tmp_path):
    path = str(tmp_path / "e.remb")
    nodes = [(5, 9), (1000000, 2000000), (0, 0)]
    vectors = np.arange(12, dtype=np.float32).reshape(3, 4)
    write_remb(path, nodes, vectors)
    back_nodes, back_vectors = read_remb(path)
    assert back_nodes == nodes
    assert np.array_equal(back_vectors, vectors)
    assert back_vectors.dtype == np.float32


def test_remb_layout_is_packed_little_endian(tmp_path):
    path = str(tmp_path / "e.remb")
    write_remb(path, [(7, 8)], np.array([[1.5, -2.0]], np.float32))
    blob = open(path, "rb").read()
    assert blob[:5] == REMB_MAGIC
    d, count = struct.unpack_from("<IQ", blob, 5)
    assert (d, count) == (2, 1)
    x, y, a, b = struct.unpack_from("<IIff", blob, 17)
    assert (x, y, a, b) == (7, 8, 1.5, -2.0)
    assert len(blob) == 17 + 8 + 8


def test_remb_vector_count_mismatch(tmp_path):
    with pytest.raises(FormatError):
        write_remb(str(tmp_path / "e.remb"), [(1, 2)], np.zeros((2, 4), np.float32))


def test_remb_truncated(tmp_path):
    path = str(tmp_path / "e.remb")
    write_remb(path, [(1, 2), (3, 4)], np.zeros((2, 3), np.float32))
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:-2])
    with pytest.raises(FormatError):
        read_remb(path)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    path = str(tmp_path / "out.bin")
    atomic_write(path, b"abc")
    assert open(path, "rb").read() == b"abc"
    assert os.listdir(tmp_path) == ["out.bin"]
