import struct

import numpy as np
import pandas as pd
import pytest

from planewave.errors import FieldFormatError, PreconditionError
from planewave.fieldio import (append_jsonl, export_csv, field_kind, read_field, read_jsonl, write_field,
                               write_jsonl)


def test_header_layout(tmp_path):
    values = np.arange(8 * 6 * 2, dtype=float).reshape(8, 6, 2)
    path = write_field(str(tmp_path / "v.pwfg"), values, 2)
    raw = open(path, "rb").read()
    assert raw[:4] == b"PWFG"
    assert struct.unpack("<IIIII", raw[4:24]) == (1, 2, 1, 8, 6)
    assert len(raw) == 24 + values.size * 8
    # components fastest
    assert struct.unpack("<dd", raw[24:40]) == (0.0, 1.0)


@pytest.mark.parametrize("shape, kind", [((8, 8), "scalar"), ((4, 4, 4, 3), "vector"), ((8, 8, 2, 2), "matrix")])
def test_fields_come_back_bit_exact(tmp_path, shape, kind):
    d = 3 if len(shape) == 4 and kind == "vector" else 2
    values = np.random.default_rng(1).standard_normal(shape)
    path = write_field(str(tmp_path / "f.pwfg"), values, d)
    back, found = read_field(path)
    assert found == kind
    assert back.shape == shape
    assert np.array_equal(back, values)


def test_field_kind_rejects_odd_shapes():
    with pytest.raises(PreconditionError):
        field_kind(np.zeros((8, 8, 3)), 2)
    with pytest.raises(PreconditionError):
        field_kind(np.zeros((8, 8, 2, 2, 2)), 2)


@pytest.mark.parametrize("corrupt, message", [
    (lambda raw: b"XXXX" + raw[4:], "magic"),
    (lambda raw: raw[:4] + struct.pack("<I", 9) + raw[8:], "version"),
    (lambda raw: raw[:12] + struct.pack("<I", 7) + raw[16:], "invalid header"),
    (lambda raw: raw[:10], "truncated"),
    (lambda raw: raw[:-8], "payload"),
    (lambda raw: raw + b"\0" * 8, "payload"),
])
def test_corrupted_files(tmp_path, corrupt, message):
    path = tmp_path / "s.pwfg"
    write_field(str(path), np.ones((8, 8)), 2)
    path.write_bytes(corrupt(path.read_bytes()))
    with pytest.raises(FieldFormatError, match=message):
        read_field(str(path))


def test_jsonl_streams(tmp_path):
    path = str(tmp_path / "out" / "diagnostics.jsonl")
    append_jsonl(path, {"sweep": 0, "total_deficit": 1.5})
    append_jsonl(path, {"sweep": 1, "total_deficit": 0.5})
    assert [r["sweep"] for r in read_jsonl(path)] == [0, 1]
    write_jsonl(path, [{"sweep": 3}])
    assert read_jsonl(path) == [{"sweep": 3}]


def test_append_leaves_the_old_stream_intact_when_the_rename_fails(tmp_path, monkeypatch):
    path = tmp_path / "diagnostics.jsonl"
    append_jsonl(str(path), {"sweep": 1})
    before = path.read_bytes()

    def broken_replace(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr("planewave.fieldio.os.replace", broken_replace)
    with pytest.raises(OSError, match="disk full"):
        append_jsonl(str(path), {"sweep": 2})
    assert path.read_bytes() == before
    assert sorted(p.name for p in tmp_path.iterdir()) == ["diagnostics.jsonl"]


def test_append_repairs_a_missing_final_newline(tmp_path):
    path = tmp_path / "diagnostics.jsonl"
    path.write_text('{"sweep": 1}')
    append_jsonl(str(path), {"sweep": 2})
    assert [r["sweep"] for r in read_jsonl(str(path))] == [1, 2]


def test_csv_export(tmp_path):
    U = np.random.default_rng(2).standard_normal((8, 8, 2, 2))
    field = write_field(str(tmp_path / "U.pwfg"), U, 2)
    csv = str(tmp_path / "U.csv")
    frame = export_csv(field, csv)
    assert list(frame.columns) == ["x1", "x2", "U11", "U12", "U21", "U22"]
    back = pd.read_csv(csv, float_precision="round_trip")
    assert len(back) == 64
    assert np.array_equal(back["U12"].to_numpy(), U[..., 0, 1].reshape(-1))
    assert back["x2"].iloc[1] == pytest.approx(2 * np.pi / 8)
