import json

import numpy as np
import pytest

from admmreg.admm import TraceRecord
from admmreg.fileio import (PGMError, format_value, read_csv, read_pgm, write_csv, write_json,
                            write_pgm, write_png, write_trace_csv)


def test_pgm_roundtrip(tmp_path, rng):
    img = rng.integers(0, 256, (7, 11)) / 255.0
    path = tmp_path / "a.pgm"
    write_pgm(path, img)
    back = read_pgm(path)
    assert back.shape == (7, 11)
    np.testing.assert_allclose(back, img, atol=1e-15)


def test_pgm_clips_and_rounds(tmp_path):
    path = tmp_path / "c.pgm"
    write_pgm(path, np.array([[-0.5, 0.5, 1.7]]))
    np.testing.assert_allclose(read_pgm(path) * 255, [[0, 128, 255]])


def test_pgm_header_comments_and_maxval(tmp_path):
    path = tmp_path / "h.pgm"
    path.write_bytes(b"P5\n# comment\n2 1\n# another\n15\n\x00\x0f")
    np.testing.assert_allclose(read_pgm(path), [[0.0, 1.0]])


@pytest.mark.parametrize("data", [
    b"P2\n2 2\n255\n0 0 0 0",
    b"P5\n2 2\n255\n\x00\x00",
    b"P5\n2 x\n255\n\x00\x00\x00\x00",
    b"P5\n2 2\n65535\n" + b"\x00" * 8,
    b"P5\n2",
])
def test_malformed_pgm(tmp_path, data):
    path = tmp_path / "bad.pgm"
    path.write_bytes(data)
    with pytest.raises(PGMError):
        read_pgm(path)


def test_png_written(tmp_path):
    pytest.importorskip("PIL")
    from PIL import Image

    path = tmp_path / "a.png"
    write_png(path, np.array([[0.0, 1.0]]))
    assert np.array(Image.open(path)).tolist() == [[0, 255]]


def test_csv_roundtrip_preserves_floats(tmp_path):
    path = tmp_path / "t.csv"
    vals = [0.1, 1 / 3, 1e-300, -2.5e17]
    write_csv(path, ("a", "b"), [(v, None) for v in vals])
    rows = read_csv(path)
    assert [float(r["a"]) for r in rows] == vals
    assert all(r["b"] == "" for r in rows)


def test_trace_csv_header(tmp_path):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, [TraceRecord(1, 0.5, 0.25, 1.0, 2.0, inner_iters=3)])
    text = path.read_text().splitlines()
    assert text[0] == "k,r_norm,s_norm,E,f_y,err,psnr,inner_iters"
    assert text[1] == "1,0.5,0.25,1.0,2.0,,,3"


def test_json_handles_numpy(tmp_path):
    path = tmp_path / "s.json"
    write_json(path, {"a": np.float64(1.5), "b": [np.int64(2)], "c": None})
    assert json.loads(path.read_text()) == {"a": 1.5, "b": [2], "c": None}


def test_no_temp_files_left(tmp_path):
    write_json(tmp_path / "x.json", {})
    write_pgm(tmp_path / "x.pgm", np.zeros((2, 2)))
    assert sorted(p.name for p in tmp_path.iterdir()) == ["x.json", "x.pgm"]


def test_format_value():
    assert format_value(None) == ""
    assert format_value(np.float64(0.1)) == "0.1"
    assert format_value(3) == "3"
