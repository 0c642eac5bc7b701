"""File formats: binary PGM images, trace/sweep CSV, summary JSON.

Every writer goes through :func:`atomic_write`, so readers never see a
partially written file.
"""

import csv
import io
import json
import os
import re
import tempfile

import numpy as np

from .errors import AdmmRegError

__all__ = [
    "PGMError",
    "atomic_write",
    "read_pgm",
    "write_pgm",
    "write_png",
    "format_value",
    "write_csv",
    "read_csv",
    "write_trace_csv",
    "write_json",
]


class PGMError(AdmmRegError, ValueError):
    """Malformed or unsupported PGM file."""


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temp file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def read_pgm(path):
    """Read an 8-bit binary (P5) PGM as floats on the unit scale."""
    with open(path, "rb") as fh:
        raw = fh.read()
    pos = 0
    tokens = []
    for _ in range(4):
        m = _PGM_TOKEN.match(raw, pos)
        if m is None:
            raise PGMError("{}: truncated header".format(path))
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise PGMError("{}: not a binary PGM (magic {!r})".format(path, tokens[0]))
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PGMError("{}: non-integer header field".format(path)) from None
    if width < 1 or height < 1 or not 0 < maxval < 256:
        raise PGMError("{}: unsupported size or maxval {}".format(path, maxval))
    pos += 1  # single whitespace byte before the raster
    pixels = raw[pos:pos + width * height]
    if len(pixels) != width * height:
        raise PGMError("{}: expected {} pixels, found {}".format(
            path, width * height, len(pixels)))
    img = np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)
    return img.astype(float) / maxval


def _to_uint8(img):
    img = np.asarray(img, dtype=float)
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(path, img):
    """Write a unit-scale image as an 8-bit P5 PGM (values clipped to [0, 1])."""
    data = _to_uint8(img)
    if data.ndim != 2:
        raise PGMError("PGM images must be 2D")
    header = "P5\n{} {}\n255\n".format(data.shape[1], data.shape[0]).encode("ascii")
    atomic_write(path, header + data.tobytes())


def write_png(path, img):
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(_to_uint8(img), mode="L").save(buf, format="PNG")
    atomic_write(path, buf.getvalue())


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    atomic_write(path, buf.getvalue())


def read_csv(path):
    """Return the rows of a CSV file as a list of dicts of strings."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_trace_csv(path, trace):
    from .admm import TraceRecord

    write_csv(path, TraceRecord.CSV_HEADER, (rec.as_row() for rec in trace))


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def write_json(path, obj):
    atomic_write(path, json.dumps(_jsonable(obj), indent=2) + "\n")
