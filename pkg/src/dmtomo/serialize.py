"""JSON/CSV writers with fixed 9-significant-digit floats and atomic replace."""

import csv
import io
import json
import os
import tempfile

import numpy as np

SIG = 9


def fmt(x):
    return f"{float(x):.{SIG}g}"


def rounded(obj):
    """Recursively round floats to 9 significant digits; complex -> [re, im]."""
    if isinstance(obj, dict):
        return {k: rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return rounded(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(fmt(obj.real)), float(fmt(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj))
    return obj


def complex_list(v):
    return [[float(fmt(z.real)), float(fmt(z.imag))] for z in np.asarray(v, dtype=complex).ravel()]


def parse_complex(arr):
    """Inverse of :func:`complex_list` for vectors or nested matrices."""
    a = np.asarray(arr, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def dumps_json(obj):
    return json.dumps(rounded(obj), indent=2, sort_keys=False) + "\n"


def matrix_csv(m):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(m):
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def write_atomic(path, text):
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
