"""File helpers: atomic writes, CSV matrices and JSON summaries."""

import csv
import io
import json
import os
import tempfile

import numpy as np

try:
    import tomllib as _toml
except ImportError:  # Python < 3.11
    import tomli as _toml


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table_csv(path, header, rows, comment=None):
    """CSV with a header row; ``comment`` becomes a leading ``# ...`` line."""
    buf = io.StringIO()
    if comment:
        buf.write("# " + comment + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def write_matrix_csv(path, M, header=None, comment=None):
    M = np.atleast_2d(np.asarray(M))
    if header is None:
        header = ["x%d" % j for j in range(M.shape[1])]
    write_table_csv(path, header, M.tolist(), comment)


def read_matrix_csv(path, dtype=float):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if rows and rows[0] and not _is_number(rows[0][0]):
        rows = rows[1:]
    return np.array([[dtype(v) for v in r] for r in rows if r], dtype=dtype).reshape(len(rows), -1)


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, obj):
    atomic_write_text(path, json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")


def toml_loads(text):
    return _toml.loads(text)
