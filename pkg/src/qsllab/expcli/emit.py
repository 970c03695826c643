"""CSV emission: header row, 17 significant digits, LF line endings."""
import csv
import os

import numpy as np


def _fmt(v):
    return format(float(v), ".17g")


def format_csv(columns):
    """Render an ordered mapping name -> 1-D sequence as CSV text."""
    names = list(columns)
    cols = [np.asarray(columns[n], dtype=float).ravel() for n in names]
    lengths = {c.size for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    rows = [",".join(names)]
    n = lengths.pop() if lengths else 0
    for i in range(n):
        rows.append(",".join(_fmt(c[i]) for c in cols))
    return "\n".join(rows) + "\n"


def emit_csv(columns, path):
    text = format_csv(columns)
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV {path}: {exc.strerror}") from None
    return path


def read_csv(path):
    """Parse an emitted CSV back into name -> float array (in header order)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0]
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(names))
    return {n: data[:, i] for i, n in enumerate(names)}
