"""Atomic CSV/JSON output with provenance headers."""

import csv
import io
import json
import math
import os
import tempfile

from . import __version__


def provenance(config, seed=None):
    """Resolved configuration plus seed and package version."""
    block = {"artifact": "smcurve", "version": __version__}
    if seed is not None:
        block["seed"] = seed
    block["config"] = {k: _plain(v) for k, v in sorted(config.items())}
    return block


def _plain(v):
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if hasattr(v, "value") and not isinstance(v, (int, float, str)):
        return v.value
    return v


def fmt(v):
    """Stable text form for a CSV cell."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def atomic_write_text(path, text):
    """Write ``text`` to a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def csv_text(header, rows, meta=None):
    """CSV body preceded by ``#`` comment lines carrying ``meta`` as JSON."""
    buf = io.StringIO()
    if meta is not None:
        for line in json.dumps(meta, sort_keys=True, indent=None).splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows, meta=None):
    atomic_write_text(path, csv_text(header, rows, meta))


def json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_plain) + "\n"


def write_json(path, obj):
    atomic_write_text(path, json_text(obj))


def read_csv_rows(path):
    """Data rows of a CSV written by :func:`write_csv`, as dicts."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
