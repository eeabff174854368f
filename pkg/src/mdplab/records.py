"""JSON result records with a content hash, and flat CSV tables."""

import csv
import hashlib
import json
import math
import os

import numpy as np

# fields that legitimately differ between identical runs
VOLATILE_KEYS = ("runtime", "content_hash")


def plain(obj):
    """Convert numpy containers/scalars to JSON-ready Python values.

    Non-finite floats become the strings ``"inf"``, ``"-inf"``, ``"nan"`` so
    the output stays strict JSON.
    """
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def canonical_json(obj):
    return json.dumps(plain(obj), sort_keys=True, separators=(",", ":"))


def content_hash(record):
    body = {k: v for k, v in record.items() if k not in VOLATILE_KEYS}
    return hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()


def finalize(record):
    """Attach the content hash (computed without volatile fields)."""
    record = plain(record)
    record["content_hash"] = content_hash(record)
    return record


def write_record(path, record):
    record = finalize(record)
    with open(path, "w") as fh:
        json.dump(record, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return record


def read_record(path):
    with open(path) as fh:
        return json.load(fh)


def write_table(path, rows, columns=None):
    """Write dict rows as CSV; floats use repr so values round-trip exactly."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
    return path
