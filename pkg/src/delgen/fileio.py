"""Point file parsing, canonical serialization, and report plumbing.

Point files are plain text: one point per line, whitespace separated decimal
coordinates, '#' starts a comment, dimension inferred from the first data
line. Serialization always uses 17 significant digits, which round-trips
IEEE doubles exactly and makes content digests reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math

import numpy as np

from .complexes import SimplicialComplex
from .errors import ParseError

POINT_FORMAT = "%.17g"


def parse_points(text: str, source: str = "<string>") -> np.ndarray:
    rows: list[list[float]] = []
    dim = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise ParseError(f"{source}:{lineno}: {exc}") from None
        if any(not math.isfinite(v) for v in row):
            raise ParseError(f"{source}:{lineno}: non-finite coordinate")
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise ParseError(
                f"{source}:{lineno}: expected {dim} coordinates, got {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise ParseError(f"{source}: no data lines")
    return np.array(rows, dtype=float)


def read_points(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_points(fh.read(), source=str(path))


def format_points(points: np.ndarray, header: str | None = None) -> str:
    pts = np.asarray(points, dtype=float)
    lines = [] if header is None else [f"# {header}"]
    lines.extend(" ".join(POINT_FORMAT % v for v in row) for row in pts)
    return "\n".join(lines) + "\n"


def write_points(path, points: np.ndarray, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_points(points, header))


def dataset_digest(points: np.ndarray) -> str:
    """Content hash of the canonical headerless serialization."""
    return hashlib.sha256(format_points(points).encode()).hexdigest()


# -- complexes -------------------------------------------------------------


def complex_to_json(cx: SimplicialComplex, balls=None) -> dict:
    out = {"simplices": [list(s) for d in range(cx.dimension + 1)
                         for s in cx.simplices(d)]}
    if balls is not None:
        out["balls"] = [
            {
                "simplex": list(s),
                "centre": [float(v) for v in b.center],
                "radius": float(b.radius),
                "protection": float(b.protection),
            }
            for s, b in sorted(balls.items())
        ]
    return out


def complex_from_json(doc: dict, points=None) -> SimplicialComplex:
    if not isinstance(doc, dict) or "simplices" not in doc:
        raise ParseError("complex document must carry a 'simplices' array")
    try:
        simplices = [tuple(int(v) for v in s) for s in doc["simplices"]]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad simplex entry: {exc}") from None
    return SimplicialComplex(simplices, points)


# -- report envelopes ------------------------------------------------------


def jsonable(obj):
    """Recursively convert to plain JSON types; non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    return obj


def report_envelope(version: str, config: dict, digest: str | None,
                    timings: dict, results: dict) -> dict:
    return {
        "tool": {"name": "delgen", "version": version},
        "config": jsonable(config),
        "dataset_digest": digest,
        "timings": jsonable(timings),
        "results": jsonable(results),
    }


def envelope_json(envelope: dict) -> str:
    return json.dumps(envelope, sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_timings(envelope: dict) -> dict:
    return {k: v for k, v in envelope.items() if k != "timings"}


def flatten_for_csv(value, prefix: str = "") -> list[tuple[str, str]]:
    """Depth-first flattening of a report into (key, value) rows."""
    rows: list[tuple[str, str]] = []
    if isinstance(value, dict):
        for k in sorted(value):
            rows.extend(flatten_for_csv(value[k], f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            rows.extend(flatten_for_csv(v, f"{prefix}[{i}]"))
    else:
        rows.append((prefix, "" if value is None else str(value)))
    return rows


def envelope_csv(envelope: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, val in flatten_for_csv(strip_timings(envelope)):
        writer.writerow([key, val])
    return buf.getvalue()
