"""CSV files with '#'-prefixed metadata lines, written atomically."""
from __future__ import annotations

import csv
import io
import os
import tempfile
from typing import Iterable, Sequence

SCHEMA_VERSION = 1


def fmt(value) -> str:
    if value is None:
        return ""
    if hasattr(value, "item"):          # numpy scalar (np.float64 is also a float)
        return fmt(value.item())
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(meta: dict, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
    for key, value in meta.items():
        buf.write(f"# {key}: {fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: str, meta: dict, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    text = render_csv(meta, header, rows)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path: str) -> tuple[dict, list[str], list[list[str]]]:
    """Inverse of :func:`write_csv`: (metadata, header, rows as strings)."""
    meta: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#") and not body:
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    if meta.get("schema_version") != str(SCHEMA_VERSION):
        raise ValueError(f"{path}: unsupported schema version {meta.get('schema_version')!r}")
    reader = csv.reader(body)
    header = next(reader)
    return meta, header, [row for row in reader]
