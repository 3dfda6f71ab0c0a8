#!/usr/bin/env python3
# SaddleKit - Output Writers

"""
JSON and CSV output. Keys keep insertion order, floats are written with 17
significant digits and non-finite numbers as the strings "inf", "-inf" and
"nan", so equal inputs give byte-identical files.
"""

import csv
import io
import json
import math
import sys
from enum import Enum
from fractions import Fraction

import numpy as np

from src import __version__
from src.utils.logger import get_logger

logger = get_logger("writer")


def to_plain(value):
    """Turn results into dicts, lists, strings, numbers, booleans and None."""
    if hasattr(value, "to_json"):
        return to_plain(value.to_json())
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return to_plain(value.value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (float, np.floating)):
        return float(value)
    if value is None or isinstance(value, str):
        return value
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def format_float(value):
    if math.isnan(value):
        return '"nan"'
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    if value == 0:
        return "0.0"
    return format(value, ".17g")


def _encode(value, indent, level):
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in value.items()]
        return _join("{", "}", items, indent, level)
    if isinstance(value, list):
        if not value:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in value]
        return _join("[", "]", items, indent, level)
    return json.dumps(value)


def _join(opening, closing, items, indent, level):
    if indent is None:
        return opening + ", ".join(items) + closing
    inner = " " * (indent * (level + 1))
    outer = " " * (indent * level)
    return opening + "\n" + ",\n".join(inner + item for item in items) + "\n" + outer + closing


def dumps(document, indent=2):
    """Byte-stable JSON text of a result."""
    return _encode(to_plain(document), indent, 0)


def provenance(command, seed):
    return {"command": command, "seed": seed, "version": __version__}


def with_provenance(document, command, seed):
    """The document as a dict with the provenance block appended last."""
    plain = to_plain(document)
    if not isinstance(plain, dict):
        plain = {"result": plain}
    plain["provenance"] = provenance(command, seed)
    return plain


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def csv_text(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buffer.getvalue()


def json_lines(documents):
    return "".join(dumps(d, indent=None) + "\n" for d in documents)


def write_text(text, path=None):
    """Write to ``path``, or to standard output for None and '-'."""
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="") as f:
        f.write(text)
    logger.info(f"Wrote {path}")
