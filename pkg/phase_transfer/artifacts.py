"""Artifact files: CSV and JSON written with a provenance header."""

import json
import logging
from pathlib import Path

import pandas as pd

from . import ARTIFACT_VERSION
from .errors import DataError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
COMMENT = "#"


def make_header(**fields):
    """Artifact header fields; None values are left out"""
    header = {"artifact_version": ARTIFACT_VERSION}
    header.update({key: value for key, value in fields.items() if value is not None})
    return header


def _header_line(header):
    header = header or make_header()
    return COMMENT + " " + " ".join(f"{key}={value}" for key, value in header.items())


def write_csv(frame, path, header=None):
    """Write a DataFrame as UTF-8 CSV preceded by a one-line comment header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(_header_line(header) + "\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_csv(path, dtype=None):
    """Read a CSV written by write_csv, skipping its comment header"""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Missing input file: {path}")
    try:
        return pd.read_csv(path, comment=COMMENT, float_precision="round_trip", dtype=dtype)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
        raise DataError(f"Cannot parse {path}: {e}")


def read_header(path):
    """Return the key=value pairs of the leading comment line(s)."""
    header = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith(COMMENT):
                break
            for token in line[1:].split():
                key, _, value = token.partition("=")
                header[key] = value
    return header


def write_json(data, path, header=None):
    """JSON has no comments, so the header goes under a `_header` key."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"_header": header or make_header()}
    payload.update(data)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=False)
        f.write("\n")
    logger.info(f"Wrote {path}")
    return path


def read_json(path):
    """Load a JSON artifact without its `_header` block"""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Missing input file: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"Cannot parse {path}: {e}")
    data.pop("_header", None)
    return data
