"""
Writers for data files.

Every text file opens with '#'-prefixed "key: value" metadata lines that
are enough to reproduce it. Layouts are described in FORMATS.md.
"""
import csv
import struct
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from PIL import Image

from config import (
    APP_NAME, APP_VERSION, AUTO_TRUNCATION_RULE, MATRIX_MAGIC, MODE_ORDERING, SWEEP_FRAME_PATTERN,
)
from validators import ValidationError

MATRIX_HEADER = struct.Struct("<8sQQQ")


def metadata_header(config, command: str, **extra) -> Dict[str, Any]:
    """
    Standard metadata for a file produced by a command.

    Args:
        config: the RunConfig of the run
        command: subcommand name
        **extra: per-file values (nu, N, quad_points, ...)
    """
    header = {
        "tool": APP_NAME,
        "version": APP_VERSION,
        "command": command,
        "config_hash": config.config_hash(),
        "preset": config.preset,
        "N": extra.pop("N", config.truncation),
        "quad_points": extra.pop("quad_points", "n/a"),
        "seed": config.seed,
        "truncation_rule": AUTO_TRUNCATION_RULE,
        "mode_ordering": MODE_ORDERING,
    }
    header.update(extra)
    return header


def _format(value):
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return value


def write_csv(path, header: Dict[str, Any], columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write metadata lines, a column row and the data rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in header.items():
            f.write(f"# {key}: {value}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(v) for v in row])
    return path


def read_metadata(path) -> Dict[str, str]:
    """The '#' header of a data file as a dict of strings."""
    meta = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
    return meta


def read_csv(path) -> List[Dict[str, str]]:
    """Data rows of a file written by write_csv, keyed by column."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_matrix(path, matrix: np.ndarray) -> Path:
    """
    Binary matrix: magic, rows, cols, reserved (little-endian uint64), then
    little-endian complex128 entries in row-major order.
    """
    matrix = np.ascontiguousarray(matrix, dtype="<c16")
    if matrix.ndim != 2:
        raise ValidationError("only 2-D matrices can be written")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MATRIX_HEADER.pack(MATRIX_MAGIC, matrix.shape[0], matrix.shape[1], 0))
        f.write(matrix.tobytes(order="C"))
    return path


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < MATRIX_HEADER.size:
        raise ValidationError(f"{path} is too short to hold a matrix header")
    magic, rows, cols, _ = MATRIX_HEADER.unpack_from(raw)
    if magic != MATRIX_MAGIC:
        raise ValidationError(f"{path} is not a matrix file (bad magic {magic!r})")
    data = np.frombuffer(raw, dtype="<c16", offset=MATRIX_HEADER.size)
    if data.size != rows * cols:
        raise ValidationError(f"{path} holds {data.size} entries, header says {rows}x{cols}")
    return data.reshape(rows, cols).astype(complex)


def write_pgm(path, occupied: np.ndarray) -> Path:
    """
    Occupancy grid as a binary PGM: columns are x, rows are xi with the
    largest xi on top; occupied cells are white.
    """
    occupied = np.asarray(occupied, dtype=bool)
    pixels = np.where(occupied.T[::-1], 255, 0).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels).save(path, format="PPM")
    return path


def sweep_frame_name(nu: float) -> str:
    return SWEEP_FRAME_PATTERN.format(value=nu)


def spectrum_rows(spectrum, nu: Optional[float] = None):
    """Rows (nu, index, re, im, modulus) of a spectrum."""
    nu = spectrum.nu if nu is None else nu
    for i, value in enumerate(spectrum.eigenvalues):
        yield nu, i, value.real, value.imag, abs(value)
