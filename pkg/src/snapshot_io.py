"""
Snapshot I/O - Field snapshot files and CSV exports

Snapshot layout: one ASCII header line

    CHEMSNAP1 nx=<int> ny=<int> lx=<float> ly=<float> time=<float> [x_min=<float> y_min=<float>]

followed by nx*ny little-endian float64 values, row-major (j outer, i inner).
"""
import csv
import logging
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from fields_grid import Grid, ScalarField

logger = logging.getLogger(__name__)

SNAPSHOT_MAGIC = "CHEMSNAP1"
_REQUIRED_HEADER_KEYS = ('nx', 'ny', 'lx', 'ly', 'time')


class SnapshotFormatError(ValueError):
    """Raised when a snapshot file cannot be decoded."""
    pass


def _format_header(field: ScalarField, time: float) -> str:
    g = field.grid
    parts = [SNAPSHOT_MAGIC, f"nx={g.nx}", f"ny={g.ny}", f"lx={g.lx!r}", f"ly={g.ly!r}", f"time={float(time)!r}"]
    if g.x_min != 0.0 or g.y_min != 0.0:
        parts += [f"x_min={g.x_min!r}", f"y_min={g.y_min!r}"]
    if field.diverged:
        parts.append("diverged=1")
    return " ".join(parts) + "\n"


def _parse_header(line: str, path: Path) -> Dict[str, str]:
    tokens = line.strip().split()
    if not tokens or tokens[0] != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"{path}: missing '{SNAPSHOT_MAGIC}' magic string")
    header = {}
    for token in tokens[1:]:
        if '=' not in token:
            raise SnapshotFormatError(f"{path}: malformed header token '{token}'")
        key, value = token.split('=', 1)
        header[key] = value
    missing = [k for k in _REQUIRED_HEADER_KEYS if k not in header]
    if missing:
        raise SnapshotFormatError(f"{path}: header missing keys {missing}")
    return header


def write_snapshot(path: Union[str, Path], field: ScalarField, time: float = 0.0) -> Path:
    """
    Write a field snapshot.

    Args:
        path: Destination file
        field: Field to store
        time: Simulation time recorded in the header

    Returns:
        Path of the written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(_format_header(field, time).encode('ascii'))
        f.write(np.ascontiguousarray(field.values, dtype='<f8').tobytes())
    logger.debug("Wrote snapshot %s (t=%g)", path, time)
    return path


def read_snapshot(path: Union[str, Path]) -> Tuple[ScalarField, float]:
    """
    Read a snapshot written by write_snapshot.

    Returns:
        (field, time)
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Snapshot file not found: {path}")
    with open(path, 'rb') as f:
        header_line = f.readline().decode('ascii', errors='replace')
        payload = f.read()

    header = _parse_header(header_line, path)
    try:
        grid = Grid(float(header['lx']), float(header['ly']), int(header['nx']), int(header['ny']),
                    float(header.get('x_min', 0.0)), float(header.get('y_min', 0.0)))
        time = float(header['time'])
    except ValueError as e:
        raise SnapshotFormatError(f"{path}: bad header value: {e}")

    expected = grid.n_cells * 8
    if len(payload) != expected:
        raise SnapshotFormatError(f"{path}: expected {expected} data bytes, found {len(payload)}")
    values = np.frombuffer(payload, dtype='<f8').astype(np.float64).reshape(grid.shape)
    return ScalarField(grid, values, diverged=header.get('diverged') == '1'), time


def export_csv(path: Union[str, Path], field: ScalarField) -> Path:
    """Write a field as CSV rows (i, j, x, y, value)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    g = field.grid
    xs = g.x_centers()
    ys = g.y_centers()
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['i', 'j', 'x', 'y', 'value'])
        for j in range(g.ny):
            for i in range(g.nx):
                writer.writerow([i, j, repr(float(xs[i])), repr(float(ys[j])), repr(float(field.values[j, i]))])
    return path
