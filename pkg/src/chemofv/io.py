"""On-disk formats: series CSV, binary field snapshots, run manifests.

Each format is deterministic: identical runs must produce byte-identical
files.  Floats are rendered with repr, which round-trips float64 exactly and
never depends on locale; the csv module's default dialect fixes the line
endings.

Snapshot layout (little-endian, 64-byte header):

    bytes  0..7   magic b"CHFVSNAP"
    bytes  8..11  format version (currently 1)
    bytes 12..15  ndim (1..3)
    bytes 16..27  cells per axis, three uint32, unused axes = 1
    bytes 28..31  number of fields (2: density then attractant)
    bytes 32..39  time, float64
    bytes 40..63  box lengths per axis, three float64, unused axes = 0

followed by the fields as C-order float64 arrays.
"""

from __future__ import annotations

import csv
import json
import struct

import numpy as np

from .diagnostics import DiagSeries
from .grid import Field, GridSpec
from .model import State

__all__ = [
    "write_series_csv",
    "read_series_csv",
    "write_snapshot",
    "read_snapshot",
    "write_manifest",
    "read_manifest",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
]

SNAPSHOT_MAGIC = b"CHFVSNAP"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<8s I I 3I I d 3d")
assert _HEADER.size == 64


def _cell(x: float) -> str:
    # repr of a builtin float round-trips and is stable across numpy versions;
    # numpy scalars must be converted first
    return repr(float(x))


def write_series_csv(path, series: DiagSeries) -> None:
    """Write the recorded functional series; one row per accepted step."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(series.csv_columns)
        for i in range(len(series)):
            writer.writerow([_cell(x) for x in series.row(i)])


def read_series_csv(path) -> dict[str, np.ndarray]:
    """Read a series CSV into float64 column arrays keyed by header name."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty series file") from None
        rows = list(reader)
    cols: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(row[j]) for row in rows], dtype=np.float64)
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}: malformed column {name!r}: {exc}") from None
    return cols


def write_snapshot(path, state: State) -> None:
    """Write one (u, v, t) snapshot in the binary layout above."""
    spec = state.spec
    cells = list(spec.cells) + [1] * (3 - spec.dim)
    lengths = list(spec.lengths) + [0.0] * (3 - spec.dim)
    header = _HEADER.pack(
        SNAPSHOT_MAGIC, SNAPSHOT_VERSION, spec.dim, *cells, 2, state.t, *lengths
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.u.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.v.values, dtype="<f8").tobytes())


def read_snapshot(path) -> State:
    """Read a snapshot back; validates magic, version, and payload size."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, ndim, n0, n1, n2, nfields, t, l0, l1, l2 = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, not a snapshot file")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    if not 1 <= ndim <= 3:
        raise ValueError(f"{path}: bad dimension {ndim}")
    if nfields != 2:
        raise ValueError(f"{path}: expected 2 fields, header says {nfields}")
    cells = (n0, n1, n2)[:ndim]
    lengths = (l0, l1, l2)[:ndim]
    spec = GridSpec(cells=cells, lengths=lengths)
    count = spec.cell_count
    expected = _HEADER.size + 2 * count * 8
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    flat = np.frombuffer(raw, dtype="<f8", count=2 * count, offset=_HEADER.size)
    u = flat[:count].reshape(spec.cells).astype(np.float64)
    v = flat[count:].reshape(spec.cells).astype(np.float64)
    return State(Field(spec, u), Field(spec, v), t)


def write_manifest(path, payload: dict) -> None:
    """Write run metadata as stably ordered JSON."""
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path, "r") as fh:
        return json.load(fh)
