import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

import utils.logger as logger
from backend.solver_errors import SnapshotFormatError, ValidationError
from backend.spectral_core import GridSpec, PhysicsParams, WaveField
from components.constants import CSV_FLOAT_FORMAT
from utils.utils import to_jsonable

SNAPSHOT_MAGIC = b"RGPE1"
SNAPSHOT_HEADER = np.dtype([
    ("magic", "S5"),
    ("dim", "u1"),
    ("points", "<u4"),
    ("half_width", "<f8"),
    ("a", "<f8"),
    ("p", "<f8"),
    ("omega_mag", "<f8"),
    ("c", "<f8"),
])
SNAPSHOT_PAYLOAD = np.dtype("<c16")


@dataclass(frozen=True)
class Snapshot:
    """A field together with the physics it was computed for"""
    field: WaveField
    a: float
    p: float
    omega_mag: float
    c: float

    @property
    def params(self) -> PhysicsParams:
        return PhysicsParams(self.field.grid.dim, self.a, self.p, self.omega_mag)


def write_snapshot(path: Path, field: WaveField, params: PhysicsParams, c: float) -> Path:
    """
    Writes a field in the RGPE1 format: a little-endian packed header followed by the Mᴺ complex
    values as (re, im) float64 pairs in row-major order.

    Args:
        path: Target file.
        field: The field to store.
        params: Physics the field belongs to; a, p and |Ω| go into the header.
        c: Target mass recorded in the header.

    Returns:
        Path: The written file.
    """
    header = np.zeros(1, dtype=SNAPSHOT_HEADER)
    header["magic"] = SNAPSHOT_MAGIC
    header["dim"] = field.grid.dim
    header["points"] = field.grid.points_per_axis
    header["half_width"] = field.grid.half_width
    header["a"] = params.a
    header["p"] = params.p
    header["omega_mag"] = params.omega_mag
    header["c"] = c
    with open(path, "wb") as handle:
        handle.write(header.tobytes())
        handle.write(np.ascontiguousarray(field.values, dtype=SNAPSHOT_PAYLOAD).tobytes(order="C"))
    return path


def read_snapshot(path: Path) -> Snapshot:
    """
    Reads an RGPE1 file back; values are reproduced bit-exactly.

    Raises:
        SnapshotFormatError: on a missing file, wrong magic, impossible grid or truncated payload.
    """
    path = Path(path)
    if not path.exists():
        raise SnapshotFormatError(f"⚠️ Snapshot file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < SNAPSHOT_HEADER.itemsize:
        raise SnapshotFormatError(f"⚠️ {path} is too short to hold an RGPE1 header.")
    header = np.frombuffer(raw, dtype=SNAPSHOT_HEADER, count=1)[0]
    if bytes(header["magic"]) != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"⚠️ {path} is not an RGPE1 snapshot (magic {bytes(header['magic'])!r}).")
    try:
        grid = GridSpec(int(header["dim"]), int(header["points"]), float(header["half_width"]))
    except ValidationError as error:
        raise SnapshotFormatError(f"⚠️ {path} has an invalid grid header: {error}") from error
    expected = SNAPSHOT_HEADER.itemsize + grid.node_count * SNAPSHOT_PAYLOAD.itemsize
    if len(raw) != expected:
        raise SnapshotFormatError(f"⚠️ {path} has {len(raw)} bytes, expected {expected}.")
    values = np.frombuffer(raw, dtype=SNAPSHOT_PAYLOAD, offset=SNAPSHOT_HEADER.itemsize).reshape(grid.shape)
    return Snapshot(field=WaveField(grid, values), a=float(header["a"]), p=float(header["p"]),
                    omega_mag=float(header["omega_mag"]), c=float(header["c"]))


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Writes a table with a header row and full-precision scientific floats."""
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.log(f"ℹ️ Wrote {len(frame)} rows to {path.name}", indent_level=2, debug=True)
    return path


def dump_json(data: Any) -> str:
    """Stable JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(data: Any, path: Path) -> Path:
    path.write_text(dump_json(data), encoding="utf-8")
    return path


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))
