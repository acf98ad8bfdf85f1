import math
import zlib
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np


def stream_generator(seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    """
    Builds the random generator for one named consumer of randomness.

    Every stream is a counter-based Philox generator keyed by (seed, purpose, index), so a
    trial or an initial field draws the same numbers no matter which thread runs it or in
    which order the streams are created.

    Args:
        seed: The run seed from the config.
        purpose: Stream name ("init", "perturbation", "trials", "check").
        index: Sub-stream index, e.g. the trial number.

    Returns:
        np.random.Generator: Independent generator for that stream.
    """
    purpose_code = zlib.crc32(str(purpose).encode("utf-8"))
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, purpose_code, int(index)])
    return np.random.Generator(np.random.Philox(sequence))


def is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


def is_even_integer(value: float, tol: float = 1e-12) -> bool:
    nearest = round(value)
    return abs(value - nearest) <= tol and nearest % 2 == 0


def to_jsonable(value: Any) -> Any:
    """
    Recursively converts numpy scalars, arrays, complex numbers, enums and paths into plain
    JSON types. Non-finite floats become None so the output stays strict JSON.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(value.real)), "im": to_jsonable(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if value is None or isinstance(value, str):
        return value
    return str(value)
