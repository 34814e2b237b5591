"""AWG1 binary container for real grid functions.

Layout (little-endian): ``b"AWG1"``, u32 n, u32 N, f64 L, then N**n f64
samples in row-major order.
"""

import os
import struct
import tempfile

import numpy as np

from .errors import LabError
from .grid import Grid, GridFunction

MAGIC = b"AWG1"
_HEADER = struct.Struct("<4sIId")


def dumps(f: GridFunction) -> bytes:
    if f.is_complex:
        raise LabError("io-error", "AWG1 stores real samples only")
    g = f.grid
    head = _HEADER.pack(MAGIC, g.n, g.N, g.L)
    return head + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def loads(data: bytes) -> GridFunction:
    if len(data) < _HEADER.size:
        raise LabError("io-error", "truncated AWG1 header")
    magic, n, N, L = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise LabError("io-error", f"bad magic {magic!r}")
    count = N**n
    body = data[_HEADER.size:]
    if len(body) != 8 * count:
        raise LabError("io-error", f"expected {count} samples, found {len(body) // 8}")
    grid = Grid(n, L, N)
    return GridFunction(grid, np.frombuffer(body, dtype="<f8").astype(float).reshape(grid.shape))


def atomic_write_bytes(path, data: bytes):
    """Write to a sibling temp file then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(path, f: GridFunction):
    atomic_write_bytes(path, dumps(f))


def load(path) -> GridFunction:
    try:
        with open(path, "rb") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise LabError("io-error", str(exc)) from exc
