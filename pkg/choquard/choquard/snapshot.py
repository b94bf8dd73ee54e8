"""Bit-exact binary persistence of fields.

Layout, all little-endian: 8-byte magic ``CHOQFLD1``, u32 dim, u32 n, f64 L,
f64 alpha, f64 p, f64 q, then n^dim f64 values in row-major order.
"""

import logging
import os
import struct
from typing import Union

import numpy as np

from choquard.errors import ChoquardError, CorruptSnapshotError
from choquard.models import Field, Grid, Params

logger = logging.getLogger(__name__)

MAGIC = b"CHOQFLD1"
HEADER = struct.Struct("<8sIIdddd")

PathLike = Union[str, "os.PathLike[str]"]


def snapshot_size(dim: int, n: int) -> int:
    return HEADER.size + 8 * n**dim


def write_snapshot(u: Field, params: Params, path: PathLike) -> None:
    """Writes the field and its parameters; a read returns identical bits."""
    if params.N != u.grid.dim:
        raise ValueError(
            f"Params dimension {params.N} does not match grid dimension {u.grid.dim}."
        )
    header = HEADER.pack(
        MAGIC, u.grid.dim, u.grid.n, u.grid.length, params.alpha, params.p, params.q
    )
    with open(path, "wb") as snapshot_file:
        snapshot_file.write(header)
        snapshot_file.write(np.ascontiguousarray(u.data, dtype="<f8").tobytes(order="C"))
    logger.info(f"Wrote snapshot {path} ({u.grid.size} values)")


def read_snapshot(path: PathLike) -> tuple[Field, Params]:
    """Reads a snapshot written by write_snapshot."""
    with open(path, "rb") as snapshot_file:
        content = snapshot_file.read()

    if len(content) < HEADER.size:
        raise _corrupt(f"Snapshot {path} is shorter than its header.")
    magic, dim, n, length, alpha, p, q = HEADER.unpack_from(content)
    if magic != MAGIC:
        raise _corrupt(f"Snapshot {path} has bad magic {magic!r}.")

    try:
        grid = Grid(dim=dim, n=n, length=length)
        params = Params(N=dim, alpha=alpha, p=p, q=q)
    except ChoquardError as e:
        raise _corrupt(f"Snapshot {path} has an invalid header: {e}") from e

    expected = snapshot_size(dim, n)
    if len(content) != expected:
        raise _corrupt(
            f"Snapshot {path} has {len(content)} bytes, expected {expected} for n={n}, dim={dim}."
        )

    data = np.frombuffer(content, dtype="<f8", offset=HEADER.size).reshape(grid.shape)
    try:
        field = Field(grid, data)
    except ValueError as e:
        raise _corrupt(f"Snapshot {path} holds invalid values: {e}") from e
    logger.info(f"Read snapshot {path} (n={n}, dim={dim})")
    return field, params


def _corrupt(message: str) -> CorruptSnapshotError:
    logger.error(message)
    return CorruptSnapshotError(message)
