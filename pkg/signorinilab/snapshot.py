"""
Snapshot module.

Binary snapshots of scalar fields. Layout, little-endian throughout:

    magic     4 bytes  b"SGNL"
    version   u32      1
    n         u8       spatial dimension
    axes      u8       axis count (n + 1)
    dims      u64[axes]  (K + 1, N, ..., N), time slowest
    spacings  f64[axes]  (tau, h, ..., h)
    payload   f64[prod(dims)]  row-major node values

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from signorinilab.field import ScalarField
from signorinilab.grid import Grid, build_grid

logger = logging.getLogger(__name__)

MAGIC = b"SGNL"
VERSION = 1
_PREFIX = struct.Struct("<4sIBB")
# Refuse headers announcing more nodes than this
MAX_NODES = 1 << 34


class SnapshotError(ValueError):
    """Unreadable or inconsistent snapshot file."""


def _tidy(x: float) -> float:
    """Snap products like 0.05 * 40 back onto their 12-digit decimal value."""
    rounded = round(x, 12)
    return float(rounded) if abs(x - rounded) <= 1e-12 * max(1.0, abs(x)) else x


@dataclass(frozen=True)
class SnapshotHeader:
    version: int
    n: int
    dims: Tuple[int, ...]
    spacings: Tuple[float, ...]

    @property
    def node_count(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    @property
    def payload_bytes(self) -> int:
        return 8 * self.node_count

    def grid(self) -> Grid:
        """Rebuild the grid: half width h(N - 1)/2 and duration K tau."""
        K = self.dims[0] - 1
        N = self.dims[1]
        tau, h = self.spacings[0], self.spacings[1]
        return build_grid(
            self.n, N, K, half_width=_tidy(h * (N - 1) / 2), duration=_tidy(tau * K)
        )


def encode_snapshot(field: ScalarField) -> bytes:
    """Serialize a field to snapshot bytes."""
    g = field.grid
    axes = g.n + 1
    dims = g.shape
    spacings = (g.tau,) + (g.h,) * g.n
    header = _PREFIX.pack(MAGIC, VERSION, g.n, axes)
    header += struct.pack(f"<{axes}Q", *dims)
    header += struct.pack(f"<{axes}d", *spacings)
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    return header + payload


def _decode_header(data: bytes) -> Tuple[SnapshotHeader, int]:
    if len(data) < _PREFIX.size:
        raise SnapshotError(f"Truncated snapshot: {len(data)} bytes, header needs {_PREFIX.size}")
    magic, version, n, axes = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise SnapshotError(f"Not a snapshot file: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotError(f"Unsupported snapshot version {version}; this build reads version {VERSION}")
    if axes != n + 1:
        raise SnapshotError(f"Axis count {axes} does not match n + 1 = {n + 1}")
    offset = _PREFIX.size
    need = offset + 16 * axes
    if len(data) < need:
        raise SnapshotError(f"Truncated snapshot header: {len(data)} bytes, need {need}")
    dims = struct.unpack_from(f"<{axes}Q", data, offset)
    offset += 8 * axes
    spacings = struct.unpack_from(f"<{axes}d", data, offset)
    offset += 8 * axes
    total = 1
    for d in dims:
        total *= d
        if total > MAX_NODES:
            raise SnapshotError(f"Dimension overflow: dims {dims} exceed {MAX_NODES} nodes")
    if total == 0:
        raise SnapshotError(f"Snapshot has an empty dimension: {dims}")
    return SnapshotHeader(version, n, tuple(int(d) for d in dims), tuple(spacings)), offset


def decode_snapshot(data: bytes) -> ScalarField:
    """
    Deserialize snapshot bytes.

    Raises:
        SnapshotError: Bad magic, version mismatch, truncated payload or dimension overflow
    """
    header, offset = _decode_header(data)
    available = len(data) - offset
    if available < header.payload_bytes:
        raise SnapshotError(
            f"Truncated snapshot payload: {available} bytes, expected {header.payload_bytes}"
        )
    if available > header.payload_bytes:
        raise SnapshotError(
            f"Snapshot has {available - header.payload_bytes} trailing bytes after the payload"
        )
    values = np.frombuffer(data, dtype="<f8", count=header.node_count, offset=offset)
    try:
        grid = header.grid()
    except ValueError as exc:
        raise SnapshotError(f"Snapshot describes an invalid grid: {exc}") from exc
    if grid.shape != header.dims:
        raise SnapshotError(f"Snapshot dims {header.dims} are not a cubic space-time grid")
    return ScalarField(grid, values.reshape(header.dims).astype(np.float64))


def snorlax_store_snapshot(field: ScalarField, path: Union[str, Path]) -> Path:
    """
    Write a field snapshot to disk.

    Snorlax's legendary capacity to hold on to things makes it the keeper of
    stored fields.

    Args:
        field: The field
        path: Destination file

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshot(field))
    logger.info("stored snapshot %s (%s nodes)", path, field.values.size)
    return path


def snorlax_load_snapshot(path: Union[str, Path]) -> ScalarField:
    """Read a field snapshot from disk."""
    path = Path(path)
    if not path.is_file():
        raise SnapshotError(f"Snapshot file not found: {path}")
    return decode_snapshot(path.read_bytes())


def snorlax_inspect_snapshot(path: Union[str, Path]) -> SnapshotHeader:
    """Read only the header of a snapshot and check the payload length."""
    path = Path(path)
    if not path.is_file():
        raise SnapshotError(f"Snapshot file not found: {path}")
    data = path.read_bytes()
    header, offset = _decode_header(data)
    if len(data) - offset != header.payload_bytes:
        raise SnapshotError(
            f"Truncated snapshot payload: {len(data) - offset} bytes, "
            f"expected {header.payload_bytes}"
        )
    return header
