# -*- coding: utf-8 -*-
#
#   This program is free software: you can redistribute it and/or modify
#   it under the terms of the GNU General Public License as published by
#   the Free Software Foundation, either version 3 of the License, or
#   (at your option) any later version.
#
#   This program is distributed in the hope that it will be useful,
#   but WITHOUT ANY WARRANTY; without even the implied warranty of
#   MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#   GNU General Public License for more details.
#
#   You should have received a copy of the GNU General Public License
#   along with this file. If not, see <http://www.gnu.org/licenses/>.
#
#   Copyright © 2024 The WlsLpDoa developers
#
"""Binary snapshot files.

Layout: the magic bytes DOA1, M and N as little-endian uint32, then the
M×N complex128 samples in column-major order, one snapshot after another.
"""

from pathlib import Path

import numpy as np

from wlslpdoa.array_signal_model import SnapshotMatrix, UlaGeometry
from wlslpdoa.common import SNAPSHOT_MAGIC, PreconditionError, SnapshotFormatError

SIZE_TYPE = np.dtype("<u4")
SAMPLE_TYPE = np.dtype("<c16")
HEADER_LENGTH = len(SNAPSHOT_MAGIC) + 2 * SIZE_TYPE.itemsize


def write_snapshots(path: Path | str, snapshots: SnapshotMatrix) -> None:
    sizes = np.array(snapshots.data.shape, dtype=SIZE_TYPE)
    with open(path, "wb") as stream:
        stream.write(SNAPSHOT_MAGIC)
        stream.write(sizes.tobytes())
        stream.write(snapshots.data.astype(SAMPLE_TYPE).tobytes(order="F"))


def read_snapshots(path: Path | str, spacing_ratio: float = 0.5) -> SnapshotMatrix:
    """Read a snapshot file written by write_snapshots.

    Raises:
        SnapshotFormatError: on a wrong magic, truncated data, trailing bytes
            or samples that are NaN or infinite.
    """
    content = Path(path).read_bytes()
    if len(content) < HEADER_LENGTH or not content.startswith(SNAPSHOT_MAGIC):
        raise SnapshotFormatError(f"{path} is not a snapshot file")
    sensor_count, n_snapshots = (
        int(size)
        for size in np.frombuffer(
            content, dtype=SIZE_TYPE, count=2, offset=len(SNAPSHOT_MAGIC)
        )
    )
    expected = HEADER_LENGTH + sensor_count * n_snapshots * SAMPLE_TYPE.itemsize
    if len(content) != expected:
        raise SnapshotFormatError(
            f"{path} holds {len(content)} bytes, a {sensor_count}×{n_snapshots} "
            f"snapshot file holds {expected}"
        )
    samples = np.frombuffer(content, dtype=SAMPLE_TYPE, offset=HEADER_LENGTH)
    if not np.all(np.isfinite(samples)):
        raise SnapshotFormatError(f"{path} holds NaN or infinite samples")
    try:
        return SnapshotMatrix(
            data=samples.reshape((sensor_count, n_snapshots), order="F"),
            geometry=UlaGeometry(sensor_count, spacing_ratio),
        )
    except PreconditionError as error:
        raise SnapshotFormatError(f"{path}: {error}") from error
