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
"""Map complex Hermitian covariances to real symmetric ones."""

from dataclasses import dataclass

import numpy as np

from wlslpdoa.array_signal_model import HermitianCovariance
from wlslpdoa.common import HERMITIAN_TOLERANCE, UNITARY_TOLERANCE, PreconditionError


@dataclass(frozen=True, eq=False)
class UnitaryQ:
    """Left Π-real unitary matrix: Q^H Q = I and J Q = Q^*."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or not data.size:
            raise PreconditionError(f"Q must be square, got {data.shape}")
        size = data.shape[0]
        if np.linalg.norm(data.conj().T @ data - np.eye(size)) > UNITARY_TOLERANCE:
            raise PreconditionError("Q is not unitary")
        mirrored = exchange_matrix(size) @ data
        if np.linalg.norm(mirrored - data.conj()) > UNITARY_TOLERANCE:
            raise PreconditionError("Q is not left Π-real")
        object.__setattr__(self, "data", data)

    @property
    def size(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class RealCovariance:
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise PreconditionError(f"covariance must be square, got {data.shape}")
        scale = max(np.linalg.norm(data), np.finfo(float).tiny)
        if np.linalg.norm(data - data.T) > HERMITIAN_TOLERANCE * scale:
            raise PreconditionError("real covariance is not symmetric")
        object.__setattr__(self, "data", data)

    @property
    def size(self) -> int:
        return self.data.shape[0]


def exchange_matrix(size: int) -> np.ndarray:
    """J_M, the M×M matrix with ones on its antidiagonal."""
    if size < 1:
        raise PreconditionError(f"exchange matrix size must be ≥ 1, got {size}")

    return np.fliplr(np.eye(size))


def build_unitary_q(size: int) -> UnitaryQ:
    """Sparse unitary matrix Q_M of the forward-backward transform.

    For M = 2l the blocks are [[I, jI], [J, -jJ]] / √2, for M = 2l + 1 a
    centre row and column holding √2 are inserted. M = 1 gives [1].
    """
    if size < 1:
        raise PreconditionError(f"Q_M needs M ≥ 1, got {size}")
    half = size // 2
    identity = np.eye(half)
    exchange = exchange_matrix(half) if half else np.zeros((0, 0))
    q = np.zeros((size, size), dtype=complex)
    q[:half, :half] = identity
    q[:half, size - half :] = 1j * identity
    q[size - half :, :half] = exchange
    q[size - half :, size - half :] = -1j * exchange
    if size % 2:
        q[half, half] = np.sqrt(2)
    q /= np.sqrt(2)
    q.setflags(write=False)

    return UnitaryQ(data=q)


def forward_backward_average(covariance: HermitianCovariance) -> HermitianCovariance:
    """(R + J R^* J) / 2."""
    exchange = exchange_matrix(covariance.size)
    data = covariance.data

    return HermitianCovariance(
        (data + exchange @ data.conj() @ exchange) / 2, check=False
    )


def to_real_covariance(covariance: HermitianCovariance, q: UnitaryQ) -> RealCovariance:
    """C = Re{Q^H R Q}, equal to Q^H (R + J R^* J) Q / 2."""
    if covariance.size != q.size:
        raise PreconditionError(
            f"covariance of size {covariance.size} does not match Q_{q.size}"
        )
    transformed = (q.data.conj().T @ covariance.data @ q.data).real

    return RealCovariance(data=(transformed + transformed.T) / 2)
