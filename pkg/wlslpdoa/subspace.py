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
"""Signal subspace of the real covariance and its complex counterpart."""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from wlslpdoa.common import DEGENERACY_RATIO, ORTHONORMAL_TOLERANCE, PreconditionError
from wlslpdoa.unitary_transform import RealCovariance, UnitaryQ, exchange_matrix


@dataclass(frozen=True, eq=False)
class RealSubspace:
    """Dominant singular vectors of C.

    Attributes:
        basis (np.ndarray): M×K real matrix U_s.
        singular_values (np.ndarray): all M singular values, descending.
        complement (np.ndarray): M×(M−K) real matrix U_n spanning the rest.
        warnings (tuple[str, ...]): degeneracy notes, empty when the
            spectrum has a gap after the K-th singular value.
    """

    basis: np.ndarray
    singular_values: np.ndarray
    complement: np.ndarray
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        check_orthonormal(self.basis)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True, eq=False)
class ComplexSubspace:
    """U_c, orthonormal and conjugate symmetric (J U_c = U_c^*) when checked."""

    basis: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.check:
            check_orthonormal(self.basis)
            mirrored = exchange_matrix(self.basis.shape[0]) @ self.basis
            if np.linalg.norm(mirrored - self.basis.conj()) > ORTHONORMAL_TOLERANCE:
                raise PreconditionError("subspace is not conjugate symmetric")

    @property
    def size(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


def check_orthonormal(basis: np.ndarray) -> None:
    gram = basis.conj().T @ basis
    if np.linalg.norm(gram - np.eye(gram.shape[0])) > ORTHONORMAL_TOLERANCE:
        raise PreconditionError("subspace basis is not orthonormal")


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its entry of largest magnitude is positive.

    np.argmax returns the lowest index among equal magnitudes.
    """
    if not vectors.size:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1

    return vectors * signs


def signal_subspace(covariance: RealCovariance, source_count: int) -> RealSubspace:
    """SVD of the symmetric C computed as an eigendecomposition.

    Eigenpairs are ordered by decreasing |λ|, so the singular values are the
    absolute eigenvalues and the left singular vectors are the eigenvectors.
    """
    size = covariance.size
    if not 1 <= source_count < size:
        raise PreconditionError(
            f"K must satisfy 1 ≤ K < M = {size}, got K = {source_count}"
        )
    eigenvalues, eigenvectors = linalg.eigh(covariance.data)
    order = np.argsort(-np.abs(eigenvalues), kind="stable")
    singular_values = np.abs(eigenvalues[order])
    vectors = fix_signs(eigenvectors[:, order])

    warnings: tuple[str, ...] = ()
    if (
        singular_values[source_count - 1]
        <= DEGENERACY_RATIO * singular_values[source_count]
    ):
        warnings = (
            "degenerate spectrum: singular values "
            f"{source_count} and {source_count + 1} are tied",
        )

    return RealSubspace(
        basis=vectors[:, :source_count],
        singular_values=singular_values,
        complement=vectors[:, source_count:],
        warnings=warnings,
    )


def complexify_subspace(subspace: RealSubspace, q: UnitaryQ) -> ComplexSubspace:
    """U_c = Q U_s."""
    if subspace.basis.shape[0] != q.size:
        raise PreconditionError(
            f"subspace of size {subspace.basis.shape[0]} does not match Q_{q.size}"
        )

    return ComplexSubspace(basis=q.data @ subspace.basis)
