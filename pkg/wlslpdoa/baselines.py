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
"""Reference estimators and the stochastic Cramér–Rao bound."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from wlslpdoa.array_signal_model import (
    HermitianCovariance,
    SourceScenario,
    UlaGeometry,
    exact_covariance,
    steering_derivative,
    steering_matrix,
)
from wlslpdoa.common import (
    UNIT_CIRCLE_TOLERANCE,
    EstimationError,
    PreconditionError,
)
from wlslpdoa.subspace import signal_subspace
from wlslpdoa.unitary_transform import to_real_covariance
from wlslpdoa.wls_lp_estimator import (
    DoaEstimate,
    angles_from_roots,
    cached_unitary_q,
    check_geometry,
    polynomial_roots,
)

FISHER_CONDITION_LIMIT = 1e12
ESPRIT_IMAGINARY_TOLERANCE = 1e-8
MUSIC_REFINE_RADIUS = 1e-3
MUSIC_NEWTON_STEPS = 8
MUSIC_MERGE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CrbResult:
    per_angle_bound_deg: tuple[float, ...]
    fisher_conditioning: float

    @property
    def mean_bound_deg(self) -> float:
        """Root of the mean per-angle variance, comparable to a joint RMSE."""
        return float(np.sqrt(np.mean(np.square(self.per_angle_bound_deg))))


def check_source_count(source_count: int, size: int) -> None:
    if not 1 <= source_count < size:
        raise PreconditionError(
            f"K must satisfy 1 ≤ K < M = {size}, got K = {source_count}"
        )


def root_music_polynomial(projector: np.ndarray) -> np.ndarray:
    """Coefficients, highest power first, of z^(M-1) a^H(1/z^*) P a(z).

    The coefficient of z^(M-1+l) is the sum of the l-th diagonal of P, so the
    2(M-1)+1 coefficients are conjugate symmetric around the trace.
    """
    size = projector.shape[0]
    upper = np.array([np.trace(projector, offset=lag) for lag in range(1, size)])

    return np.concatenate(
        (upper[::-1], [np.trace(projector).real], upper.conj())
    )


def paired_candidates(roots: np.ndarray) -> list[complex]:
    """Roots inside the circle, with on-circle pairs merged, by modulus."""
    distance = np.abs(np.abs(roots) - 1)
    on_circle = list(roots[distance <= UNIT_CIRCLE_TOLERANCE])
    inside = (distance > UNIT_CIRCLE_TOLERANCE) & (np.abs(roots) < 1)
    candidates = list(roots[inside])
    while on_circle:
        root = on_circle.pop(0)
        if on_circle:
            nearest = int(np.argmin(np.abs(np.array(on_circle) - root)))
            root = (root + on_circle.pop(nearest)) / 2
        candidates.append(root / abs(root))

    return sorted(candidates, key=lambda candidate: -abs(candidate))


def refine_double_root(
    root: complex, derivative: np.ndarray, curvature: np.ndarray
) -> complex:
    """Newton steps on p' from the projection of root onto the unit circle.

    A noise-free root-MUSIC polynomial has double roots on the circle, which
    the companion matrix only resolves to about the square root of machine
    precision. They are simple roots of p', where Newton converges
    quadratically. A noisy pair z, 1/z^* shares its projection, so both
    members land on the same point between them.
    """
    start = root / abs(root)
    point = start
    for _ in range(MUSIC_NEWTON_STEPS):
        slope = np.polyval(curvature, point)
        if slope == 0:
            break
        step = np.polyval(derivative, point) / slope
        point = point - step
        if abs(step) <= 4 * np.finfo(float).eps:
            break
    if not np.isfinite(point) or abs(point - start) > MUSIC_REFINE_RADIUS:
        return start

    return point / abs(point)


def refined_candidates(roots: np.ndarray, polynomial: np.ndarray) -> list[complex]:
    """Near-circle roots refined onto the circle, then the roots inside.

    Refined points are ranked by |p|, the MUSIC null spectrum on the circle,
    and points that converge together are kept once.
    """
    derivative = np.polyder(polynomial)
    curvature = np.polyder(derivative)
    distance = np.abs(np.abs(roots) - 1)
    refined: list[complex] = []
    for root in roots[distance <= MUSIC_REFINE_RADIUS]:
        point = refine_double_root(root, derivative, curvature)
        if all(abs(point - other) > MUSIC_MERGE_TOLERANCE for other in refined):
            refined.append(point)
    refined.sort(key=lambda point: abs(np.polyval(polynomial, point)))
    inside = roots[(distance > MUSIC_REFINE_RADIUS) & (np.abs(roots) < 1)]

    return refined + sorted(inside, key=lambda candidate: -abs(candidate))


def select_music_roots(
    roots: np.ndarray, source_count: int, polynomial: np.ndarray | None = None
) -> np.ndarray:
    """The K candidate roots closest to the unit circle from inside.

    Without the polynomial, roots within UNIT_CIRCLE_TOLERANCE of the circle
    come in near-coincident pairs and each pair is replaced by its mean
    projected onto the circle. With it, every root within
    MUSIC_REFINE_RADIUS of the circle is refined onto the circle first.

    Raises:
        EstimationError: if fewer than K candidates remain.
    """
    if polynomial is None:
        candidates = paired_candidates(roots)
    else:
        candidates = refined_candidates(roots, polynomial)
    if len(candidates) < source_count:
        raise EstimationError(
            f"only {len(candidates)} root(s) inside the unit circle, "
            f"{source_count} needed"
        )

    return np.array(candidates[:source_count], dtype=complex)


def music_from_noise_basis(
    noise_basis: np.ndarray, source_count: int, geometry: UlaGeometry
) -> DoaEstimate:
    projector = noise_basis @ noise_basis.conj().T
    polynomial = root_music_polynomial(projector)
    roots = polynomial_roots(polynomial)

    return angles_from_roots(
        select_music_roots(roots, source_count, polynomial), geometry
    )


def root_music(
    covariance: HermitianCovariance,
    source_count: int,
    geometry: UlaGeometry | None = None,
) -> DoaEstimate:
    """Root-MUSIC on the M−K smallest eigenvectors of R."""
    geometry = check_geometry(covariance, geometry)
    check_source_count(source_count, covariance.size)
    try:
        _, eigenvectors = linalg.eigh(covariance.data)
    except linalg.LinAlgError as error:
        raise EstimationError(f"eigendecomposition failed: {error}") from error

    return music_from_noise_basis(
        eigenvectors[:, : covariance.size - source_count], source_count, geometry
    )


def unitary_root_music(
    covariance: HermitianCovariance,
    source_count: int,
    geometry: UlaGeometry | None = None,
) -> DoaEstimate:
    """Root-MUSIC on the real noise subspace of C mapped back by Q."""
    geometry = check_geometry(covariance, geometry)
    check_source_count(source_count, covariance.size)
    q = cached_unitary_q(covariance.size)
    subspace = signal_subspace(to_real_covariance(covariance, q), source_count)
    estimate = music_from_noise_basis(
        q.data @ subspace.complement, source_count, geometry
    )

    return DoaEstimate(
        angles_deg=estimate.angles_deg,
        roots=estimate.roots,
        diagnostics=subspace.warnings + estimate.diagnostics,
    )


def selection_matrices(size: int) -> tuple[np.ndarray, np.ndarray]:
    """K₁ = 2·Re{Q_{M−1}^H J₂ Q_M} and K₂ = 2·Im{Q_{M−1}^H J₂ Q_M}.

    J₂ selects the last M−1 sensors.
    """
    shifted = (
        cached_unitary_q(size - 1).data.conj().T
        @ np.eye(size)[1:, :]
        @ cached_unitary_q(size).data
    )

    return 2 * shifted.real, 2 * shifted.imag


def unitary_esprit(
    covariance: HermitianCovariance,
    source_count: int,
    geometry: UlaGeometry | None = None,
) -> DoaEstimate:
    """Unitary ESPRIT with a least-squares solution of K₁E_sΨ = K₂E_s.

    The eigenvalues ω of Ψ are tan(μ/2) of the spatial frequencies μ.
    """
    geometry = check_geometry(covariance, geometry)
    check_source_count(source_count, covariance.size)
    q = cached_unitary_q(covariance.size)
    subspace = signal_subspace(to_real_covariance(covariance, q), source_count)
    first, second = selection_matrices(covariance.size)
    left = first @ subspace.basis
    right = second @ subspace.basis
    psi, _, rank, _ = np.linalg.lstsq(left, right, rcond=None)
    if rank < source_count:
        raise EstimationError("K₁E_s is rank deficient")
    omegas = np.linalg.eigvals(psi)

    diagnostics = subspace.warnings
    if np.max(np.abs(omegas.imag)) > ESPRIT_IMAGINARY_TOLERANCE * (
        1 + np.max(np.abs(omegas))
    ):
        diagnostics += ("complex eigenvalues of Ψ, real parts used",)
    frequencies = 2 * np.arctan(omegas.real)
    estimate = angles_from_roots(np.exp(1j * frequencies), geometry)

    return DoaEstimate(
        angles_deg=estimate.angles_deg,
        roots=estimate.roots,
        diagnostics=diagnostics + estimate.diagnostics,
    )


def stochastic_crb(
    scenario: SourceScenario, geometry: UlaGeometry, n_snapshots: int
) -> CrbResult:
    """Stochastic CRB for independent equal-power Gaussian sources.

    CRB = σ²/(2N) · {Re[(D^H Π⊥ D) ⊙ (S A^H R^-1 A S)^T]}^-1 with D the
    steering derivatives and Π⊥ the projector onto the complement of A.

    Raises:
        EstimationError: if the matrix to invert is numerically singular.
    """
    if n_snapshots < 1:
        raise PreconditionError(f"n_snapshots must be ≥ 1, got {n_snapshots}")
    if scenario.noise_power <= 0:
        raise PreconditionError("the stochastic CRB needs a positive noise power")
    steering = steering_matrix(scenario, geometry)
    derivatives = np.column_stack(
        [steering_derivative(angle, geometry) for angle in scenario.angles]
    )
    covariance = exact_covariance(scenario, geometry).data
    steering_h = steering.conj().T
    complement = np.eye(geometry.sensor_count) - steering @ linalg.solve(
        steering_h @ steering, steering_h
    )
    source_covariance = scenario.source_power * np.eye(scenario.source_count)
    signal_term = (
        source_covariance
        @ steering_h
        @ linalg.solve(covariance, steering, assume_a="her")
        @ source_covariance
    )
    fisher = np.real((derivatives.conj().T @ complement @ derivatives) * signal_term.T)
    conditioning = float(np.linalg.cond(fisher))
    if not np.isfinite(conditioning) or conditioning > FISHER_CONDITION_LIMIT:
        raise EstimationError(
            f"the Fisher matrix is singular (condition number {conditioning:.3g})"
        )
    bound = scenario.noise_power / (2 * n_snapshots) * np.linalg.inv(fisher)

    return CrbResult(
        per_angle_bound_deg=tuple(
            float(value) for value in np.rad2deg(np.sqrt(np.diag(bound)))
        ),
        fisher_conditioning=conditioning,
    )
