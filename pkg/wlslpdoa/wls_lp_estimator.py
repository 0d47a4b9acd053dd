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
"""DOA estimation by weighted least-squares linear prediction.

The pipeline runs from a covariance matrix R to the angle estimates:

1. C = Re{Q^H R Q}, the real-valued covariance.
2. U_s, the K dominant singular vectors of C.
3. U_c = Q U_s, whose columns are sums of K complex exponentials and so obey
   a K-tap linear recursion with coefficients c.
4. c from the stacked system D c - f = e, solved by iterated weighted least
   squares with the weight I_K ⊗ (B B^H)^-1.
5. The roots of z^K + c_1 z^(K-1) + ... + c_K give the spatial frequencies.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy import linalg

from wlslpdoa.array_signal_model import HermitianCovariance, UlaGeometry
from wlslpdoa.common import DoaError, EstimationError, PreconditionError
from wlslpdoa.subspace import (
    ComplexSubspace,
    RealSubspace,
    complexify_subspace,
    signal_subspace,
)
from wlslpdoa.unitary_transform import (
    UnitaryQ,
    build_unitary_q,
    to_real_covariance,
)

SINGULAR_WEIGHT = "singular B B^H, identity weight used"
EPSILON = np.finfo(float).eps
SWAP_MARGIN = 1e-9


@dataclass(frozen=True)
class SolverSettings:
    """Iteration limits of the WLS solve.

    swap_depth is how many singular vectors past the K-th may stand in for a
    dominant one, 0 keeps the dominant K.
    """

    max_iter: int = 10
    tol: float = 1e-8
    swap_depth: int = 2

    def __post_init__(self):
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise PreconditionError(f"max_iter must be ≥ 1, got {self.max_iter}")
        if not self.tol > 0:
            raise PreconditionError(f"tol must be positive, got {self.tol}")
        if int(self.swap_depth) != self.swap_depth or self.swap_depth < 0:
            raise PreconditionError(
                f"swap_depth must be ≥ 0, got {self.swap_depth}"
            )


@dataclass(frozen=True, eq=False)
class LpSystem:
    """The stacked system D c - f = e.

    Attributes:
        design (np.ndarray): K(M−K)×K matrix D, blocks D_1 … D_K.
        target (np.ndarray): K(M−K) vector f, blocks f_1 … f_K.
    """

    design: np.ndarray
    target: np.ndarray
    size: int
    source_count: int

    @property
    def design_blocks(self) -> np.ndarray:
        return self.design.reshape(
            self.source_count, self.size - self.source_count, self.source_count
        )

    @property
    def target_blocks(self) -> np.ndarray:
        return self.target.reshape(self.source_count, self.size - self.source_count)


@dataclass(frozen=True, eq=False)
class LpCoefficients:
    """c_1 … c_K of the monic prediction polynomial (c_0 = 1 is implicit)."""

    coeffs: np.ndarray
    iterations_used: int = 0
    final_residual: float = 0.0
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        coeffs = np.atleast_1d(np.array(self.coeffs, dtype=complex))
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise PreconditionError("at least one LP coefficient is needed")
        if self.final_residual < 0:
            raise PreconditionError("the weighted residual cannot be negative")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order(self) -> int:
        return self.coeffs.size


@dataclass(frozen=True, eq=False)
class DoaEstimate:
    angles_deg: tuple[float, ...]
    roots: np.ndarray
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def source_count(self) -> int:
        return len(self.angles_deg)


@lru_cache(maxsize=64)
def cached_unitary_q(size: int) -> UnitaryQ:
    return build_unitary_q(size)


def build_toeplitz_b(coefficients: LpCoefficients, size: int) -> np.ndarray:
    """(M−K)×M Toeplitz matrix whose rows slide [c_K, …, c_1, 1]."""
    order = coefficients.order
    if order >= size:
        raise PreconditionError(f"K = {order} must be smaller than M = {size}")
    first_column = np.zeros(size - order, dtype=complex)
    first_column[0] = coefficients.coeffs[-1]
    first_row = np.zeros(size, dtype=complex)
    first_row[:order] = coefficients.coeffs[::-1]
    first_row[order] = 1.0

    return linalg.toeplitz(first_column, first_row)


def build_lp_system(subspace: ComplexSubspace) -> LpSystem:
    """Stack D_k and f_k so that B u_k = D_k c - f_k for every c.

    Row r of D_k holds u_k[r+K-1], …, u_k[r] and f_k = -u_k[K:].
    """
    size, order = subspace.size, subspace.rank
    if order >= size:
        raise PreconditionError(f"K = {order} must be smaller than M = {size}")
    designs = []
    targets = []
    for column in subspace.basis.T:
        designs.append(
            linalg.toeplitz(column[order - 1 : size - 1], column[order - 1 :: -1])
        )
        targets.append(-column[order:])

    return LpSystem(
        design=np.vstack(designs),
        target=np.concatenate(targets),
        size=size,
        source_count=order,
    )


def whitening_factor(
    coefficients: LpCoefficients, size: int
) -> tuple[np.ndarray | None, str | None]:
    """Lower Cholesky factor L of B B^H, or None when B B^H is singular."""
    toeplitz_b = build_toeplitz_b(coefficients, size)
    gram = toeplitz_b @ toeplitz_b.conj().T
    if not np.all(np.isfinite(gram)) or np.linalg.cond(gram) > 1 / EPSILON:
        return None, SINGULAR_WEIGHT
    try:
        return linalg.cholesky(gram, lower=True), None
    except linalg.LinAlgError:
        return None, SINGULAR_WEIGHT


def optimal_weight(coefficients: LpCoefficients, size: int) -> np.ndarray:
    """W = I_K ⊗ (B B^H)^-1, the weight that whitens the LP residual.

    Falls back to the identity when B B^H cannot be inverted.
    """
    order = coefficients.order
    factor, _ = whitening_factor(coefficients, size)
    if factor is None:
        return np.eye(order * (size - order), dtype=complex)
    block = linalg.cho_solve((factor, True), np.eye(size - order, dtype=complex))
    block = (block + block.conj().T) / 2

    return np.kron(np.eye(order), block)


def weighted_solve(
    system: LpSystem, factor: np.ndarray | None
) -> tuple[np.ndarray, float]:
    """Minimise e^H W e for W = I_K ⊗ (L L^H)^-1, or W = I without a factor.

    Returns:
        tuple: the coefficients and the weighted residual e^H W e.
    """
    designs, targets = system.design_blocks, system.target_blocks
    if factor is not None:
        designs = np.stack(
            [linalg.solve_triangular(factor, block, lower=True) for block in designs]
        )
        targets = np.stack(
            [linalg.solve_triangular(factor, block, lower=True) for block in targets]
        )
    design = designs.reshape(-1, system.source_count)
    target = targets.reshape(-1)
    coeffs, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < system.source_count:
        raise EstimationError("the weighted normal equations are singular")
    residual = design @ coeffs - target

    return coeffs, float(np.vdot(residual, residual).real)


def wls_solve(
    system: LpSystem,
    max_iter: int = 10,
    tol: float = 1e-8,
    initial: LpCoefficients | None = None,
) -> LpCoefficients:
    """Iterated weighted least squares for the LP coefficients.

    The first solve uses the identity weight unless `initial` is given, in
    which case it uses the optimal weight of `initial`. Every later solve
    rebuilds the weight from the previous iterate. Iteration stops when
    ‖c_new − c_old‖ ≤ tol·‖c_old‖ or after max_iter solves.

    Raises:
        EstimationError: if D does not have full column rank.
    """
    if max_iter < 1:
        raise PreconditionError(f"max_iter must be ≥ 1, got {max_iter}")
    if np.linalg.matrix_rank(system.design) < system.source_count:
        raise EstimationError(
            f"D is rank deficient, {system.source_count} coefficients cannot be found"
        )

    warnings: list[str] = []
    previous = None if initial is None else initial.coeffs
    factor = None
    if initial is not None:
        factor, warning = whitening_factor(initial, system.size)
        if warning:
            warnings.append(warning)

    for iteration in range(1, max_iter + 1):
        coeffs, residual = weighted_solve(system, factor)
        if previous is not None and np.linalg.norm(
            coeffs - previous
        ) <= tol * np.linalg.norm(previous):
            break
        previous = coeffs
        if iteration < max_iter:
            factor, warning = whitening_factor(LpCoefficients(coeffs), system.size)
            if warning and warning not in warnings:
                warnings.append(warning)

    return LpCoefficients(
        coeffs=coeffs,
        iterations_used=iteration,
        final_residual=residual,
        warnings=tuple(warnings),
    )


def polynomial_roots(coefficients: np.ndarray) -> np.ndarray:
    """Roots of a polynomial, highest power first, from its companion matrix."""
    coefficients = np.trim_zeros(np.asarray(coefficients, dtype=complex), "f")
    if coefficients.size < 2:
        return np.zeros(0, dtype=complex)

    return np.linalg.eigvals(linalg.companion(coefficients))


def lp_roots(coefficients: LpCoefficients) -> np.ndarray:
    """The K roots of z^K + c_1 z^(K-1) + … + c_K."""
    return polynomial_roots(np.concatenate(([1.0], coefficients.coeffs)))


def angles_from_roots(roots: np.ndarray, geometry: UlaGeometry) -> DoaEstimate:
    """θ = arcsin(arg(z) / (2π d/λ)) in degrees, sorted ascending.

    Root magnitudes are ignored. Arguments beyond the visible region are
    clipped to ±90° and noted in the diagnostics.
    """
    roots = np.atleast_1d(np.asarray(roots, dtype=complex))
    if roots.size < 1:
        raise PreconditionError("no roots to map to angles")
    sines = np.angle(roots) / (2 * np.pi * geometry.spacing_ratio)
    diagnostics: tuple[str, ...] = ()
    if np.any(np.abs(sines) > 1):
        diagnostics = (
            f"arcsin argument clipped for {int(np.sum(np.abs(sines) > 1))} root(s)",
        )
    angles = np.rad2deg(np.arcsin(np.clip(sines, -1, 1)))
    order = np.argsort(angles, kind="stable")

    return DoaEstimate(
        angles_deg=tuple(float(angle) for angle in angles[order]),
        roots=roots[order],
        diagnostics=diagnostics,
    )


def check_geometry(
    covariance: HermitianCovariance, geometry: UlaGeometry | None
) -> UlaGeometry:
    """Default to a half-wavelength array matching the covariance size."""
    if geometry is None:
        return UlaGeometry(covariance.size)
    if geometry.sensor_count != covariance.size:
        raise PreconditionError(
            f"covariance of size {covariance.size} does not match "
            f"{geometry.sensor_count} sensors"
        )

    return geometry


def stochastic_ml_cost(covariance: HermitianCovariance, roots: np.ndarray) -> float:
    """log det(P R P + σ² P^⊥), the concentrated stochastic likelihood cost.

    Steering columns come from the root phases, so roots mapped outside the
    visible region are scored too. σ² = tr(P^⊥ R)/(M−K), floored at
    ε·tr(R)/M. Coincident roots score +inf.
    """
    size = covariance.size
    phases = np.exp(1j * np.angle(np.atleast_1d(roots)))
    steering = phases[np.newaxis, :] ** np.arange(size)[:, np.newaxis]
    if np.linalg.matrix_rank(steering) < phases.size:
        return np.inf
    projector = steering @ np.linalg.pinv(steering)
    complement = np.eye(size) - projector
    noise = max(
        np.trace(complement @ covariance.data).real / (size - phases.size),
        EPSILON * np.trace(covariance.data).real / size,
    )
    sign, logdet = np.linalg.slogdet(
        projector @ covariance.data @ projector + noise * complement
    )

    return float(logdet) if sign != 0 else np.inf


def swap_guard(
    covariance: HermitianCovariance,
    subspace: RealSubspace,
    q: UnitaryQ,
    settings: SolverSettings,
    coefficients: LpCoefficients,
) -> tuple[LpCoefficients, tuple[str, ...]]:
    """Replace the dominant-subspace solution when a swapped one fits R better.

    At low SNR a noise singular vector can overtake a signal one. Every
    K-subset of the leading K + swap_depth singular vectors of C is solved
    with the same settings, and a subset wins only when its stochastic
    likelihood cost is lower than the dominant solution's by SWAP_MARGIN.
    Subsets whose solve fails are skipped.

    Returns:
        tuple: the kept coefficients and a diagnostic naming the singular
            vectors used, empty when the dominant subspace is kept.
    """
    source_count = subspace.rank
    pool = min(source_count + settings.swap_depth, covariance.size)
    if pool == source_count:
        return coefficients, ()
    vectors = np.hstack((subspace.basis, subspace.complement))
    best, best_cost, chosen = (
        coefficients,
        stochastic_ml_cost(covariance, lp_roots(coefficients)),
        None,
    )
    for columns in combinations(range(pool), source_count):
        if columns == tuple(range(source_count)):
            continue
        try:
            system = build_lp_system(ComplexSubspace(q.data @ vectors[:, columns]))
            candidate = wls_solve(system, settings.max_iter, settings.tol)
            cost = stochastic_ml_cost(covariance, lp_roots(candidate))
        except (DoaError, np.linalg.LinAlgError):
            continue
        if cost < best_cost - SWAP_MARGIN:
            best, best_cost, chosen = candidate, cost, columns
    if chosen is None:
        return coefficients, ()

    used = ", ".join(str(column + 1) for column in chosen)
    return best, (f"subspace swap: singular vectors {used} used",)


def lp_pipeline(
    covariance: HermitianCovariance,
    source_count: int,
    geometry: UlaGeometry | None,
    settings: SolverSettings,
) -> DoaEstimate:
    geometry = check_geometry(covariance, geometry)
    q = cached_unitary_q(covariance.size)
    subspace = signal_subspace(to_real_covariance(covariance, q), source_count)
    system = build_lp_system(complexify_subspace(subspace, q))
    coefficients = wls_solve(system, settings.max_iter, settings.tol)
    coefficients, swapped = swap_guard(
        covariance, subspace, q, settings, coefficients
    )
    estimate = angles_from_roots(lp_roots(coefficients), geometry)

    return DoaEstimate(
        angles_deg=estimate.angles_deg,
        roots=estimate.roots,
        diagnostics=subspace.warnings
        + coefficients.warnings
        + swapped
        + estimate.diagnostics,
    )


def estimate_doa_wlslp(
    covariance: HermitianCovariance,
    source_count: int,
    geometry: UlaGeometry | None = None,
    settings: SolverSettings | None = None,
) -> DoaEstimate:
    """Estimate K angles from R with the real-SVD WLS linear prediction."""
    return lp_pipeline(
        covariance, source_count, geometry, settings or SolverSettings()
    )


def estimate_doa_lslp(
    covariance: HermitianCovariance,
    source_count: int,
    geometry: UlaGeometry | None = None,
    settings: SolverSettings | None = None,
) -> DoaEstimate:
    """Same pipeline with one ordinary least-squares solve, no reweighting."""
    settings = settings or SolverSettings()
    single = SolverSettings(
        max_iter=1, tol=settings.tol, swap_depth=settings.swap_depth
    )

    return lp_pipeline(covariance, source_count, geometry, single)
