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
"""Uniform linear array geometry, narrowband snapshots and covariances.

Angles are given in degrees at every public boundary and converted to
radians internally.
"""

from dataclasses import dataclass, field

import numpy as np

from wlslpdoa.common import (
    HERMITIAN_TOLERANCE,
    PSD_TOLERANCE,
    DomainError,
    PreconditionError,
)


def validate_angle(theta: float) -> None:
    """Check that an angle in degrees lies strictly inside (-90°, 90°).

    Raises:
        DomainError: if the angle is on or beyond endfire.
    """
    if not np.isfinite(theta) or abs(theta) >= 90:
        raise DomainError(f"{theta}° is not inside the open interval (-90°, 90°)")


@dataclass(frozen=True)
class UlaGeometry:
    sensor_count: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if int(self.sensor_count) != self.sensor_count or self.sensor_count < 2:
            raise PreconditionError(
                f"sensor_count must be an integer ≥ 2, got {self.sensor_count}"
            )
        if not self.spacing_ratio > 0:
            raise PreconditionError(
                f"spacing_ratio must be positive, got {self.spacing_ratio}"
            )
        object.__setattr__(self, "sensor_count", int(self.sensor_count))
        object.__setattr__(self, "spacing_ratio", float(self.spacing_ratio))


@dataclass(frozen=True)
class SourceScenario:
    """K equal-power, mutually independent narrowband sources."""

    angles: tuple[float, ...]
    source_power: float = 1.0
    noise_power: float = 1.0

    def __post_init__(self):
        angles = tuple(float(angle) for angle in np.atleast_1d(self.angles))
        if not angles:
            raise PreconditionError("a scenario needs at least one source")
        for angle in angles:
            validate_angle(angle)
        if len(set(angles)) != len(angles):
            raise PreconditionError(f"angles must be pairwise distinct: {angles}")
        if not self.source_power > 0:
            raise PreconditionError(
                f"source_power must be positive, got {self.source_power}"
            )
        if not self.noise_power >= 0:
            raise PreconditionError(
                f"noise_power must be non-negative, got {self.noise_power}"
            )
        object.__setattr__(self, "angles", angles)

    @property
    def source_count(self) -> int:
        return len(self.angles)

    def check_against(self, geometry: UlaGeometry) -> None:
        """Raise PreconditionError unless K < M."""
        if self.source_count >= geometry.sensor_count:
            raise PreconditionError(
                f"{self.source_count} sources cannot be resolved by "
                f"{geometry.sensor_count} sensors"
            )


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    data: np.ndarray
    geometry: UlaGeometry

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[1] < 1:
            raise PreconditionError(
                f"snapshots must be an M×N matrix with N ≥ 1, got {data.shape}"
            )
        if data.shape[0] != self.geometry.sensor_count:
            raise PreconditionError(
                f"{data.shape[0]} rows do not match "
                f"{self.geometry.sensor_count} sensors"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class HermitianCovariance:
    data: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise PreconditionError(f"covariance must be square, got {data.shape}")
        if self.check:
            scale = max(np.linalg.norm(data), np.finfo(float).tiny)
            if np.linalg.norm(data - data.conj().T) > HERMITIAN_TOLERANCE * scale:
                raise PreconditionError("covariance is not Hermitian")
            size = data.shape[0]
            smallest = np.linalg.eigvalsh(data)[0]
            if smallest < -PSD_TOLERANCE * abs(np.trace(data).real) / size:
                raise PreconditionError(
                    f"covariance is not positive semidefinite ({smallest})"
                )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def size(self) -> int:
        return self.data.shape[0]


def steering_vector(theta: float, geometry: UlaGeometry) -> np.ndarray:
    """Array response a(θ) with a[m] = exp(j·2π·(d/λ)·m·sin θ)."""
    validate_angle(theta)
    phase = 2 * np.pi * geometry.spacing_ratio * np.sin(np.deg2rad(theta))

    return np.exp(1j * phase * np.arange(geometry.sensor_count))


def steering_derivative(theta: float, geometry: UlaGeometry) -> np.ndarray:
    """Derivative of a(θ) with respect to θ measured in radians."""
    radians = np.deg2rad(theta)
    positions = np.arange(geometry.sensor_count)

    return (
        1j
        * 2
        * np.pi
        * geometry.spacing_ratio
        * positions
        * np.cos(radians)
        * steering_vector(theta, geometry)
    )


def steering_matrix(scenario: SourceScenario, geometry: UlaGeometry) -> np.ndarray:
    """The M×K matrix A whose columns follow scenario.angles."""
    scenario.check_against(geometry)

    return np.column_stack(
        [steering_vector(angle, geometry) for angle in scenario.angles]
    )


def noise_power_from_snr(snr_db: float, source_power: float = 1.0) -> float:
    """σ² that yields SNR = 10·log10(σ_s²/σ²)."""
    return source_power * 10 ** (-snr_db / 10)


def substream_seed(master_seed: int, point_index: int, trial_index: int) -> int:
    """Seed of the random substream of one trial at one sweep point.

    The master seed and the two indices are mixed by numpy's SeedSequence
    hashing, so a trial draws the same numbers whichever process runs it.
    """
    sequence = np.random.SeedSequence(
        int(master_seed) % 2**64, spawn_key=(int(point_index), int(trial_index))
    )

    return int(sequence.generate_state(1, np.uint64)[0])


def circular_gaussian(
    rng: np.random.Generator, shape: tuple[int, ...], power: float
) -> np.ndarray:
    """Circular complex Gaussian samples of variance `power`."""
    real, imag = rng.standard_normal((2, *shape))

    return (real + 1j * imag) * np.sqrt(power / 2)


def synthesize_snapshots(
    scenario: SourceScenario,
    geometry: UlaGeometry,
    n_snapshots: int,
    seed: int,
) -> SnapshotMatrix:
    """Draw N snapshots x(t) = A s(t) + n(t) from a seeded PCG64 stream.

    Source waveforms are drawn before the noise, and the noise is drawn even
    when the noise power is zero, so a seed fixes the source waveforms
    regardless of the noise level.
    """
    if int(n_snapshots) != n_snapshots or n_snapshots < 1:
        raise PreconditionError(f"n_snapshots must be ≥ 1, got {n_snapshots}")
    steering = steering_matrix(scenario, geometry)
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    waveforms = circular_gaussian(
        rng, (scenario.source_count, int(n_snapshots)), scenario.source_power
    )
    noise = circular_gaussian(
        rng, (geometry.sensor_count, int(n_snapshots)), scenario.noise_power
    )

    return SnapshotMatrix(data=steering @ waveforms + noise, geometry=geometry)


def sample_covariance(snapshots: SnapshotMatrix) -> HermitianCovariance:
    """(1/N)·Σ x(t)x(t)^H, symmetrised so it is exactly Hermitian."""
    data = snapshots.data
    estimate = data @ data.conj().T / snapshots.n_snapshots

    return HermitianCovariance((estimate + estimate.conj().T) / 2, check=False)


def exact_covariance(
    scenario: SourceScenario, geometry: UlaGeometry
) -> HermitianCovariance:
    """R = A (σ_s² I) A^H + σ² I."""
    steering = steering_matrix(scenario, geometry)
    covariance = scenario.source_power * steering @ steering.conj().T
    covariance += scenario.noise_power * np.eye(geometry.sensor_count)

    return HermitianCovariance((covariance + covariance.conj().T) / 2)

