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
"""Monte-Carlo RMSE sweeps of the DOA estimators against the CRB."""

import itertools
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import structlog
from joblib import Parallel, delayed
from scipy.optimize import linear_sum_assignment

from wlslpdoa.array_signal_model import (
    SourceScenario,
    UlaGeometry,
    noise_power_from_snr,
    sample_covariance,
    substream_seed,
    synthesize_snapshots,
)
from wlslpdoa.baselines import (
    CrbResult,
    root_music,
    stochastic_crb,
    unitary_esprit,
    unitary_root_music,
)
from wlslpdoa.common import (
    ALGORITHMS,
    EXHAUSTIVE_PAIRING_LIMIT,
    SWEEP_VARIABLES,
    ConfigError,
    DoaError,
    EstimationError,
)
from wlslpdoa.wls_lp_estimator import (
    DoaEstimate,
    SolverSettings,
    estimate_doa_lslp,
    estimate_doa_wlslp,
)

logger = structlog.get_logger(__name__)

Estimator = Callable[..., DoaEstimate]

ESTIMATORS: dict[str, Estimator] = {
    "wlslp": estimate_doa_wlslp,
    "lslp": estimate_doa_lslp,
    "root_music": lambda covariance, k, geometry, _settings: root_music(
        covariance, k, geometry
    ),
    "unitary_root_music": lambda covariance, k, geometry, _settings: (
        unitary_root_music(covariance, k, geometry)
    ),
    "unitary_esprit": lambda covariance, k, geometry, _settings: unitary_esprit(
        covariance, k, geometry
    ),
}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep variable {self.variable} is not one of {SWEEP_VARIABLES}"
            )
        values = tuple(float(value) for value in self.values)
        if not values:
            raise ConfigError("a sweep needs at least one value")
        steps = np.diff(values)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ConfigError(f"sweep values must be strictly monotone: {values}")
        if self.variable in ("sensor_count", "n_snapshots") and any(
            value != int(value) for value in values
        ):
            raise ConfigError(f"{self.variable} values must be integers: {values}")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ExperimentConfig:
    """Base operating point, one swept variable and the trial plan.

    The noise power is σ_s²·10^(−SNR/10), or zero when noise_free is set.
    """

    geometry: UlaGeometry
    angles_deg: tuple[float, ...]
    n_snapshots: int
    snr_db: float
    sweep: SweepSpec
    algorithms: tuple[str, ...] = ("wlslp", "root_music", "unitary_esprit")
    n_trials: int = 200
    master_seed: int = 0
    source_power: float = 1.0
    noise_free: bool = False
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        object.__setattr__(
            self, "angles_deg", tuple(float(angle) for angle in self.angles_deg)
        )
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise ConfigError(f"n_trials must be ≥ 1, got {self.n_trials}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm must be enabled")
        unknown = [name for name in self.algorithms if name not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"{unknown} are not among the algorithms {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError(f"algorithms are listed twice: {self.algorithms}")
        if self.sweep.variable == "theta2_deg" and len(self.angles_deg) != 2:
            raise ConfigError("a theta2_deg sweep needs exactly two sources")
        for point_index in range(len(self.sweep.values)):
            try:
                operating_point(self, point_index)
            except DoaError as error:
                raise ConfigError(
                    f"sweep value {self.sweep.values[point_index]} gives an invalid "
                    f"scenario: {error}"
                ) from error

    @property
    def source_count(self) -> int:
        return len(self.angles_deg)


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one algorithm on one trial; estimates_deg is None on failure."""

    trial_index: int
    algorithm: str
    estimates_deg: tuple[float, ...] | None
    warnings: tuple[str, ...] = ()
    elapsed: float = 0.0

    @property
    def failed(self) -> bool:
        return self.estimates_deg is None


@dataclass(frozen=True)
class RmsePoint:
    value: float
    rmse_deg: dict[str, float]
    crb_deg: float
    n_trials: int
    n_failed: dict[str, int]
    mean_elapsed: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class RmseCurve:
    """Per-algorithm RMSE in degrees along the swept variable.

    A missing RMSE (every trial failed) or CRB is stored as NaN.
    """

    variable: str
    algorithms: tuple[str, ...]
    points: tuple[RmsePoint, ...]
    master_seed: int | None = None

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(point.value for point in self.points)

    def rmse(self, algorithm: str) -> np.ndarray:
        return np.array([point.rmse_deg[algorithm] for point in self.points])

    def crb(self) -> np.ndarray:
        return np.array([point.crb_deg for point in self.points])


def operating_point(
    config: ExperimentConfig, point_index: int
) -> tuple[SourceScenario, UlaGeometry, int]:
    """Apply the sweep value at point_index to the base configuration."""
    value = config.sweep.values[point_index]
    geometry = config.geometry
    angles = config.angles_deg
    n_snapshots = config.n_snapshots
    snr_db = config.snr_db
    match config.sweep.variable:
        case "snr_db":
            snr_db = value
        case "sensor_count":
            geometry = replace(geometry, sensor_count=int(value))
        case "n_snapshots":
            n_snapshots = int(value)
        case "theta2_deg":
            angles = (angles[0], value)
    noise_power = (
        0.0 if config.noise_free else noise_power_from_snr(snr_db, config.source_power)
    )
    scenario = SourceScenario(
        angles=angles, source_power=config.source_power, noise_power=noise_power
    )
    scenario.check_against(geometry)
    if n_snapshots < 1:
        raise ConfigError(f"n_snapshots must be ≥ 1, got {n_snapshots}")

    return scenario, geometry, n_snapshots


def run_trial(
    config: ExperimentConfig, point_index: int, trial_index: int
) -> list[TrialRecord]:
    """Run every enabled algorithm on one shared set of snapshots.

    Any exception raised by an estimator becomes a failure record, so one
    bad trial never aborts a sweep.
    """
    scenario, geometry, n_snapshots = operating_point(config, point_index)
    snapshots = synthesize_snapshots(
        scenario,
        geometry,
        n_snapshots,
        substream_seed(config.master_seed, point_index, trial_index),
    )
    covariance = sample_covariance(snapshots)
    records = []
    for algorithm in config.algorithms:
        started = time.perf_counter()
        try:
            estimate = ESTIMATORS[algorithm](
                covariance, scenario.source_count, geometry, config.solver
            )
        except Exception as error:
            records.append(
                TrialRecord(
                    trial_index=trial_index,
                    algorithm=algorithm,
                    estimates_deg=None,
                    warnings=(f"{type(error).__name__}: {error}",),
                    elapsed=time.perf_counter() - started,
                )
            )
            continue
        records.append(
            TrialRecord(
                trial_index=trial_index,
                algorithm=algorithm,
                estimates_deg=estimate.angles_deg,
                warnings=estimate.diagnostics,
                elapsed=time.perf_counter() - started,
            )
        )

    return records


def pair_estimates(estimates: Sequence[float], truth: Sequence[float]) -> np.ndarray:
    """Reorder the estimates to the permutation of least total squared error."""
    estimates_array = np.asarray(estimates, dtype=float)
    truth_array = np.asarray(truth, dtype=float)
    if estimates_array.size != truth_array.size:
        raise EstimationError(
            f"{estimates_array.size} estimates cannot be paired with "
            f"{truth_array.size} true angles"
        )
    if truth_array.size <= EXHAUSTIVE_PAIRING_LIMIT:
        best = min(
            itertools.permutations(range(truth_array.size)),
            key=lambda permutation: float(
                np.sum((estimates_array[list(permutation)] - truth_array) ** 2)
            ),
        )
        return estimates_array[list(best)]
    cost = (estimates_array[:, np.newaxis] - truth_array[np.newaxis, :]) ** 2
    rows, columns = linear_sum_assignment(cost)

    return estimates_array[rows[np.argsort(columns)]]


def compute_rmse(records: Sequence[TrialRecord], truth_deg: Sequence[float]) -> float:
    """RMSE in degrees jointly over sources and non-failed trials.

    Raises:
        EstimationError: when no record holds estimates.
    """
    successes = [record for record in records if not record.failed]
    if not successes:
        raise EstimationError("every trial failed, the RMSE is undefined")
    squared = [
        np.square(pair_estimates(record.estimates_deg or (), truth_deg) - truth_deg)
        for record in successes
    ]

    return float(np.sqrt(np.mean(np.concatenate(squared))))


def trial_block(
    config: ExperimentConfig, point_index: int, trial_indices: Sequence[int]
) -> list[TrialRecord]:
    return [
        record
        for trial_index in trial_indices
        for record in run_trial(config, point_index, trial_index)
    ]


def crb_at(config: ExperimentConfig, point_index: int) -> CrbResult | None:
    """The CRB of an operating point, None when it is undefined."""
    scenario, geometry, n_snapshots = operating_point(config, point_index)
    try:
        return stochastic_crb(scenario, geometry, n_snapshots)
    except DoaError:
        return None


def crb_curve(config: ExperimentConfig) -> list[tuple[float, CrbResult | None]]:
    return [
        (value, crb_at(config, point_index))
        for point_index, value in enumerate(config.sweep.values)
    ]


def summarise_point(
    config: ExperimentConfig, point_index: int, records: Sequence[TrialRecord]
) -> RmsePoint:
    scenario, _, _ = operating_point(config, point_index)
    crb = crb_at(config, point_index)
    rmse: dict[str, float] = {}
    failures: dict[str, int] = {}
    elapsed: dict[str, float] = {}
    for algorithm in config.algorithms:
        own = [record for record in records if record.algorithm == algorithm]
        failures[algorithm] = sum(record.failed for record in own)
        elapsed[algorithm] = float(np.mean([record.elapsed for record in own]))
        try:
            rmse[algorithm] = compute_rmse(own, scenario.angles)
        except EstimationError:
            rmse[algorithm] = float("nan")

    return RmsePoint(
        value=config.sweep.values[point_index],
        rmse_deg=rmse,
        crb_deg=crb.mean_bound_deg if crb else float("nan"),
        n_trials=config.n_trials,
        n_failed=failures,
        mean_elapsed=elapsed,
    )


def split_trials(n_trials: int, jobs: int) -> list[range]:
    size = max(1, -(-n_trials // (4 * jobs)))

    return [
        range(start, min(start + size, n_trials))
        for start in range(0, n_trials, size)
    ]


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> RmseCurve:
    """Run n_trials trials at every sweep value and aggregate the RMSE.

    Records are ordered by trial index before aggregation, so the curve does
    not depend on how trials were spread over worker processes.
    """
    if jobs < 1:
        raise ConfigError(f"jobs must be ≥ 1, got {jobs}")
    points = []
    with Parallel(n_jobs=jobs) as parallel:
        for point_index, value in enumerate(config.sweep.values):
            blocks = parallel(
                delayed(trial_block)(config, point_index, block)
                for block in split_trials(config.n_trials, jobs)
            )
            records = sorted(
                (record for block in blocks for record in block),
                key=lambda record: record.trial_index,
            )
            point = summarise_point(config, point_index, records)
            logger.info(
                "sweep_point_done",
                variable=config.sweep.variable,
                value=value,
                rmse_deg=point.rmse_deg,
                crb_deg=point.crb_deg,
                n_failed=point.n_failed,
            )
            points.append(point)

    return RmseCurve(
        variable=config.sweep.variable,
        algorithms=config.algorithms,
        points=tuple(points),
        master_seed=config.master_seed,
    )
