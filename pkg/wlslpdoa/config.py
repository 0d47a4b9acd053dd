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
"""Read experiment configuration files."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import marshmallow
import marshmallow_dataclass
import yaml
from marshmallow import ValidationError

from wlslpdoa.array_signal_model import UlaGeometry
from wlslpdoa.common import ALGORITHMS, SWEEP_VARIABLES, ConfigError, DoaError
from wlslpdoa.experiment_harness import ExperimentConfig, SweepSpec
from wlslpdoa.wls_lp_estimator import SolverSettings

LIST_KEYS = ("angles_deg", "algorithms", "sweep.values")


def validate_positive(number: float) -> None:
    """Check that a count or power is positive.

    Raises:
        ValidationError: If the number is zero or negative.
    """
    if not number > 0:
        raise ValidationError(f"{number} must be positive")


def validate_non_negative(number: int) -> None:
    if number < 0:
        raise ValidationError(f"{number} cannot be negative")


def validate_algorithms(algorithms: list[str]) -> None:
    """Check that every listed algorithm is known.

    Args:
        algorithms (list[str]): The algorithm names to validate.

    Raises:
        ValidationError: If a name is unknown or the list is empty.
    """
    if not algorithms:
        raise ValidationError("at least one algorithm must be listed")
    unknown = [name for name in algorithms if name not in ALGORITHMS]
    if unknown:
        raise ValidationError(f"{unknown} not in {ALGORITHMS}")


def validate_sweep_variable(variable: str) -> None:
    if variable not in SWEEP_VARIABLES:
        raise ValidationError(f"{variable} not in {SWEEP_VARIABLES}")


class FlatConfigSchema(marshmallow.Schema):
    """Base schema accepting comma separated strings for list keys."""

    @marshmallow.pre_load
    def split_lists(self, data: Any, **kwargs) -> dict:
        if not isinstance(data, dict):
            raise ValidationError("a configuration must be a key/value mapping")
        nested = [key for key, value in data.items() if isinstance(value, dict)]
        if nested:
            raise ValidationError(f"nested values are not allowed: {nested}")
        flat = dict(data)
        for key in LIST_KEYS:
            value = flat.get(key)
            if isinstance(value, str):
                flat[key] = [part.strip() for part in value.split(",") if part.strip()]
            elif isinstance(value, (int, float)):
                flat[key] = [value]

        return flat


@dataclass
class ConfigFile:
    sensors: int = field(metadata={"validate": validate_positive})
    angles_deg: list[float]
    snapshots: int = field(metadata={"validate": validate_positive})
    snr_db: float
    algorithms: list[str] = field(metadata={"validate": validate_algorithms})
    sweep_variable: str = field(
        metadata={"data_key": "sweep.variable", "validate": validate_sweep_variable}
    )
    sweep_values: list[float] = field(metadata={"data_key": "sweep.values"})
    spacing_ratio: float = field(default=0.5, metadata={"validate": validate_positive})
    trials: int = field(default=200, metadata={"validate": validate_positive})
    seed: int = 0
    source_power: float = field(default=1.0, metadata={"validate": validate_positive})
    noise_free: bool = False
    max_iter: int = field(default=10, metadata={"validate": validate_positive})
    tol: float = field(default=1e-8, metadata={"validate": validate_positive})
    swap_depth: int = field(default=2, metadata={"validate": validate_non_negative})

    def to_experiment(self) -> ExperimentConfig:
        """Build the validated experiment the file describes.

        Raises:
            ConfigError: If the values do not form a runnable experiment.
        """
        try:
            return ExperimentConfig(
                geometry=UlaGeometry(self.sensors, self.spacing_ratio),
                angles_deg=tuple(self.angles_deg),
                n_snapshots=self.snapshots,
                snr_db=self.snr_db,
                sweep=SweepSpec(self.sweep_variable, tuple(self.sweep_values)),
                algorithms=tuple(self.algorithms),
                n_trials=self.trials,
                master_seed=self.seed,
                source_power=self.source_power,
                noise_free=self.noise_free,
                solver=SolverSettings(
                    max_iter=self.max_iter, tol=self.tol, swap_depth=self.swap_depth
                ),
            )
        except ConfigError:
            raise
        except DoaError as error:
            raise ConfigError(str(error)) from error


CONFIG_FILE_SCHEMA = marshmallow_dataclass.class_schema(
    ConfigFile, base_schema=FlatConfigSchema
)()


def parse_config(mapping: Any) -> ExperimentConfig:
    """Validate a flat mapping of configuration keys.

    Unknown keys are rejected.

    Raises:
        ConfigError: If a key is missing, unknown or holds an invalid value.
    """
    try:
        config_file = CONFIG_FILE_SCHEMA.load(mapping)
    except ValidationError as error:
        raise ConfigError(f"invalid configuration: {error.messages}") from error

    return config_file.to_experiment()


def load_config(path: Path | str) -> ExperimentConfig:
    """Read a YAML configuration file.

    Raises:
        ConfigError: If the file is not valid YAML or not a valid configuration.
        OSError: If the file cannot be read.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        mapping = yaml.safe_load(text)
    except yaml.YAMLError as error:
        raise ConfigError(f"{path} is not valid YAML: {error}") from error

    return parse_config(mapping)
