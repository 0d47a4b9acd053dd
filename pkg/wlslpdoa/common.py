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
"""Constants and exceptions shared by the estimators and the harness."""

ALGORITHMS = [
    "wlslp",
    "lslp",
    "root_music",
    "unitary_root_music",
    "unitary_esprit",
]
SWEEP_VARIABLES = [
    "snr_db",
    "sensor_count",
    "n_snapshots",
    "theta2_deg",
]
CSV_HEADER = [
    "sweep_variable",
    "sweep_value",
    "algorithm",
    "rmse_deg",
    "crb_deg",
    "n_trials",
    "n_failed",
]
SNAPSHOT_MAGIC = b"DOA1"

HERMITIAN_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-10
ORTHONORMAL_TOLERANCE = 1e-10
UNITARY_TOLERANCE = 1e-12
DEGENERACY_RATIO = 1 + 1e-12
UNIT_CIRCLE_TOLERANCE = 1e-6
EXHAUSTIVE_PAIRING_LIMIT = 5


class DoaError(Exception):
    """Base class of the errors raised by this package."""


class DomainError(DoaError, ValueError):
    """An angle lies outside the open interval (-90°, 90°)."""


class PreconditionError(DoaError, ValueError):
    """Sizes or shapes of the inputs do not fit together."""


class EstimationError(DoaError, ArithmeticError):
    """The estimator could not produce K angles."""


class ConfigError(DoaError, ValueError):
    """An experiment configuration is inconsistent."""


class SnapshotFormatError(DoaError, ValueError):
    """A snapshot file does not follow the DOA1 layout."""
