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
"""Command line interface to the DOA benchmark."""

import logging
import sys
from contextlib import contextmanager
from dataclasses import replace
from typing import Iterator

import click
import structlog
from marshmallow import ValidationError

from wlslpdoa.array_signal_model import (
    sample_covariance,
    substream_seed,
    synthesize_snapshots,
)
from wlslpdoa.common import ALGORITHMS, DoaError
from wlslpdoa.config import load_config
from wlslpdoa.experiment_harness import (
    ESTIMATORS,
    crb_curve,
    operating_point,
    run_sweep,
)
from wlslpdoa.outputs import emit_outputs, plot_curve, read_curve_csv
from wlslpdoa.snapshot_io import read_snapshots, write_snapshots
from wlslpdoa.wls_lp_estimator import SolverSettings

logger = structlog.get_logger(__name__)


def configure_logging(verbose: bool) -> None:
    structlog.configure(
        wrapper_class=structlog.make_filtering_bound_logger(
            logging.DEBUG if verbose else logging.INFO
        ),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
    )


@contextmanager
def reported_errors() -> Iterator[None]:
    """Turn expected failures into a one line exit message."""
    try:
        yield
    except (DoaError, ValidationError, OSError) as error:
        raise SystemExit(f"doabench: {error}") from error


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log debug events.")
def main(verbose):
    """Estimate directions of arrival and benchmark the estimators."""
    configure_logging(verbose)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", required=True, help="Prefix of the written files.")
@click.option("--trials", type=int, help="Override the number of trials.")
@click.option("--seed", type=int, help="Override the master seed.")
@click.option("--jobs", default=1, show_default=True, help="Worker processes.")
def sweep(config_path, out, trials, seed, jobs):
    """Run a Monte-Carlo sweep and write CSV, SVG and metadata."""
    with reported_errors():
        config = load_config(config_path)
        overrides = {
            key: value
            for key, value in (("n_trials", trials), ("master_seed", seed))
            if value is not None
        }
        if overrides:
            config = replace(config, **overrides)
        logger.debug("sweep_started", config=config_path, jobs=jobs, **overrides)
        for path in emit_outputs(run_sweep(config, jobs=jobs), out):
            click.echo(path)


@main.command()
@click.option("--snapshots", "snapshot_path", required=True, type=click.Path())
@click.option("--k", "source_count", required=True, type=int)
@click.option(
    "--algorithm", default="wlslp", show_default=True, type=click.Choice(ALGORITHMS)
)
@click.option("--spacing-ratio", default=0.5, show_default=True)
@click.option("--max-iter", default=10, show_default=True)
@click.option("--tol", default=1e-8, show_default=True)
def estimate(snapshot_path, source_count, algorithm, spacing_ratio, max_iter, tol):
    """Estimate the angles of arrival in a snapshot file."""
    with reported_errors():
        snapshots = read_snapshots(snapshot_path, spacing_ratio)
        result = ESTIMATORS[algorithm](
            sample_covariance(snapshots),
            source_count,
            snapshots.geometry,
            SolverSettings(max_iter=max_iter, tol=tol),
        )
    for angle in result.angles_deg:
        click.echo(f"{angle:.9g}")
    for warning in result.diagnostics:
        click.echo(f"warning: {warning}", err=True)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def crb(config_path):
    """Print the stochastic CRB at every sweep point."""
    with reported_errors():
        config = load_config(config_path)
        bounds = crb_curve(config)
    for value, result in bounds:
        if result is None:
            click.echo(f"{config.sweep.variable}={value:.9g}: undefined")
            continue
        per_angle = ", ".join(f"{bound:.9g}" for bound in result.per_angle_bound_deg)
        click.echo(
            f"{config.sweep.variable}={value:.9g}: {result.mean_bound_deg:.9g} deg "
            f"(per angle {per_angle})"
        )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--point", default=0, show_default=True, help="Sweep point index.")
@click.option("--seed", type=int, help="Override the master seed.")
def synthesize(config_path, out, point, seed):
    """Write snapshots of a configured scenario to a DOA1 file."""
    with reported_errors():
        config = load_config(config_path)
        if not 0 <= point < len(config.sweep.values):
            raise click.BadParameter(
                f"must be below {len(config.sweep.values)}", param_hint="--point"
            )
        scenario, geometry, n_snapshots = operating_point(config, point)
        master_seed = config.master_seed if seed is None else seed
        snapshots = synthesize_snapshots(
            scenario, geometry, n_snapshots, substream_seed(master_seed, point, 0)
        )
        write_snapshots(out, snapshots)
        logger.info("artifact_written", path=out, angles_deg=scenario.angles)


@main.command()
@click.option("--csv", "csv_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
def plot(csv_path, out):
    """Draw the chart of a CSV written by sweep."""
    with reported_errors():
        plot_curve(read_curve_csv(csv_path), out)
