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
"""Write sweep results as CSV, SVG and JSON metadata."""

import csv
import io
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import structlog  # noqa: E402

from wlslpdoa import __version__  # noqa: E402
from wlslpdoa.common import CSV_HEADER, PreconditionError  # noqa: E402
from wlslpdoa.experiment_harness import RmseCurve, RmsePoint  # noqa: E402

logger = structlog.get_logger(__name__)

SVG_HASH_SALT = "wlslpdoa"
AGGREGATION_POLICY = "RMSE is taken jointly over all sources and successful trials"
FAILURE_POLICY = "failed trials are excluded from the RMSE and counted in n_failed"


def format_number(number: float) -> str:
    return f"{number:.9g}"


def curve_to_csv(curve: RmseCurve) -> str:
    """One row per sweep value and algorithm, in sweep then algorithm order."""
    text = io.StringIO()
    writer = csv.writer(text, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for point in curve.points:
        for algorithm in curve.algorithms:
            writer.writerow(
                [
                    curve.variable,
                    format_number(point.value),
                    algorithm,
                    format_number(point.rmse_deg[algorithm]),
                    format_number(point.crb_deg),
                    point.n_trials,
                    point.n_failed[algorithm],
                ]
            )

    return text.getvalue()


def read_curve_csv(path: Path | str) -> RmseCurve:
    """Parse a CSV written by emit_outputs back into a curve.

    Raises:
        PreconditionError: if the header differs, the file has no rows
            or a sweep value repeats for one algorithm.
    """
    with open(path, encoding="utf-8", newline="") as stream:
        rows = list(csv.reader(stream))
    if not rows or rows[0] != CSV_HEADER:
        raise PreconditionError(f"{path} does not start with {','.join(CSV_HEADER)}")
    if len(rows) < 2:
        raise PreconditionError(f"{path} has no data rows")

    algorithms: list[str] = []
    grouped: dict[float, list[list[str]]] = {}
    for row in rows[1:]:
        if row[2] not in algorithms:
            algorithms.append(row[2])
        value_rows = grouped.setdefault(float(row[1]), [])
        if any(other[2] == row[2] for other in value_rows):
            raise PreconditionError(
                f"{path} repeats {row[0]}={row[1]} for {row[2]}"
            )
        value_rows.append(row)

    points = tuple(
        RmsePoint(
            value=value,
            rmse_deg={row[2]: float(row[3]) for row in value_rows},
            crb_deg=float(value_rows[0][4]),
            n_trials=int(value_rows[0][5]),
            n_failed={row[2]: int(row[6]) for row in value_rows},
        )
        for value, value_rows in grouped.items()
    )

    return RmseCurve(
        variable=rows[1][0], algorithms=tuple(algorithms), points=points
    )


def positive_or_nan(values: np.ndarray) -> np.ndarray:
    return np.where(values > 0, values, np.nan)


def plot_curve(curve: RmseCurve, path: Path | str) -> None:
    """Log-scale RMSE chart with one line per algorithm and the CRB.

    The SVG carries no date and a fixed hash salt so equal curves give equal
    files.
    """
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        figure, axes = plt.subplots(figsize=(8, 5))
        values = np.array(curve.values)
        for algorithm in curve.algorithms:
            axes.plot(
                values,
                positive_or_nan(curve.rmse(algorithm)),
                marker="o",
                label=algorithm,
            )
        crb = positive_or_nan(curve.crb())
        if np.any(np.isfinite(crb)):
            axes.plot(values, crb, linestyle="--", color="black", label="CRB")
        axes.set_yscale("log")
        axes.set_xlabel(curve.variable)
        axes.set_ylabel("RMSE (degrees)")
        axes.grid(True, which="both", alpha=0.3)
        axes.legend()
        figure.tight_layout()
        figure.savefig(path, format="svg", metadata={"Date": None})
        plt.close(figure)


def curve_metadata(curve: RmseCurve) -> dict:
    return {
        "version": __version__,
        "sweep_variable": curve.variable,
        "algorithms": list(curve.algorithms),
        "master_seed": curve.master_seed,
        "n_trials": curve.points[0].n_trials,
        "aggregation": AGGREGATION_POLICY,
        "failures": FAILURE_POLICY,
        "crb_deg": "square root of the mean per-angle CRB variance",
        "mean_elapsed_s": [
            {"sweep_value": point.value, **point.mean_elapsed}
            for point in curve.points
        ],
    }


def emit_outputs(curve: RmseCurve, destination: Path | str) -> list[Path]:
    """Write <destination>.csv, <destination>.svg and <destination>.meta.json.

    Raises:
        PreconditionError: if the curve has no points.
        OSError: if a file cannot be written.
    """
    if not curve.points:
        raise PreconditionError("an empty curve has nothing to write")
    prefix = Path(destination)
    csv_path = prefix.with_name(f"{prefix.name}.csv")
    svg_path = prefix.with_name(f"{prefix.name}.svg")
    meta_path = prefix.with_name(f"{prefix.name}.meta.json")

    csv_path.write_text(curve_to_csv(curve), encoding="utf-8", newline="")
    plot_curve(curve, svg_path)
    meta_path.write_text(
        json.dumps(curve_metadata(curve), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    for path in (csv_path, svg_path, meta_path):
        logger.info("artifact_written", path=str(path))

    return [csv_path, svg_path, meta_path]
