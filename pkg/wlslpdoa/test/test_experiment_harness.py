# -*- coding: utf-8 -*-
"""Test trials, RMSE aggregation and sweeps."""

import unittest
from dataclasses import replace
from unittest import mock

import numpy as np
from numpy.testing import assert_allclose

from wlslpdoa.array_signal_model import UlaGeometry
from wlslpdoa.common import ALGORITHMS, ConfigError, EstimationError
from wlslpdoa.experiment_harness import (
    ESTIMATORS,
    ExperimentConfig,
    SweepSpec,
    TrialRecord,
    compute_rmse,
    crb_curve,
    operating_point,
    pair_estimates,
    run_sweep,
    run_trial,
    split_trials,
    summarise_point,
)


def make_config(**overrides) -> ExperimentConfig:
    settings = {
        "geometry": UlaGeometry(10),
        "angles_deg": (6.0, 45.0),
        "n_snapshots": 50,
        "snr_db": 10.0,
        "sweep": SweepSpec("snr_db", (10.0,)),
        "algorithms": ("wlslp", "root_music"),
        "n_trials": 4,
        "master_seed": 7,
    }
    settings.update(overrides)
    return ExperimentConfig(**settings)


def record(trial_index, estimates, algorithm="wlslp"):
    return TrialRecord(
        trial_index=trial_index, algorithm=algorithm, estimates_deg=estimates
    )


class TestConfig(unittest.TestCase):
    def test_defaults(self):
        config = make_config()
        self.assertEqual(config.source_count, 2)
        self.assertEqual(config.solver.max_iter, 10)

    def test_sweep_must_be_monotone(self):
        with self.assertRaises(ConfigError):
            SweepSpec("snr_db", (0.0, 10.0, 5.0))
        with self.assertRaises(ConfigError):
            SweepSpec("snr_db", ())

    def test_unknown_sweep_variable(self):
        with self.assertRaises(ConfigError):
            SweepSpec("spacing_ratio", (0.5,))

    def test_integer_sweep_values(self):
        with self.assertRaises(ConfigError):
            SweepSpec("sensor_count", (6.5, 8.0))

    def test_theta2_needs_two_sources(self):
        with self.assertRaises(ConfigError):
            make_config(
                angles_deg=(6.0, 20.0, 45.0), sweep=SweepSpec("theta2_deg", (10.0,))
            )

    def test_invalid_operating_point(self):
        with self.assertRaises(ConfigError):
            make_config(sweep=SweepSpec("sensor_count", (2.0, 4.0)))
        with self.assertRaises(ConfigError):
            make_config(sweep=SweepSpec("theta2_deg", (6.0, 20.0)))

    def test_algorithms(self):
        with self.assertRaises(ConfigError):
            make_config(algorithms=())
        with self.assertRaises(ConfigError):
            make_config(algorithms=("wlslp", "music"))
        with self.assertRaises(ConfigError):
            make_config(algorithms=("wlslp", "wlslp"))

    def test_trials(self):
        with self.assertRaises(ConfigError):
            make_config(n_trials=0)


class TestOperatingPoint(unittest.TestCase):
    def test_each_variable(self):
        scenario, geometry, n_snapshots = operating_point(
            make_config(sweep=SweepSpec("snr_db", (0.0, 20.0))), 1
        )
        self.assertAlmostEqual(scenario.noise_power, 0.01)
        _, geometry, _ = operating_point(
            make_config(sweep=SweepSpec("sensor_count", (6.0, 12.0))), 1
        )
        self.assertEqual(geometry.sensor_count, 12)
        _, _, n_snapshots = operating_point(
            make_config(sweep=SweepSpec("n_snapshots", (100.0, 200.0))), 0
        )
        self.assertEqual(n_snapshots, 100)
        scenario, _, _ = operating_point(
            make_config(sweep=SweepSpec("theta2_deg", (10.0, 20.0))), 1
        )
        self.assertEqual(scenario.angles, (6.0, 20.0))

    def test_noise_free(self):
        scenario, _, _ = operating_point(make_config(noise_free=True), 0)
        self.assertEqual(scenario.noise_power, 0.0)


class TestRunTrial(unittest.TestCase):
    def test_one_record_per_algorithm(self):
        records = run_trial(make_config(), 0, 0)
        self.assertEqual([item.algorithm for item in records], ["wlslp", "root_music"])
        self.assertTrue(all(not item.failed for item in records))

    def test_deterministic(self):
        config = make_config()
        first = [item.estimates_deg for item in run_trial(config, 0, 3)]
        second = [item.estimates_deg for item in run_trial(config, 0, 3)]
        self.assertEqual(first, second)
        other = [item.estimates_deg for item in run_trial(config, 0, 4)]
        self.assertNotEqual(first, other)

    def test_noise_free_trial(self):
        config = make_config(
            noise_free=True,
            algorithms=tuple(ALGORITHMS),
        )
        for item in run_trial(config, 0, 0):
            assert_allclose(item.estimates_deg, [6, 45], atol=1e-6)

    def test_unexpected_exception_is_recorded(self):
        def failing(*args):
            raise ZeroDivisionError("division by zero")

        with mock.patch.dict(ESTIMATORS, {"wlslp": failing}):
            records = run_trial(make_config(), 0, 0)
        self.assertTrue(records[0].failed)
        self.assertIsNone(records[0].estimates_deg)
        self.assertEqual(
            records[0].warnings, ("ZeroDivisionError: division by zero",)
        )
        self.assertFalse(records[1].failed)


class TestRmse(unittest.TestCase):
    def test_exact(self):
        self.assertEqual(compute_rmse([record(0, (1.0, 2.0))], (1.0, 2.0)), 0.0)

    def test_hand_arithmetic(self):
        records = [record(0, (11.0,)), record(1, (9.0,))]
        self.assertAlmostEqual(compute_rmse(records, (10.0,)), 1.0)

    def test_pairing(self):
        assert_allclose(pair_estimates((12.1, 9.9), (10.0, 12.0)), [9.9, 12.1])
        self.assertAlmostEqual(
            compute_rmse([record(0, (12.1, 9.9))], (10.0, 12.0)), 0.1
        )

    def test_pairing_many_sources(self):
        truth = np.arange(7.0) * 10
        shuffled = truth[[3, 0, 6, 1, 5, 2, 4]] + 0.5
        assert_allclose(pair_estimates(shuffled, truth), truth + 0.5)

    def test_failures_are_excluded(self):
        records = [record(0, None), record(1, (11.0,))]
        self.assertAlmostEqual(compute_rmse(records, (10.0,)), 1.0)

    def test_all_failed(self):
        with self.assertRaises(EstimationError):
            compute_rmse([record(0, None)], (10.0,))

    def test_missing_value(self):
        config = make_config(algorithms=("wlslp",), n_trials=2)
        failed = [record(0, None), record(1, None)]
        point = summarise_point(config, 0, failed)
        self.assertTrue(np.isnan(point.rmse_deg["wlslp"]))
        self.assertEqual(point.n_failed["wlslp"], 2)


class TestSweep(unittest.TestCase):
    def test_single_trial(self):
        config = make_config(n_trials=1)
        curve = run_sweep(config)
        for item in run_trial(config, 0, 0):
            errors = np.subtract(item.estimates_deg, (6.0, 45.0))
            self.assertAlmostEqual(
                curve.points[0].rmse_deg[item.algorithm],
                np.sqrt(np.mean(errors**2)),
            )

    def test_curve_shape(self):
        config = make_config(sweep=SweepSpec("snr_db", (0.0, 10.0, 20.0)))
        curve = run_sweep(config)
        self.assertEqual(curve.values, (0.0, 10.0, 20.0))
        self.assertEqual(curve.rmse("wlslp").shape, (3,))
        for point in curve.points:
            for algorithm in config.algorithms:
                self.assertEqual(point.n_failed[algorithm], 0)
                self.assertGreaterEqual(point.rmse_deg[algorithm], 0)
            self.assertIn("wlslp", point.mean_elapsed)

    def test_crb_is_independent_of_algorithms(self):
        config = make_config(sweep=SweepSpec("snr_db", (0.0, 10.0)), n_trials=2)
        other = replace(config, algorithms=("unitary_esprit",))
        assert_allclose(run_sweep(config).crb(), run_sweep(other).crb())
        assert_allclose(
            [result.mean_bound_deg for _, result in crb_curve(config)],
            run_sweep(config).crb(),
        )

    def test_noise_free_sweep(self):
        curve = run_sweep(make_config(noise_free=True, n_trials=2))
        self.assertTrue(np.isnan(curve.points[0].crb_deg))
        assert_allclose(curve.rmse("wlslp"), 0, atol=1e-6)

    def test_parallel_matches_serial(self):
        config = make_config(sweep=SweepSpec("snr_db", (0.0, 10.0)), n_trials=6)
        serial = run_sweep(config, jobs=1)
        pooled = run_sweep(config, jobs=2)
        for algorithm in config.algorithms:
            self.assertEqual(
                serial.rmse(algorithm).tolist(), pooled.rmse(algorithm).tolist()
            )

    def test_jobs_must_be_positive(self):
        with self.assertRaises(ConfigError):
            run_sweep(make_config(), jobs=0)

    def test_trial_blocks_cover_every_trial(self):
        blocks = split_trials(10, 3)
        self.assertEqual(
            [index for block in blocks for index in block], list(range(10))
        )
