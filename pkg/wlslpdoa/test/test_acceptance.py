# -*- coding: utf-8 -*-
"""End to end checks of the estimators and the benchmark.

The Monte-Carlo sweeps over the shipped configurations take minutes and only
run when WLSLPDOA_MONTE_CARLO is set in the environment.
"""

import os
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose

from wlslpdoa.array_signal_model import (
    HermitianCovariance,
    SourceScenario,
    UlaGeometry,
    exact_covariance,
    steering_derivative,
    steering_vector,
)
from wlslpdoa.baselines import root_music, unitary_esprit
from wlslpdoa.config import load_config
from wlslpdoa.experiment_harness import RmseCurve, SweepSpec, run_sweep
from wlslpdoa.outputs import curve_to_csv
from wlslpdoa.subspace import ComplexSubspace, complexify_subspace, signal_subspace
from wlslpdoa.unitary_transform import (
    build_unitary_q,
    exchange_matrix,
    forward_backward_average,
    to_real_covariance,
)
from wlslpdoa.wls_lp_estimator import (
    LpCoefficients,
    build_lp_system,
    build_toeplitz_b,
    estimate_doa_wlslp,
    wls_solve,
)

CONFIG_DIRECTORY = Path(__file__).resolve().parents[2] / "configs"
MONTE_CARLO = bool(os.environ.get("WLSLPDOA_MONTE_CARLO"))
MIN_SINE_SEPARATION = 1e-3


def random_noise_free_scenario(rng: np.random.Generator):
    geometry = UlaGeometry(int(rng.integers(6, 21)))
    source_count = int(rng.integers(1, 5))
    while True:
        angles = np.sort(rng.uniform(-80, 80, source_count))
        sines = np.sin(np.deg2rad(angles))
        if source_count == 1 or np.min(np.diff(sines)) >= MIN_SINE_SEPARATION:
            break
    return SourceScenario(angles=tuple(angles), noise_power=0.0), geometry


def random_hermitian(rng: np.random.Generator, size: int) -> HermitianCovariance:
    factor = rng.standard_normal((size, size)) + 1j * rng.standard_normal(
        (size, size)
    )
    return HermitianCovariance(factor @ factor.conj().T)


def increases(values: np.ndarray) -> int:
    return int(np.sum(np.diff(values) > 0))


def sweep_config(name: str):
    config = load_config(CONFIG_DIRECTORY / name)
    return config, run_sweep(config, jobs=os.cpu_count() or 1)


class TestNoiseFreeExactness(unittest.TestCase):
    def test_random_scenarios(self):
        rng = np.random.default_rng(20240601)
        for _ in range(50):
            scenario, geometry = random_noise_free_scenario(rng)
            covariance = exact_covariance(scenario, geometry)
            for estimator in (estimate_doa_wlslp, root_music, unitary_esprit):
                with self.subTest(
                    estimator=estimator.__name__,
                    angles=scenario.angles,
                    sensors=geometry.sensor_count,
                ):
                    estimate = estimator(covariance, scenario.source_count, geometry)
                    assert_allclose(estimate.angles_deg, scenario.angles, atol=1e-6)


class TestAlgebraicInvariants(unittest.TestCase):
    def test_unitary_q(self):
        for size in range(2, 21):
            q = build_unitary_q(size).data
            assert_allclose(q.conj().T @ q, np.eye(size), atol=1e-12)
            assert_allclose(exchange_matrix(size) @ q, q.conj(), atol=1e-12)

    def test_real_covariance_forms_agree(self):
        rng = np.random.default_rng(100)
        for _ in range(100):
            size = int(rng.integers(2, 11))
            covariance = random_hermitian(rng, size)
            q = build_unitary_q(size)
            averaged = (
                q.data.conj().T @ forward_backward_average(covariance).data @ q.data
            )
            scale = np.linalg.norm(covariance.data)
            assert_allclose(
                to_real_covariance(covariance, q).data / scale,
                averaged.real / scale,
                atol=1e-12,
            )

    def test_complex_subspace_conjugate_symmetry(self):
        rng = np.random.default_rng(5)
        for size in (5, 8, 13):
            q = build_unitary_q(size)
            real = to_real_covariance(random_hermitian(rng, size), q)
            basis = complexify_subspace(signal_subspace(real, 2), q).basis
            assert_allclose(exchange_matrix(size) @ basis, basis.conj(), atol=1e-10)

    def test_prediction_residual_identity(self):
        rng = np.random.default_rng(7)
        for size, order in ((5, 1), (9, 2), (12, 4)):
            basis = rng.standard_normal((size, order)) + 1j * rng.standard_normal(
                (size, order)
            )
            coefficients = LpCoefficients(
                rng.standard_normal(order) + 1j * rng.standard_normal(order)
            )
            system = build_lp_system(ComplexSubspace(basis, check=False))
            stacked = (build_toeplitz_b(coefficients, size) @ basis).T.reshape(-1)
            assert_allclose(
                stacked, system.design @ coefficients.coeffs - system.target, atol=1e-12
            )

    def test_first_iteration_is_least_squares(self):
        rng = np.random.default_rng(8)
        basis = np.linalg.qr(
            rng.standard_normal((10, 3)) + 1j * rng.standard_normal((10, 3))
        )[0]
        system = build_lp_system(ComplexSubspace(basis, check=False))
        ordinary, *_ = np.linalg.lstsq(system.design, system.target, rcond=None)
        assert_allclose(wls_solve(system, max_iter=1).coeffs, ordinary, atol=1e-12)

    def test_steering_derivative(self):
        geometry = UlaGeometry(10)
        theta = np.deg2rad(20.0)

        def error(step):
            difference = (
                steering_vector(np.rad2deg(theta + step), geometry)
                - steering_vector(np.rad2deg(theta - step), geometry)
            ) / (2 * step)
            return np.linalg.norm(difference - steering_derivative(20.0, geometry))

        self.assertTrue(50 <= error(1e-4) / error(1e-5) <= 200)


class TestDeterminism(unittest.TestCase):
    def test_schedule_independent_csv(self):
        config = load_config(CONFIG_DIRECTORY / "snr_sweep_6_45.yaml")
        config = replace(
            config, n_trials=8, sweep=SweepSpec("snr_db", (-10.0, 0.0, 10.0))
        )
        serial = curve_to_csv(run_sweep(config, jobs=1))
        self.assertEqual(serial, curve_to_csv(run_sweep(config, jobs=1)))
        self.assertEqual(serial, curve_to_csv(run_sweep(config, jobs=8)))

    @unittest.skipUnless(MONTE_CARLO, "long Monte-Carlo run")
    def test_full_sweep(self):
        config = load_config(CONFIG_DIRECTORY / "snr_sweep_6_45.yaml")
        self.assertEqual(
            curve_to_csv(run_sweep(config, jobs=1)),
            curve_to_csv(run_sweep(config, jobs=8)),
        )


@unittest.skipUnless(MONTE_CARLO, "long Monte-Carlo run")
class TestMonteCarlo(unittest.TestCase):
    def assert_near_bound(self, curve: RmseCurve, mask=None):
        ratio = curve.rmse("wlslp") / curve.crb()
        if mask is not None:
            ratio = ratio[mask]
        self.assertTrue(np.all(np.abs(ratio - 1) <= 0.25), ratio)

    def assert_not_worse_than_esprit(self, curve: RmseCurve, source_count: int):
        proposed = curve.rmse("wlslp")
        esprit = curve.rmse("unitary_esprit")
        trials = np.array(
            [
                point.n_trials - point.n_failed["unitary_esprit"]
                for point in curve.points
            ]
        )
        standard_error = esprit / np.sqrt(2 * source_count * trials)
        inversions = proposed > esprit
        self.assertLessEqual(int(np.sum(inversions)), 1)
        self.assertTrue(
            np.all(
                proposed[inversions] - esprit[inversions]
                <= standard_error[inversions]
            )
        )

    def test_snr_sweep(self):
        config, curve = sweep_config("snr_sweep_6_45.yaml")
        values = np.array(curve.values)
        self.assert_near_bound(curve, values >= 0)
        at_minus_eight = int(np.flatnonzero(values == -8)[0])
        self.assertLessEqual(
            curve.rmse("wlslp")[at_minus_eight], 2 * curve.crb()[at_minus_eight]
        )
        self.assert_not_worse_than_esprit(curve, config.source_count)

    def test_close_sources(self):
        config, curve = sweep_config("snr_sweep_30_45.yaml")
        self.assert_not_worse_than_esprit(curve, config.source_count)

    def test_sensor_sweep(self):
        _, curve = sweep_config("sensor_sweep.yaml")
        self.assert_near_bound(curve)
        self.assertLessEqual(increases(curve.rmse("wlslp")), 1)

    def test_snapshot_sweep(self):
        _, curve = sweep_config("snapshot_sweep.yaml")
        self.assert_near_bound(curve)
        self.assertLessEqual(increases(curve.rmse("wlslp")), 1)

    def test_resolution_sweep(self):
        _, curve = sweep_config("theta2_sweep.yaml")
        self.assert_near_bound(curve, np.array(curve.values) >= 20)
