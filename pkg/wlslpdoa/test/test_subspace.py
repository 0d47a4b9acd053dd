# -*- coding: utf-8 -*-
"""Test the real signal subspace and its complex counterpart."""

import unittest

import numpy as np
from numpy.testing import assert_allclose

from wlslpdoa.array_signal_model import (
    SourceScenario,
    UlaGeometry,
    exact_covariance,
    steering_matrix,
)
from wlslpdoa.common import PreconditionError
from wlslpdoa.subspace import (
    ComplexSubspace,
    RealSubspace,
    complexify_subspace,
    fix_signs,
    signal_subspace,
)
from wlslpdoa.unitary_transform import (
    RealCovariance,
    build_unitary_q,
    exchange_matrix,
    to_real_covariance,
)


def noise_free_real_covariance(angles, sensor_count):
    scenario = SourceScenario(angles=angles, noise_power=0.0)
    geometry = UlaGeometry(sensor_count)
    q = build_unitary_q(sensor_count)
    return (
        to_real_covariance(exact_covariance(scenario, geometry), q),
        steering_matrix(scenario, geometry),
        q,
    )


class TestSignalSubspace(unittest.TestCase):
    def test_diagonal(self):
        subspace = signal_subspace(RealCovariance(np.diag([3.0, 2.0, 1.0])), 2)
        assert_allclose(subspace.basis, np.eye(3)[:, :2])
        assert_allclose(subspace.singular_values, [3, 2, 1])
        assert_allclose(subspace.complement, np.eye(3)[:, 2:])
        self.assertEqual(subspace.warnings, ())

    def test_noise_free_spectrum(self):
        real, _, _ = noise_free_real_covariance((6.0, 45.0), 10)
        singular_values = signal_subspace(real, 2).singular_values
        self.assertTrue(np.all(singular_values[2:] <= 1e-10 * singular_values[0]))

    def test_degenerate_spectrum_warns(self):
        subspace = signal_subspace(RealCovariance(np.eye(4)), 1)
        self.assertEqual(len(subspace.warnings), 1)
        self.assertIn("degenerate", subspace.warnings[0])

    def test_zero_covariance_is_degenerate(self):
        subspace = signal_subspace(RealCovariance(np.zeros((4, 4))), 1)
        self.assertEqual(len(subspace.warnings), 1)
        assert_allclose(subspace.singular_values, 0)

    def test_sign_convention(self):
        vectors = fix_signs(np.array([[0.1, -0.2], [-0.9, 0.3], [0.2, -0.8]]))
        assert_allclose(vectors, [[-0.1, 0.2], [0.9, -0.3], [-0.2, 0.8]])

    def test_scale_invariance(self):
        rng = np.random.default_rng(6)
        factor = rng.standard_normal((6, 6))
        covariance = factor @ factor.T
        basis = signal_subspace(RealCovariance(covariance), 2).basis
        scaled = signal_subspace(RealCovariance(4 * covariance), 2).basis
        assert_allclose(scaled, basis, atol=1e-12)

    def test_rank_bounds(self):
        for source_count in (0, 4):
            with self.assertRaises(PreconditionError):
                signal_subspace(RealCovariance(np.eye(4)), source_count)


class TestComplexSubspace(unittest.TestCase):
    def setUp(self):
        real, self.steering, self.q = noise_free_real_covariance((6.0, 45.0), 10)
        self.complex_subspace = complexify_subspace(signal_subspace(real, 2), self.q)

    def test_orthonormal(self):
        basis = self.complex_subspace.basis
        assert_allclose(basis.conj().T @ basis, np.eye(2), atol=1e-10)

    def test_spans_steering_vectors(self):
        steering = self.steering
        projector = steering @ np.linalg.solve(
            steering.conj().T @ steering, steering.conj().T
        )
        basis = self.complex_subspace.basis
        assert_allclose(projector @ basis, basis, atol=1e-8)

    def test_conjugate_symmetric(self):
        basis = self.complex_subspace.basis
        assert_allclose(exchange_matrix(10) @ basis, basis.conj(), atol=1e-10)

    def test_size_mismatch(self):
        subspace = signal_subspace(RealCovariance(np.diag([3.0, 2.0, 1.0])), 1)
        with self.assertRaises(PreconditionError):
            complexify_subspace(subspace, build_unitary_q(4))

    def test_rejects_non_orthonormal_basis(self):
        with self.assertRaises(PreconditionError):
            ComplexSubspace(np.ones((4, 1), dtype=complex))

    def test_rejects_asymmetric_basis(self):
        with self.assertRaises(PreconditionError):
            ComplexSubspace(np.eye(4, 1, dtype=complex))

    def test_unchecked_basis(self):
        self.assertEqual(ComplexSubspace(np.ones((4, 1)), check=False).rank, 1)

    def test_real_basis_must_be_orthonormal(self):
        with self.assertRaises(PreconditionError):
            RealSubspace(
                basis=2 * np.eye(3, 1),
                singular_values=np.ones(3),
                complement=np.eye(3, 2, -1),
            )
