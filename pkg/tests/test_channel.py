#!/usr/bin/env python3
"""
Unit tests for rscf.channel and rscf.units.

These pin down the link budget the simulator stands on:

  * the three-slope path loss and its Hata-style attenuation at 1900 MHz,
  * the thermal noise power of the default receiver,
  * the imperfect-CSI decomposition G = (G_hat + G_tilde) / tau and the
    variances of its parts,
  * the diagonal error covariance theta.
"""

import csv
import math
import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from rscf.channel import (  # noqa: E402
    NetworkGeometry, NoiseModel, attenuation_db, draw_channel, draw_error_bank,
    dump_geometry_csv, error_covariance, large_scale, noise_variance, path_loss_db,
    place_network, pt_for_snr, redraw_error, snr_db_for_pt,
)
from rscf.errors import ConfigurationError, DegenerateChannelError  # noqa: E402
from rscf.units import db_to_linear, linear_to_db  # noqa: E402


class UnitsTest(unittest.TestCase):

    def test_db_round_numbers(self):
        self.assertAlmostEqual(db_to_linear(10.0), 10.0)
        self.assertAlmostEqual(db_to_linear(-30.0), 1e-3)
        self.assertAlmostEqual(linear_to_db(100.0), 20.0)

    def test_scalars_stay_python_floats(self):
        self.assertIsInstance(db_to_linear(3.0), float)
        self.assertIsInstance(linear_to_db(2.0), float)

    def test_arrays_are_vectorised(self):
        out = db_to_linear(np.array([0.0, 10.0, 20.0]))
        np.testing.assert_allclose(out, [1.0, 10.0, 100.0])

    def test_zero_maps_to_minus_infinity(self):
        self.assertEqual(linear_to_db(0.0), -math.inf)


class PathLossTest(unittest.TestCase):
    """Three-slope model with d0 = 10 m and d1 = 50 m."""

    L = attenuation_db()

    def test_attenuation_at_default_carrier(self):
        self.assertAlmostEqual(self.L, 140.715, delta=0.01)

    def test_short_range_branch_is_flat(self):
        expected = -self.L - 45.4846
        self.assertAlmostEqual(path_loss_db(5.0), expected, places=3)
        self.assertAlmostEqual(path_loss_db(0.0), expected, places=3)
        self.assertAlmostEqual(path_loss_db(10.0), expected, places=3)

    def test_middle_branch(self):
        expected = -self.L - 15 * math.log10(50) - 20 * math.log10(30)
        self.assertAlmostEqual(path_loss_db(30.0), expected, places=9)

    def test_far_branch(self):
        self.assertAlmostEqual(path_loss_db(60.0), -self.L - 35 * math.log10(60), places=9)

    def test_vectorised_over_distance_matrix(self):
        d = np.array([[5.0, 30.0], [60.0, 0.0]])
        out = path_loss_db(d)
        self.assertEqual(out.shape, (2, 2))
        self.assertAlmostEqual(out[1, 0], path_loss_db(60.0))
        self.assertAlmostEqual(out[1, 1], path_loss_db(5.0))

    def test_continuous_at_breakpoints(self):
        for d in (10.0, 50.0):
            self.assertAlmostEqual(path_loss_db(d - 1e-9), path_loss_db(d + 1e-9), places=6)

    def test_gain_falls_with_distance_inside_each_branch(self):
        near = path_loss_db(np.linspace(11.0, 50.0, 40))
        far = path_loss_db(np.linspace(51.0, 150.0, 40))
        self.assertTrue(np.all(np.diff(near) < 0))
        self.assertTrue(np.all(np.diff(far) < 0))

    def test_non_positive_frequency_rejected(self):
        with self.assertRaises(ConfigurationError):
            path_loss_db(20.0, freq_mhz=0.0)


class NoiseTest(unittest.TestCase):

    def test_default_receiver_noise_power(self):
        self.assertTrue(math.isclose(noise_variance(NoiseModel()), 2.0025e-12, rel_tol=1e-4))
        self.assertEqual(NoiseModel().sigma_n2, noise_variance(NoiseModel()))

    def test_zero_bandwidth_rejected(self):
        with self.assertRaises(ConfigurationError):
            noise_variance(NoiseModel(B=0.0))


class GeometryTest(unittest.TestCase):

    def test_same_seed_same_drop(self):
        a = place_network(12, 3, 100.0, np.random.default_rng(7))
        b = place_network(12, 3, 100.0, np.random.default_rng(7))
        np.testing.assert_array_equal(a.ap_xy, b.ap_xy)
        np.testing.assert_array_equal(a.ue_xy, b.ue_xy)
        self.assertEqual((a.n_t, a.k), (12, 3))

    def test_points_inside_region(self):
        geom = place_network(12, 3, 100.0, np.random.default_rng(1))
        for xy in (geom.ap_xy, geom.ue_xy):
            self.assertTrue(np.all((xy >= 0.0) & (xy <= 100.0)))
        self.assertEqual((geom.h_ap, geom.h_ue), (15.0, 1.65))

    def test_degenerate_region_rejected(self):
        with self.assertRaises(ConfigurationError):
            place_network(1, 1, 0.0, np.random.default_rng(0))

    def test_overloaded_network_rejected(self):
        with self.assertRaises(ConfigurationError):
            place_network(3, 4, 100.0, np.random.default_rng(0))

    def test_distances_are_horizontal(self):
        geom = NetworkGeometry(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0], [0.0, 0.0]]))
        np.testing.assert_allclose(geom.distances(), [[5.0, 0.0]])

    def test_geometry_csv_has_one_row_per_node(self):
        geom = place_network(4, 2, 50.0, np.random.default_rng(3))
        with tempfile.TemporaryDirectory() as tmp:
            path = dump_geometry_csv(geom, os.path.join(tmp, "geometry.csv"))
            with open(path, newline="") as f:
                rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["kind", "index", "x_m", "y_m", "height_m"])
        self.assertEqual([r[0] for r in rows[1:]], ["ap"] * 4 + ["ue"] * 2)


class LargeScaleTest(unittest.TestCase):

    def test_without_shadowing_gain_is_pure_path_loss(self):
        geom = place_network(5, 2, 100.0, np.random.default_rng(11))
        zeta = large_scale(geom, 0.0, np.random.default_rng(12))
        np.testing.assert_allclose(zeta, db_to_linear(path_loss_db(geom.distances())))
        self.assertTrue(np.all(zeta > 0))

    def test_same_seed_same_gains(self):
        geom = place_network(5, 2, 100.0, np.random.default_rng(11))
        a = large_scale(geom, 8.0, np.random.default_rng(4))
        b = large_scale(geom, 8.0, np.random.default_rng(4))
        np.testing.assert_array_equal(a, b)

    def test_lognormal_shadowing_mean(self):
        # 1000 APs x 1000 users all 5 m apart: one path loss, 10^6 shadowing draws
        geom = NetworkGeometry(np.zeros((1000, 2)), np.tile([3.0, 4.0], (1000, 1)))
        zeta = large_scale(geom, 8.0, np.random.default_rng(5))
        ratio = zeta / db_to_linear(path_loss_db(5.0))
        expected = math.exp((8.0 * math.log(10) / 10) ** 2 / 2)   # about 5.45
        self.assertAlmostEqual(ratio.mean() / expected, 1.0, delta=0.03)

    def test_negative_shadowing_std_rejected(self):
        geom = place_network(2, 1, 10.0, np.random.default_rng(0))
        with self.assertRaises(ConfigurationError):
            large_scale(geom, -1.0, np.random.default_rng(0))


class ChannelTest(unittest.TestCase):
    """Estimate, error and true channel."""

    def setUp(self):
        self.rng = np.random.default_rng(2024)
        self.zeta = self.rng.uniform(0.5, 2.0, size=(6, 3))

    def test_perfect_csi(self):
        cs = draw_channel(self.zeta, 0.0, self.rng)
        self.assertEqual(cs.tau, 1.0)
        self.assertFalse(np.any(cs.G_tilde))
        np.testing.assert_array_equal(cs.G, cs.G_hat)

    def test_true_channel_assembled_from_parts(self):
        cs = draw_channel(self.zeta, 0.3, self.rng)
        self.assertAlmostEqual(cs.tau ** 2, 1.3)
        residual = np.abs(cs.G - (cs.G_hat + cs.G_tilde) / cs.tau).max()
        self.assertLess(residual, 1e-12)

    def test_arrays_are_read_only(self):
        cs = draw_channel(self.zeta, 0.3, self.rng)
        with self.assertRaises(ValueError):
            cs.G_hat[0, 0] = 0.0

    def test_true_channel_variance_equals_large_scale_gain(self):
        zeta = np.full((400, 250), 2.0)
        cs = draw_channel(zeta, 0.3, self.rng)
        self.assertAlmostEqual(np.mean(np.abs(cs.G) ** 2) / 2.0, 1.0, delta=0.02)
        self.assertAlmostEqual(np.mean(np.abs(cs.G_tilde) ** 2) / 0.6, 1.0, delta=0.02)

    def test_sigma_e2_outside_unit_interval_rejected(self):
        with self.assertRaises(ConfigurationError):
            draw_channel(self.zeta, 1.5, self.rng)

    def test_redraw_keeps_estimate(self):
        cs = draw_channel(self.zeta, 0.5, self.rng)
        a, b = redraw_error(cs, self.rng), redraw_error(cs, self.rng)
        np.testing.assert_array_equal(a.G_hat, cs.G_hat)
        np.testing.assert_array_equal(b.G_hat, cs.G_hat)
        self.assertFalse(np.allclose(a.G_tilde, b.G_tilde))
        self.assertLess(np.abs(a.G - (a.G_hat + a.G_tilde) / a.tau).max(), 1e-12)

    def test_redraw_is_identity_with_perfect_csi(self):
        cs = draw_channel(self.zeta, 0.0, self.rng)
        again = redraw_error(cs, self.rng)
        np.testing.assert_array_equal(again.G, cs.G)

    def test_conditional_mean_is_scaled_estimate(self):
        cs = draw_channel(self.zeta, 0.3, self.rng)
        bank = draw_error_bank(cs, 10000, self.rng)
        mean_G = ((cs.G_hat[None] + bank) / cs.tau).mean(axis=0)
        self.assertTrue(np.all(np.abs(mean_G - cs.G_hat / cs.tau) < 0.02 * np.sqrt(self.zeta)))


class ErrorCovarianceTest(unittest.TestCase):

    def test_hand_computed_example(self):
        theta = error_covariance(np.array([[1.0, 2.0], [3.0, 4.0]]), 0.5).theta
        np.testing.assert_allclose(theta, np.diag([1.5, 3.5]))

    def test_perfect_csi_gives_zero(self):
        self.assertFalse(np.any(error_covariance(np.ones((3, 2)), 0.0).theta))

    def test_hermitian(self):
        theta = error_covariance(np.random.default_rng(1).uniform(size=(5, 2)), 0.2).theta
        np.testing.assert_array_equal(theta, theta.conj().T)

    def test_matches_sample_covariance(self):
        rng = np.random.default_rng(99)
        zeta = np.array([[1.0, 2.0], [0.5, 1.5]])
        cs = draw_channel(zeta, 0.4, rng)
        bank = draw_error_bank(cs, 200000, rng)
        sample = np.einsum("bnk,bmk->nm", bank, bank.conj()) / bank.shape[0]
        theta = error_covariance(zeta, 0.4).theta
        scale = np.abs(np.diag(theta)).max()
        np.testing.assert_allclose(np.diag(sample).real, np.diag(theta).real, rtol=0.01)
        self.assertLess(abs(sample[0, 1]), 0.01 * scale)


class SnrTest(unittest.TestCase):

    def test_zero_db_on_unit_gains(self):
        # sum(zeta) = N_t K, so 0 dB needs exactly sigma_n^2
        self.assertAlmostEqual(pt_for_snr(0.0, np.ones((2, 2)), 2, 2, 1e-3), 1e-3)

    def test_round_trip(self):
        zeta = np.random.default_rng(8).uniform(1e-12, 1e-10, size=(12, 3))
        for snr_db in (0.0, 6.0, 22.0, 30.0):
            p_t = pt_for_snr(snr_db, zeta, 12, 3, 2.0025e-12)
            self.assertAlmostEqual(snr_db_for_pt(p_t, zeta, 12, 3, 2.0025e-12), snr_db)

    def test_ten_db_more_is_ten_times_the_power(self):
        zeta = np.ones((3, 1))
        ratio = pt_for_snr(20.0, zeta, 3, 1, 1.0) / pt_for_snr(10.0, zeta, 3, 1, 1.0)
        self.assertAlmostEqual(ratio, 10.0)

    def test_zero_gain_is_degenerate(self):
        with self.assertRaises(DegenerateChannelError):
            pt_for_snr(10.0, np.zeros((2, 2)), 2, 2, 1.0)


if __name__ == '__main__':
    unittest.main()
