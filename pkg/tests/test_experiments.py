#!/usr/bin/env python3
"""
Unit tests for rscf.experiments on a deliberately tiny configuration.

Curves from such small runs are noisy, so these tests only check the shape
and reproducibility of what the sweeps produce, not the ordering of the
schemes.
"""

import csv
import dataclasses
import json
import os
import sys
import tempfile
import unittest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from rscf import timing  # noqa: E402
from rscf.experiments import (  # noqa: E402
    CSV_FIELDS, RANDOM_INIT_TAG, SWEEPS, convergence_trace, export_drop, run_sweep_csit,
    run_sweep_iterations, run_sweep_snr,
)
from rscf.precoders import CF_MMSE, RSCF_PC_RB  # noqa: E402
from rscf.rates import SweepPoint  # noqa: E402
from rscf.settings import SimConfig  # noqa: E402

TINY = SimConfig(trials=2, n_err=2, alpha_grid_step=0.5, snr_db_list=(10.0, 20.0),
                 sigma_e2_list=(0.0, 0.4), iteration_list=(0, 2), schemes=(CF_MMSE, RSCF_PC_RB),
                 master_seed=11)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


class SweepTestCase(unittest.TestCase):

    def setUp(self):
        self._verbose = timing.VERBOSE
        timing.VERBOSE = False
        self._tmp = tempfile.TemporaryDirectory()
        self.out = self._tmp.name

    def tearDown(self):
        timing.VERBOSE = self._verbose
        self._tmp.cleanup()


class SnrSweepTest(SweepTestCase):

    def test_rows_and_files(self):
        curve = run_sweep_snr(TINY, self.out, workers=1)
        rows = _read_csv(os.path.join(self.out, "sweep_snr.csv"))
        self.assertEqual(list(rows[0].keys()), list(CSV_FIELDS))
        self.assertEqual([(r["value"], r["scheme"]) for r in rows],
                         [("10.0", CF_MMSE), ("10.0", RSCF_PC_RB),
                          ("20.0", CF_MMSE), ("20.0", RSCF_PC_RB)])
        self.assertTrue(all(r["sweep"] == "snr" and r["trials"] == "2" and r["seed"] == "11"
                            for r in rows))
        self.assertEqual(float(rows[3]["esr_bps_hz"]), curve.esr[RSCF_PC_RB][1])
        # private-only schemes never put power in a common stream
        self.assertEqual({r["alpha_frac"] for r in rows if r["scheme"] == CF_MMSE}, {"0.0"})
        for name in ("geometry.csv", "clusters.json"):
            self.assertTrue(os.path.exists(os.path.join(self.out, name)))

    def test_manifest(self):
        run_sweep_snr(TINY, self.out, workers=1)
        with open(os.path.join(self.out, "sweep_snr.manifest.json"), encoding="utf-8") as f:
            manifest = json.load(f)
        self.assertEqual(manifest["sweep"], "snr")
        self.assertEqual(manifest["csv"], "sweep_snr.csv")
        self.assertEqual(manifest["seed"], 11)
        self.assertTrue(manifest["version"].startswith("rscf "))
        self.assertEqual(manifest["config"]["trials"], 2)
        self.assertEqual(manifest["config"]["schemes"], [CF_MMSE, RSCF_PC_RB])

    def test_worker_count_does_not_change_the_files(self):
        with tempfile.TemporaryDirectory() as other:
            run_sweep_snr(TINY, self.out, workers=1)
            run_sweep_snr(TINY, other, workers=3)
            for name in ("sweep_snr.csv", "sweep_snr.manifest.json"):
                self.assertEqual(_read_bytes(os.path.join(self.out, name)),
                                 _read_bytes(os.path.join(other, name)))

    def test_without_output_directory(self):
        curve = run_sweep_snr(TINY, workers=2)
        self.assertEqual(set(curve.esr), {CF_MMSE, RSCF_PC_RB})
        self.assertEqual(os.listdir(self.out), [])


class IterationSweepTest(SweepTestCase):

    def test_mmse_start_only(self):
        curve = run_sweep_iterations(TINY, self.out, workers=1)
        self.assertEqual(list(curve.esr), [RSCF_PC_RB])
        self.assertEqual(len(curve.esr[RSCF_PC_RB]), 2)
        self.assertTrue(os.path.exists(os.path.join(self.out, "convergence_trace.csv")))
        self.assertFalse(os.path.exists(
            os.path.join(self.out, "convergence_trace_random_init.csv")))

    def test_random_start_adds_a_curve(self):
        cfg = dataclasses.replace(TINY, random_init=True)
        curve = run_sweep_iterations(cfg, self.out, workers=1)
        self.assertEqual(list(curve.esr), [RSCF_PC_RB, RSCF_PC_RB + RANDOM_INIT_TAG])
        rows = _read_csv(os.path.join(self.out, "sweep_iters.csv"))
        self.assertEqual([r["value"] for r in rows], ["0", "0", "2", "2"])
        for name in ("convergence_trace.csv", "convergence_trace_random_init.csv"):
            self.assertTrue(os.path.exists(os.path.join(self.out, name)))

    def test_convergence_trace_covers_every_iteration(self):
        trace = convergence_trace(TINY)
        self.assertEqual(len(trace), max(TINY.iteration_list) + 1)


class CsitSweepTest(SweepTestCase):

    def test_rows(self):
        curve = run_sweep_csit(TINY, self.out, workers=2)
        rows = _read_csv(os.path.join(self.out, "sweep_csit.csv"))
        self.assertEqual([r["value"] for r in rows], ["0.0", "0.0", "0.4", "0.4"])
        self.assertTrue(all(r["sweep"] == "sigma_e2" for r in rows))
        for fracs in curve.alpha_frac.values():
            self.assertTrue(all(0.0 <= a < 1.0 for a in fracs))

    def test_registry(self):
        self.assertEqual(set(SWEEPS), {"sweep-snr", "sweep-iters", "sweep-csit"})
        self.assertIs(SWEEPS["sweep-csit"], run_sweep_csit)


class ExportDropTest(SweepTestCase):

    def test_geometry_and_clusters(self):
        drop = export_drop(TINY, SweepPoint(22.0, 0.3), self.out)
        rows = _read_csv(os.path.join(self.out, "geometry.csv"))
        self.assertEqual(len(rows), TINY.n_t + TINY.k)
        with open(os.path.join(self.out, "clusters.json"), encoding="utf-8") as f:
            clusters = json.load(f)
        self.assertEqual(len(clusters), TINY.k)
        self.assertEqual(clusters["user_0"], list(drop.clusters.sets[0]))

    def test_no_clusters_without_clustering(self):
        cfg = SimConfig(clustering_enabled=False, master_seed=11)
        export_drop(cfg, SweepPoint(22.0, 0.3), self.out)
        self.assertFalse(os.path.exists(os.path.join(self.out, "clusters.json")))


if __name__ == '__main__':
    unittest.main()
