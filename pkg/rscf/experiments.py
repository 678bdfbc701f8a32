"""Experiment runners: ergodic sum rate versus SNR, iteration count and CSIT quality.

Each sweep returns an EsrCurve and, given an output directory, writes
<name>.csv plus <name>.manifest.json echoing the configuration. Every sweep
point reuses the same trial keys, so curves are compared on common random
numbers and results do not depend on the worker count.
"""
import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from rscf import __version__
from rscf.channel import dump_geometry_csv
from rscf.clustering import dump_clusters_json
from rscf.precoders import RSCF_PC_RB, dump_trace_csv
from rscf.rates import (
    EsrCurve, STREAM_ERRORS, SweepPoint, allocate_alpha_c, design, make_drop,
    mean_and_half_width, run_trials, trial_rng,
)
from rscf.timing import log, stopwatch, time_execution

SWEEP_SNR = "snr"
SWEEP_ITERATIONS = "iterations"
SWEEP_CSIT = "sigma_e2"

CSV_FIELDS = ("sweep", "scheme", "value", "esr_bps_hz", "ci", "trials", "n_err", "seed",
              "alpha_frac")
RANDOM_INIT_TAG = "[random-init]"


def _run_point(cfg, point, schemes, workers, tag, label, curve, suffix=""):
    with stopwatch() as elapsed:
        results = run_trials(cfg, point, schemes, workers)
    parts = []
    for scheme in schemes:
        mean, half = mean_and_half_width([r.sum_rate[scheme] for r in results])
        alpha_frac = float(np.mean([r.alpha_frac[scheme] for r in results]))
        curve.add_point(scheme + suffix, mean, half, alpha_frac)
        parts.append(f"{scheme + suffix}={mean:.3f}±{half:.3f}")
    clipped = sum(r.clipped for r in results)
    ridged = sum(r.ridged for r in results)
    notes = [f"{elapsed():.1f} s"]
    if clipped:
        notes.append(f"{clipped} clipped SINR terms")
    if ridged:
        notes.append(f"{ridged} ridge fallbacks")
    log(f"[{tag}] {label}: {', '.join(parts)} ({'; '.join(notes)})")
    return results


def _format(value):
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(curve, path):
    """Write curve rows in sweep order; floats use repr so reruns are byte-identical."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in curve.rows():
            writer.writerow({key: _format(value) for key, value in row.items()})
    return path


def write_manifest(cfg, sweep, csv_name, path):
    manifest = {
        "sweep": sweep,
        "csv": csv_name,
        "seed": cfg.master_seed,
        "version": f"rscf {__version__}",
        "config": dataclasses.asdict(cfg),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_results(curve, cfg, out_dir, name):
    """Persist <name>.csv and <name>.manifest.json under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_csv(curve, out_dir / f"{name}.csv")
    write_manifest(cfg, curve.sweep_name, csv_path.name, out_dir / f"{name}.manifest.json")
    log(f"[results] wrote {csv_path}")
    return csv_path


def export_drop(cfg, point, out_dir, trial=0):
    """Write the geometry and AP clusters of one trial for inspection."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    drop = make_drop(cfg, point, trial)
    dump_geometry_csv(drop.geom, out_dir / "geometry.csv")
    if drop.clusters is not None:
        dump_clusters_json(drop.clusters, out_dir / "clusters.json")
    return drop


@time_execution(label="[sweep-snr] ESR vs SNR")
def run_sweep_snr(cfg, out_dir=None, workers=None):
    curve = EsrCurve(SWEEP_SNR, list(cfg.snr_db_list), cfg.trials, cfg.n_err, cfg.master_seed)
    for snr_db in cfg.snr_db_list:
        point = SweepPoint(snr_db, cfg.snr_sweep_sigma_e2, cfg.i_t, cfg.random_init)
        _run_point(cfg, point, cfg.schemes, workers, "sweep-snr", f"{snr_db:g} dB", curve)
    if out_dir is not None:
        write_results(curve, cfg, out_dir, "sweep_snr")
        export_drop(cfg, SweepPoint(cfg.fixed_snr_db, cfg.snr_sweep_sigma_e2), out_dir)
    return curve


def convergence_trace(cfg, random_init=False, trial=0):
    """Private-design iterates of the robust scheme on one trial, at its searched alpha_c."""
    i_max = max(cfg.iteration_list)
    point = SweepPoint(cfg.fixed_snr_db, cfg.snr_sweep_sigma_e2, i_max, random_init)
    drop = make_drop(cfg, point, trial)
    rng = trial_rng(cfg.master_seed, trial, STREAM_ERRORS)
    alpha_c, _ = allocate_alpha_c(drop, RSCF_PC_RB, cfg.alpha_grid_step, cfg.n_err, rng)
    return design(drop, RSCF_PC_RB, alpha_c).trace


@time_execution(label="[sweep-iters] ESR vs iterations")
def run_sweep_iterations(cfg, out_dir=None, workers=None):
    """
    ESR of the fully robust scheme against the number of private-design iterations.

    With cfg.random_init a second curve, tagged [random-init], starts every
    trial from a seeded random private precoder instead of the MMSE one.
    """
    curve = EsrCurve(SWEEP_ITERATIONS, list(cfg.iteration_list), cfg.trials, cfg.n_err,
                     cfg.master_seed)
    inits = [False, True] if cfg.random_init else [False]
    for i_t in cfg.iteration_list:
        for random_init in inits:
            point = SweepPoint(cfg.fixed_snr_db, cfg.snr_sweep_sigma_e2, i_t, random_init)
            suffix = RANDOM_INIT_TAG if random_init else ""
            _run_point(cfg, point, [RSCF_PC_RB], workers, "sweep-iters",
                       f"i_t={i_t}{suffix}", curve, suffix)
    if out_dir is not None:
        write_results(curve, cfg, out_dir, "sweep_iters")
        for random_init in inits:
            name = "convergence_trace_random_init.csv" if random_init else "convergence_trace.csv"
            dump_trace_csv(convergence_trace(cfg, random_init), Path(out_dir) / name)
    return curve


@time_execution(label="[sweep-csit] ESR vs CSIT quality")
def run_sweep_csit(cfg, out_dir=None, workers=None):
    curve = EsrCurve(SWEEP_CSIT, list(cfg.sigma_e2_list), cfg.trials, cfg.n_err,
                     cfg.master_seed)
    for sigma_e2 in cfg.sigma_e2_list:
        point = SweepPoint(cfg.fixed_snr_db, sigma_e2, cfg.i_t, cfg.random_init)
        _run_point(cfg, point, cfg.schemes, workers, "sweep-csit", f"sigma_e2={sigma_e2:g}",
                   curve)
    if out_dir is not None:
        write_results(curve, cfg, out_dir, "sweep_csit")
    return curve


SWEEPS = {
    "sweep-snr": run_sweep_snr,
    "sweep-iters": run_sweep_iterations,
    "sweep-csit": run_sweep_csit,
}
