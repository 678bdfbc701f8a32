"""SINRs, achievable rates, common-power allocation and the ergodic sum rate.

SINRs are evaluated for a whole bank of error matrices at once: the error
argument has shape (B, N_t, K) and every SINR comes back as (B, K).

Three SINR models are available:

* "printed" evaluates the closed-form expressions with the delta
  cross-terms exactly as written. The part of each stream seen through the
  estimate is the useful signal. In the common SINR the private streams
  arrive through the true channel g_k.
* "decomposed" is the same closed form with the private streams in the
  common SINR arriving through g_hat_k + g_tilde_k = tau g_k, which is what
  the received signal carries. It matches a term-by-term decomposition of
  the received signal exactly. Under imperfect CSIT "printed" counts tau^2
  less private interference on the common stream than this.
* "physical" uses the true received coefficients directly.

When an error realisation cancels more power than the interference terms
hold, a closed-form interference sum goes negative; it is clipped at zero
and the event is counted in RateSample.clipped.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.stats import norm

from rscf.channel import (
    draw_channel, draw_error_bank, error_covariance, large_scale, noise_variance,
    place_network, pt_for_snr,
)
from rscf.clustering import cluster
from rscf.precoders import (
    NO_RS_COUNTERPART, RS_SCHEMES, build_scheme, common_direction_for, random_initial_precoder,
)

SINR_MODELS = ("printed", "decomposed", "physical")
ALPHA_POLICIES = ("search", "saturation")
DEFAULT_GRID_STEP = 0.005
CI_LEVEL = 0.95

# Substream ids under each (master seed, trial) key
STREAM_DROP = 0
STREAM_ERRORS = 1
STREAM_INIT = 2


@dataclass(frozen=True, eq=False)
class RateSample:
    gamma_c: np.ndarray    # (K,) common SINR per user
    gamma_p: np.ndarray    # (K,) private SINR per user
    R_c: float             # decodable common rate, bits/s/Hz
    R_k: np.ndarray        # (K,) private rates
    sum: float
    clipped: int = 0       # closed-form interference sums clipped at zero

    @property
    def private_sum(self):
        return float(np.sum(self.R_k))


@dataclass
class EsrCurve:
    """Mean ergodic sum rate per scheme along one swept parameter."""
    sweep_name: str
    sweep_values: list
    trials: int
    n_err: int
    seed: int
    esr: dict = field(default_factory=dict)          # scheme -> list of means
    ci: dict = field(default_factory=dict)           # scheme -> list of half-widths
    alpha_frac: dict = field(default_factory=dict)   # scheme -> list of mean alpha_c / P_t

    def add_point(self, scheme, mean, half_width, alpha_frac):
        self.esr.setdefault(scheme, []).append(float(mean))
        self.ci.setdefault(scheme, []).append(float(half_width))
        self.alpha_frac.setdefault(scheme, []).append(float(alpha_frac))

    def rows(self):
        """One dict per (sweep value, scheme), in sweep order."""
        for i, value in enumerate(self.sweep_values):
            for scheme in self.esr:
                yield {
                    "sweep": self.sweep_name,
                    "scheme": scheme,
                    "value": value,
                    "esr_bps_hz": self.esr[scheme][i],
                    "ci": self.ci[scheme][i],
                    "trials": self.trials,
                    "n_err": self.n_err,
                    "seed": self.seed,
                    "alpha_frac": self.alpha_frac[scheme][i],
                }


@dataclass(frozen=True, eq=False)
class Drop:
    """Everything a precoder design and rate evaluation needs for one channel estimate."""
    cs: object             # rscf.channel.ChannelSet
    G_eff: np.ndarray      # G_hat, or the clustered G_bar
    theta: np.ndarray
    P_t: float
    sigma_n2: float
    i_t: int = 3
    sinr_model: str = "printed"
    initial: np.ndarray = None
    geom: object = None    # NetworkGeometry, kept for exports
    clusters: object = None


@dataclass(frozen=True)
class SweepPoint:
    snr_db: float
    sigma_e2: float
    i_t: int = 3
    random_init: bool = False


def _as_bank(G_tilde):
    G_tilde = np.asarray(G_tilde)
    return G_tilde[None] if G_tilde.ndim == 2 else G_tilde


def _clip(interference):
    return np.maximum(interference, 0.0), int(np.count_nonzero(interference < 0))


def _private_directions(ps, tau):
    return ps.P_p / (ps.f * tau)


def _sinr_private_closed_form(G_hat, bank, ps, tau, sigma_n2):
    p_bar = _private_directions(ps, tau)
    f2 = ps.f ** 2
    A_hat = G_hat.conj().T @ p_bar                        # [k, i] = g_hat_k^H p_bar_i
    A_err = np.conj(np.swapaxes(bank, 1, 2)) @ p_bar      # [b, k, j] = g_tilde_k^H p_bar_j
    own = np.abs(np.diag(A_hat)) ** 2
    mui = np.sum(np.abs(A_hat) ** 2, axis=1) - own
    delta = 2.0 * np.real(np.conj(A_hat)[None] * A_err) + np.abs(A_err) ** 2
    interference, clipped = _clip(f2 * (mui[None] + np.sum(delta, axis=2)))
    return f2 * own[None] / (interference + sigma_n2), clipped


def _sinr_common_closed_form(G_hat, bank, ps, tau, sigma_n2, through_true_channel):
    v = ps.p_bar_c
    n_err, _, k = bank.shape
    if ps.alpha_c == 0 or v is None or not np.any(v):
        return np.zeros((n_err, k)), 0
    p_bar = _private_directions(ps, tau)
    a = G_hat.conj().T @ v                                 # g_hat_k^H v
    b = np.conj(np.swapaxes(bank, 1, 2)) @ v               # g_tilde_k^H v
    delta_c = 2.0 * np.real(np.conj(a)[None] * b) + np.abs(b) ** 2
    # the receiver gets the private streams through g_hat_k + g_tilde_k = tau g_k
    G_seen = G_hat[None] + bank
    if through_true_channel:
        G_seen = G_seen / tau
    seen = np.conj(np.swapaxes(G_seen, 1, 2)) @ p_bar
    private = ps.f ** 2 * np.sum(np.abs(seen) ** 2, axis=2)
    v2 = float(np.vdot(v, v).real)
    interference, clipped = _clip(ps.alpha_c * delta_c + tau ** 2 * v2 * private)
    numerator = ps.alpha_c * np.abs(a) ** 2
    return numerator[None] / (interference + tau ** 2 * v2 * sigma_n2), clipped


def _sinr_common_printed(G_hat, bank, ps, tau, sigma_n2):
    return _sinr_common_closed_form(G_hat, bank, ps, tau, sigma_n2, True)


def _sinr_common_decomposed(G_hat, bank, ps, tau, sigma_n2):
    return _sinr_common_closed_form(G_hat, bank, ps, tau, sigma_n2, False)


def _received(G_hat, bank, tau, precoder):
    """True received coefficients g_k^H x for each column x of precoder: (B, K, ...)."""
    G_true = (G_hat[None] + bank) / tau
    return np.conj(np.swapaxes(G_true, 1, 2)) @ precoder


def _sinr_private_physical(G_hat, bank, ps, tau, sigma_n2):
    C = _received(G_hat, bank, tau, ps.P_p)
    power = np.abs(C) ** 2
    own = np.diagonal(power, axis1=1, axis2=2)
    return own / (np.sum(power, axis=2) - own + sigma_n2), 0


def _sinr_common_physical(G_hat, bank, ps, tau, sigma_n2):
    C = _received(G_hat, bank, tau, ps.P_p)
    c = _received(G_hat, bank, tau, ps.p_c)
    return np.abs(c) ** 2 / (np.sum(np.abs(C) ** 2, axis=2) + sigma_n2), 0


# model -> (common SINR, private SINR)
_SINR_FUNCTIONS = {
    "printed": (_sinr_common_printed, _sinr_private_closed_form),
    "decomposed": (_sinr_common_decomposed, _sinr_private_closed_form),
    "physical": (_sinr_common_physical, _sinr_private_physical),
}


def _check_model(model):
    if model not in SINR_MODELS:
        raise ValueError(f"unknown SINR model {model!r}, expected one of {SINR_MODELS}")


def sinr_private(cs, ps, sigma_n2, model="printed", G_tilde=None):
    """
    Private-stream SINR after the common stream has been cancelled.

    "printed" and "decomposed" share the same private expression.

    Args:
        G_tilde: optional error matrix or (B, N_t, K) bank; defaults to cs.G_tilde

    Returns:
        ndarray: (K,) for a single error matrix, (B, K) for a bank
    """
    _check_model(model)
    G_tilde = np.asarray(cs.G_tilde if G_tilde is None else G_tilde)
    fn = _SINR_FUNCTIONS[model][1]
    gamma, _ = fn(np.asarray(cs.G_hat), _as_bank(G_tilde), ps, cs.tau, sigma_n2)
    return gamma[0] if G_tilde.ndim == 2 else gamma


def sinr_common(cs, ps, sigma_n2, model="printed", G_tilde=None):
    """Common-stream SINR per user with every private stream treated as noise."""
    _check_model(model)
    G_tilde = np.asarray(cs.G_tilde if G_tilde is None else G_tilde)
    fn = _SINR_FUNCTIONS[model][0]
    gamma, _ = fn(np.asarray(cs.G_hat), _as_bank(G_tilde), ps, cs.tau, sigma_n2)
    return gamma[0] if G_tilde.ndim == 2 else gamma


def _bank_rates(cs, ps, sigma_n2, bank, model):
    """Rates for every error matrix in the bank: (gamma_c, gamma_p, R_c, R_k, clipped)."""
    _check_model(model)
    G_hat = np.asarray(cs.G_hat)
    common, private = _SINR_FUNCTIONS[model]
    gamma_c, clip_c = common(G_hat, bank, ps, cs.tau, sigma_n2)
    gamma_p, clip_p = private(G_hat, bank, ps, cs.tau, sigma_n2)
    R_c = np.log2(1.0 + np.min(gamma_c, axis=1))
    R_k = np.log2(1.0 + gamma_p)
    return gamma_c, gamma_p, R_c, R_k, clip_c + clip_p


def instantaneous_rates(cs, ps, sigma_n2, model="printed"):
    """Rates for the channel's own error realisation; the common rate is the weakest user's."""
    gamma_c, gamma_p, R_c, R_k, clipped = _bank_rates(cs, ps, sigma_n2, _as_bank(cs.G_tilde),
                                                      model)
    return RateSample(gamma_c[0], gamma_p[0], float(R_c[0]), R_k[0],
                      float(R_c[0] + np.sum(R_k[0])), clipped)


def mean_rates(cs, ps, sigma_n2, bank, model="printed"):
    """Average a precoder's rates over a bank of error matrices."""
    gamma_c, gamma_p, R_c, R_k, clipped = _bank_rates(cs, ps, sigma_n2, bank, model)
    sums = R_c + np.sum(R_k, axis=1)
    return RateSample(gamma_c.mean(axis=0), gamma_p.mean(axis=0), float(R_c.mean()),
                      R_k.mean(axis=0), float(sums.mean()), clipped)


def design(drop, scheme, alpha_c, p_bar_c=None):
    """Build one scheme's precoder for a drop at common power alpha_c."""
    return build_scheme(scheme, drop.G_eff, drop.theta, drop.cs.tau, drop.P_t, alpha_c,
                        drop.sigma_n2, drop.i_t, drop.initial, p_bar_c)


def average_over_errors(drop, scheme, n_err, rng, alpha_c=0.0):
    """
    Conditional average rate given the estimate.

    The precoder is designed once from the estimate; only the error matrix is
    redrawn n_err times.
    """
    if n_err < 1:
        raise ValueError(f"n_err must be >= 1, got {n_err}")
    ps = design(drop, scheme, alpha_c)
    bank = draw_error_bank(drop.cs, n_err, rng)
    return mean_rates(drop.cs, ps, drop.sigma_n2, bank, drop.sinr_model)


def alpha_grid(P_t, grid_step):
    """Common-power candidates 0, step*P_t, ... up to (1 - step)*P_t."""
    if not 0 < grid_step <= 1:
        raise ValueError(f"grid step must lie in (0, 1], got {grid_step}")
    count = int(np.floor((1.0 - grid_step) / grid_step + 1e-9)) + 1
    return np.arange(count) * grid_step * P_t


def allocate_alpha_c(drop, scheme, grid_step, n_err, rng):
    """
    Exhaustive search for the common power maximising the error-averaged sum rate.

    The same error bank is used at every grid point; ties go to the smaller alpha_c.
    Private-only schemes return 0 without searching.

    Returns:
        tuple: (alpha_c, mean RateSample at alpha_c)
    """
    bank = draw_error_bank(drop.cs, n_err, rng)
    if scheme not in RS_SCHEMES:
        ps = design(drop, scheme, 0.0)
        return 0.0, mean_rates(drop.cs, ps, drop.sigma_n2, bank, drop.sinr_model)

    p_bar_c = common_direction_for(scheme, drop.G_eff, drop.theta, drop.cs.tau)
    best_alpha, best = 0.0, None
    for alpha_c in alpha_grid(drop.P_t, grid_step):
        ps = design(drop, scheme, alpha_c, p_bar_c)
        rates = mean_rates(drop.cs, ps, drop.sigma_n2, bank, drop.sinr_model)
        if best is None or rates.sum > best.sum:
            best_alpha, best = float(alpha_c), rates
    return best_alpha, best


def allocate_alpha_saturation(drop, scheme, grid_step, n_err, rng, tol=0.01):
    """
    Give the private streams just enough power to match the conventional scheme.

    The target is the private sum rate the same scheme without a common
    stream reaches at full power; the largest grid alpha_c whose private sum
    rate stays within tol of it goes to the common stream.

    Returns:
        tuple: (alpha_c, mean RateSample at alpha_c)
    """
    bank = draw_error_bank(drop.cs, n_err, rng)
    if scheme not in RS_SCHEMES:
        ps = design(drop, scheme, 0.0)
        return 0.0, mean_rates(drop.cs, ps, drop.sigma_n2, bank, drop.sinr_model)

    baseline = design(drop, NO_RS_COUNTERPART[scheme], 0.0)
    target = mean_rates(drop.cs, baseline, drop.sigma_n2, bank, drop.sinr_model).private_sum
    p_bar_c = common_direction_for(scheme, drop.G_eff, drop.theta, drop.cs.tau)
    for alpha_c in alpha_grid(drop.P_t, grid_step)[:0:-1]:
        ps = design(drop, scheme, alpha_c, p_bar_c)
        rates = mean_rates(drop.cs, ps, drop.sigma_n2, bank, drop.sinr_model)
        if rates.private_sum >= (1.0 - tol) * target:
            return float(alpha_c), rates
    ps = design(drop, scheme, 0.0, p_bar_c)
    return 0.0, mean_rates(drop.cs, ps, drop.sigma_n2, bank, drop.sinr_model)


def trial_rng(seed, trial, stream):
    """Counter-derived substream: independent of worker count and execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial, stream)))


@dataclass(frozen=True)
class TrialResult:
    sum_rate: dict         # scheme -> error-averaged sum rate
    alpha_frac: dict       # scheme -> alpha_c / P_t
    clipped: int
    ridged: int


def make_drop(cfg, point, trial):
    """Geometry, large-scale fading, estimate and link budget for one trial."""
    rng = trial_rng(cfg.master_seed, trial, STREAM_DROP)
    geom = place_network(cfg.n_t, cfg.k, cfg.region_side_m, rng, cfg.h_ap, cfg.h_ue)
    zeta = large_scale(geom, cfg.shadow_std_db, rng, cfg.freq_mhz)
    cs = draw_channel(zeta, point.sigma_e2, rng)
    sigma_n2 = noise_variance(cfg.noise_model())
    P_t = pt_for_snr(point.snr_db, zeta, cfg.n_t, cfg.k, sigma_n2)
    theta = error_covariance(zeta, point.sigma_e2).theta
    clusters = cluster(zeta, cs.G_hat) if cfg.clustering_enabled else None
    G_eff = clusters.G_bar if clusters is not None else cs.G_hat
    initial = None
    if point.random_init:
        initial = random_initial_precoder(cfg.n_t, cfg.k,
                                          trial_rng(cfg.master_seed, trial, STREAM_INIT))
    return Drop(cs, G_eff, theta, P_t, sigma_n2, point.i_t, cfg.sinr_model, initial, geom,
                clusters)


def simulate_trial(cfg, point, schemes, trial):
    """Run every scheme on one trial's drop, sharing the error bank between them."""
    drop = make_drop(cfg, point, trial)
    allocate = allocate_alpha_c if cfg.alpha_policy == "search" else partial(
        allocate_alpha_saturation, tol=cfg.saturation_tol)
    sum_rate, alpha_frac = {}, {}
    clipped = ridged = 0
    for scheme in schemes:
        errors_rng = trial_rng(cfg.master_seed, trial, STREAM_ERRORS)
        alpha_c, rates = allocate(drop, scheme, cfg.alpha_grid_step, cfg.n_err, errors_rng)
        sum_rate[scheme] = rates.sum
        alpha_frac[scheme] = alpha_c / drop.P_t
        clipped += rates.clipped
        trace = design(drop, scheme, alpha_c).trace
        if trace is not None:
            ridged += len(trace.warnings)
    return TrialResult(sum_rate, alpha_frac, clipped, ridged)


def worker_count():
    """Worker threads for the trial pool, from RSCF_WORKERS (default: CPU count)."""
    value = os.environ.get("RSCF_WORKERS")
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def run_trials(cfg, point, schemes, workers=None):
    """All trials of one sweep point, returned in trial order."""
    workers = workers or worker_count()
    job = partial(simulate_trial, cfg, point, tuple(schemes))
    if workers == 1:
        return [job(t) for t in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(job, range(cfg.trials)))


def mean_and_half_width(values, level=CI_LEVEL):
    """Sample mean and normal-approximation confidence half-width."""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    z = norm.ppf(0.5 + level / 2.0)
    return mean, float(z * values.std(ddof=1) / np.sqrt(values.size))


def ergodic_sum_rate(cfg, scheme, point, workers=None):
    """Monte-Carlo ergodic sum rate of one scheme at one sweep point.

    Returns:
        tuple: (mean, 95% half-width) in bits/s/Hz
    """
    results = run_trials(cfg, point, [scheme], workers)
    return mean_and_half_width([r.sum_rate[scheme] for r in results])
