"""Quick oracle and property checks, run by `main.py selftest`.

The received-signal decomposition below is an independent reference for
the SINR expressions; the unit tests reuse it.
"""
import numpy as np

from rscf import timing
from rscf.channel import draw_channel, draw_error_bank, error_covariance
from rscf.cost import total_cost
from rscf.precoders import (
    CF_MMSE, CF_MMSE_RB, RSCF_PC_RB, build_scheme, common_objective, robust_common_direction,
)
from rscf.rates import SweepPoint, run_trials, sinr_common, sinr_private
from rscf.settings import SimConfig

SEED = 20240917


def decomposition_sinr(cs, ps, sigma_n2, G_tilde=None):
    """
    SINRs from the received signal of every user, one term at a time.

    The useful part of a stream is what the receiver would see through the
    estimate alone; everything else it receives counts as interference.

    Returns:
        tuple: (gamma_c, gamma_p), each of length K
    """
    G_tilde = cs.G_tilde if G_tilde is None else G_tilde
    k = cs.G_hat.shape[1]
    gamma_c = np.zeros(k)
    gamma_p = np.zeros(k)
    for user in range(k):
        g_hat = cs.G_hat[:, user] / cs.tau
        g = (cs.G_hat[:, user] + G_tilde[:, user]) / cs.tau
        private = [abs(np.vdot(g, ps.P_p[:, j])) ** 2 for j in range(k)]
        wanted = abs(np.vdot(g_hat, ps.P_p[:, user])) ** 2
        gamma_p[user] = wanted / (max(sum(private) - wanted, 0.0) + sigma_n2)
        wanted_c = abs(np.vdot(g_hat, ps.p_c)) ** 2
        rest = abs(np.vdot(g, ps.p_c)) ** 2 - wanted_c + sum(private)
        gamma_c[user] = wanted_c / (max(rest, 0.0) + sigma_n2)
    return gamma_c, gamma_p


def random_instance(rng, n_t, k, sigma_e2, scale=1e-3):
    """Well-conditioned test instance: gains near `scale`, noise equal to `scale`."""
    zeta = scale * rng.uniform(0.5, 1.5, size=(n_t, k))
    cs = draw_channel(zeta, sigma_e2, rng)
    theta = error_covariance(zeta, sigma_e2).theta
    return cs, theta, scale


def _relative_error(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def check_sinr_decomposition(rng, instances=1000):
    """The "decomposed" closed forms must match; the printed common SINR is only reported."""
    worst = printed_gap = 0.0
    for _ in range(instances):
        n_t = int(rng.integers(1, 9))
        k = int(rng.integers(1, min(n_t, 4) + 1))
        cs, theta, sigma_n2 = random_instance(rng, n_t, k, rng.uniform(0.05, 1.0))
        alpha_c = rng.uniform(0.05, 0.9)
        ps = build_scheme(RSCF_PC_RB, cs.G_hat, theta, cs.tau, 1.0, alpha_c, sigma_n2)
        gamma_c, gamma_p = decomposition_sinr(cs, ps, sigma_n2)
        worst = max(worst, _relative_error(sinr_common(cs, ps, sigma_n2, "decomposed"), gamma_c),
                    _relative_error(sinr_private(cs, ps, sigma_n2, "decomposed"), gamma_p))
        printed_gap = max(printed_gap,
                          _relative_error(sinr_common(cs, ps, sigma_n2, "printed"), gamma_c))
    return worst < 1e-10, (f"worst relative mismatch {worst:.2e}; printed common SINR "
                           f"departs by up to {printed_gap:.1%}")


def check_common_stationarity(rng, instances=100, h=1e-6):
    worst = 0.0
    for _ in range(instances):
        cs, theta, _ = random_instance(rng, 4, 2, rng.uniform(0.05, 1.0))
        _, raw = robust_common_direction(cs.G_hat, theta, cs.tau)

        def cost(x):
            return common_objective(x[:4] + 1j * x[4:], cs.G_hat, theta, cs.tau)

        x0 = np.concatenate([raw.real, raw.imag])
        grad = np.array([(cost(x0 + h * e) - cost(x0 - h * e)) / (2 * h) for e in np.eye(8)])
        grad0 = np.array([(cost(h * e) - cost(-h * e)) / (2 * h) for e in np.eye(8)])
        worst = max(worst, np.linalg.norm(grad) / (1.0 + np.linalg.norm(grad0)))
    return worst < 1e-6, f"worst gradient norm {worst:.2e}"


def check_power_constraint(rng, instances=50):
    worst = 0.0
    for _ in range(instances):
        cs, theta, sigma_n2 = random_instance(rng, 6, 3, 0.3)
        alpha_c = rng.uniform(0.0, 0.9)
        ps = build_scheme(RSCF_PC_RB, cs.G_hat, theta, cs.tau, 1.0, alpha_c, sigma_n2, i_t=10)
        budget = 1.0 - alpha_c
        worst = max(worst, max(abs(p - budget) / budget for p in ps.trace.power),
                    abs(ps.total_power - 1.0))
    return worst < 1e-10, f"worst relative power error {worst:.2e}"


def check_degeneration(rng, instances=20):
    worst = 0.0
    for _ in range(instances):
        cs, theta, sigma_n2 = random_instance(rng, 6, 3, 0.0)
        plain = build_scheme(CF_MMSE, cs.G_hat, theta, cs.tau, 1.0, 0.0, sigma_n2)
        robust = build_scheme(CF_MMSE_RB, cs.G_hat, theta, cs.tau, 1.0, 0.0, sigma_n2)
        worst = max(worst, _relative_error(robust.P_p, plain.P_p))
    return worst < 1e-9, f"worst relative difference {worst:.2e}"


def check_error_covariance(rng, draws=20000):
    zeta = rng.uniform(0.5, 1.5, size=(4, 3))
    cs = draw_channel(zeta, 0.4, rng)
    bank = draw_error_bank(cs, draws, rng)
    sample = np.einsum("bnk,bmk->nm", bank, bank.conj()) / draws
    theta = error_covariance(zeta, 0.4).theta
    worst = float(np.max(np.abs(np.diag(sample) - np.diag(theta)) / np.diag(theta).real))
    return worst < 0.03, f"worst diagonal deviation {worst:.2%}"


def check_cost(rng):
    value = total_cost(12, 3, 3)
    return value == 59280, f"C_f(12, 3, 3) = {value}"


def check_determinism(rng):
    cfg = SimConfig(trials=3, n_err=2, alpha_grid_step=0.25, master_seed=SEED)
    point = SweepPoint(22.0, 0.3)
    serial = run_trials(cfg, point, (CF_MMSE, RSCF_PC_RB), workers=1)
    threaded = run_trials(cfg, point, (CF_MMSE, RSCF_PC_RB), workers=3)
    same = all(a.sum_rate == b.sum_rate for a, b in zip(serial, threaded))
    return same, "serial and threaded trials agree" if same else "trial results differ"


CHECKS = (
    ("SINR decomposition", check_sinr_decomposition),
    ("common precoder stationarity", check_common_stationarity),
    ("power constraint", check_power_constraint),
    ("perfect-CSI degeneration", check_degeneration),
    ("error covariance", check_error_covariance),
    ("FLOP count", check_cost),
    ("determinism", check_determinism),
)


def run():
    """Run every check, print one line per check and a summary; True if all pass."""
    rng = np.random.default_rng(SEED)
    results = []
    verbose = timing.VERBOSE
    timing.VERBOSE = False
    try:
        for name, check in CHECKS:
            try:
                passed, detail = check(rng)
            except Exception as e:
                passed, detail = False, f"{type(e).__name__}: {e}"
            results.append(passed)
            print(f"{'✓' if passed else '✗'} {name}: {detail}")
    finally:
        timing.VERBOSE = verbose

    print("\n=== Self-test Summary ===")
    print(f"{sum(results)}/{len(results)} checks passed")
    return all(results)
