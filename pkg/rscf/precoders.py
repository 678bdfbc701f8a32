"""Robust and conventional MMSE precoders for the rate-splitting downlink.

Shapes follow rscf.channel: G_hat is (N_t, K), theta is (N_t, N_t), the
private precoder P_p is (N_t, K) and the common precoder p_c has length N_t.
alpha_c is a power: ||p_c||^2 == alpha_c and tr(P_p P_p^H) == P_t - alpha_c.
"""
import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgError, LinAlgWarning

from rscf.channel import complex_normal
from rscf.errors import DegenerateChannelError, DomainError, PowerBudgetError

CF_MMSE = "CF-MMSE"
CF_MMSE_RB = "CF-MMSE-RB"
RSCF_MMSE = "RSCF-MMSE"
RSCF_PP_RB = "RSCF-MMSE-RB+PpRB"
RSCF_PC_RB = "RSCF-MMSE-RB+PcRB"

SCHEMES = (CF_MMSE, CF_MMSE_RB, RSCF_MMSE, RSCF_PP_RB, RSCF_PC_RB)
RS_SCHEMES = (RSCF_MMSE, RSCF_PP_RB, RSCF_PC_RB)
ROBUST_PRIVATE = (CF_MMSE_RB, RSCF_PP_RB, RSCF_PC_RB)
# Scheme with the same private design but no common stream
NO_RS_COUNTERPART = {
    RSCF_MMSE: CF_MMSE,
    RSCF_PP_RB: CF_MMSE_RB,
    RSCF_PC_RB: CF_MMSE_RB,
}

DEFAULT_ITERATIONS = 3
RIDGE_EPS = 1e-10


@dataclass
class IterTrace:
    """Per-iterate record of the robust private design, index 0 is the initialisation."""
    f: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    J_p: list = field(default_factory=list)
    power: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def record(self, f, lam, J_p, power):
        self.f.append(float(f))
        self.lam.append(float(lam))
        self.J_p.append(float(J_p))
        self.power.append(float(power))

    def __len__(self):
        return len(self.f)

    def is_monotone(self, rtol=1e-9):
        """True when J_p never increased along the iterates."""
        J = np.asarray(self.J_p)
        return bool(np.all(np.diff(J) <= rtol * np.abs(J[:-1])))


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    p_c: np.ndarray        # (N_t,), zero for private-only schemes
    P_p: np.ndarray        # (N_t, K)
    alpha_c: float
    f: float
    lam: float
    scheme: str
    p_bar_c: np.ndarray = None
    trace: IterTrace = field(default=None, compare=False, repr=False)

    @property
    def total_power(self):
        return float(np.vdot(self.p_c, self.p_c).real + np.vdot(self.P_p, self.P_p).real)


def _hermitian_solve(A, B, ridge_scale):
    """Solve A X = B for Hermitian A; add a small ridge if A is numerically singular.

    Returns:
        tuple: (X, ridged)
    """
    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            return scipy.linalg.solve(A, B, assume_a="her"), False
        except (LinAlgError, LinAlgWarning):
            pass
    ridge = RIDGE_EPS * ridge_scale * np.eye(A.shape[0])
    return scipy.linalg.solve(A + ridge, B, assume_a="her"), True


def _check_channel(G_hat):
    G_hat = np.asarray(G_hat, dtype=complex)
    if not np.any(G_hat):
        raise DegenerateChannelError("estimated channel is all zero")
    return G_hat


def robust_common_direction(G_hat, theta, tau):
    """
    Closed-form robust common precoder tau (G G^H + theta)^-1 G u.

    With theta == 0 the Gram matrix is rank deficient whenever K < N_t, so
    the minimum-norm solution of G^H p = u is used instead.

    Returns:
        tuple: (p_bar_c unit vector, raw unnormalised precoder)
    """
    G_hat = _check_channel(G_hat)
    theta = np.asarray(theta, dtype=complex)
    u = np.ones(G_hat.shape[1])
    if not np.any(theta):
        raw = tau * scipy.linalg.lstsq(G_hat.conj().T, u)[0]
    else:
        A = G_hat @ G_hat.conj().T + theta
        with warnings.catch_warnings():
            warnings.simplefilter("error", LinAlgWarning)
            try:
                raw = tau * scipy.linalg.solve(A, G_hat @ u, assume_a="her")
            except (LinAlgError, LinAlgWarning):
                raw = tau * scipy.linalg.lstsq(A, G_hat @ u)[0]
    norm = np.linalg.norm(raw)
    if norm == 0:
        raise DegenerateChannelError("common precoder vanishes: G_hat u == 0")
    return raw / norm, raw


def common_objective(p, G_hat, theta, tau):
    """Common-stream cost ||u - G_hat^H p / tau||^2 + p^H theta p / tau^2."""
    G_hat = np.asarray(G_hat)
    p = np.asarray(p)
    residual = np.ones(G_hat.shape[1]) - G_hat.conj().T @ p / tau
    leak = np.vdot(p, np.asarray(theta) @ p).real / tau ** 2
    return float(np.vdot(residual, residual).real + leak)


def conventional_common_direction(G_hat):
    """Non-robust common precoder: the theta = 0, tau = 1 case."""
    return robust_common_direction(G_hat, np.zeros((G_hat.shape[0],) * 2), 1.0)


def _budget(P_t, alpha_c):
    budget = P_t - alpha_c
    if not budget > 0:
        raise PowerBudgetError(f"alpha_c={alpha_c:.4g} leaves no private power (P_t={P_t:.4g})")
    return budget


def _gain(P_bar, budget, tau):
    """Receive gain f enforcing tr(P_p P_p^H) = budget."""
    energy = float(np.vdot(P_bar, P_bar).real)
    if energy <= 0:
        raise DegenerateChannelError("private precoder direction vanishes")
    return np.sqrt(budget / energy) / tau


def _multiplier(P_p, f, theta, tau, budget, sigma_n2):
    k = P_p.shape[1]
    leak = np.vdot(P_p, theta @ P_p).real
    return k * sigma_n2 / (f ** 2 * budget) - leak / (tau ** 2 * budget)


def mmse_private_init(G_hat, P_t, alpha_c, sigma_n2, tau, theta=None):
    """
    Starting point of the robust private design: the regularised MMSE precoder.

    Returns:
        tuple: (P_bar0, f0, Pp0, lambda0)
    """
    G_hat = _check_channel(G_hat)
    budget = _budget(P_t, alpha_c)
    if not sigma_n2 > 0:
        raise DomainError(f"noise variance must be positive, got {sigma_n2}")
    n_t, k = G_hat.shape
    theta = np.zeros((n_t, n_t), dtype=complex) if theta is None else np.asarray(theta)
    A = G_hat @ G_hat.conj().T + (k * sigma_n2 / budget) * np.eye(n_t)
    P_bar = scipy.linalg.solve(A, G_hat, assume_a="pos")
    f = _gain(P_bar, budget, tau)
    P_p = f * tau * P_bar
    lam = _multiplier(P_p, f, theta, tau, budget, sigma_n2)
    return P_bar, f, P_p, lam


def random_initial_precoder(n_t, k, rng):
    """Random complex starting point for the convergence study."""
    return complex_normal(rng, (n_t, k))


def objective_Jp(P_p, f, G_hat, theta, tau, sigma_n2):
    """Private MSE-plus-leakage cost J_p for a given precoder and receive gain."""
    if not f > 0:
        raise DomainError(f"receive gain must be positive, got {f}")
    P_p = np.asarray(P_p)
    G_hat = np.asarray(G_hat)
    theta = np.asarray(theta)
    k = P_p.shape[1]
    cross = np.trace(G_hat.conj().T @ P_p)
    leak = np.trace(P_p.conj().T @ theta @ P_p)
    gram = np.trace(P_p.conj().T @ G_hat @ G_hat.conj().T @ P_p)
    value = (k - 2.0 * cross.real / (f * tau) + leak / tau ** 2
             + (gram + leak) / (f ** 2 * tau ** 2) + k * sigma_n2 / f ** 2)
    return float(np.real(value))


def robust_private(G_hat, theta, tau, P_t, alpha_c, sigma_n2, i_t=DEFAULT_ITERATIONS,
                   initial=None):
    """
    Robust private precoder by alternating between (P_bar, f) and lambda.

    Args:
        initial: optional (N_t, K) starting direction replacing the MMSE
            initialisation (used to study convergence from a random start)

    Returns:
        tuple: (PrecoderSet without common stream, IterTrace)
    """
    if i_t < 0:
        raise DomainError(f"iteration count must be >= 0, got {i_t}")
    G_hat = _check_channel(G_hat)
    theta = np.asarray(theta, dtype=complex)
    n_t = G_hat.shape[0]
    budget = _budget(P_t, alpha_c)

    P_bar, f, P_p, lam = mmse_private_init(G_hat, P_t, alpha_c, sigma_n2, tau, theta)
    if initial is not None:
        P_bar = np.asarray(initial, dtype=complex)
        f = _gain(P_bar, budget, tau)
        P_p = f * tau * P_bar
        lam = _multiplier(P_p, f, theta, tau, budget, sigma_n2)

    trace = IterTrace()
    trace.record(f, lam, objective_Jp(P_p, f, G_hat, theta, tau, sigma_n2),
                 np.vdot(P_p, P_p).real)

    gram = G_hat @ G_hat.conj().T
    ridge_scale = np.trace(gram).real / n_t
    eye = np.eye(n_t)
    for i in range(1, i_t + 1):
        A = gram + (1.0 + f ** 2) * theta + lam * f ** 2 * tau ** 2 * eye
        P_bar, ridged = _hermitian_solve(A, G_hat, ridge_scale)
        if ridged:
            trace.warnings.append(f"iteration {i}: singular system (lambda={lam:.3e}), ridge added")
        f = _gain(P_bar, budget, tau)
        P_p = f * tau * P_bar
        lam = _multiplier(P_p, f, theta, tau, budget, sigma_n2)
        trace.record(f, lam, objective_Jp(P_p, f, G_hat, theta, tau, sigma_n2),
                     np.vdot(P_p, P_p).real)

    zero = np.zeros(n_t, dtype=complex)
    ps = PrecoderSet(zero, P_p, float(alpha_c), float(f), float(lam), CF_MMSE_RB, zero, trace)
    return ps, trace


def build_scheme(scheme, G_eff, theta, tau, P_t, alpha_c, sigma_n2, i_t=DEFAULT_ITERATIONS,
                 initial=None, p_bar_c=None):
    """
    Assemble the full precoder of one transmission scheme.

    Private-only schemes ignore alpha_c and spend all power privately.
    p_bar_c may be passed in to reuse a common direction across power splits.
    """
    if scheme not in SCHEMES:
        raise DomainError(f"unknown scheme {scheme!r}, expected one of {', '.join(SCHEMES)}")
    G_eff = _check_channel(G_eff)
    n_t = G_eff.shape[0]
    if scheme not in RS_SCHEMES:
        alpha_c = 0.0
    if not 0.0 <= alpha_c <= P_t:
        raise PowerBudgetError(f"alpha_c={alpha_c:.4g} outside [0, P_t={P_t:.4g}]")

    trace = None
    if scheme in ROBUST_PRIVATE:
        private, trace = robust_private(G_eff, theta, tau, P_t, alpha_c, sigma_n2, i_t, initial)
        P_p, f, lam = private.P_p, private.f, private.lam
    else:
        _, f, P_p, lam = mmse_private_init(G_eff, P_t, alpha_c, sigma_n2, 1.0)

    if scheme in RS_SCHEMES:
        if p_bar_c is None:
            if scheme == RSCF_PC_RB:
                p_bar_c, _ = robust_common_direction(G_eff, theta, tau)
            else:
                p_bar_c, _ = conventional_common_direction(G_eff)
        p_c = np.sqrt(alpha_c) * p_bar_c
    else:
        p_bar_c = np.zeros(n_t, dtype=complex)
        p_c = p_bar_c

    return PrecoderSet(p_c, P_p, float(alpha_c), float(f), float(lam), scheme, p_bar_c, trace)


def common_direction_for(scheme, G_eff, theta, tau):
    """The unit common direction a scheme would use, or None for private-only schemes."""
    if scheme == RSCF_PC_RB:
        return robust_common_direction(G_eff, theta, tau)[0]
    if scheme in RS_SCHEMES:
        return conventional_common_direction(G_eff)[0]
    return None


def dump_trace_csv(trace, path):
    """Write an IterTrace as iteration,f,lambda,J_p,power rows."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["iteration", "f", "lambda", "J_p", "power"])
        for i in range(len(trace)):
            writer.writerow([i, repr(trace.f[i]), repr(trace.lam[i]),
                             repr(trace.J_p[i]), repr(trace.power[i])])
    return path
