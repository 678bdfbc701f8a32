"""Network geometry, large-scale fading and imperfect-CSI channel generation.

Channel matrices are stored AP-major, shape (N_t, K): column k is the
channel vector g_k between all APs and user k, so G^H is the K x N_t
downlink matrix. Large-scale gains are linear, never dB.
"""
import csv
import dataclasses
from dataclasses import dataclass

import numpy as np

from rscf.errors import ConfigurationError, DegenerateChannelError
from rscf.units import db_to_linear

H_AP_M = 15.0
H_UE_M = 1.65
FREQ_MHZ = 1900.0
SHADOW_STD_DB = 8.0
# Three-slope breakpoints (meters)
D0_M = 10.0
D1_M = 50.0


def _frozen(array):
    array = np.array(array)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class NetworkGeometry:
    ap_xy: np.ndarray      # (N_t, 2) meters
    ue_xy: np.ndarray      # (K, 2) meters
    h_ap: float = H_AP_M
    h_ue: float = H_UE_M
    region_side: float = 100.0

    @property
    def n_t(self):
        return self.ap_xy.shape[0]

    @property
    def k(self):
        return self.ue_xy.shape[0]

    def distances(self):
        """Horizontal AP-to-UE distances, shape (N_t, K)."""
        diff = self.ap_xy[:, None, :] - self.ue_xy[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True, eq=False)
class ChannelSet:
    zeta: np.ndarray       # (N_t, K) large-scale gains, linear
    G: np.ndarray          # true channel
    G_hat: np.ndarray      # estimate available at the transmitter
    G_tilde: np.ndarray    # estimation error
    sigma_e2: float
    tau: float

    @property
    def n_t(self):
        return self.G_hat.shape[0]

    @property
    def k(self):
        return self.G_hat.shape[1]


@dataclass(frozen=True, eq=False)
class ErrorCovariance:
    theta: np.ndarray      # (N_t, N_t) Hermitian PSD, E[G_tilde G_tilde^H]


@dataclass(frozen=True)
class NoiseModel:
    T_o: float = 290.0
    k_B: float = 1.381e-23
    B: float = 50e6
    N_f_db: float = 10.0

    @property
    def sigma_n2(self):
        return noise_variance(self)


def complex_normal(rng, shape):
    """i.i.d. circular complex Gaussian entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def place_network(n_t, k, region_side, rng, h_ap=H_AP_M, h_ue=H_UE_M):
    """Drop N_t APs and K users uniformly at random in a square region."""
    if k < 1 or n_t < 1:
        raise ConfigurationError(f"need at least one AP and one user, got n_t={n_t}, k={k}")
    if n_t < k:
        raise ConfigurationError(f"overloaded network not supported: n_t={n_t} < k={k}")
    if not region_side > 0:
        raise ConfigurationError(f"region side must be positive, got {region_side}")
    ap_xy = rng.uniform(0.0, region_side, size=(n_t, 2))
    ue_xy = rng.uniform(0.0, region_side, size=(k, 2))
    return NetworkGeometry(_frozen(ap_xy), _frozen(ue_xy), float(h_ap), float(h_ue),
                           float(region_side))


def attenuation_db(freq_mhz=FREQ_MHZ, h_ap=H_AP_M, h_ue=H_UE_M):
    """Hata-style attenuation L in dB, frequency in MHz."""
    lf = np.log10(freq_mhz)
    return (46.3 + 33.9 * lf - 13.82 * np.log10(h_ap)
            - (1.1 * lf - 0.7) * h_ue + (1.56 * lf - 0.8))


def path_loss_db(d, freq_mhz=FREQ_MHZ, h_ap=H_AP_M, h_ue=H_UE_M):
    """Three-slope path loss in dB (a negative number), vectorised over d.

    The branches meet at both breakpoints; d = 0 falls in the flat branch.
    """
    if not freq_mhz > 0:
        raise ConfigurationError(f"frequency must be positive, got {freq_mhz} MHz")
    d = np.asarray(d, dtype=float)
    L = attenuation_db(freq_mhz, h_ap, h_ue)
    safe_d = np.maximum(d, D0_M)
    far = -L - 35.0 * np.log10(safe_d)
    mid = -L - 15.0 * np.log10(D1_M) - 20.0 * np.log10(safe_d)
    near = -L - 15.0 * np.log10(D1_M) - 20.0 * np.log10(D0_M)
    out = np.where(d > D1_M, far, np.where(d > D0_M, mid, near))
    return float(out) if out.ndim == 0 else out


def large_scale(geom, shadow_std_db, rng, freq_mhz=FREQ_MHZ):
    """Path loss plus lognormal shadowing, linear scale, shape (N_t, K)."""
    if shadow_std_db < 0:
        raise ConfigurationError(f"shadowing std must be >= 0, got {shadow_std_db}")
    pl_db = path_loss_db(geom.distances(), freq_mhz, geom.h_ap, geom.h_ue)
    z = rng.standard_normal(pl_db.shape)
    return _frozen(db_to_linear(pl_db + shadow_std_db * z))


def _check_sigma_e2(sigma_e2):
    if not 0.0 <= sigma_e2 <= 1.0:
        raise ConfigurationError(f"sigma_e2 must lie in [0, 1], got {sigma_e2}")


def draw_channel(zeta, sigma_e2, rng):
    """Draw estimate and independent error, then assemble G = (G_hat + G_tilde) / tau."""
    _check_sigma_e2(sigma_e2)
    zeta = np.asarray(zeta, dtype=float)
    tau = float(np.sqrt(1.0 + sigma_e2))
    G_hat = np.sqrt(zeta) * complex_normal(rng, zeta.shape)
    G_tilde = np.sqrt(sigma_e2 * zeta) * complex_normal(rng, zeta.shape)
    return ChannelSet(_frozen(zeta), _frozen((G_hat + G_tilde) / tau), _frozen(G_hat),
                      _frozen(G_tilde), float(sigma_e2), tau)


def draw_error_bank(cs, n_err, rng):
    """n_err fresh error matrices for a fixed estimate, shape (n_err, N_t, K)."""
    scale = np.sqrt(cs.sigma_e2 * cs.zeta)
    return scale * complex_normal(rng, (n_err,) + cs.zeta.shape)


def redraw_error(cs, rng):
    """Keep G_hat and zeta, draw a fresh error matrix and rebuild G."""
    G_tilde = draw_error_bank(cs, 1, rng)[0]
    return dataclasses.replace(cs, G_tilde=_frozen(G_tilde),
                               G=_frozen((cs.G_hat + G_tilde) / cs.tau))


def error_covariance(zeta, sigma_e2):
    """theta = E[G_tilde G_tilde^H]; diagonal under independent entries."""
    _check_sigma_e2(sigma_e2)
    diag = sigma_e2 * np.asarray(zeta, dtype=float).sum(axis=1)
    return ErrorCovariance(_frozen(np.diag(diag).astype(complex)))


def noise_variance(nm):
    """sigma_n^2 = T_o k_B B N_f in Watts, N_f converted from dB."""
    for name in ("T_o", "k_B", "B"):
        value = getattr(nm, name)
        if not value > 0:
            raise ConfigurationError(f"noise model {name} must be positive, got {value}")
    return nm.T_o * nm.k_B * nm.B * db_to_linear(nm.N_f_db)


def pt_for_snr(snr_db, zeta, n_t, k, sigma_n2):
    """Transmit power giving the target SNR, using E[tr(G^H G)] = sum(zeta)."""
    if not np.isfinite(snr_db):
        raise ConfigurationError(f"SNR must be finite, got {snr_db}")
    total_gain = float(np.sum(zeta))
    if total_gain <= 0:
        raise DegenerateChannelError("sum of large-scale gains is zero")
    return db_to_linear(snr_db) * n_t * k * sigma_n2 / total_gain


def snr_db_for_pt(p_t, zeta, n_t, k, sigma_n2):
    """Inverse of pt_for_snr."""
    total_gain = float(np.sum(zeta))
    if total_gain <= 0:
        raise DegenerateChannelError("sum of large-scale gains is zero")
    return 10.0 * np.log10(p_t * total_gain / (n_t * k * sigma_n2))


def dump_geometry_csv(geom, path):
    """Write AP and UE positions as rows of (kind, index, x, y, height)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["kind", "index", "x_m", "y_m", "height_m"])
        for i, (x, y) in enumerate(geom.ap_xy):
            writer.writerow(["ap", i, f"{x:.6f}", f"{y:.6f}", geom.h_ap])
        for i, (x, y) in enumerate(geom.ue_xy):
            writer.writerow(["ue", i, f"{x:.6f}", f"{y:.6f}", geom.h_ue])
    return path
