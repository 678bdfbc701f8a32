"""Simulation configuration: the SimConfig dataclass and its config-file format.

Config files look like the config.py of a deployment: one UPPER_CASE name
per setting, assigned a Python literal. They are parsed, never executed,
so every error can point at the offending line. Settings left out of the
file keep their defaults.
"""
import ast
import dataclasses
from dataclasses import dataclass
from pathlib import Path

from rscf.channel import NoiseModel
from rscf.errors import ConfigurationError
from rscf.precoders import DEFAULT_ITERATIONS, SCHEMES
from rscf.rates import ALPHA_POLICIES, DEFAULT_GRID_STEP, SINR_MODELS

# Full scale; the defaults below are desk scale
FULL_SCALE_TRIALS = 10000
FULL_SCALE_N_ERR = 100


@dataclass(frozen=True)
class SimConfig:
    n_t: int = 12
    k: int = 3
    region_side_m: float = 100.0
    freq_mhz: float = 1900.0
    h_ap: float = 15.0
    h_ue: float = 1.65
    shadow_std_db: float = 8.0
    noise_temp_k: float = 290.0
    boltzmann: float = 1.381e-23
    bandwidth_hz: float = 50e6
    noise_figure_db: float = 10.0
    snr_db_list: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 22.0, 25.0, 30.0)
    snr_sweep_sigma_e2: float = 0.3
    sigma_e2_list: tuple = (0.0, 0.1, 0.3, 0.5)
    fixed_snr_db: float = 22.0
    iteration_list: tuple = tuple(range(11))
    trials: int = 200
    n_err: int = 20
    i_t: int = DEFAULT_ITERATIONS
    alpha_grid_step: float = DEFAULT_GRID_STEP
    alpha_policy: str = "search"
    saturation_tol: float = 0.01
    clustering_enabled: bool = True
    schemes: tuple = SCHEMES
    master_seed: int = 1
    random_init: bool = False
    sinr_model: str = "printed"

    def noise_model(self):
        return NoiseModel(self.noise_temp_k, self.boltzmann, self.bandwidth_hz,
                          self.noise_figure_db)


# Expected kind of every field: scalar type, or ("tuple", element type)
_KINDS = {
    "n_t": int, "k": int, "region_side_m": float, "freq_mhz": float, "h_ap": float,
    "h_ue": float, "shadow_std_db": float, "noise_temp_k": float, "boltzmann": float,
    "bandwidth_hz": float, "noise_figure_db": float, "snr_db_list": ("tuple", float),
    "snr_sweep_sigma_e2": float, "sigma_e2_list": ("tuple", float), "fixed_snr_db": float,
    "iteration_list": ("tuple", int), "trials": int, "n_err": int, "i_t": int,
    "alpha_grid_step": float, "alpha_policy": str, "saturation_tol": float,
    "clustering_enabled": bool, "schemes": ("tuple", str), "master_seed": int,
    "random_init": bool, "sinr_model": str,
}
_NAMES = {field.name: field.name.upper() for field in dataclasses.fields(SimConfig)}
_FIELDS = {name: field for field, name in _NAMES.items()}


def _coerce_scalar(value, kind, what):
    if kind is bool:
        if isinstance(value, bool):
            return value
    elif kind is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif kind is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif isinstance(value, kind):
        return value
    raise ConfigurationError(f"{what} must be {kind.__name__}, got {value!r}")


def _coerce(field, value):
    kind = _KINDS[field]
    what = _NAMES[field]
    if isinstance(kind, tuple):
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigurationError(f"{what} must be a non-empty list, got {value!r}")
        return tuple(_coerce_scalar(v, kind[1], f"each entry of {what}") for v in value)
    return _coerce_scalar(value, kind, what)


def _problems(cfg):
    """Yield (field, message) for every invalid setting."""
    for field in ("n_t", "k", "trials", "n_err"):
        if getattr(cfg, field) < 1:
            yield field, f"{_NAMES[field]} must be >= 1"
    if cfg.n_t < cfg.k:
        yield "k", f"K={cfg.k} exceeds N_T={cfg.n_t}; only underloaded networks are supported"
    for field in ("region_side_m", "freq_mhz", "h_ap", "h_ue", "noise_temp_k", "boltzmann",
                  "bandwidth_hz"):
        if not getattr(cfg, field) > 0:
            yield field, f"{_NAMES[field]} must be positive"
    if cfg.shadow_std_db < 0:
        yield "shadow_std_db", "SHADOW_STD_DB must be >= 0"
    for field in ("snr_sweep_sigma_e2",):
        if not 0.0 <= getattr(cfg, field) <= 1.0:
            yield field, f"{_NAMES[field]} must lie in [0, 1]"
    if any(not 0.0 <= s <= 1.0 for s in cfg.sigma_e2_list):
        yield "sigma_e2_list", "SIGMA_E2_LIST entries must lie in [0, 1]"
    if cfg.i_t < 0 or any(i < 0 for i in cfg.iteration_list):
        yield "i_t", "iteration counts must be >= 0"
    if not 0.0 < cfg.alpha_grid_step <= 1.0:
        yield "alpha_grid_step", "ALPHA_GRID_STEP must lie in (0, 1]"
    if cfg.alpha_policy not in ALPHA_POLICIES:
        yield "alpha_policy", f"ALPHA_POLICY must be one of {', '.join(ALPHA_POLICIES)}"
    if not 0.0 <= cfg.saturation_tol < 1.0:
        yield "saturation_tol", "SATURATION_TOL must lie in [0, 1)"
    unknown = [s for s in cfg.schemes if s not in SCHEMES]
    if unknown:
        yield "schemes", f"unknown scheme(s) {', '.join(unknown)}; known: {', '.join(SCHEMES)}"
    if cfg.sinr_model not in SINR_MODELS:
        yield "sinr_model", f"SINR_MODEL must be one of {', '.join(SINR_MODELS)}"


def validate(cfg, path=None, lines=None):
    """Raise ConfigurationError for the first invalid setting, pointing at its line."""
    for field, message in _problems(cfg):
        lineno = (lines or {}).get(field)
        raise ConfigurationError(message, path, lineno)
    return cfg


def with_overrides(cfg, **changes):
    """Copy of cfg with the non-None keyword changes applied and validated."""
    changes = {key: value for key, value in changes.items() if value is not None}
    return validate(dataclasses.replace(cfg, **changes))


def full_scale(cfg):
    """Switch to the full 10000 trials x 100 error matrices."""
    return with_overrides(cfg, trials=FULL_SCALE_TRIALS, n_err=FULL_SCALE_N_ERR)


def parse_config(text, path="<config>"):
    """Parse config text into a validated SimConfig."""
    try:
        tree = ast.parse(text, filename=str(path))
    except SyntaxError as e:
        raise ConfigurationError(f"syntax error: {e.msg}", path, e.lineno)

    values, lines = {}, {}
    for node in tree.body:
        if (isinstance(node, ast.Expr) and isinstance(node.value, ast.Constant)
                and isinstance(node.value.value, str)):
            continue  # docstring
        if not (isinstance(node, ast.Assign) and len(node.targets) == 1
                and isinstance(node.targets[0], ast.Name)):
            raise ConfigurationError("only NAME = literal assignments are allowed", path,
                                     node.lineno)
        name = node.targets[0].id
        if name not in _FIELDS:
            raise ConfigurationError(f"unknown setting {name}", path, node.lineno)
        try:
            raw = ast.literal_eval(node.value)
        except ValueError:
            raise ConfigurationError(f"{name} must be a literal value", path, node.lineno)
        field = _FIELDS[name]
        try:
            values[field] = _coerce(field, raw)
        except ConfigurationError as e:
            raise ConfigurationError(e.message, path, node.lineno)
        lines[field] = node.lineno

    return validate(SimConfig(**values), path, lines)


def load_config(path):
    """Read and parse a config file; a missing file is a configuration error."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigurationError("config file not found", path)
    except OSError as e:
        raise ConfigurationError(f"cannot read config file: {e.strerror}", path)
    return parse_config(text, path)


def dump_config(cfg):
    """Serialise cfg in the config-file format; parse_config(dump_config(c)) == c."""
    out = ['"""Simulation settings (written by rscf)."""']
    for field in dataclasses.fields(cfg):
        out.append(f"{_NAMES[field.name]} = {getattr(cfg, field.name)!r}")
    return "\n".join(out) + "\n"
