"""Experiment configuration: flat TOML files, flag overrides and validation.

Precedence, lowest first: built-in defaults, per-experiment defaults, the
config file, command-line flags.  The seed additionally falls back to the
``DUET_SEED`` environment variable when neither file nor flag sets it.
"""

from __future__ import annotations

import dataclasses
import math
import os
import re
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .model import POTENTIALS
from .observe import ScalingParams
from .sde import SCHEMES

EXPERIMENTS = ("simulate", "limit", "expansion", "moments", "decorrelation", "exit",
               "excursions", "near-zero", "martingale", "supr2")

DEFAULT_SEED = 20240611
SEED_ENV = "DUET_SEED"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "limit"
    potential: str = "cos"
    integrator: str = "split"
    seed: int = DEFAULT_SEED
    n_paths: int | None = None
    dt: float | None = None
    T: float = 2048.0
    R: float | None = None
    R_values: list | None = None
    epsilon: float = 0.1
    beta: float = 1.5
    alpha: float = 0.2
    alpha_t: float = 0.25
    alpha_c: float = 0.33
    alpha1: float = 6 / 7
    alpha2: float = 5 / 9
    D: float | None = None
    t: float = 1.0
    r2_0: float | None = None
    horizon: float | None = None
    t_values: list | None = None
    n_theta0: int = 10
    control_paths: int | None = None
    dt_check: bool = False
    paths_csv: bool = False
    output_dir: str = "."
    workers: int = 1

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def scaling(self, R: float | None = None) -> ScalingParams:
        return ScalingParams(R=R or self.R or 256.0, alpha=self.alpha, alpha_t=self.alpha_t,
                             alpha_c=self.alpha_c, beta=self.beta, epsilon=self.epsilon,
                             T=self.T, D=self.D, alpha1=self.alpha1, alpha2=self.alpha2)


# Sizes and levels each experiment uses unless the file or flags say otherwise.
EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "simulate": dict(n_paths=4, R=8.0, r2_0=0.0, horizon=10.0, dt=0.01),
    "limit": dict(n_paths=4096, dt=0.01, T=2048.0),
    "martingale": dict(n_paths=4096, dt=0.01, T=2048.0, control_paths=4096),
    "expansion": dict(n_paths=100_000, R_values=[8, 16, 32, 64, 128, 256, 512]),
    "moments": dict(n_paths=2000, R_values=[64, 256], r2_0=1.0),
    "decorrelation": dict(n_paths=2000, R=256.0, t_values=[5.0, 10.0, 20.0], r2_0=1.0,
                          control_paths=2000),
    "exit": dict(n_paths=256, R=128.0, alpha=35 / 54, alpha_t=0.66, alpha_c=0.332,
                 r2_0=0.0, control_paths=1024),
    "excursions": dict(n_paths=4096, dt=0.01, r2_0=0.0, control_paths=4096),
    "near-zero": dict(n_paths=4096, dt=0.01, r2_0=0.0),
    "supr2": dict(n_paths=10_000, dt=0.01, T=100.0, D=6.0, t=1.0, R=128.0, r2_0=2.0,
                  control_paths=4000),
}

FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=", re.M)
    m = pat.search(text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


def read_config_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    text = raw.decode("utf-8", errors="replace")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for key, val in data.items():
        if isinstance(val, dict):
            raise ConfigError(f"{path}, line {_line_of(text, key) or '?'}: "
                              f"tables are not supported ([{key}]); use flat keys")
        key_norm = key.replace("-", "_")
        if key_norm not in FIELDS:
            raise ConfigError(f"{path}, line {_line_of(text, key) or '?'}: unknown key {key!r}")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _coerce(name: str, value, source: str):
    f = FIELDS[name]
    kind = str(f.type)
    try:
        if value is None:
            return None
        if name in ("R_values", "t_values"):
            if not isinstance(value, (list, tuple)):
                value = [value]
            return [float(v) for v in value]
        if kind.startswith("int"):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if kind.startswith("float"):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind.startswith("bool"):
            if not isinstance(value, bool):
                raise TypeError
            return value
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{source}: {name} has invalid value {value!r}") from None


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose one of {', '.join(EXPERIMENTS)}")
    if cfg.potential not in POTENTIALS:
        raise ConfigError(f"unknown potential {cfg.potential!r}; choose one of {', '.join(sorted(POTENTIALS))}")
    if cfg.integrator not in SCHEMES:
        raise ConfigError(f"unknown integrator {cfg.integrator!r}; choose one of {', '.join(SCHEMES)}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    for name in ("n_paths", "dt", "T", "R", "epsilon", "D", "t", "horizon", "control_paths"):
        v = getattr(cfg, name)
        if v is not None and not (math.isfinite(v) and v > 0):
            raise ConfigError(f"{name} must be > 0 (got {v})")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.n_theta0 < 1:
        raise ConfigError("n_theta0 must be >= 1")
    for R in cfg.R_values or [cfg.R or 256.0]:
        try:
            cfg.scaling(R)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def parse_config(path=None, overrides: dict | None = None, env=None) -> ExperimentConfig:
    """Build a validated config from an optional file and flag overrides."""
    env = os.environ if env is None else env
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    file_vals = read_config_file(path) if path else {}
    experiment = overrides.get("experiment", file_vals.get("experiment", "limit"))
    values = dict(EXPERIMENT_DEFAULTS.get(experiment, {}))
    if "seed" not in file_vals and "seed" not in overrides and env.get(SEED_ENV):
        try:
            values["seed"] = int(env[SEED_ENV], 0)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env[SEED_ENV]!r} is not an integer") from None
    for source, layer in ((str(path), file_vals), ("command line", overrides)):
        for k, v in layer.items():
            values[k] = _coerce(k, v, source)
    values["experiment"] = experiment
    return validate(ExperimentConfig(**values))
