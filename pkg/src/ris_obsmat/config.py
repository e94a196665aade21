"""TOML-backed configuration for the benchmark harness.

Unknown keys are rejected so typos fail loudly; every validation error
names the offending field. Defaults are desk-scale (small arrays, a few
hundred trials); configs/paper-scale.toml ships the publication-scale
settings as an opt-in preset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .channel import CorrelationModel

ALL_SCHEMES = ("ls", "mmse-dft", "omp", "ice-filling", "armo-ideal", "armo-trained")


class ConfigError(Exception):
    """Configuration problem; carries the offending field name."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field {field_name!r}: {message}")
        self.field_name = field_name


@dataclass(frozen=True)
class SimConfig:
    m: int = 4
    n1: int = 4
    n2: int = 4
    spacing_wavelengths: float = 0.25
    corr_bs: CorrelationModel = field(default_factory=lambda: CorrelationModel("isotropic-sinc"))
    corr_ris: CorrelationModel = field(default_factory=lambda: CorrelationModel("isotropic-sinc"))
    corr_user_ris: CorrelationModel = field(default_factory=lambda: CorrelationModel("isotropic-sinc"))
    q: tuple = (16,)
    snr_db: tuple = (10.0,)
    trials: int = 500
    schemes: tuple = ("ls", "mmse-dft", "omp", "ice-filling", "armo-ideal")
    window_r: int = 100
    frames: int = 300
    epsilon: float = 0.01
    seed: int = 0
    omp_max_atoms: int | None = None  # default: ceil(Q / 4)
    omp_residual_tol: float | None = None  # default: sqrt(Q * sigma2)

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m", f"must be >= 1, got {self.m}")
        if self.n1 < 1 or self.n2 < 1:
            raise ConfigError("n1/n2", f"must be >= 1, got {self.n1}, {self.n2}")
        if not self.spacing_wavelengths > 0:
            raise ConfigError("spacing_wavelengths", f"must be positive, got {self.spacing_wavelengths}")
        if not self.q or any(v < 1 for v in self.q):
            raise ConfigError("q", f"pilot counts must be >= 1, got {self.q}")
        if not self.snr_db or any(not math.isfinite(v) for v in self.snr_db):
            raise ConfigError("snr_db", f"SNR values must be finite, got {self.snr_db}")
        if self.trials < 1:
            raise ConfigError("trials", f"must be >= 1, got {self.trials}")
        if not self.schemes:
            raise ConfigError("schemes", "at least one scheme is required")
        for s in self.schemes:
            if s not in ALL_SCHEMES:
                raise ConfigError("schemes", f"unknown scheme {s!r}; expected one of {ALL_SCHEMES}")
        if self.window_r < 1:
            raise ConfigError("window_r", f"must be >= 1, got {self.window_r}")
        if self.frames < 1:
            raise ConfigError("frames", f"must be >= 1, got {self.frames}")
        if self.epsilon < 0:
            raise ConfigError("epsilon", f"must be nonnegative, got {self.epsilon}")
        if self.seed < 0:
            raise ConfigError("seed", f"must be a nonnegative integer, got {self.seed}")
        if self.omp_max_atoms is not None and self.omp_max_atoms < 1:
            raise ConfigError("omp_max_atoms", f"must be >= 1, got {self.omp_max_atoms}")
        if self.omp_residual_tol is not None and self.omp_residual_tol < 0:
            raise ConfigError("omp_residual_tol", f"must be nonnegative, got {self.omp_residual_tol}")

    @property
    def n(self) -> int:
        return self.n1 * self.n2

    def as_dict(self) -> dict:
        """Resolved configuration, JSON-friendly (for run-meta.json)."""
        def corr(c):
            d = {"kind": c.kind}
            if c.kind == "exponential":
                d["rho"] = c.rho
            return d

        return {
            "m": self.m, "n1": self.n1, "n2": self.n2,
            "spacing_wavelengths": self.spacing_wavelengths,
            "correlation": {
                "bs": corr(self.corr_bs),
                "ris": corr(self.corr_ris),
                "user_ris": corr(self.corr_user_ris),
            },
            "q": list(self.q),
            "snr_db": list(self.snr_db),
            "trials": self.trials,
            "schemes": list(self.schemes),
            "window_r": self.window_r,
            "frames": self.frames,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "omp_max_atoms": self.omp_max_atoms,
            "omp_residual_tol": self.omp_residual_tol,
        }


def _as_tuple(value, caster, name):
    if isinstance(value, (list, tuple)):
        seq = value
    else:
        seq = [value]
    try:
        return tuple(caster(v) for v in seq)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, f"bad value {value!r}: {exc}") from None


def _correlation_from(table, name):
    if not isinstance(table, dict):
        raise ConfigError(name, f"expected a table, got {table!r}")
    allowed = {"kind", "rho"}
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(name, f"unknown keys {sorted(unknown)}")
    kind = table.get("kind", "isotropic-sinc")
    rho = float(table.get("rho", 0.0))
    try:
        return CorrelationModel(kind, rho)
    except ValueError as exc:
        raise ConfigError(name, str(exc)) from None


_TOP_LEVEL_KEYS = {
    "m", "n1", "n2", "spacing_wavelengths", "correlation", "q", "snr_db",
    "trials", "schemes", "window_r", "frames", "epsilon", "seed",
    "omp_max_atoms", "omp_residual_tol",
}


def config_from_mapping(data: dict) -> SimConfig:
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    kwargs = {}
    for key in ("m", "n1", "n2", "trials", "window_r", "frames", "seed"):
        if key in data:
            v = data[key]
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(key, f"expected an integer, got {v!r}")
            kwargs[key] = v
    for key in ("spacing_wavelengths", "epsilon"):
        if key in data:
            try:
                kwargs[key] = float(data[key])
            except (TypeError, ValueError):
                raise ConfigError(key, f"expected a number, got {data[key]!r}") from None
    if "q" in data:
        kwargs["q"] = _as_tuple(data["q"], int, "q")
    if "snr_db" in data:
        kwargs["snr_db"] = _as_tuple(data["snr_db"], float, "snr_db")
    if "schemes" in data:
        kwargs["schemes"] = _as_tuple(data["schemes"], str, "schemes")
    if "omp_max_atoms" in data:
        v = data["omp_max_atoms"]
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError("omp_max_atoms", f"expected an integer, got {v!r}")
        kwargs["omp_max_atoms"] = v
    if "omp_residual_tol" in data:
        try:
            kwargs["omp_residual_tol"] = float(data["omp_residual_tol"])
        except (TypeError, ValueError):
            raise ConfigError("omp_residual_tol", f"expected a number, got {data['omp_residual_tol']!r}") from None
    if "correlation" in data:
        table = data["correlation"]
        if not isinstance(table, dict):
            raise ConfigError("correlation", f"expected a table, got {table!r}")
        sides = {"bs": "corr_bs", "ris": "corr_ris", "user_ris": "corr_user_ris"}
        unknown = set(table) - set(sides)
        if unknown:
            raise ConfigError(f"correlation.{sorted(unknown)[0]}", "unknown correlation side")
        for side, attr in sides.items():
            if side in table:
                kwargs[attr] = _correlation_from(table[side], f"correlation.{side}")
    return SimConfig(**kwargs)


def load_config(path: str | Path) -> SimConfig:
    """Parse and validate a TOML configuration file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"invalid TOML in {path}: {exc}") from None
    return config_from_mapping(data)


def snr_db_to_sigma2(snr_db: float) -> float:
    """SNR is 1 / sigma2, so sigma2 = 10**(-SNR_dB / 10)."""
    return 10.0 ** (-snr_db / 10.0)
