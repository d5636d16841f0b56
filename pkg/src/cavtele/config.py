"""Flat ``key = value`` run configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from . import analytic
from .params import PulseSchedule, SystemParams
from .protocol import DetectorModel


class ConfigError(ValueError):
    pass


def _nonneg(x):
    return x >= 0


def _positive(x):
    return x > 0


def _unit(x):
    return 0 <= x <= 1


@dataclass(frozen=True)
class RunConfig:
    delta_mhz: float = 62.5
    omega_mhz: float = 16.0
    g_mhz: float = 16.0
    kappa_mhz: float = 4.0
    gamma_mhz: float = 0.0
    eta: float = 1.0
    dark_rate_hz: float = 0.0
    detector: str = "resolving"
    mode: str = "modified"
    backend: str = "analytic"
    n_traj: int = 10_000
    n_states: int = 100
    seed: int = 0
    t_d_factor: float = 4.0
    branch_n: int = 0
    # n_traj is per input state. Below: trajectory Hamiltonian, optional
    # explicit pulse lengths (us), process count and the preparation-click rule
    model: str = "full"
    t_a_us: float | None = None
    t_b_us: float | None = None
    workers: int = 1
    prep_clicks: str = "reject"

    def params(self) -> SystemParams:
        return SystemParams.from_mhz(self.delta_mhz, self.omega_mhz, self.g_mhz, self.kappa_mhz, self.gamma_mhz)

    def detector_model(self, eta: float | None = None, detector: str | None = None) -> DetectorModel:
        kind = detector or self.detector
        return DetectorModel(self.eta if eta is None else eta, self.dark_rate_hz, kind == "resolving",
                             self.prep_clicks == "reject")

    def schedule(self, p: SystemParams | None = None) -> PulseSchedule:
        """Analytic schedule with any explicit t_A / t_B overrides applied."""
        p = p or self.params()
        t_D = self.t_d_factor / p.kappa if p.kappa > 0 else 0.0
        if self.t_a_us is not None and self.t_b_us is not None:
            return PulseSchedule(self.t_a_us, self.t_b_us, t_D, self.branch_n)
        s = analytic.schedule(p.replace(gamma=0.0), self.mode, self.t_d_factor, self.branch_n, t_D=t_D)
        return s.with_times(t_A=self.t_a_us, t_B=self.t_b_us)


_CHOICES = {
    "detector": ("resolving", "conventional"),
    "mode": ("modified", "original"),
    "backend": ("analytic", "trajectory"),
    "model": ("full", "adiabatic"),
    "prep_clicks": ("reject", "count"),
}

_CHECKS = {
    "delta_mhz": (_positive, "> 0"),
    "omega_mhz": (_nonneg, ">= 0"),
    "g_mhz": (_nonneg, ">= 0"),
    "kappa_mhz": (_nonneg, ">= 0"),
    "gamma_mhz": (_nonneg, ">= 0"),
    "eta": (_unit, "in [0, 1]"),
    "dark_rate_hz": (_nonneg, ">= 0"),
    "n_traj": (_positive, ">= 1"),
    "n_states": (_positive, ">= 1"),
    "seed": (_nonneg, ">= 0"),
    "t_d_factor": (_positive, "> 0"),
    "branch_n": (_nonneg, ">= 0"),
    "t_a_us": (_nonneg, ">= 0"),
    "t_b_us": (_nonneg, ">= 0"),
    "workers": (_positive, ">= 1"),
}

_INT_FIELDS = {"n_traj", "n_states", "seed", "branch_n", "workers"}
_OPTIONAL = {"t_a_us", "t_b_us"}
FIELD_NAMES = tuple(f.name for f in fields(RunConfig))


def parse_value(key: str, raw) -> object:
    """Convert and range-check one configuration value."""
    if key not in FIELD_NAMES:
        raise ConfigError(f"unknown config key {key!r}")
    text = str(raw).strip()
    if key in _OPTIONAL and text.lower() in ("", "none"):
        return None
    if key in _CHOICES:
        if text not in _CHOICES[key]:
            raise ConfigError(f"{key} must be one of {_CHOICES[key]}, got {text!r}")
        return text
    try:
        value = int(text, 0) if key in _INT_FIELDS else float(text)
    except ValueError:
        kind = "an integer" if key in _INT_FIELDS else "a number"
        raise ConfigError(f"{key} must be {kind}, got {text!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"{key} must be finite, got {text!r}")
    check, desc = _CHECKS[key]
    if not check(value):
        raise ConfigError(f"{key} must be {desc}, got {text!r}")
    return value


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = parse_value(key, raw)
    return values


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for key, raw in (overrides or {}).items():
        values[key] = parse_value(key, raw)
    return replace(RunConfig(), **values)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for name in FIELD_NAMES:
        value = getattr(cfg, name)
        lines.append(f"{name} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"
