"""JSON experiment configuration with named presets."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .codes import DetectionStrategy, code_footprint
from .dynamics import DISTRIBUTIONS, INTEGRATORS
from .errors import ConfigError

EXPERIMENTS = ("proxy-leakage", "map-quality", "mitigate", "code-bench", "noise-hist", "fit-map")
MAP_SCOPES = ("pooled", "per-sigma")
PAIRINGS = ("per-sample", "ensemble")
DEFAULT_PROXIES = {
    "proxy-leakage": ("P1", "P2", "P3", "P4"),
    "map-quality": ("P1", "P2", "P3", "P4", "P5"),
    "mitigate": ("P4", "P5"),
    "fit-map": ("P4",),
}


def sigma_grid(points: int, lo: float = 0.005, hi: float = 0.02) -> list[float]:
    return [float(x) for x in np.linspace(lo, hi, points)]


PRESETS = {
    "paper": {"samples": 1000, "sigmas": sigma_grid(20), "gammas": sigma_grid(20)},
    "desk": {"samples": 200, "sigmas": sigma_grid(6), "gammas": sigma_grid(6)},
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    sigmas: tuple = tuple(sigma_grid(6))
    gammas: tuple = tuple(sigma_grid(6))
    distributions: tuple = ("two-point", "normal")
    samples: int = 200
    seed: int = 0
    code: str = "C"
    proxies: tuple | None = None
    codes: tuple = ("dual-rail", "cly-4222", "binomial-024")
    detections: tuple = ("none", "number", "code")
    # single operating point used by code-bench and noise-hist
    sigma: float = 0.02
    gamma: float = 0.02
    fluctuating: tuple | None = None
    t_final: float = 1.0
    dt: float = 1e-3
    integrator: str = "liouvillian-expm"
    alpha: float = float(1 / np.sqrt(2))
    target: tuple = (0.5, float(np.sqrt(3) / 2))
    mapped: bool = True
    map_scope: str = "pooled"
    map_pairing: str = "per-sample"
    map_method: str = "squared"
    map_file: str | None = None
    training_file: str | None = None
    per_sample_inversion: bool = False
    condition_cap: float = 1e6
    out: str = "results"
    preset: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("sigmas", "gammas", "distributions", "codes", "detections", "target"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.proxies is None:
            object.__setattr__(self, "proxies", DEFAULT_PROXIES.get(self.experiment, ()))
        object.__setattr__(self, "proxies", tuple(self.proxies))
        if self.fluctuating is not None:
            object.__setattr__(self, "fluctuating", tuple(self.fluctuating))
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.samples < 1:
            raise ConfigError(f"samples: must be >= 1, got {self.samples}")
        if not self.sigmas or min(self.sigmas) < 0:
            raise ConfigError("sigmas: grid must be non-empty and non-negative")
        if not self.gammas or min(self.gammas) < 0:
            raise ConfigError("gammas: grid must be non-empty and non-negative")
        if self.sigma < 0 or self.gamma < 0:
            raise ConfigError("sigma/gamma: must be non-negative")
        for d in self.distributions:
            if d not in DISTRIBUTIONS:
                raise ConfigError(f"distributions: unknown distribution {d!r}")
        if not self.distributions:
            raise ConfigError("distributions: must be non-empty")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator: must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.map_scope not in MAP_SCOPES:
            raise ConfigError(f"map_scope: must be one of {MAP_SCOPES}, got {self.map_scope!r}")
        if self.map_pairing not in PAIRINGS:
            raise ConfigError(f"map_pairing: must be one of {PAIRINGS}, got {self.map_pairing!r}")
        if not 0 <= self.alpha <= 1:
            raise ConfigError(f"alpha: must lie in [0, 1], got {self.alpha}")
        norm = float(np.sum(np.abs(self.target) ** 2))
        if len(self.target) != 2 or abs(norm - 1) > 1e-9:
            raise ConfigError(f"target: need two amplitudes with unit norm, got {self.target}")
        for name in (self.code, *self.proxies, *self.codes):
            try:
                code_footprint(name)
            except ConfigError as exc:
                raise ConfigError(f"code label: {exc}") from None
        for d in self.detections:
            if d != "number":
                try:
                    DetectionStrategy.parse(d)
                except ConfigError as exc:
                    raise ConfigError(f"detections: {exc}") from None

    @property
    def beta(self) -> float:
        return float(np.sqrt(1 - self.alpha ** 2))

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "experiment" not in d:
            raise ConfigError("experiment: missing")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown config field")
        preset = d.get("preset")
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"preset: must be one of {sorted(PRESETS)}, got {preset!r}")
            d = {**PRESETS[preset], **d}
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, seed: int | None = None, samples: int | None = None, preset: str | None = None,
                       out: str | None = None) -> "ExperimentConfig":
        changes = {}
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"preset: must be one of {sorted(PRESETS)}, got {preset!r}")
            changes.update(PRESETS[preset], preset=preset)
        if seed is not None:
            changes["seed"] = seed
        if samples is not None:
            changes["samples"] = samples
        if out is not None:
            changes["out"] = out
        return replace(self, **changes)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return ExperimentConfig.from_dict(data)
