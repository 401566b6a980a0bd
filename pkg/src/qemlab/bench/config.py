"""Experiment configuration: JSON file in, fully-echoed manifest out."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..mitigation import ZneConfig
from ..sim import NOISE_PRESETS, NoiseModel

EXPERIMENTS = ("random", "trotter", "unseen_pauli", "vqe", "mimicry", "drift")
MODEL_KINDS = ("ols", "rf", "mlp")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    shots: int = 10_000
    noise: dict = field(default_factory=lambda: {"preset": "lima-like"})
    models: list[str] = field(default_factory=lambda: ["rf"])
    zne: dict = field(default_factory=lambda: {"factors": [1, 3], "twirls": 0})
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        if not isinstance(self.seed, int):
            raise ConfigError("seed is required and must be an integer")
        if self.shots < 1:
            raise ConfigError("shots must be positive")
        for kind in self.models:
            if kind not in MODEL_KINDS:
                raise ConfigError(f"unknown model kind {kind!r}")
        for key, value in self.params.items():
            if key.startswith(("n_", "train", "test")) and isinstance(value, int):
                if value <= 0:
                    raise ConfigError(f"params.{key} must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"experiment", "seed", "shots", "noise", "models", "zne", "params"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in d or "seed" not in d:
            raise ConfigError("config requires 'experiment' and 'seed'")
        return cls(**d)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "shots": self.shots,
            "noise": dict(self.noise),
            "models": list(self.models),
            "zne": dict(self.zne),
            "params": dict(self.params),
        }

    def noise_model(self, _defaults: dict | None = None, **forced) -> NoiseModel:
        """Resolve the noise model: experiment defaults < config file < forced."""
        spec = {**(_defaults or {}), **self.noise, **forced}
        preset_name = spec.pop("preset", "lima-like")
        if preset_name not in NOISE_PRESETS:
            raise ConfigError(
                f"unknown noise preset {preset_name!r}; have {sorted(NOISE_PRESETS)}"
            )
        base = NOISE_PRESETS[preset_name]()
        fields = {
            "dep_1q", "dep_2q", "t1", "t2", "dur_1q", "dur_2q", "readout_flip",
            "coherent_cx_angle", "depolarizing_on", "thermal_on", "readout_on",
            "coherent_on", "rz_virtual",
        }
        unknown = set(spec) - fields
        if unknown:
            raise ConfigError(f"unknown noise fields: {sorted(unknown)}")
        kwargs = {f: getattr(base, f) for f in fields}
        kwargs.update(spec)
        try:
            return NoiseModel(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def zne_config(self) -> ZneConfig:
        try:
            return ZneConfig(
                factors=tuple(self.zne.get("factors", (1, 3))),
                twirls=int(self.zne.get("twirls", 0)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def param(self, key: str, default):
        return self.params.get(key, default)
